#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "onebit/rng.hpp"
#include "onebit/sensing.hpp"
#include "onebit/solvers.hpp"

namespace onebit {

// ---------------------------------------------------------------------------
// Distance averages and FVP means
// ---------------------------------------------------------------------------

/// T_ave = (1/mn) sum_{l,j} |<a_j, x> - tau_j^(l)|.
inline double t_ave(const SamplingModel& model, const Eigen::VectorXd& x,
                    const Eigen::MatrixXd& thresholds) {
    if (thresholds.rows() != model.rows())
        throw std::invalid_argument("t_ave: threshold rows must match model rows");
    const Eigen::VectorXd y = model.measure(x);
    double acc = 0.0;
    for (Index l = 0; l < thresholds.cols(); ++l)
        acc += (y - thresholds.col(l)).cwiseAbs().sum();
    return acc / static_cast<double>(thresholds.size());
}

enum class FvpKind { SubGaussian, Dct, NoDr };

/// Theoretical mean of T_ave under uniform dithering U[-lambda, lambda]:
///   sub-gaussian isotropic rows: lambda/2 + ||x||^2 / (2 lambda)
///   random-frequency cosine rows: lambda/2 + ||x||^2 / (4 lambda)
///   one row violating the DR guarantee: ((n-1)/n)(lambda/2 + ||x||^2/(2 lambda)) + mu'/n.
inline double fvp_mean(FvpKind kind, double lambda, double x_norm, Index n = 0, double mu_prime = 0.0) {
    if (lambda <= 0.0) throw std::invalid_argument("fvp_mean: lambda must be > 0");
    const double base = lambda / 2.0 + x_norm * x_norm / (2.0 * lambda);
    switch (kind) {
        case FvpKind::SubGaussian: return base;
        case FvpKind::Dct: return lambda / 2.0 + x_norm * x_norm / (4.0 * lambda);
        case FvpKind::NoDr: {
            if (n < 2) throw std::invalid_argument("fvp_mean: NoDr needs n >= 2");
            const double nn = static_cast<double>(n);
            return (nn - 1.0) / nn * base + mu_prime / nn;
        }
    }
    throw std::logic_error("fvp_mean: unknown kind");
}

struct FvpReport {
    double t_ave = 0.0;
    double theoretical_mean = 0.0;
    double deviation = 0.0;       // |t_ave - theoretical_mean|
    double lambda = 0.0;
    Index m_prime = 0;
    double recovery_radius = 0.0; // 4 sqrt(deviation * lambda)
    double hamming = -1.0;        // fraction of disagreeing signs, when compared; else -1

    static void csv_header(std::ostream& os) {
        os << "t_ave,theoretical_mean,deviation,lambda,m_prime,recovery_radius,hamming\n";
    }
    void to_csv(std::ostream& os) const {
        detail::write_float(os, t_ave); os << ',';
        detail::write_float(os, theoretical_mean); os << ',';
        detail::write_float(os, deviation); os << ',';
        detail::write_float(os, lambda); os << ',';
        os << m_prime << ',';
        detail::write_float(os, recovery_radius); os << ',';
        detail::write_float(os, hamming); os << '\n';
    }
};

// ---------------------------------------------------------------------------
// Sample complexity and recovery radii
// ---------------------------------------------------------------------------

struct ComplexityBudget {
    enum class Set { Arbitrary, LowRank, Sparse };
    Set set = Set::Arbitrary;
    double gamma = 0.0;   // Gaussian complexity estimate (Arbitrary)
    Index n1 = 0, n2 = 0, rank = 0;
    Index s = 0, d = 0;
    double epsilon = 0.0;
    double rho = 0.0;
};

struct ComplexityResult {
    double value = 0.0;
    bool degenerate = false;  // e.g. Sparse with s == d
};

/// Unscaled sample-size expressions (lower-bound shapes up to absolute
/// constants): Arbitrary gamma^2/(rho^2 eps^2); LowRank eps^-2 r (n1+n2)
/// log(1 + 1/rho); Sparse eps^-2 s log(d/s) log(1 + 1/rho).
inline ComplexityResult sample_complexity(const ComplexityBudget& budget) {
    if (budget.rho <= 0.0) throw std::invalid_argument("sample_complexity: rho must be > 0");
    if (budget.epsilon <= 0.0) throw std::invalid_argument("sample_complexity: epsilon must be > 0");
    const double eps2 = budget.epsilon * budget.epsilon;
    ComplexityResult result;
    switch (budget.set) {
        case ComplexityBudget::Set::Arbitrary:
            result.value = budget.gamma * budget.gamma / (budget.rho * budget.rho * eps2);
            break;
        case ComplexityBudget::Set::LowRank:
            result.value = static_cast<double>(budget.rank) *
                           static_cast<double>(budget.n1 + budget.n2) *
                           std::log1p(1.0 / budget.rho) / eps2;
            break;
        case ComplexityBudget::Set::Sparse: {
            if (budget.s <= 0 || budget.d <= 0 || budget.s > budget.d)
                throw std::invalid_argument("sample_complexity: need 0 < s <= d");
            const double lg = std::log(static_cast<double>(budget.d) / static_cast<double>(budget.s));
            result.value = static_cast<double>(budget.s) * lg * std::log1p(1.0 / budget.rho) / eps2;
            result.degenerate = budget.s == budget.d;
            break;
        }
    }
    return result;
}

enum class RadiusKind { Consistent, Hamming, NoDr, NoDrL };

/// Recovery-error upper bounds:
///   consistent: 4 sqrt(eps lambda)
///   hamming:    4 sqrt(eps lambda) + 2 sqrt((1 + lambda^2) d_H)
///   no_dr:      4 sqrt(eps lambda n/(n-1))
///   no_dr_L:    4 sqrt(eps lambda n/(n-L)).
inline double recovery_radius(RadiusKind kind, double eps, double lambda, double hamming = 0.0,
                              Index n = 0, Index L = 0) {
    if (eps < 0.0 || lambda <= 0.0)
        throw std::invalid_argument("recovery_radius: need eps >= 0 and lambda > 0");
    switch (kind) {
        case RadiusKind::Consistent:
            return 4.0 * std::sqrt(eps * lambda);
        case RadiusKind::Hamming:
            if (hamming < 0.0 || hamming > 1.0)
                throw std::invalid_argument("recovery_radius: hamming must be in [0,1]");
            return 4.0 * std::sqrt(eps * lambda) + 2.0 * std::sqrt((1.0 + lambda * lambda) * hamming);
        case RadiusKind::NoDr:
            if (n < 2) throw std::invalid_argument("recovery_radius: NoDr needs n >= 2");
            return 4.0 * std::sqrt(eps * lambda * static_cast<double>(n) / static_cast<double>(n - 1));
        case RadiusKind::NoDrL:
            if (L < 0 || L >= n) throw std::invalid_argument("recovery_radius: need 0 <= L < n");
            return 4.0 * std::sqrt(eps * lambda * static_cast<double>(n) / static_cast<double>(n - L));
    }
    throw std::logic_error("recovery_radius: unknown kind");
}

/// Fraction of disagreeing signs.
inline double hamming_distance(const Eigen::VectorXi& r1, const Eigen::VectorXi& r2) {
    if (r1.size() != r2.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    if (r1.size() == 0) return 0.0;
    Index count = 0;
    for (Index i = 0; i < r1.size(); ++i)
        if (r1[i] != r2[i]) ++count;
    return static_cast<double>(count) / static_cast<double>(r1.size());
}

// ---------------------------------------------------------------------------
// Condition numbers
// ---------------------------------------------------------------------------

/// Scaled condition number ||C||_F / sigma_min(C).
inline double scaled_condition_number(const Eigen::MatrixXd& C) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
    const auto& S = svd.singularValues();
    const double smin = S[S.size() - 1];
    if (smin <= 1e-300 || smin <= 1e-14 * S[0])
        throw std::runtime_error("scaled_condition_number: sigma_min below floor");
    return C.norm() / smin;
}

/// Ordinary condition number sigma_max / sigma_min.
inline double condition_number(const Eigen::MatrixXd& C) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
    const auto& S = svd.singularValues();
    const double smin = S[S.size() - 1];
    if (smin <= 1e-300) throw std::runtime_error("condition_number: sigma_min below floor");
    return S[0] / smin;
}

struct KappaInvarianceReport {
    bool ok = false;
    double kappa_P = 0.0;
    double kappa_A = 0.0;
    double relative_kappa_error = 0.0;
    double gram_error = 0.0;   // ||P^T P - m A^T A|| / ||A^T A||
    double frob_error = 0.0;   // | ||P||_F^2 - m ||A||_F^2 | / ||A||_F^2
};

/// Builds P by stacking m random sign diagonals of A and verifies
/// kappa(P) = kappa(A), P^T P = m A^T A and ||P||_F^2 = m ||A||_F^2.
inline KappaInvarianceReport kappa_invariance_check(const Eigen::MatrixXd& A, Index m,
                                                    std::uint64_t seed,
                                                    double kappa_tol = 1e-8,
                                                    double gram_tol = 1e-10) {
    const Index n = A.rows(), d = A.cols();
    rng::Stream stream(rng::derive_seed(seed, 0x6b6170));
    Eigen::MatrixXd P(m * n, d);
    for (Index l = 0; l < m; ++l)
        for (Index j = 0; j < n; ++j) {
            const double s = stream.uniform() < 0.5 ? -1.0 : 1.0;
            P.row(l * n + j) = s * A.row(j);
        }
    KappaInvarianceReport report;
    report.kappa_A = scaled_condition_number(A);
    report.kappa_P = scaled_condition_number(P);
    report.relative_kappa_error = std::abs(report.kappa_P - report.kappa_A) / report.kappa_A;
    const Eigen::MatrixXd gram_A = A.transpose() * A;
    report.gram_error = (P.transpose() * P - static_cast<double>(m) * gram_A).norm() / gram_A.norm();
    report.frob_error = std::abs(P.squaredNorm() - static_cast<double>(m) * A.squaredNorm()) / A.squaredNorm();
    report.ok = report.relative_kappa_error <= kappa_tol && report.gram_error <= gram_tol;
    return report;
}

// ---------------------------------------------------------------------------
// Gaussian complexity and convergence floors
// ---------------------------------------------------------------------------

struct GaussianComplexityEstimate {
    double value = 0.0;
    double std_error = 0.0;
    Index trials = 0;
};

/// Monte Carlo estimate of E sup_{x in cloud} |<g, x>| over g ~ N(0, I).
/// `cloud` holds one point per row.
inline GaussianComplexityEstimate gaussian_complexity_mc(const Eigen::MatrixXd& cloud,
                                                         Index trials, std::uint64_t seed) {
    if (cloud.rows() == 0) throw std::invalid_argument("gaussian_complexity_mc: empty cloud");
    if (trials < 2) throw std::invalid_argument("gaussian_complexity_mc: need trials >= 2");
    rng::Stream stream(rng::derive_seed(seed, 0x676378));
    double sum = 0.0, sum_sq = 0.0;
    for (Index t = 0; t < trials; ++t) {
        const Eigen::VectorXd g = stream.gaussian_vector(cloud.cols());
        const double sup = (cloud * g).cwiseAbs().maxCoeff();
        sum += sup;
        sum_sq += sup * sup;
    }
    GaussianComplexityEstimate est;
    est.trials = trials;
    est.value = sum / static_cast<double>(trials);
    const double var = (sum_sq - sum * sum / static_cast<double>(trials)) / static_cast<double>(trials - 1);
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
    return est;
}

enum class FloorKind { Rka, PrSkm, Sketch, Block, Rip, Gaussian };

struct FloorParams {
    double kappa = 0.0;   // Rka
    Index d = 0;          // PrSkm / Sketch / Gaussian
    Index n = 0;          // Rip / Block
    double delta = 0.0;   // Rip / Gaussian
    double c = 1.0;       // Block (empirical constant)
    double sigma_min_sq = 0.0;  // Block
    double frob_sq = 0.0;       // Block
};

/// Theoretical per-iteration contraction factors:
///   rka: 1 - 1/kappa^2      prskm: 1 - 1/d          sketch: 1 - 1/(3d)
///   block: 1 - c sigma_min^2 log(n) / ||B||_F^2
///   rip: 1 - (1/n)((1-delta)/(1+delta))^2
///   gaussian: 1 - (1-delta)^2 / (1.0049 d).
inline double convergence_floor(FloorKind kind, const FloorParams& p) {
    switch (kind) {
        case FloorKind::Rka:
            if (p.kappa < 1.0) throw std::invalid_argument("convergence_floor: kappa must be >= 1");
            return 1.0 - 1.0 / (p.kappa * p.kappa);
        case FloorKind::PrSkm:
            if (p.d < 1) throw std::invalid_argument("convergence_floor: d must be >= 1");
            return 1.0 - 1.0 / static_cast<double>(p.d);
        case FloorKind::Sketch:
            if (p.d < 1) throw std::invalid_argument("convergence_floor: d must be >= 1");
            return 1.0 - 1.0 / (3.0 * static_cast<double>(p.d));
        case FloorKind::Block:
            if (p.frob_sq <= 0.0) throw std::invalid_argument("convergence_floor: frob_sq must be > 0");
            return 1.0 - p.c * p.sigma_min_sq * std::log(static_cast<double>(p.n)) / p.frob_sq;
        case FloorKind::Rip: {
            if (p.delta < 0.0 || p.delta >= 1.0)
                throw std::invalid_argument("convergence_floor: delta must be in [0,1)");
            const double ratio = (1.0 - p.delta) / (1.0 + p.delta);
            return 1.0 - ratio * ratio / static_cast<double>(p.n);
        }
        case FloorKind::Gaussian: {
            if (p.delta < 0.0 || p.delta >= 1.0)
                throw std::invalid_argument("convergence_floor: delta must be in [0,1)");
            const double num = (1.0 - p.delta) * (1.0 - p.delta);
            return 1.0 - num / (1.0049 * static_cast<double>(p.d));
        }
    }
    throw std::logic_error("convergence_floor: unknown kind");
}

}  // namespace onebit
