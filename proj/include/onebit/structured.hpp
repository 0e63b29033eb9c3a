#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include "onebit/polyhedron.hpp"
#include "onebit/sensing.hpp"
#include "onebit/solvers.hpp"

namespace onebit {

// ---------------------------------------------------------------------------
// Thresholding operators
// ---------------------------------------------------------------------------

/// Soft threshold: sgn(v) .* (|v| - t)^+.
inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
    Eigen::VectorXd out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - t;
        out[i] = mag > 0.0 ? (v[i] > 0.0 ? mag : -mag) : 0.0;
    }
    return out;
}

/// Keep the s largest-magnitude entries (ties resolved toward lower indices).
inline Eigen::VectorXd hard_threshold(const Eigen::VectorXd& v, Index s) {
    const Index d = v.size();
    if (s >= d) return v;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    if (s <= 0) return out;
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return std::abs(v[a]) > std::abs(v[b]);
    });
    for (Index i = 0; i < s; ++i) out[order[static_cast<std::size_t>(i)]] = v[order[static_cast<std::size_t>(i)]];
    return out;
}

/// Best rank-r approximation via the top r singular triplets.
inline Eigen::MatrixXd rank_project(const Eigen::MatrixXd& M, Index r) {
    if (r >= std::min(M.rows(), M.cols())) return M;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (r <= 0) return Eigen::MatrixXd::Zero(M.rows(), M.cols());
    const auto& S = svd.singularValues();
    return svd.matrixU().leftCols(r) * S.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
}

/// Soft threshold applied to the singular values.
inline Eigen::MatrixXd singular_value_soft_threshold(const Eigen::MatrixXd& M, double t) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd S = svd.singularValues();
    for (Index i = 0; i < S.size(); ++i) S[i] = std::max(S[i] - t, 0.0);
    return svd.matrixU() * S.asDiagonal() * svd.matrixV().transpose();
}

// ---------------------------------------------------------------------------
// Matrix sensing problems
// ---------------------------------------------------------------------------

/// Low-rank sensing data: n Gaussian sensing matrices A_j (n1 x n2) observed
/// through <A_j, X> = Tr(A_j^T X). The vectorized system stacks vec(A_j)
/// (column-major) as the rows of `vec_model`.
struct MatrixSensingProblem {
    SamplingModel vec_model;      // n x (n1*n2)
    Index n1 = 0, n2 = 0;
    Index rank = 0;               // target rank
    Eigen::MatrixXi signs;        // n x m
    Eigen::MatrixXd thresholds;   // n x m
    double lambda_used = 0.0;

    Index n() const { return signs.rows(); }
    Index m() const { return signs.cols(); }

    Eigen::MatrixXd sensing_matrix(Index j) const {
        // Rows of a column-major matrix are strided; copy before reshaping.
        const Eigen::VectorXd row = vec_model.entries.row(j).transpose();
        return Eigen::Map<const Eigen::MatrixXd>(row.data(), n1, n2);
    }

    OneBitPolyhedron polyhedron(Index budget = 100'000'000) const {
        OneBitMeasurements meas;
        meas.model = vec_model;
        meas.signs = signs;
        meas.thresholds = thresholds;
        meas.lambda_used = lambda_used;
        return OneBitPolyhedron(std::move(meas), budget);
    }
};

inline MatrixSensingProblem make_matrix_sensing_problem(Index n, Index n1, Index n2, Index rank,
                                                        const Eigen::MatrixXd& X,
                                                        const DitherConfig& dither,
                                                        const NoiseConfig& noise,
                                                        std::uint64_t seed) {
    MatrixSensingProblem problem;
    problem.vec_model = gen_gaussian_model(n, n1 * n2, rng::derive_seed(seed, 0x6d7378));
    problem.n1 = n1;
    problem.n2 = n2;
    problem.rank = rank;
    const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(X.data(), X.size());
    OneBitMeasurements meas = quantize(problem.vec_model, xv, dither, noise, seed);
    problem.signs = std::move(meas.signs);
    problem.thresholds = std::move(meas.thresholds);
    problem.lambda_used = meas.lambda_used;
    return problem;
}

/// Matrix-form ORKA update for polyhedron row t = l*n + j:
/// X + (r tau - r Tr(A_j^T X))^+ / ||A_j||_F^2 * A_j.
inline Eigen::MatrixXd matrix_rka_step(const Eigen::MatrixXd& X, Index t,
                                       const MatrixSensingProblem& problem) {
    const Index n = problem.n();
    const Index l = t / n;
    const Index j = t % n;
    const double r = static_cast<double>(problem.signs(j, l));
    const Eigen::MatrixXd Aj = problem.sensing_matrix(j);
    const double norm_sq = Aj.squaredNorm();
    if (norm_sq <= 0.0) return X;
    const double beta = std::max(r * problem.thresholds(j, l) - r * (Aj.array() * X.array()).sum(), 0.0);
    return X + (beta / norm_sq) * Aj;
}

// ---------------------------------------------------------------------------
// Shared step engine
// ---------------------------------------------------------------------------

struct StructuredConfig {
    Index max_iters = 500;        // outer (thresholded) iterations
    Index block_rows = 25;        // k' of the block step; 0 -> single-row steps
    double relaxation = 1.0;
    double tol = 0.0;             // violation floor
    std::uint64_t seed = 0;
    Index sparsity = 0;           // HT-ORKA / BIHT
    double st_scale = 0.5;        // ST threshold t = st_scale * median(|z|)
    double step_size = 1.0;       // eta of the gradient baselines
    Index baseline_iters = 30;    // BIHT / NBIHT / HSVT iteration budget
    bool normalize = false;       // ditherless direction mode: renormalize iterates
    bool backprojection_init = false;
    Index restarts = 1;           // HT-ORKA restart averaging (1 = single run)
    double restart_spread = 0.5;  // scale of the randomized restart initializers
    Index altmin_rounds = 20;     // factorized variant
    Index altmin_inner = 0;       // <= 0 -> 5 * (n1 + n2) * r
    std::function<void(const Eigen::VectorXd&)> observer;         // test hook
    std::function<void(const Eigen::MatrixXd&)> matrix_observer;  // test hook
};

namespace detail {

/// One Kaczmarz move on the polyhedron: either a single norm-sampled row
/// projection or a block step onto the worst-violated k' rows of a
/// norm-sampled block. Returns false when nothing was violated.
class OrkaStepEngine {
public:
    OrkaStepEngine(const RowProvider& provider, const StructuredConfig& cfg)
        : provider_(provider),
          kprime_(cfg.block_rows),
          relaxation_(cfg.relaxation),
          tol_(cfg.tol),
          stream_(rng::derive_seed(cfg.seed, 0x737465)) {
        if (kprime_ > 0) {
            std::vector<double> w(static_cast<std::size_t>(provider.block_count()));
            for (Index k = 0; k < provider.block_count(); ++k)
                w[static_cast<std::size_t>(k)] = provider.block_norm_sq(k);
            block_sampler_.emplace(w);
        } else {
            std::vector<double> w(static_cast<std::size_t>(provider.row_count()));
            for (Index j = 0; j < provider.row_count(); ++j)
                w[static_cast<std::size_t>(j)] = provider.row_norm_sq(j);
            row_sampler_.emplace(w);
        }
    }

    bool step(Eigen::VectorXd& x) {
        if (kprime_ <= 0) return row_step(x);
        return block_step(x);
    }

private:
    bool row_step(Eigen::VectorXd& x) {
        const Index j = row_sampler_->draw(stream_);
        Eigen::VectorXd c(provider_.dim());
        double b = 0.0;
        provider_.row(j, c, b);
        const double beta = b - c.dot(x);
        if (beta <= tol_) return false;
        x += (relaxation_ * beta / provider_.row_norm_sq(j)) * c;
        return true;
    }

    bool block_step(Eigen::VectorXd& x) {
        const Index k = provider_.block_count() > 1 ? block_sampler_->draw(stream_) : 0;
        provider_.block_violations(k, x, viol_);
        const auto [start, count] = provider_.block_range(k);
        order_.resize(static_cast<std::size_t>(count));
        std::iota(order_.begin(), order_.end(), Index{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](Index a, Index b) { return viol_[a] > viol_[b]; });
        Index n_violated = 0;
        for (Index t = 0; t < count; ++t)
            if (viol_[t] > tol_) ++n_violated;
        Index kp = std::min(kprime_, n_violated);
        if (kp == 0) return false;
        Eigen::VectorXd c(provider_.dim());
        double rhs = 0.0;
        while (kp > 0) {
            Eigen::MatrixXd Bp(kp, provider_.dim());
            Eigen::VectorXd resid(kp);
            for (Index t = 0; t < kp; ++t) {
                const Index local = order_[static_cast<std::size_t>(t)];
                provider_.row(start + local, c, rhs);
                Bp.row(t) = c.transpose();
                resid[t] = std::max(rhs - c.dot(x), 0.0);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(Bp * Bp.transpose());
            if (llt.info() == Eigen::Success) {
                x += relaxation_ * (Bp.transpose() * llt.solve(resid));
                return true;
            }
            --kp;
        }
        return false;
    }

    const RowProvider& provider_;
    Index kprime_;
    double relaxation_;
    double tol_;
    rng::Stream stream_;
    std::optional<rng::DiscreteSampler> row_sampler_;
    std::optional<rng::DiscreteSampler> block_sampler_;
    Eigen::VectorXd viol_;
    std::vector<Index> order_;
};

inline Eigen::VectorXd backprojection(const OneBitPolyhedron& poly) {
    const auto& meas = poly.measurements();
    const Index n = meas.n(), m = meas.m();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(poly.dim());
    for (Index l = 0; l < m; ++l)
        for (Index j = 0; j < n; ++j)
            acc += static_cast<double>(meas.signs(j, l)) * meas.model.entries.row(j).transpose();
    const double scale = meas.lambda_used > 0.0 ? meas.lambda_used : 1.0;
    return (scale / static_cast<double>(n * m)) * acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SVP-ORKA (low-rank matrix sensing)
// ---------------------------------------------------------------------------

struct MatrixSolveResult {
    Eigen::MatrixXd X;
    ConvergenceTrace trace;
};

/// Alternate one ORKA step on the vectorized polyhedron with the rank-r
/// singular value projection.
inline MatrixSolveResult svp_orka_solve(const MatrixSensingProblem& problem,
                                        const StructuredConfig& cfg,
                                        const Eigen::MatrixXd* ref = nullptr) {
    const OneBitPolyhedron poly = problem.polyhedron();
    detail::OrkaStepEngine engine(poly, cfg);
    const Index n1 = problem.n1, n2 = problem.n2;
    MatrixSolveResult result;
    result.X = Eigen::MatrixXd::Zero(n1, n2);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n1 * n2);
    for (Index i = 0; i < cfg.max_iters; ++i) {
        const bool moved = engine.step(x);
        ++result.trace.iterations;
        if (moved) {
            Eigen::Map<Eigen::MatrixXd> Xmap(x.data(), n1, n2);
            Xmap = rank_project(Xmap, problem.rank);
        }
        if (ref != nullptr)
            result.trace.dist_sq.push_back(
                (Eigen::Map<const Eigen::MatrixXd>(x.data(), n1, n2) - *ref).squaredNorm());
        if (cfg.matrix_observer) cfg.matrix_observer(Eigen::Map<const Eigen::MatrixXd>(x.data(), n1, n2));
        if (!moved) {
            result.trace.converged = true;
            break;
        }
    }
    detail::ensure_finite(x, "svp_orka_solve");
    result.X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n1, n2);
    return result;
}

// ---------------------------------------------------------------------------
// Factorized ORKA (alternating minimization)
// ---------------------------------------------------------------------------

struct FactorPair {
    Eigen::MatrixXd L;  // n1 x r
    Eigen::MatrixXd W;  // n2 x r
    Eigen::MatrixXd product() const { return L * W.transpose(); }
};

/// Rows of the W-subproblem: c = r_j^(l) vec(A_j^T L), rhs = r_j^(l) tau_j^(l).
inline DenseSystem factorized_subproblem_W(const MatrixSensingProblem& problem,
                                           const Eigen::MatrixXd& L) {
    const Index n = problem.n(), m = problem.m(), r = L.cols();
    Eigen::MatrixXd C(n * m, problem.n2 * r);
    Eigen::VectorXd b(n * m);
    for (Index j = 0; j < n; ++j) {
        const Eigen::MatrixXd M = problem.sensing_matrix(j).transpose() * L;  // n2 x r
        const Eigen::Map<const Eigen::VectorXd> mv(M.data(), M.size());
        for (Index l = 0; l < m; ++l) {
            const double rsign = static_cast<double>(problem.signs(j, l));
            C.row(l * n + j) = rsign * mv.transpose();
            b[l * n + j] = rsign * problem.thresholds(j, l);
        }
    }
    return DenseSystem(std::move(C), std::move(b));
}

/// Rows of the L-subproblem: c = r_j^(l) vec(A_j W), rhs = r_j^(l) tau_j^(l).
inline DenseSystem factorized_subproblem_L(const MatrixSensingProblem& problem,
                                           const Eigen::MatrixXd& W) {
    const Index n = problem.n(), m = problem.m(), r = W.cols();
    Eigen::MatrixXd C(n * m, problem.n1 * r);
    Eigen::VectorXd b(n * m);
    for (Index j = 0; j < n; ++j) {
        const Eigen::MatrixXd M = problem.sensing_matrix(j) * W;  // n1 x r
        const Eigen::Map<const Eigen::VectorXd> mv(M.data(), M.size());
        for (Index l = 0; l < m; ++l) {
            const double rsign = static_cast<double>(problem.signs(j, l));
            C.row(l * n + j) = rsign * mv.transpose();
            b[l * n + j] = rsign * problem.thresholds(j, l);
        }
    }
    return DenseSystem(std::move(C), std::move(b));
}

/// Alternating feasibility: fix L and run RKA on the W-polyhedron, then fix W
/// and run RKA on the L-polyhedron. Stalled alternation (no drop in total
/// positive residual over a round) terminates early with a flag.
inline MatrixSolveResult factorized_orka_solve(const MatrixSensingProblem& problem,
                                               const StructuredConfig& cfg) {
    const Index r = std::max<Index>(problem.rank, 1);
    const Index n1 = problem.n1, n2 = problem.n2;
    rng::Stream init(rng::derive_seed(cfg.seed, 0x666163));
    FactorPair f;
    f.L = init.gaussian_matrix(n1, r) / std::sqrt(static_cast<double>(r));
    f.W = init.gaussian_matrix(n2, r) / std::sqrt(static_cast<double>(r));

    SolverConfig inner;
    inner.max_iters = cfg.altmin_inner > 0 ? cfg.altmin_inner : 5 * (n1 + n2) * r;
    inner.check_every = 0;
    inner.relaxation = cfg.relaxation;

    MatrixSolveResult result;
    double best_violation = std::numeric_limits<double>::infinity();
    Index rounds_without_improvement = 0;
    for (Index t = 0; t < cfg.altmin_rounds; ++t) {
        {
            DenseSystem sysW = factorized_subproblem_W(problem, f.L);
            inner.seed = rng::derive_seed(cfg.seed, 0x616c74, 2 * static_cast<std::uint64_t>(t));
            Eigen::VectorXd w0 = Eigen::Map<const Eigen::VectorXd>(f.W.data(), f.W.size());
            SolveResult rw = rka_solve(sysW, inner, std::move(w0));
            f.W = Eigen::Map<const Eigen::MatrixXd>(rw.x.data(), n2, r);
        }
        DenseSystem sysL = factorized_subproblem_L(problem, f.W);
        inner.seed = rng::derive_seed(cfg.seed, 0x616c74, 2 * static_cast<std::uint64_t>(t) + 1);
        Eigen::VectorXd l0 = Eigen::Map<const Eigen::VectorXd>(f.L.data(), f.L.size());
        SolveResult rl = rka_solve(sysL, inner, std::move(l0));
        f.L = Eigen::Map<const Eigen::MatrixXd>(rl.x.data(), n1, r);
        ++result.trace.iterations;

        const Eigen::VectorXd lv = Eigen::Map<const Eigen::VectorXd>(f.L.data(), f.L.size());
        const double total_violation = sysL.violations(lv).cwiseMax(0.0).sum();
        result.trace.max_violation.push_back(total_violation);
        result.trace.check_iters.push_back(t);
        if (total_violation >= best_violation) {
            if (++rounds_without_improvement >= 3) {
                result.trace.stalled = true;
                break;
            }
        } else {
            rounds_without_improvement = 0;
            best_violation = total_violation;
        }
        if (total_violation <= cfg.tol) {
            result.trace.converged = true;
            break;
        }
    }
    result.X = f.product();
    return result;
}

// ---------------------------------------------------------------------------
// One-bit CS: ST-ORKA and HT-ORKA
// ---------------------------------------------------------------------------

/// Alternate one ORKA step on the one-bit CS polyhedron with the soft
/// thresholding operator (t = st_scale * median |z|).
inline SolveResult st_orka_solve(const OneBitPolyhedron& poly, const StructuredConfig& cfg,
                                 const Eigen::VectorXd* ref = nullptr) {
    detail::OrkaStepEngine engine(poly, cfg);
    SolveResult result;
    result.x = cfg.backprojection_init ? detail::backprojection(poly)
                                       : Eigen::VectorXd::Zero(poly.dim());
    if (cfg.normalize && result.x.norm() > 0.0) result.x /= result.x.norm();
    Eigen::VectorXd z;
    std::vector<double> mags(static_cast<std::size_t>(poly.dim()));
    for (Index i = 0; i < cfg.max_iters; ++i) {
        z = result.x;
        const bool moved = engine.step(z);
        double t = 0.0;
        if (cfg.st_scale > 0.0) {
            for (Index k = 0; k < z.size(); ++k) mags[static_cast<std::size_t>(k)] = std::abs(z[k]);
            const auto mid = mags.begin() + (mags.size() - 1) / 2;
            std::nth_element(mags.begin(), mid, mags.end());
            t = cfg.st_scale * *mid;
        }
        result.x = soft_threshold(z, t);
        if (cfg.normalize && result.x.norm() > 0.0) result.x /= result.x.norm();
        ++result.trace.iterations;
        detail::record_distance(result.trace, ref, result.x);
        if (cfg.observer) cfg.observer(result.x);
        if (!moved) {
            result.trace.converged = true;
            break;
        }
    }
    detail::ensure_finite(result.x, "st_orka_solve");
    return result;
}

namespace detail {

inline SolveResult ht_orka_single(const OneBitPolyhedron& poly, const StructuredConfig& cfg,
                                  Eigen::VectorXd x0, const Eigen::VectorXd* ref) {
    OrkaStepEngine engine(poly, cfg);
    SolveResult result;
    result.x = hard_threshold(std::move(x0), cfg.sparsity);
    if (cfg.normalize && result.x.norm() > 0.0) result.x /= result.x.norm();
    Eigen::VectorXd z;
    Index support_changes = 0;
    for (Index i = 0; i < cfg.max_iters; ++i) {
        z = result.x;
        const bool moved = engine.step(z);
        Eigen::VectorXd next = hard_threshold(z, cfg.sparsity);
        if (cfg.normalize && next.norm() > 0.0) next /= next.norm();
        for (Index k = 0; k < next.size(); ++k)
            if ((next[k] == 0.0) != (result.x[k] == 0.0)) {
                ++support_changes;
                break;
            }
        result.x = std::move(next);
        ++result.trace.iterations;
        record_distance(result.trace, ref, result.x);
        if (cfg.observer) cfg.observer(result.x);
        if (!moved) {
            result.trace.converged = true;
            break;
        }
    }
    result.trace.quantile_skips = support_changes;  // support-change count
    ensure_finite(result.x, "ht_orka_solve");
    return result;
}

}  // namespace detail

/// Alternate one ORKA step with the keep-s hard thresholding operator.
/// The trace counts support changes between consecutive iterates.
/// With cfg.restarts > 1 the solve is repeated from randomized starts and the
/// hard-thresholded average of the solutions is returned; independent runs
/// land at different points of the solution cell, so the average sits nearer
/// its center.
inline SolveResult ht_orka_solve(const OneBitPolyhedron& poly, const StructuredConfig& cfg,
                                 const Eigen::VectorXd* ref = nullptr) {
    if (cfg.sparsity <= 0) throw std::invalid_argument("ht_orka_solve: sparsity must be set");
    const Eigen::VectorXd base = cfg.backprojection_init ? detail::backprojection(poly)
                                                         : Eigen::VectorXd::Zero(poly.dim());
    if (cfg.restarts <= 1) return detail::ht_orka_single(poly, cfg, base, ref);

    rng::Stream init_stream(rng::derive_seed(cfg.seed, 0x727374));
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(poly.dim());
    SolveResult result;
    const double base_norm = base.norm();
    const double root_d = std::sqrt(static_cast<double>(poly.dim()));
    for (Index e = 0; e < cfg.restarts; ++e) {
        StructuredConfig run = cfg;
        run.restarts = 1;
        run.seed = rng::derive_seed(cfg.seed, 0x727375, static_cast<std::uint64_t>(e));
        Eigen::VectorXd x0 = base;
        if (e > 0) {
            const Eigen::VectorXd g = init_stream.gaussian_vector(poly.dim());
            x0 = base_norm > 0.0 ? (base + (cfg.restart_spread * base_norm / root_d) * g).eval()
                                 : (cfg.restart_spread * g).eval();
        }
        SolveResult single = detail::ht_orka_single(poly, run, std::move(x0), nullptr);
        acc += single.x;
        result.trace.iterations += single.trace.iterations;
        result.trace.quantile_skips += single.trace.quantile_skips;
    }
    result.x = hard_threshold(acc / static_cast<double>(cfg.restarts), cfg.sparsity);
    if (cfg.normalize && result.x.norm() > 0.0) result.x /= result.x.norm();
    detail::record_distance(result.trace, ref, result.x);
    return result;
}

// ---------------------------------------------------------------------------
// Comparison baselines (simplified reconstructions of the cited methods)
// ---------------------------------------------------------------------------

/// BIHT with thresholds: gradient-sign descent
///   x <- T_s(x + (eta/m') A_stack^T (r - sgn(A_stack x - tau))).
/// In the ditherless mode the update is divided by its norm and the iterate
/// is kept on the unit sphere (direction-only recovery).
inline SolveResult biht_baseline(const OneBitMeasurements& meas, const StructuredConfig& cfg) {
    if (cfg.sparsity <= 0) throw std::invalid_argument("biht_baseline: sparsity must be set");
    const Index n = meas.n(), m = meas.m(), d = meas.model.cols();
    const double mprime = static_cast<double>(n * m);
    SolveResult result;
    result.x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd y(n), u(n), g(d);
    for (Index it = 0; it < cfg.baseline_iters; ++it) {
        y = meas.model.entries * result.x;
        g.setZero();
        for (Index l = 0; l < m; ++l) {
            for (Index j = 0; j < n; ++j) {
                const double predicted = (y[j] - meas.thresholds(j, l) >= 0.0) ? 1.0 : -1.0;
                u[j] = static_cast<double>(meas.signs(j, l)) - predicted;
            }
            g.noalias() += meas.model.entries.transpose() * u;
        }
        if (cfg.normalize) {
            // Normalized variant: the update is divided by its own norm. The
            // iterate norm grows over the run, so the relative step anneals;
            // only the output is projected to the sphere.
            const double gn = g.norm();
            if (gn == 0.0) {
                result.trace.converged = true;
                break;
            }
            result.x = hard_threshold(result.x + (cfg.step_size / gn) * g, cfg.sparsity);
        } else {
            if (g.isZero(0.0)) {
                result.trace.converged = true;
                break;
            }
            result.x = hard_threshold(result.x + (cfg.step_size / mprime) * g, cfg.sparsity);
        }
        ++result.trace.iterations;
        if (cfg.observer) cfg.observer(result.x);
    }
    if (cfg.normalize && result.x.norm() > 0.0) result.x /= result.x.norm();
    detail::ensure_finite(result.x, "biht_baseline");
    return result;
}

/// Hard singular value thresholding baseline: a sign-mismatch gradient step in
/// matrix space followed by a soft singular-value shrink and rank projection.
inline MatrixSolveResult hsvt_baseline(const MatrixSensingProblem& problem,
                                       const StructuredConfig& cfg) {
    const Index n = problem.n(), m = problem.m();
    const Index n1 = problem.n1, n2 = problem.n2;
    const double mprime = static_cast<double>(n * m);
    MatrixSolveResult result;
    result.X = Eigen::MatrixXd::Zero(n1, n2);
    Eigen::VectorXd xv = Eigen::VectorXd::Zero(n1 * n2);
    Eigen::VectorXd y(n), u(n), g(n1 * n2);
    for (Index it = 0; it < cfg.baseline_iters; ++it) {
        y = problem.vec_model.entries * xv;
        g.setZero();
        for (Index l = 0; l < m; ++l) {
            for (Index j = 0; j < n; ++j) {
                const double predicted = (y[j] - problem.thresholds(j, l) >= 0.0) ? 1.0 : -1.0;
                u[j] = static_cast<double>(problem.signs(j, l)) - predicted;
            }
            g.noalias() += problem.vec_model.entries.transpose() * u;
        }
        xv += (cfg.step_size / mprime) * g;
        Eigen::Map<Eigen::MatrixXd> X(xv.data(), n1, n2);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::VectorXd S = svd.singularValues();
        const double shrink = problem.rank < S.size() ? S[problem.rank] : 0.0;
        for (Index k = 0; k < S.size(); ++k)
            S[k] = k < problem.rank ? std::max(S[k] - shrink, 0.0) : 0.0;
        X = svd.matrixU() * S.asDiagonal() * svd.matrixV().transpose();
        ++result.trace.iterations;
    }
    result.X = Eigen::Map<const Eigen::MatrixXd>(xv.data(), n1, n2);
    return result;
}

}  // namespace onebit
