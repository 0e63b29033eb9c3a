#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "onebit/rng.hpp"
#include "onebit/row_provider.hpp"

namespace onebit {

enum class BlockSketch { Identity, SparseGaussian };

struct SolverConfig {
    Index max_iters = 1000;
    double tol = 1e-8;            // stop when max positive residual <= tol
    double relaxation = 1.0;      // lambda_i, constant in (0, 2)
    Index motzkin_sample = 0;     // gamma; <= 0 means min(50, M)
    Index block_rows = 0;         // k'; <= 0 means min(d - 1, block size)
    double quantile = 0.7;        // q in (0, 1), quantile variant only
    std::uint64_t seed = 0;
    Index check_every = 100;      // stopping-scan cadence (iterations)
    BlockSketch block_sketch = BlockSketch::Identity;

    void validate() const {
        if (relaxation <= 0.0 || relaxation >= 2.0)
            throw std::invalid_argument("SolverConfig: relaxation must lie in (0, 2)");
        if (quantile <= 0.0 || quantile >= 1.0)
            throw std::invalid_argument("SolverConfig: quantile must lie in (0, 1)");
        if (max_iters < 0) throw std::invalid_argument("SolverConfig: max_iters must be >= 0");
    }
};

struct ConvergenceTrace {
    std::vector<double> dist_sq;        // ||x_i - ref||^2 per iteration (index 0 = x0), if ref given
    std::vector<Index> selected;        // row (or block) chosen at each iteration
    std::vector<Index> check_iters;     // iterations at which the residual was scanned
    std::vector<double> max_violation;  // max positive residual at those scans
    Index iterations = 0;
    bool converged = false;
    double seconds = 0.0;
    Index skipped_rows = 0;     // zero-norm rows encountered
    Index shrunk_blocks = 0;    // block steps that had to drop rows
    Index quantile_skips = 0;   // steps rejected by the quantile filter
    bool stalled = false;

    /// CSV: iteration, dist_sq, max_violation (blank where not recorded).
    void to_csv(std::ostream& os) const;
};

struct SolveResult {
    Eigen::VectorXd x;
    ConvergenceTrace trace;
};

namespace detail {

inline void write_float(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline void record_distance(ConvergenceTrace& trace, const Eigen::VectorXd* ref,
                            const Eigen::VectorXd& x) {
    if (ref != nullptr) trace.dist_sq.push_back((x - *ref).squaredNorm());
}

inline void ensure_finite(const Eigen::VectorXd& x, const char* where) {
    if (!x.allFinite()) throw std::runtime_error(std::string(where) + ": iterate became non-finite");
}

/// Scans all rows; records and returns true if max violation <= tol.
inline bool stop_scan(const RowProvider& provider, const Eigen::VectorXd& x, double tol,
                      Index iter, ConvergenceTrace& trace) {
    const double max_viol = provider.violations(x).maxCoeff();
    trace.check_iters.push_back(iter);
    trace.max_violation.push_back(std::max(max_viol, 0.0));
    return max_viol <= tol;
}

/// Uniform gamma-subset sampler (partial Fisher-Yates over a persistent pool).
class SubsetSampler {
public:
    explicit SubsetSampler(Index n) : pool_(static_cast<std::size_t>(n)) {
        std::iota(pool_.begin(), pool_.end(), Index{0});
    }
    /// First `k` entries of the pool are the sample after this call.
    void draw(Index k, rng::Stream& stream) {
        const Index n = static_cast<Index>(pool_.size());
        for (Index i = 0; i < k; ++i) {
            const Index j = i + stream.index(n - i);
            std::swap(pool_[static_cast<std::size_t>(i)], pool_[static_cast<std::size_t>(j)]);
        }
    }
    Index operator[](Index i) const { return pool_[static_cast<std::size_t>(i)]; }

private:
    std::vector<Index> pool_;
};

}  // namespace detail

inline void ConvergenceTrace::to_csv(std::ostream& os) const {
    os << "iteration,dist_sq,max_violation\n";
    std::size_t check_pos = 0;
    const std::size_t rows = std::max(dist_sq.size(), static_cast<std::size_t>(iterations) + 1);
    for (std::size_t i = 0; i < rows; ++i) {
        os << i << ",";
        if (i < dist_sq.size()) detail::write_float(os, dist_sq[i]);
        os << ",";
        if (check_pos < check_iters.size() &&
            static_cast<std::size_t>(check_iters[check_pos]) == i) {
            detail::write_float(os, max_violation[check_pos]);
            ++check_pos;
        }
        os << "\n";
    }
}

/// One Kaczmarz projection onto row j. Inequality rows project only when
/// violated ((.)^+ residual); equality rows always project. Zero-norm rows
/// leave x unchanged.
inline Eigen::VectorXd rka_step(const Eigen::VectorXd& x, Index j, const RowProvider& provider) {
    Eigen::VectorXd c(provider.dim());
    double b = 0.0;
    provider.row(j, c, b);
    const double norm_sq = provider.row_norm_sq(j);
    if (norm_sq <= 0.0) return x;
    double beta = b - c.dot(x);
    if (!provider.is_equality(j)) beta = std::max(beta, 0.0);
    return x + (beta / norm_sq) * c;
}

/// Randomized Kaczmarz: row j drawn with probability ||c_j||^2 / ||C||_F^2.
inline SolveResult rka_solve(const RowProvider& provider, const SolverConfig& cfg,
                             Eigen::VectorXd x0, const Eigen::VectorXd* ref = nullptr) {
    cfg.validate();
    detail::Stopwatch watch;
    const Index M = provider.row_count();
    std::vector<double> weights(static_cast<std::size_t>(M));
    for (Index j = 0; j < M; ++j) weights[static_cast<std::size_t>(j)] = provider.row_norm_sq(j);
    rng::DiscreteSampler sampler(weights);
    rng::Stream stream(rng::derive_seed(cfg.seed, 0x726b61));

    SolveResult result;
    result.x = std::move(x0);
    ConvergenceTrace& trace = result.trace;
    detail::record_distance(trace, ref, result.x);

    Eigen::VectorXd c(provider.dim());
    double b = 0.0;
    for (Index i = 0; i < cfg.max_iters; ++i) {
        const Index j = sampler.draw(stream);
        trace.selected.push_back(j);
        const double norm_sq = provider.row_norm_sq(j);
        if (norm_sq <= 0.0) {
            ++trace.skipped_rows;
        } else {
            provider.row(j, c, b);
            double beta = b - c.dot(result.x);
            if (!provider.is_equality(j)) beta = std::max(beta, 0.0);
            if (beta != 0.0) result.x += (cfg.relaxation * beta / norm_sq) * c;
        }
        ++trace.iterations;
        detail::record_distance(trace, ref, result.x);
        if (cfg.check_every > 0 && (i + 1) % cfg.check_every == 0) {
            detail::ensure_finite(result.x, "rka_solve");
            if (detail::stop_scan(provider, result.x, cfg.tol, i + 1, trace)) {
                trace.converged = true;
                break;
            }
        }
    }
    detail::ensure_finite(result.x, "rka_solve");
    trace.seconds = watch.seconds();
    return result;
}

namespace detail {

/// Motzkin selection shared by SKM and PrSKM: gamma uniform rows, then the
/// max positive residual; ties broken toward the lowest row index.
template <typename RowFn, typename NormFn>
SolveResult motzkin_loop(Index M, Index d, RowFn&& fetch_row, NormFn&& norm_sq,
                         const SolverConfig& cfg, Eigen::VectorXd x0,
                         const std::function<double(const Eigen::VectorXd&, Index,
                                                    ConvergenceTrace&)>& stop_check,
                         const std::function<void(ConvergenceTrace&, const Eigen::VectorXd&)>& record,
                         std::uint64_t stream_tag) {
    cfg.validate();
    Stopwatch watch;
    const Index gamma = std::min<Index>(cfg.motzkin_sample > 0 ? cfg.motzkin_sample : 50, M);
    rng::Stream stream(rng::derive_seed(cfg.seed, stream_tag));
    SubsetSampler subset(M);

    SolveResult result;
    result.x = std::move(x0);
    ConvergenceTrace& trace = result.trace;
    record(trace, result.x);

    Eigen::VectorXd c(d);
    double b = 0.0;
    for (Index i = 0; i < cfg.max_iters; ++i) {
        subset.draw(gamma, stream);
        Index best = -1;
        double best_res = 0.0;
        for (Index t = 0; t < gamma; ++t) {
            const Index j = subset[t];
            fetch_row(j, c, b);
            const double res = std::max(b - c.dot(result.x), 0.0);
            if (best < 0 || res > best_res || (res == best_res && j < best)) {
                best = j;
                best_res = res;
            }
        }
        trace.selected.push_back(best);
        const double nsq = norm_sq(best);
        if (nsq <= 0.0) {
            ++trace.skipped_rows;
        } else if (best_res > 0.0) {
            fetch_row(best, c, b);
            result.x += (cfg.relaxation * best_res / nsq) * c;
        }
        ++trace.iterations;
        record(trace, result.x);
        if (cfg.check_every > 0 && (i + 1) % cfg.check_every == 0) {
            ensure_finite(result.x, "skm_solve");
            if (stop_check(result.x, i + 1, trace) ) {
                trace.converged = true;
                break;
            }
        }
    }
    ensure_finite(result.x, "skm_solve");
    trace.seconds = watch.seconds();
    return result;
}

}  // namespace detail

/// Sampling Kaczmarz-Motzkin: gamma uniform rows per iteration, project onto
/// the worst violated one with relaxation cfg.relaxation.
inline SolveResult skm_solve(const RowProvider& provider, const SolverConfig& cfg,
                             Eigen::VectorXd x0, const Eigen::VectorXd* ref = nullptr) {
    auto fetch = [&](Index j, Eigen::VectorXd& c, double& b) { provider.row(j, c, b); };
    auto norm = [&](Index j) { return provider.row_norm_sq(j); };
    std::function<double(const Eigen::VectorXd&, Index, ConvergenceTrace&)> stop =
        [&](const Eigen::VectorXd& x, Index iter, ConvergenceTrace& trace) {
            return detail::stop_scan(provider, x, cfg.tol, iter, trace);
        };
    std::function<void(ConvergenceTrace&, const Eigen::VectorXd&)> record =
        [&](ConvergenceTrace& trace, const Eigen::VectorXd& x) {
            detail::record_distance(trace, ref, x);
        };
    return detail::motzkin_loop(provider.row_count(), provider.dim(), fetch, norm, cfg,
                                std::move(x0), stop, record, 0x736b6d);
}

/// Thin QR with the R diagonal normalized non-negative, so an orthonormal
/// input yields R = I exactly. Throws on rank deficiency.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> qr_precondition(const Eigen::MatrixXd& C) {
    const Index M = C.rows(), d = C.cols();
    if (M < d) throw std::invalid_argument("qr_precondition: need rows >= cols");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(M, d);
    Eigen::MatrixXd R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (Index k = 0; k < d; ++k) {
        if (R(k, k) < 0.0) {
            R.row(k) = -R.row(k);
            Q.col(k) = -Q.col(k);
        }
    }
    const double scale = R.cwiseAbs().maxCoeff();
    for (Index k = 0; k < d; ++k)
        if (std::abs(R(k, k)) <= 1e-13 * scale)
            throw std::runtime_error("qr_precondition: matrix is rank deficient");
    return {std::move(Q), std::move(R)};
}

/// Preconditioned SKM: SKM on Q z >= b, then back-substitution R xbar = zbar.
/// Distances (when a reference is given) are tracked in the original x-space.
inline SolveResult prskm_solve(const RowProvider& provider, const SolverConfig& cfg,
                               Eigen::VectorXd x0, const Eigen::VectorXd* ref = nullptr) {
    const Eigen::MatrixXd C = provider.materialize();
    const Eigen::VectorXd b = provider.materialize_rhs();
    auto [Q, R] = qr_precondition(C);
    const auto solve_back = [&R](const Eigen::VectorXd& z) {
        return R.triangularView<Eigen::Upper>().solve(z).eval();
    };

    Eigen::VectorXd z0 = R.triangularView<Eigen::Upper>() * x0;
    auto fetch = [&](Index j, Eigen::VectorXd& c, double& rhs) {
        c = Q.row(j).transpose();
        rhs = b[j];
    };
    Eigen::VectorXd qnorms = Q.rowwise().squaredNorm();
    auto norm = [&](Index j) { return qnorms[j]; };
    std::function<double(const Eigen::VectorXd&, Index, ConvergenceTrace&)> stop =
        [&](const Eigen::VectorXd& z, Index iter, ConvergenceTrace& trace) {
            const double max_viol = (b - Q * z).maxCoeff();
            trace.check_iters.push_back(iter);
            trace.max_violation.push_back(std::max(max_viol, 0.0));
            return max_viol <= cfg.tol;
        };
    std::function<void(ConvergenceTrace&, const Eigen::VectorXd&)> record =
        [&](ConvergenceTrace& trace, const Eigen::VectorXd& z) {
            if (ref != nullptr) trace.dist_sq.push_back((solve_back(z) - *ref).squaredNorm());
        };
    SolveResult result = detail::motzkin_loop(C.rows(), C.cols(), fetch, norm, cfg,
                                              std::move(z0), stop, record, 0x736b6d);
    result.x = solve_back(result.x);
    detail::ensure_finite(result.x, "prskm_solve");
    return result;
}

/// QR factor of the sketched matrix N^T C; used as an implicit right
/// preconditioner C R_s^{-1}. Throws if the sketch is singular (caller may
/// retry with a fresh seed).
inline Eigen::MatrixXd sketch_precondition_with(const Eigen::MatrixXd& C, const Eigen::MatrixXd& N) {
    if (N.rows() != C.rows()) throw std::invalid_argument("sketch_precondition: N rows must match C rows");
    if (N.cols() < C.cols()) throw std::invalid_argument("sketch_precondition: sketch size must be >= dim");
    const Eigen::MatrixXd S = N.transpose() * C;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(S);
    Eigen::MatrixXd R = qr.matrixQR().topRows(C.cols()).triangularView<Eigen::Upper>();
    for (Index k = 0; k < R.rows(); ++k)
        if (R(k, k) < 0.0) R.row(k) = -R.row(k);
    const double scale = R.cwiseAbs().maxCoeff();
    for (Index k = 0; k < R.rows(); ++k)
        if (std::abs(R(k, k)) <= 1e-13 * scale)
            throw std::runtime_error("sketch_precondition: singular sketch; retry with a fresh seed");
    return R;
}

/// Gaussian test matrix variant; default sketch size is ceil(d / eps^2) with
/// eps = 1/2, i.e. s = 4 d.
inline Eigen::MatrixXd sketch_precondition(const Eigen::MatrixXd& C, Index sketch_size,
                                           std::uint64_t seed) {
    const Index d = C.cols();
    if (sketch_size <= 0) sketch_size = 4 * d;
    if (sketch_size < d) throw std::invalid_argument("sketch_precondition: need sketch size >= d");
    rng::Stream stream(rng::derive_seed(seed, 0x736b74));
    const Eigen::MatrixXd N = stream.gaussian_matrix(C.rows(), sketch_size);
    return sketch_precondition_with(C, N);
}

/// SKM run on the implicitly preconditioned system C R_s^{-1} z >= b.
/// Rows of the preconditioned system are formed on demand (R_s^{-T} c_j), so
/// the product matrix is never materialized.
inline SolveResult sketch_prskm_solve(const RowProvider& provider, const SolverConfig& cfg,
                                      Eigen::VectorXd x0, Index sketch_size = 0,
                                      const Eigen::VectorXd* ref = nullptr) {
    const Eigen::MatrixXd C = provider.materialize();  // sketch pass needs one sweep of the rows
    const Eigen::VectorXd b = provider.materialize_rhs();
    const Eigen::MatrixXd R = sketch_precondition(C, sketch_size, cfg.seed);
    const auto solve_back = [&R](const Eigen::VectorXd& z) {
        return R.triangularView<Eigen::Upper>().solve(z).eval();
    };

    Eigen::VectorXd z0 = R.triangularView<Eigen::Upper>() * x0;
    Eigen::MatrixXd Ct = C.transpose();
    auto fetch = [&](Index j, Eigen::VectorXd& c, double& rhs) {
        c = R.triangularView<Eigen::Upper>().transpose().solve(Ct.col(j));
        rhs = b[j];
    };
    auto norm = [&](Index j) {
        Eigen::VectorXd c = R.triangularView<Eigen::Upper>().transpose().solve(Ct.col(j));
        return c.squaredNorm();
    };
    std::function<double(const Eigen::VectorXd&, Index, ConvergenceTrace&)> stop =
        [&](const Eigen::VectorXd& z, Index iter, ConvergenceTrace& trace) {
            const double max_viol = (b - C * solve_back(z)).maxCoeff();
            trace.check_iters.push_back(iter);
            trace.max_violation.push_back(std::max(max_viol, 0.0));
            return max_viol <= cfg.tol;
        };
    std::function<void(ConvergenceTrace&, const Eigen::VectorXd&)> record =
        [&](ConvergenceTrace& trace, const Eigen::VectorXd& z) {
            if (ref != nullptr) trace.dist_sq.push_back((solve_back(z) - *ref).squaredNorm());
        };
    SolveResult result = detail::motzkin_loop(C.rows(), C.cols(), fetch, norm, cfg,
                                              std::move(z0), stop, record, 0x736b6d);
    result.x = solve_back(result.x);
    detail::ensure_finite(result.x, "sketch_prskm_solve");
    return result;
}

/// Block SKM: block k drawn with probability ||B_k||_F^2 / ||B||_F^2, rows of
/// the block ordered by violation, the worst k' violated rows solved as an
/// equality subsystem through the pseudoinverse B'^T (B' B'^T)^{-1}.
/// Rank-deficient subsystems shrink k' for that iteration (flagged).
inline SolveResult block_skm_solve(const RowProvider& provider, const SolverConfig& cfg,
                                   Eigen::VectorXd x0, const Eigen::VectorXd* ref = nullptr) {
    cfg.validate();
    detail::Stopwatch watch;
    const Index m = provider.block_count();
    if (m <= 0) throw std::invalid_argument("block_skm_solve: provider has no block structure");
    const Index d = provider.dim();

    std::vector<double> weights(static_cast<std::size_t>(m));
    for (Index k = 0; k < m; ++k) weights[static_cast<std::size_t>(k)] = provider.block_norm_sq(k);
    rng::DiscreteSampler sampler(weights);
    rng::Stream stream(rng::derive_seed(cfg.seed, 0x626c6b));

    SolveResult result;
    result.x = std::move(x0);
    ConvergenceTrace& trace = result.trace;
    detail::record_distance(trace, ref, result.x);

    Eigen::VectorXd viol;
    Eigen::VectorXd c(d);
    double rhs = 0.0;
    std::vector<Index> order;
    Index consecutive_clean = 0;
    const Index clean_needed = std::max<Index>(2 * m, 2);

    for (Index i = 0; i < cfg.max_iters; ++i) {
        const Index k = sampler.draw(stream);
        trace.selected.push_back(k);
        const auto [start, count] = provider.block_range(k);
        Index block_n = count;
        Eigen::MatrixXd Bsub;
        Eigen::VectorXd bsub;
        if (cfg.block_sketch == BlockSketch::SparseGaussian) {
            // Lemma-style mode: the chosen block is hit with a fresh n x n
            // Gaussian before Motzkin selection.
            Eigen::MatrixXd B(count, d);
            Eigen::VectorXd bb(count);
            for (Index t = 0; t < count; ++t) {
                provider.row(start + t, c, rhs);
                B.row(t) = c.transpose();
                bb[t] = rhs;
            }
            const Eigen::MatrixXd G = stream.gaussian_matrix(count, count);
            Bsub = G.transpose() * B;
            bsub = G.transpose() * bb;
            viol = bsub - Bsub * result.x;
        } else {
            provider.block_violations(k, result.x, viol);
        }

        order.resize(static_cast<std::size_t>(block_n));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b2) { return viol[a] > viol[b2]; });
        Index n_violated = 0;
        for (Index t = 0; t < block_n; ++t)
            if (viol[t] > 0.0) ++n_violated;
        Index kprime = cfg.block_rows > 0 ? cfg.block_rows : std::min<Index>(d - 1, block_n);
        kprime = std::min(kprime, n_violated);

        ++trace.iterations;
        if (kprime == 0) {
            detail::record_distance(trace, ref, result.x);
            ++consecutive_clean;
            if (viol.maxCoeff() <= cfg.tol && consecutive_clean >= clean_needed) {
                trace.converged = true;
                break;
            }
            continue;
        }
        consecutive_clean = 0;

        // Gather the selected rows; shrink on rank-deficient Gram matrices.
        while (kprime > 0) {
            Eigen::MatrixXd Bp(kprime, d);
            Eigen::VectorXd resid(kprime);
            for (Index t = 0; t < kprime; ++t) {
                const Index local = order[static_cast<std::size_t>(t)];
                if (cfg.block_sketch == BlockSketch::SparseGaussian) {
                    Bp.row(t) = Bsub.row(local);
                    resid[t] = std::max(bsub[local] - Bsub.row(local).dot(result.x), 0.0);
                } else {
                    provider.row(start + local, c, rhs);
                    Bp.row(t) = c.transpose();
                    resid[t] = std::max(rhs - c.dot(result.x), 0.0);
                }
            }
            Eigen::MatrixXd gram = Bp * Bp.transpose();
            Eigen::LLT<Eigen::MatrixXd> llt(gram);
            if (llt.info() == Eigen::Success) {
                result.x += cfg.relaxation * (Bp.transpose() * llt.solve(resid));
                break;
            }
            --kprime;
            ++trace.shrunk_blocks;
        }
        detail::record_distance(trace, ref, result.x);
        if (cfg.check_every > 0 && (i + 1) % cfg.check_every == 0)
            detail::ensure_finite(result.x, "block_skm_solve");
    }
    detail::ensure_finite(result.x, "block_skm_solve");
    trace.seconds = watch.seconds();
    return result;
}

/// Nearest-rank quantile: the ceil(q * M)-th order statistic (1-indexed).
inline double nearest_rank_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("nearest_rank_quantile: empty input");
    if (q <= 0.0 || q > 1.0) throw std::invalid_argument("nearest_rank_quantile: q must be in (0, 1]");
    const auto M = static_cast<double>(values.size());
    const auto rank = static_cast<std::size_t>(std::min(M, std::ceil(q * M)));
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

/// Robust variant for corrupted systems: rows whose absolute residual exceeds
/// the empirical q-quantile (nearest rank, ceil(qM)-th order statistic) are
/// treated as corrupted and skipped.
inline SolveResult quantile_rka_solve(const RowProvider& provider, const SolverConfig& cfg,
                                      Eigen::VectorXd x0, const Eigen::VectorXd* ref = nullptr) {
    cfg.validate();
    detail::Stopwatch watch;
    const Index M = provider.row_count();
    std::vector<double> weights(static_cast<std::size_t>(M));
    for (Index j = 0; j < M; ++j) weights[static_cast<std::size_t>(j)] = provider.row_norm_sq(j);
    rng::DiscreteSampler sampler(weights);
    rng::Stream stream(rng::derive_seed(cfg.seed, 0x717261));

    SolveResult result;
    result.x = std::move(x0);
    ConvergenceTrace& trace = result.trace;
    detail::record_distance(trace, ref, result.x);

    Eigen::VectorXd c(provider.dim());
    double b = 0.0;
    std::vector<double> abs_res(static_cast<std::size_t>(M));
    for (Index i = 0; i < cfg.max_iters; ++i) {
        const Index j = sampler.draw(stream);
        trace.selected.push_back(j);
        const Eigen::VectorXd v = provider.violations(result.x);
        for (Index t = 0; t < M; ++t) abs_res[static_cast<std::size_t>(t)] = std::abs(v[t]);
        const double threshold = nearest_rank_quantile(abs_res, cfg.quantile);
        ++trace.iterations;
        if (std::abs(v[j]) > threshold) {
            ++trace.quantile_skips;
            detail::record_distance(trace, ref, result.x);
            continue;
        }
        const double norm_sq = provider.row_norm_sq(j);
        if (norm_sq <= 0.0) {
            ++trace.skipped_rows;
        } else if (v[j] > 0.0) {
            provider.row(j, c, b);
            result.x += (cfg.relaxation * v[j] / norm_sq) * c;
        }
        detail::record_distance(trace, ref, result.x);
        if (cfg.check_every > 0 && (i + 1) % cfg.check_every == 0)
            detail::ensure_finite(result.x, "quantile_rka_solve");
    }
    detail::ensure_finite(result.x, "quantile_rka_solve");
    trace.seconds = watch.seconds();
    return result;
}

/// Noisy-RKA error bound: (1 - 1/kappa^2)^(i/2) * x0_err + kappa * gamma_max.
inline double noisy_rka_error_bound(double kappa, double x0_err, Index iters, double gamma_max) {
    if (kappa < 1.0) throw std::invalid_argument("noisy_rka_error_bound: kappa must be >= 1");
    const double rate = 1.0 - 1.0 / (kappa * kappa);
    return std::pow(rate, static_cast<double>(iters) / 2.0) * x0_err + kappa * gamma_max;
}

}  // namespace onebit
