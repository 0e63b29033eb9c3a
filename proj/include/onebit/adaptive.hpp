#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "onebit/polyhedron.hpp"
#include "onebit/sensing.hpp"
#include "onebit/solvers.hpp"

namespace onebit {

/// Returns fresh sign bits for the supplied thresholds (simulates the
/// re-sampling hardware). Column l of the argument is threshold sequence l.
using MeasurementOracle = std::function<Eigen::MatrixXi(const Eigen::MatrixXd& thresholds)>;

struct AdaptiveConfig {
    Index rounds = 8;               // K
    double delta = -1.0;            // stop when sum_l ||tau_{k+1} - tau_k|| <= delta; <=0 -> 1e-3 * m * sqrt(n)
    SolverKind solver = SolverKind::BlockSkm;
    SolverConfig inner;             // inner.max_iters <= 0 -> 10 * d
    bool requantize = false;        // re-invoke the oracle each round (feedback-capable variant)
};

struct AdaptiveResult {
    Eigen::VectorXd x;
    std::vector<Eigen::MatrixXd> threshold_history;  // thresholds at the start of each round
    std::vector<double> threshold_movement;          // sum_l ||tau_{k+1} - tau_k||_2 per round
    Index rounds_run = 0;
    ConvergenceTrace last_trace;
};

/// Adaptive threshold refinement (round k): solve the current polyhedron for
/// x_k, then move every threshold to the midpoint between A x_k and itself
/// along the recorded sign direction:
///   eps^(l) = r^(l) .* (A x_k - tau^(l)),  tau^(l) <- A x_k - (r^(l) .* eps^(l)) / 2.
/// By construction x_k keeps its signs against the new thresholds, so the
/// default mode never re-quantizes; the oracle is invoked per round only when
/// cfg.requantize is set. Each round solves from scratch.
inline AdaptiveResult adaptive_threshold_solve(const SamplingModel& model,
                                               const DitherConfig& dither,
                                               const MeasurementOracle& measure,
                                               const AdaptiveConfig& cfg,
                                               std::uint64_t dither_seed) {
    const Index n = model.rows();
    const Index d = model.cols();
    const Index m = dither.sequences;
    if (!measure) throw std::invalid_argument("adaptive_threshold_solve: oracle is required");
    if (cfg.rounds < 1) throw std::invalid_argument("AdaptiveConfig: rounds must be >= 1");

    // Initial thresholds from the dither law. The dynamic-range law needs the
    // oracle side to pick lambda, so callers supply it via dither.lambda.
    rng::Stream stream(rng::derive_seed(dither_seed, 0x616474));
    Eigen::MatrixXd tau(n, m);
    for (Index l = 0; l < m; ++l)
        for (Index j = 0; j < n; ++j)
            tau(j, l) = (dither.law == DitherConfig::Law::Gaussian)
                            ? stream.gaussian(dither.sigma)
                            : stream.uniform(-dither.lambda, dither.lambda);

    Eigen::MatrixXi signs = measure(tau);
    const double delta = cfg.delta > 0.0
                             ? cfg.delta
                             : 1e-3 * static_cast<double>(m) * std::sqrt(static_cast<double>(n));

    AdaptiveResult result;
    result.x = Eigen::VectorXd::Zero(d);
    SolverConfig inner = cfg.inner;
    if (inner.max_iters <= 0) inner.max_iters = 10 * d;

    for (Index k = 0; k < cfg.rounds; ++k) {
        result.threshold_history.push_back(tau);
        OneBitMeasurements meas;
        meas.model = model;
        meas.signs = signs;
        meas.thresholds = tau;
        OneBitPolyhedron poly(std::move(meas));

        inner.seed = rng::derive_seed(cfg.inner.seed, 0x726e64, static_cast<std::uint64_t>(k));
        SolveResult solved = orka_solve(poly, cfg.solver, inner, Eigen::VectorXd::Zero(d));
        result.x = solved.x;
        result.last_trace = std::move(solved.trace);
        ++result.rounds_run;

        const Eigen::VectorXd y = model.entries * result.x;
        Eigen::MatrixXd tau_next(n, m);
        double movement = 0.0;
        for (Index l = 0; l < m; ++l) {
            double norm_sq = 0.0;
            for (Index j = 0; j < n; ++j) {
                const double r = static_cast<double>(signs(j, l));
                const double eps = r * (y[j] - tau(j, l));
                tau_next(j, l) = y[j] - 0.5 * r * eps;
                const double diff = tau_next(j, l) - tau(j, l);
                norm_sq += diff * diff;
            }
            movement += std::sqrt(norm_sq);
        }
        result.threshold_movement.push_back(movement);
        tau = std::move(tau_next);
        if (cfg.requantize) signs = measure(tau);
        if (movement <= delta) break;
    }
    result.threshold_history.push_back(tau);
    return result;
}

}  // namespace onebit
