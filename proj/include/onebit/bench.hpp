#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "onebit/adaptive.hpp"
#include "onebit/analysis.hpp"
#include "onebit/polyhedron.hpp"
#include "onebit/sensing.hpp"
#include "onebit/solvers.hpp"
#include "onebit/structured.hpp"

namespace onebit::bench {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double nmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
    const double denom = truth.squaredNorm();
    if (denom <= 0.0) throw std::invalid_argument("nmse: ground truth must be nonzero");
    return (estimate - truth).squaredNorm() / denom;
}

inline double nmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
    const double denom = truth.squaredNorm();
    if (denom <= 0.0) throw std::invalid_argument("nmse: ground truth must be nonzero");
    return (estimate - truth).squaredNorm() / denom;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class Preset { Fig1, Fig2a, Fig2b, Fig3a, Fig3b, Fig4a, Fig4b, Custom };

inline const char* preset_name(Preset p) {
    switch (p) {
        case Preset::Fig1: return "fig1";
        case Preset::Fig2a: return "fig2a";
        case Preset::Fig2b: return "fig2b";
        case Preset::Fig3a: return "fig3a";
        case Preset::Fig3b: return "fig3b";
        case Preset::Fig4a: return "fig4a";
        case Preset::Fig4b: return "fig4b";
        case Preset::Custom: return "custom";
    }
    return "?";
}

inline Preset preset_from_name(const std::string& name) {
    for (Preset p : {Preset::Fig1, Preset::Fig2a, Preset::Fig2b, Preset::Fig3a, Preset::Fig3b,
                     Preset::Fig4a, Preset::Fig4b, Preset::Custom})
        if (name == preset_name(p)) return p;
    throw std::invalid_argument("unknown preset: " + name);
}

/// Custom-experiment knobs (ignored by the figure presets).
struct CustomSpec {
    Index n = 100, d = 10, m = 1;
    Index sparsity = 0;                 // 0 = dense signal
    SolverKind solver = SolverKind::Rka;
    SolverConfig solver_cfg;
    DitherConfig dither = DitherConfig::dynamic_range(1);
    NoiseConfig noise = NoiseConfig::none();
};

struct ExperimentConfig {
    Preset preset = Preset::Custom;
    Index trials = 100;               // paper uses 1000; --trials restores it
    std::uint64_t seed = 42;
    double noise_sigma = -1.0;        // < 0 -> preset default
    Index workers = 0;                // 0 -> ONEBIT_BENCH_WORKERS env or hardware
    std::string out_path;             // per-trial CSV
    std::string summary_path;         // optional summary CSV
    CustomSpec custom;
};

inline void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    if (j.contains("preset")) cfg.preset = preset_from_name(j.at("preset").get<std::string>());
    if (j.contains("trials")) cfg.trials = j.at("trials").get<Index>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("noise_sigma")) cfg.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<Index>();
    if (j.contains("out")) cfg.out_path = j.at("out").get<std::string>();
    if (j.contains("summary_out")) cfg.summary_path = j.at("summary_out").get<std::string>();
    if (j.contains("custom")) {
        const auto& c = j.at("custom");
        if (c.contains("n")) cfg.custom.n = c.at("n").get<Index>();
        if (c.contains("d")) cfg.custom.d = c.at("d").get<Index>();
        if (c.contains("m")) cfg.custom.m = c.at("m").get<Index>();
        if (c.contains("sparsity")) cfg.custom.sparsity = c.at("sparsity").get<Index>();
        if (c.contains("solver")) cfg.custom.solver = solver_from_name(c.at("solver").get<std::string>());
        if (c.contains("max_iters")) cfg.custom.solver_cfg.max_iters = c.at("max_iters").get<Index>();
        if (c.contains("tol")) cfg.custom.solver_cfg.tol = c.at("tol").get<double>();
    }
}

// ---------------------------------------------------------------------------
// Result rows
// ---------------------------------------------------------------------------

struct TrialRow {
    std::string arm;
    double sweep = 0.0;
    Index trial = 0;
    double nmse = 0.0;
    Index iterations = 0;
    std::string status = "ok";  // "ok" or "abort:<reason>"
};

struct SummaryRow {
    std::string arm;
    double sweep = 0.0;
    Index count = 0;
    double median = 0.0, mean = 0.0, iqr_lo = 0.0, iqr_hi = 0.0;
};

struct ExperimentResult {
    std::vector<TrialRow> rows;
    std::vector<SummaryRow> summary;
    Index aborted = 0;
    int exit_code = 0;

    double summary_median(const std::string& arm, double sweep) const {
        for (const auto& s : summary)
            if (s.arm == arm && s.sweep == sweep) return s.median;
        throw std::out_of_range("no summary row for arm=" + arm);
    }
};

namespace detail {

inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline std::vector<SummaryRow> summarize(const std::vector<TrialRow>& rows) {
    std::vector<std::pair<std::string, double>> keys;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        std::pair<std::string, double> key{r.arm, r.sweep};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());
    std::vector<SummaryRow> out;
    for (const auto& [arm, sweep] : keys) {
        std::vector<double> vals;
        for (const auto& r : rows)
            if (r.status == "ok" && r.arm == arm && r.sweep == sweep) vals.push_back(r.nmse);
        std::sort(vals.begin(), vals.end());
        SummaryRow s;
        s.arm = arm;
        s.sweep = sweep;
        s.count = static_cast<Index>(vals.size());
        s.median = detail::percentile_sorted(vals, 0.5);
        s.iqr_lo = detail::percentile_sorted(vals, 0.25);
        s.iqr_hi = detail::percentile_sorted(vals, 0.75);
        double mean = 0.0;
        for (double v : vals) mean += v;
        s.mean = vals.empty() ? 0.0 : mean / static_cast<double>(vals.size());
        out.push_back(std::move(s));
    }
    return out;
}

/// Per-trial CSV. Rows are sorted before writing so aggregation order does
/// not matter; contents are deterministic for a fixed config and seed.
inline void write_rows_csv(const std::vector<TrialRow>& rows, std::ostream& os,
                           const std::string& preset) {
    os << "preset,arm,sweep,trial,nmse,iterations,status\n";
    std::vector<const TrialRow*> sorted;
    sorted.reserve(rows.size());
    for (const auto& r : rows) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const TrialRow* a, const TrialRow* b) {
        if (a->arm != b->arm) return a->arm < b->arm;
        if (a->sweep != b->sweep) return a->sweep < b->sweep;
        return a->trial < b->trial;
    });
    for (const TrialRow* r : sorted) {
        os << preset << ',' << r->arm << ',';
        onebit::detail::write_float(os, r->sweep);
        os << ',' << r->trial << ',';
        onebit::detail::write_float(os, r->nmse);
        os << ',' << r->iterations << ',' << r->status << '\n';
    }
}

inline void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& os,
                              const std::string& preset) {
    os << "preset,arm,sweep,count,median,mean,iqr_lo,iqr_hi\n";
    for (const auto& s : summary) {
        os << preset << ',' << s.arm << ',';
        onebit::detail::write_float(os, s.sweep);
        os << ',' << s.count << ',';
        onebit::detail::write_float(os, s.median);
        os << ',';
        onebit::detail::write_float(os, s.mean);
        os << ',';
        onebit::detail::write_float(os, s.iqr_lo);
        os << ',';
        onebit::detail::write_float(os, s.iqr_hi);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Resolved preset parameters (the experiment protocols)
// ---------------------------------------------------------------------------

struct PresetParams {
    // Common
    double noise_sigma = 0.0;
    Index m = 1;
    std::vector<double> sweep;      // sweep values as plotted (m, oversampling, n, iteration)
    std::vector<Index> n_values;    // measurement rows per sweep point (when applicable)
    // Vector problems
    Index n = 0, d = 0, sparsity = 0;
    // Matrix problems
    Index n1 = 0, n2 = 0, rank = 0;
    bool ditherless = false;
    bool unit_norm = false;
    std::vector<std::string> arms;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["noise_sigma"] = noise_sigma;
        j["m"] = m;
        j["sweep"] = sweep;
        j["n_values"] = n_values;
        j["n"] = n;
        j["d"] = d;
        j["sparsity"] = sparsity;
        j["n1"] = n1;
        j["n2"] = n2;
        j["rank"] = rank;
        j["ditherless"] = ditherless;
        j["unit_norm"] = unit_norm;
        j["arms"] = arms;
        return j;
    }
};

inline std::vector<double> fig1_checkpoints() {
    std::vector<double> cps;
    for (int k = 0; k <= 16; ++k) {
        const double v = std::round(std::pow(10.0, static_cast<double>(k) / 4.0));
        if (cps.empty() || v > cps.back()) cps.push_back(v);
    }
    return cps;  // 1 .. 10000, log-spaced
}

inline PresetParams preset_params(Preset preset) {
    PresetParams p;
    switch (preset) {
        case Preset::Fig1:
            p.n = 100; p.d = 10; p.m = 40;
            p.noise_sigma = 0.0;
            p.sweep = fig1_checkpoints();
            p.arms = {"rka", "skm", "prskm", "block_skm"};
            break;
        case Preset::Fig2a:
            p.n = 1800; p.n1 = 30; p.n2 = 30; p.rank = 2;
            p.noise_sigma = 0.1;
            p.sweep = {1, 10, 20, 30};
            p.arms = {"random", "adaptive"};
            break;
        case Preset::Fig2b:
            p.n = 500; p.d = 100; p.sparsity = 10;
            p.noise_sigma = 0.1;
            p.sweep = {1, 10, 20, 30};
            p.arms = {"random", "adaptive"};
            break;
        case Preset::Fig3a:
            p.n1 = 30; p.n2 = 30; p.rank = 2; p.m = 1;
            p.noise_sigma = 0.0;  // SVP-ORKA comparison is noiseless
            p.sweep = {8, 16, 32, 64};  // oversampling n/(n1 r); log2(sweep) = {3,4,5,6}
            for (double s : p.sweep) p.n_values.push_back(static_cast<Index>(s) * p.n1 * p.rank);
            p.arms = {"svp_orka", "hsvt"};
            break;
        case Preset::Fig3b:
            p.n1 = 30; p.n2 = 30; p.rank = 1; p.m = 1;
            p.noise_sigma = 0.1;
            p.sweep = {5, 10, 15, 20};  // beta = n / (n1^2 r)
            for (double s : p.sweep) p.n_values.push_back(static_cast<Index>(s) * p.n1 * p.n1 * p.rank);
            p.arms = {"factorized_orka"};
            break;
        case Preset::Fig4a: {
            p.d = 100; p.sparsity = 15; p.m = 1;
            p.noise_sigma = 0.1;
            p.sweep = {10, 50, 100, 200};  // oversampling n / (s log(d/s)), natural log
            const double dof = static_cast<double>(p.sparsity) *
                               std::log(static_cast<double>(p.d) / static_cast<double>(p.sparsity));
            for (double s : p.sweep) p.n_values.push_back(static_cast<Index>(std::llround(s * dof)));
            p.arms = {"ht_orka", "st_orka", "biht"};
            break;
        }
        case Preset::Fig4b:
            p.d = 256; p.sparsity = 25; p.m = 1;
            p.noise_sigma = 0.1;
            p.ditherless = true;
            p.unit_norm = true;
            p.sweep = {1000, 1500, 2000, 2500};
            for (double s : p.sweep) p.n_values.push_back(static_cast<Index>(s));
            p.arms = {"ht_orka", "st_orka", "nbiht"};
            break;
        case Preset::Custom:
            p.arms = {"solver"};
            p.sweep = {0};
            break;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Per-trial preset implementations
// ---------------------------------------------------------------------------

namespace detail {

inline void trial_fig1(std::uint64_t seed, Index trial, const PresetParams& p,
                       std::vector<TrialRow>& out) {
    const SamplingModel A = gen_gaussian_model(p.n, p.d, rng::derive_seed(seed, 1));
    const StructuredSignal x = gen_dense_signal(p.d, rng::derive_seed(seed, 2));
    const OneBitMeasurements meas = quantize(A, x.values, DitherConfig::gaussian(p.m, 1.0),
                                             NoiseConfig::none(), rng::derive_seed(seed, 3));
    const OneBitPolyhedron poly(meas);
    const double denom = x.values.squaredNorm();
    const auto cps = fig1_checkpoints();
    const Index budget = static_cast<Index>(cps.back());

    for (const std::string& arm : p.arms) {
        SolverConfig cfg;
        cfg.max_iters = budget;
        cfg.check_every = 0;  // full curve, no early stop
        cfg.motzkin_sample = 100;
        cfg.block_rows = 9;
        cfg.relaxation = 1.5;
        // One solver stream for every arm (common random numbers): SKM and
        // PrSKM then draw identical Motzkin subsets, which sharpens the
        // ordering comparison.
        cfg.seed = rng::derive_seed(seed, 7);
        SolveResult res = orka_solve(poly, solver_from_name(arm), cfg,
                                     Eigen::VectorXd::Zero(p.d), &x.values);
        for (double cp : cps) {
            const auto idx = static_cast<std::size_t>(cp);
            TrialRow row;
            row.arm = arm;
            row.sweep = cp;
            row.trial = trial;
            row.nmse = res.trace.dist_sq.at(std::min(idx, res.trace.dist_sq.size() - 1)) / denom;
            row.iterations = static_cast<Index>(cp);
            out.push_back(std::move(row));
        }
    }
}

struct Fig2Instance {
    SamplingModel model;
    Eigen::VectorXd x;
};

inline void trial_fig2(std::uint64_t seed, Index trial, const PresetParams& p, bool lowrank,
                       double noise_sigma, std::vector<TrialRow>& out) {
    Fig2Instance inst;
    if (lowrank) {
        inst.model = gen_gaussian_model(p.n, p.n1 * p.n2, rng::derive_seed(seed, 1));
        inst.x = gen_lowrank_signal(p.n1, p.n2, p.rank, rng::derive_seed(seed, 2)).values;
    } else {
        inst.model = gen_gaussian_model(p.n, p.d, rng::derive_seed(seed, 1));
        inst.x = gen_sparse_signal(p.d, p.sparsity, rng::derive_seed(seed, 2)).values;
    }
    const Eigen::VectorXd y = inst.model.measure(inst.x);
    const double lambda = y.cwiseAbs().maxCoeff();
    const Index d = inst.model.cols();

    const Index inner_iters = 150;
    const Index rounds = 4;
    for (double m_sweep : p.sweep) {
        const Index m = static_cast<Index>(m_sweep);
        DitherConfig dither = DitherConfig::uniform(m, lambda);

        // The oracle's noise is fresh per invocation (the hardware re-measures).
        auto make_oracle = [&](std::uint64_t tag) {
            auto counter = std::make_shared<Index>(0);
            return MeasurementOracle([&inst, &y, noise_sigma, tag, counter, m](const Eigen::MatrixXd& tau) {
                rng::Stream noise(rng::derive_seed(tag, 0x6f7263, static_cast<std::uint64_t>((*counter)++)));
                Eigen::MatrixXi signs(tau.rows(), tau.cols());
                for (Index l = 0; l < m; ++l)
                    for (Index j = 0; j < tau.rows(); ++j)
                        signs(j, l) = (y[j] + noise.gaussian(noise_sigma) - tau(j, l) >= 0.0) ? 1 : -1;
                return signs;
            });
        };
        const std::uint64_t oracle_tag = rng::derive_seed(seed, 4, static_cast<std::uint64_t>(m));
        const std::uint64_t dither_seed = rng::derive_seed(seed, 5, static_cast<std::uint64_t>(m));

        AdaptiveConfig acfg;
        acfg.solver = SolverKind::BlockSkm;
        acfg.inner.block_rows = lowrank ? 100 : 50;
        acfg.inner.check_every = 0;
        acfg.inner.seed = rng::derive_seed(seed, 6, static_cast<std::uint64_t>(m));

        // Random-threshold arm: one round with the adaptive arm's total budget.
        acfg.rounds = 1;
        acfg.inner.max_iters = inner_iters * rounds;
        AdaptiveResult random_arm =
            adaptive_threshold_solve(inst.model, dither, make_oracle(oracle_tag), acfg, dither_seed);
        out.push_back({"random", m_sweep, trial, nmse(random_arm.x, inst.x),
                       random_arm.last_trace.iterations, "ok"});

        // Adaptive arm: K rounds, re-measuring at the refined thresholds.
        acfg.rounds = rounds;
        acfg.inner.max_iters = inner_iters;
        acfg.requantize = true;
        acfg.delta = 1e-12;  // fixed round count; movement stop is for tiny systems
        AdaptiveResult adaptive_arm =
            adaptive_threshold_solve(inst.model, dither, make_oracle(oracle_tag), acfg, dither_seed);
        out.push_back({"adaptive", m_sweep, trial, nmse(adaptive_arm.x, inst.x),
                       adaptive_arm.last_trace.iterations, "ok"});
    }
}

inline void trial_fig3a(std::uint64_t seed, Index trial, const PresetParams& p, double noise_sigma,
                        std::vector<TrialRow>& out) {
    const Eigen::MatrixXd X =
        gen_lowrank_signal(p.n1, p.n2, p.rank, rng::derive_seed(seed, 1)).matrix();
    for (std::size_t i = 0; i < p.sweep.size(); ++i) {
        const Index n = p.n_values[i];
        const NoiseConfig noise = noise_sigma > 0.0 ? NoiseConfig::gaussian(noise_sigma)
                                                    : NoiseConfig::none();
        MatrixSensingProblem problem = make_matrix_sensing_problem(
            n, p.n1, p.n2, p.rank, X, DitherConfig::dynamic_range(p.m), noise,
            rng::derive_seed(seed, 2, static_cast<std::uint64_t>(n)));

        StructuredConfig scfg;
        scfg.max_iters = 500;
        scfg.block_rows = 25;
        scfg.seed = rng::derive_seed(seed, 3, static_cast<std::uint64_t>(n));
        MatrixSolveResult svp = svp_orka_solve(problem, scfg);
        out.push_back({"svp_orka", p.sweep[i], trial, nmse(svp.X, X), svp.trace.iterations, "ok"});

        StructuredConfig hcfg;
        hcfg.baseline_iters = 100;
        hcfg.step_size = 1.0;
        MatrixSolveResult hsvt = hsvt_baseline(problem, hcfg);
        out.push_back({"hsvt", p.sweep[i], trial, nmse(hsvt.X, X), hsvt.trace.iterations, "ok"});
    }
}

inline void trial_fig3b(std::uint64_t seed, Index trial, const PresetParams& p, double noise_sigma,
                        std::vector<TrialRow>& out) {
    const Eigen::MatrixXd X =
        gen_lowrank_signal(p.n1, p.n2, p.rank, rng::derive_seed(seed, 1)).matrix();
    for (std::size_t i = 0; i < p.sweep.size(); ++i) {
        const Index n = p.n_values[i];
        MatrixSensingProblem problem = make_matrix_sensing_problem(
            n, p.n1, p.n2, p.rank, X, DitherConfig::dynamic_range(p.m),
            NoiseConfig::gaussian(noise_sigma), rng::derive_seed(seed, 2, static_cast<std::uint64_t>(n)));
        StructuredConfig scfg;
        scfg.altmin_rounds = 12;
        scfg.altmin_inner = 1500;
        scfg.seed = rng::derive_seed(seed, 3, static_cast<std::uint64_t>(n));
        MatrixSolveResult res = factorized_orka_solve(problem, scfg);
        out.push_back({"factorized_orka", p.sweep[i], trial, nmse(res.X, X), res.trace.iterations, "ok"});
    }
}

inline void trial_fig4a(std::uint64_t seed, Index trial, const PresetParams& p, double noise_sigma,
                        std::vector<TrialRow>& out) {
    const StructuredSignal x = gen_sparse_signal(p.d, p.sparsity, rng::derive_seed(seed, 1));
    for (std::size_t i = 0; i < p.sweep.size(); ++i) {
        const Index n = p.n_values[i];
        const SamplingModel A = gen_gaussian_model(n, p.d, rng::derive_seed(seed, 2, static_cast<std::uint64_t>(n)));
        const OneBitMeasurements meas =
            quantize(A, x.values, DitherConfig::dynamic_range(p.m),
                     NoiseConfig::gaussian(noise_sigma),
                     rng::derive_seed(seed, 3, static_cast<std::uint64_t>(n)));
        const OneBitPolyhedron poly(meas, 100'000'000);

        StructuredConfig ht;
        ht.max_iters = 400;
        ht.block_rows = 25;
        ht.sparsity = p.sparsity;
        ht.restarts = 8;
        ht.seed = rng::derive_seed(seed, 4, static_cast<std::uint64_t>(n));
        SolveResult rh = ht_orka_solve(poly, ht);
        out.push_back({"ht_orka", p.sweep[i], trial, nmse(rh.x, x.values), rh.trace.iterations, "ok"});

        StructuredConfig st = ht;
        st.restarts = 1;
        st.st_scale = 0.5;
        SolveResult rs = st_orka_solve(poly, st);
        out.push_back({"st_orka", p.sweep[i], trial, nmse(rs.x, x.values), rs.trace.iterations, "ok"});

        StructuredConfig bi;
        bi.sparsity = p.sparsity;
        bi.baseline_iters = 30;
        bi.step_size = 1.0;
        SolveResult rb = biht_baseline(meas, bi);
        out.push_back({"biht", p.sweep[i], trial, nmse(rb.x, x.values), rb.trace.iterations, "ok"});
    }
}

inline void trial_fig4b(std::uint64_t seed, Index trial, const PresetParams& p, double noise_sigma,
                        std::vector<TrialRow>& out) {
    StructuredSignal x = gen_sparse_signal(p.d, p.sparsity, rng::derive_seed(seed, 1));
    x.values /= x.values.norm();  // direction-only recovery
    for (std::size_t i = 0; i < p.sweep.size(); ++i) {
        const Index n = p.n_values[i];
        const SamplingModel A = gen_gaussian_model(n, p.d, rng::derive_seed(seed, 2, static_cast<std::uint64_t>(n)));
        const OneBitMeasurements meas =
            quantize(A, x.values, DitherConfig::none(p.m), NoiseConfig::gaussian(noise_sigma),
                     rng::derive_seed(seed, 3, static_cast<std::uint64_t>(n)));
        const OneBitPolyhedron poly(meas, 100'000'000);

        StructuredConfig ht;
        ht.max_iters = 600;
        ht.block_rows = 50;
        ht.sparsity = p.sparsity;
        ht.normalize = true;
        ht.backprojection_init = true;
        ht.restarts = 8;
        ht.seed = rng::derive_seed(seed, 4, static_cast<std::uint64_t>(n));
        SolveResult rh = ht_orka_solve(poly, ht);
        out.push_back({"ht_orka", p.sweep[i], trial, nmse(rh.x, x.values), rh.trace.iterations, "ok"});

        StructuredConfig st = ht;
        st.restarts = 1;
        st.st_scale = 0.5;
        SolveResult rs = st_orka_solve(poly, st);
        out.push_back({"st_orka", p.sweep[i], trial, nmse(rs.x, x.values), rs.trace.iterations, "ok"});

        StructuredConfig nb;
        nb.sparsity = p.sparsity;
        nb.baseline_iters = 200;
        nb.step_size = 1.0;
        nb.normalize = true;  // unit-norm update steps
        SolveResult rb = biht_baseline(meas, nb);
        out.push_back({"nbiht", p.sweep[i], trial, nmse(rb.x, x.values), rb.trace.iterations, "ok"});
    }
}

inline void trial_custom(std::uint64_t seed, Index trial, const CustomSpec& spec,
                         std::vector<TrialRow>& out) {
    const SamplingModel A = gen_gaussian_model(spec.n, spec.d, rng::derive_seed(seed, 1));
    const StructuredSignal x = spec.sparsity > 0
                                   ? gen_sparse_signal(spec.d, spec.sparsity, rng::derive_seed(seed, 2))
                                   : gen_dense_signal(spec.d, rng::derive_seed(seed, 2));
    DitherConfig dither = spec.dither;
    const OneBitMeasurements meas = quantize(A, x.values, dither, spec.noise, rng::derive_seed(seed, 3));
    const OneBitPolyhedron poly(meas);
    SolverConfig cfg = spec.solver_cfg;
    cfg.seed = rng::derive_seed(seed, 4);
    SolveResult res = orka_solve(poly, spec.solver, cfg, Eigen::VectorXd::Zero(spec.d), &x.values);
    out.push_back({"solver", 0.0, trial, nmse(res.x, x.values), res.trace.iterations, "ok"});
}

inline Index resolve_workers(Index requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ONEBIT_BENCH_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<Index>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<Index>(hw) : 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

/// Runs all arms of the preset over `trials` Monte Carlo trials on a worker
/// pool. Arms within a trial share the measurement draw (common random
/// numbers). A trial that throws is recorded as aborted and the run
/// continues; the exit code is nonzero when more than 10% of trials abort.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
    PresetParams params = preset_params(cfg.preset);
    const double noise_sigma = cfg.noise_sigma >= 0.0 ? cfg.noise_sigma : params.noise_sigma;

    std::vector<std::vector<TrialRow>> per_trial(static_cast<std::size_t>(cfg.trials));
    std::vector<std::string> failures(static_cast<std::size_t>(cfg.trials));
    std::atomic<Index> next{0};

    auto work = [&]() {
        for (;;) {
            const Index t = next.fetch_add(1);
            if (t >= cfg.trials) break;
            const std::uint64_t trial_seed =
                rng::derive_seed(cfg.seed, 0xb5, static_cast<std::uint64_t>(t));
            auto& rows = per_trial[static_cast<std::size_t>(t)];
            try {
                switch (cfg.preset) {
                    case Preset::Fig1: detail::trial_fig1(trial_seed, t, params, rows); break;
                    case Preset::Fig2a: detail::trial_fig2(trial_seed, t, params, true, noise_sigma, rows); break;
                    case Preset::Fig2b: detail::trial_fig2(trial_seed, t, params, false, noise_sigma, rows); break;
                    case Preset::Fig3a: detail::trial_fig3a(trial_seed, t, params, noise_sigma, rows); break;
                    case Preset::Fig3b: detail::trial_fig3b(trial_seed, t, params, noise_sigma, rows); break;
                    case Preset::Fig4a: detail::trial_fig4a(trial_seed, t, params, noise_sigma, rows); break;
                    case Preset::Fig4b: detail::trial_fig4b(trial_seed, t, params, noise_sigma, rows); break;
                    case Preset::Custom: detail::trial_custom(trial_seed, t, cfg.custom, rows); break;
                }
            } catch (const std::exception& e) {
                rows.clear();
                failures[static_cast<std::size_t>(t)] = e.what();
            }
        }
    };

    const Index workers = std::min<Index>(detail::resolve_workers(cfg.workers), cfg.trials);
    std::vector<std::thread> pool;
    for (Index w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    ExperimentResult result;
    for (Index t = 0; t < cfg.trials; ++t) {
        const auto& fail = failures[static_cast<std::size_t>(t)];
        if (!fail.empty()) {
            ++result.aborted;
            result.rows.push_back({"-", 0.0, t, 0.0, 0, "abort:" + fail});
            continue;
        }
        for (auto& row : per_trial[static_cast<std::size_t>(t)]) result.rows.push_back(std::move(row));
    }
    result.summary = summarize(result.rows);
    result.exit_code = (10 * result.aborted > cfg.trials) ? 1 : 0;

    if (!cfg.out_path.empty()) {
        std::ofstream os(cfg.out_path);
        if (!os) throw std::runtime_error("run_experiment: cannot open " + cfg.out_path);
        write_rows_csv(result.rows, os, preset_name(cfg.preset));
    }
    if (!cfg.summary_path.empty()) {
        std::ofstream os(cfg.summary_path);
        if (!os) throw std::runtime_error("run_experiment: cannot open " + cfg.summary_path);
        write_summary_csv(result.summary, os, preset_name(cfg.preset));
    }
    return result;
}

// ---------------------------------------------------------------------------
// FVP validation
// ---------------------------------------------------------------------------

struct FvpValidateConfig {
    enum class Set { Dense, Sparse, LowRank, Dct };
    Set set = Set::Dense;
    Index m_prime = 10'000;
    Index d = 0;        // 0 -> per-set default
    Index sparsity = 10;
    Index n1 = 30, n2 = 30, rank = 2;
    Index reps = 1;
    std::uint64_t seed = 42;

    static Set set_from_name(const std::string& name) {
        if (name == "dense") return Set::Dense;
        if (name == "sparse") return Set::Sparse;
        if (name == "lowrank") return Set::LowRank;
        if (name == "dct") return Set::Dct;
        throw std::invalid_argument("unknown FVP set: " + name);
    }
};

struct FvpTrial {
    FvpReport report;
    double t_ave_se = 0.0;  // standard error of the distance average
};

/// One validation instance: unit-norm signal, streamed sensing rows (the
/// m' x d matrix is never stored), dynamic-range uniform dither, one
/// threshold per row (m = 1, m' = n).
inline FvpTrial fvp_trial(const FvpValidateConfig& cfg, std::uint64_t seed) {
    Index d = cfg.d;
    if (d <= 0) {
        switch (cfg.set) {
            case FvpValidateConfig::Set::Dense: d = 50; break;
            case FvpValidateConfig::Set::Sparse: d = 100; break;
            case FvpValidateConfig::Set::LowRank: d = cfg.n1 * cfg.n2; break;
            case FvpValidateConfig::Set::Dct: d = 1024; break;
        }
    }
    Eigen::VectorXd x;
    switch (cfg.set) {
        case FvpValidateConfig::Set::Dense:
        case FvpValidateConfig::Set::Dct:
            x = gen_dense_signal(d, rng::derive_seed(seed, 1)).values;
            break;
        case FvpValidateConfig::Set::Sparse:
            x = gen_sparse_signal(d, cfg.sparsity, rng::derive_seed(seed, 1)).values;
            break;
        case FvpValidateConfig::Set::LowRank:
            x = gen_lowrank_signal(cfg.n1, cfg.n2, cfg.rank, rng::derive_seed(seed, 1)).values;
            break;
    }
    x /= x.norm();

    // Stream the rows: first pass computes y and the dynamic range.
    rng::Stream row_stream(rng::derive_seed(seed, 2));
    Eigen::VectorXd y(cfg.m_prime);
    if (cfg.set == FvpValidateConfig::Set::Dct) {
        for (Index j = 0; j < cfg.m_prime; ++j) {
            const double w = static_cast<double>(row_stream.index(d)) / static_cast<double>(d);
            double acc = 0.0;
            for (Index t = 0; t < d; ++t)
                acc += std::cos(2.0 * std::numbers::pi * w * static_cast<double>(t)) * x[t];
            y[j] = acc;
        }
    } else {
        for (Index j = 0; j < cfg.m_prime; ++j) {
            double acc = 0.0;
            for (Index t = 0; t < d; ++t) acc += row_stream.gaussian() * x[t];
            y[j] = acc;
        }
    }
    const double lambda = y.cwiseAbs().maxCoeff();

    rng::Stream tau_stream(rng::derive_seed(seed, 3));
    double sum = 0.0, sum_sq = 0.0;
    for (Index j = 0; j < cfg.m_prime; ++j) {
        const double dist = std::abs(y[j] - tau_stream.uniform(-lambda, lambda));
        sum += dist;
        sum_sq += dist * dist;
    }
    const double mean = sum / static_cast<double>(cfg.m_prime);
    const double var = (sum_sq - sum * sum / static_cast<double>(cfg.m_prime)) /
                       static_cast<double>(cfg.m_prime - 1);

    FvpTrial trial;
    trial.report.t_ave = mean;
    trial.report.lambda = lambda;
    trial.report.m_prime = cfg.m_prime;
    trial.report.theoretical_mean =
        fvp_mean(cfg.set == FvpValidateConfig::Set::Dct ? FvpKind::Dct : FvpKind::SubGaussian,
                 lambda, 1.0);
    trial.report.deviation = std::abs(trial.report.t_ave - trial.report.theoretical_mean);
    trial.report.recovery_radius = 4.0 * std::sqrt(trial.report.deviation * lambda);
    trial.t_ave_se = std::sqrt(std::max(var, 0.0) / static_cast<double>(cfg.m_prime));
    return trial;
}

inline std::vector<FvpTrial> validate_fvp(const FvpValidateConfig& cfg) {
    std::vector<FvpTrial> out;
    for (Index r = 0; r < cfg.reps; ++r)
        out.push_back(fvp_trial(cfg, rng::derive_seed(cfg.seed, 0xf7, static_cast<std::uint64_t>(r))));
    return out;
}

}  // namespace onebit::bench
