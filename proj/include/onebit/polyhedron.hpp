#pragma once

#include <ostream>
#include <stdexcept>

#include <Eigen/Core>

#include "onebit/row_provider.hpp"
#include "onebit/sensing.hpp"
#include "onebit/solvers.hpp"

namespace onebit {

/// The one-bit polyhedron {x : r_j^(l) (<a_j, x> - tau_j^(l)) >= 0 for all j, l},
/// exposed as an implicit row provider. Row index t = l*n + j maps to
/// (c, b) = (r_j^(l) a_j, r_j^(l) tau_j^(l)); block l is (diag(r^(l)) A, r^(l) .* tau^(l)).
/// Rows are generated on demand; the stacked m*n x d matrix is only formed by
/// materialize(), which enforces the entry budget.
class OneBitPolyhedron final : public RowProvider {
public:
    explicit OneBitPolyhedron(OneBitMeasurements measurements,
                              Index materialize_budget = 10'000'000)
        : meas_(std::move(measurements)), budget_(materialize_budget) {
        row_norms_sq_ = meas_.model.entries.rowwise().squaredNorm();
        block_norm_sq_ = row_norms_sq_.sum();  // signs do not change norms
    }

    const OneBitMeasurements& measurements() const { return meas_; }

    Index row_count() const override { return meas_.total(); }
    Index dim() const override { return meas_.model.cols(); }

    void row(Index t, Eigen::VectorXd& c, double& b) const override {
        const Index n = meas_.n();
        const Index l = t / n;
        const Index j = t % n;
        const double r = static_cast<double>(meas_.signs(j, l));
        c = r * meas_.model.entries.row(j).transpose();
        b = r * meas_.thresholds(j, l);
    }

    double row_norm_sq(Index t) const override { return row_norms_sq_[t % meas_.n()]; }
    double frob_norm_sq() const override { return static_cast<double>(meas_.m()) * block_norm_sq_; }

    Eigen::VectorXd violations(const Eigen::VectorXd& x) const override {
        const Index n = meas_.n();
        const Index m = meas_.m();
        const Eigen::VectorXd y = meas_.model.entries * x;
        Eigen::VectorXd v(n * m);
        for (Index l = 0; l < m; ++l)
            for (Index j = 0; j < n; ++j) {
                const double r = static_cast<double>(meas_.signs(j, l));
                v[l * n + j] = r * (meas_.thresholds(j, l) - y[j]);
            }
        return v;
    }

    Index block_count() const override { return meas_.m(); }
    std::pair<Index, Index> block_range(Index k) const override { return {k * meas_.n(), meas_.n()}; }
    double block_norm_sq(Index) const override { return block_norm_sq_; }

    void block_violations(Index k, const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
        const Index n = meas_.n();
        const Eigen::VectorXd y = meas_.model.entries * x;
        out.resize(n);
        for (Index j = 0; j < n; ++j) {
            const double r = static_cast<double>(meas_.signs(j, k));
            out[j] = r * (meas_.thresholds(j, k) - y[j]);
        }
    }

    Eigen::MatrixXd materialize() const override {
        const Index n = meas_.n(), m = meas_.m(), d = dim();
        if (n * m * d > budget_)
            throw std::runtime_error("OneBitPolyhedron: materialization exceeds the entry budget");
        Eigen::MatrixXd P(n * m, d);
        for (Index l = 0; l < m; ++l)
            for (Index j = 0; j < n; ++j)
                P.row(l * n + j) = static_cast<double>(meas_.signs(j, l)) * meas_.model.entries.row(j);
        return P;
    }

    Eigen::VectorXd materialize_rhs() const override {
        const Index n = meas_.n(), m = meas_.m();
        Eigen::VectorXd rhs(n * m);
        for (Index l = 0; l < m; ++l)
            for (Index j = 0; j < n; ++j)
                rhs[l * n + j] = static_cast<double>(meas_.signs(j, l)) * meas_.thresholds(j, l);
        return rhs;
    }

private:
    OneBitMeasurements meas_;
    Eigen::VectorXd row_norms_sq_;
    double block_norm_sq_ = 0.0;
    Index budget_;
};

inline OneBitPolyhedron build_polyhedron(OneBitMeasurements measurements,
                                         Index materialize_budget = 10'000'000) {
    return OneBitPolyhedron(std::move(measurements), materialize_budget);
}

enum class SolverKind { Rka, Skm, PrSkm, BlockSkm, QuantileRka };

inline const char* solver_name(SolverKind kind) {
    switch (kind) {
        case SolverKind::Rka: return "rka";
        case SolverKind::Skm: return "skm";
        case SolverKind::PrSkm: return "prskm";
        case SolverKind::BlockSkm: return "block_skm";
        case SolverKind::QuantileRka: return "quantile";
    }
    return "?";
}

inline SolverKind solver_from_name(const std::string& name) {
    if (name == "rka") return SolverKind::Rka;
    if (name == "skm") return SolverKind::Skm;
    if (name == "prskm") return SolverKind::PrSkm;
    if (name == "block_skm") return SolverKind::BlockSkm;
    if (name == "quantile") return SolverKind::QuantileRka;
    throw std::invalid_argument("unknown solver: " + name);
}

/// Drives the chosen feasibility solver over any row provider.
inline SolveResult orka_solve(const RowProvider& provider, SolverKind solver,
                              const SolverConfig& cfg, Eigen::VectorXd x0,
                              const Eigen::VectorXd* ref = nullptr) {
    switch (solver) {
        case SolverKind::Rka: return rka_solve(provider, cfg, std::move(x0), ref);
        case SolverKind::Skm: return skm_solve(provider, cfg, std::move(x0), ref);
        case SolverKind::PrSkm: return prskm_solve(provider, cfg, std::move(x0), ref);
        case SolverKind::BlockSkm: return block_skm_solve(provider, cfg, std::move(x0), ref);
        case SolverKind::QuantileRka: return quantile_rka_solve(provider, cfg, std::move(x0), ref);
    }
    throw std::logic_error("orka_solve: unknown solver kind");
}

struct ConsistencyReport {
    bool consistent = false;
    Index violation_count = 0;
};

/// True iff every inequality holds with slack >= -tol; counts violated rows.
inline ConsistencyReport consistency_check(const RowProvider& provider, const Eigen::VectorXd& x,
                                           double tol = 1e-10) {
    const Eigen::VectorXd v = provider.violations(x);
    ConsistencyReport report;
    for (Index j = 0; j < v.size(); ++j)
        if (v[j] > tol) ++report.violation_count;
    report.consistent = report.violation_count == 0;
    return report;
}

/// Plain-text dump (one row per line: d coefficients then the rhs) for
/// cross-checking small instances against external LP tooling.
inline void export_polyhedron_text(const RowProvider& provider, std::ostream& os) {
    Eigen::VectorXd c(provider.dim());
    double b = 0.0;
    for (Index j = 0; j < provider.row_count(); ++j) {
        provider.row(j, c, b);
        for (Index t = 0; t < c.size(); ++t) {
            detail::write_float(os, c[t]);
            os << ' ';
        }
        detail::write_float(os, b);
        os << '\n';
    }
}

}  // namespace onebit
