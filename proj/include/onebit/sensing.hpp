#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "onebit/rng.hpp"

namespace onebit {

using Eigen::Index;

enum class ModelKind { DenseGaussian, DctRandomFreq, Explicit };

/// A linear sampling model y = A x. Rows are always materialized (n x d is
/// small at the scales this library targets); DCT models additionally keep
/// the frequency draw that generated each row.
struct SamplingModel {
    ModelKind kind = ModelKind::Explicit;
    Eigen::MatrixXd entries;     // n x d
    std::vector<double> freqs;   // n frequencies in {0, 1/d, ..., (d-1)/d}; DCT only

    Index rows() const { return entries.rows(); }
    Index cols() const { return entries.cols(); }

    Eigen::VectorXd measure(const Eigen::VectorXd& x) const {
        if (x.size() != cols()) throw std::invalid_argument("SamplingModel::measure: dimension mismatch");
        return entries * x;
    }
};

inline SamplingModel explicit_model(Eigen::MatrixXd entries) {
    SamplingModel m;
    m.kind = ModelKind::Explicit;
    m.entries = std::move(entries);
    return m;
}

/// n x d matrix with i.i.d. standard normal entries (isotropic rows).
inline SamplingModel gen_gaussian_model(Index n, Index d, std::uint64_t seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("gen_gaussian_model: n, d must be >= 1");
    rng::Stream stream(rng::derive_seed(seed, 0x6d6f64));
    SamplingModel m;
    m.kind = ModelKind::DenseGaussian;
    m.entries = stream.gaussian_matrix(n, d);
    return m;
}

/// Random-frequency cosine rows: row k has entries cos(2 pi w_k t), t = 0..d-1,
/// with w_k drawn uniformly from {0, 1/d, ..., (d-1)/d}.
inline SamplingModel gen_dct_model(Index n, Index d, std::uint64_t seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("gen_dct_model: n, d must be >= 1");
    rng::Stream stream(rng::derive_seed(seed, 0x646374));
    SamplingModel m;
    m.kind = ModelKind::DctRandomFreq;
    m.entries.resize(n, d);
    m.freqs.resize(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
        const double w = static_cast<double>(stream.index(d)) / static_cast<double>(d);
        m.freqs[static_cast<std::size_t>(k)] = w;
        for (Index t = 0; t < d; ++t)
            m.entries(k, t) = std::cos(2.0 * std::numbers::pi * w * static_cast<double>(t));
    }
    return m;
}

enum class SignalRole { Dense, Sparse, LowRank };

struct StructuredSignal {
    SignalRole role = SignalRole::Dense;
    Eigen::VectorXd values;      // vector signals; for LowRank this is vec(matrix), column-major
    Index sparsity = 0;          // Sparse only
    Index rank = 0;              // LowRank only
    Index n1 = 0, n2 = 0;        // LowRank shape

    Eigen::MatrixXd matrix() const {
        if (role != SignalRole::LowRank) throw std::logic_error("StructuredSignal::matrix: not a matrix signal");
        return Eigen::Map<const Eigen::MatrixXd>(values.data(), n1, n2);
    }
};

inline StructuredSignal gen_dense_signal(Index d, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_dense_signal: d must be >= 1");
    rng::Stream stream(rng::derive_seed(seed, 0x736967));
    StructuredSignal s;
    s.role = SignalRole::Dense;
    s.values = stream.gaussian_vector(d);
    return s;
}

/// Exactly s nonzeros on a uniformly chosen support, N(0,1) values.
inline StructuredSignal gen_sparse_signal(Index d, Index s, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_sparse_signal: d must be >= 1");
    if (s < 0 || s > d) throw std::invalid_argument("gen_sparse_signal: need 0 <= s <= d");
    rng::Stream stream(rng::derive_seed(seed, 0x737073));
    // Partial Fisher-Yates for the support.
    std::vector<Index> idx(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
    StructuredSignal sig;
    sig.role = SignalRole::Sparse;
    sig.sparsity = s;
    sig.values = Eigen::VectorXd::Zero(d);
    for (Index i = 0; i < s; ++i) {
        const Index j = i + stream.index(d - i);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        sig.values[idx[static_cast<std::size_t>(i)]] = stream.gaussian();
    }
    return sig;
}

/// Product of n1 x r and r x n2 standard normal factors (rank r a.s.).
inline StructuredSignal gen_lowrank_signal(Index n1, Index n2, Index r, std::uint64_t seed) {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("gen_lowrank_signal: n1, n2 must be >= 1");
    if (r < 0 || r > std::min(n1, n2)) throw std::invalid_argument("gen_lowrank_signal: need 0 <= r <= min(n1, n2)");
    rng::Stream stream(rng::derive_seed(seed, 0x6c726b));
    Eigen::MatrixXd L = stream.gaussian_matrix(n1, r);
    Eigen::MatrixXd W = stream.gaussian_matrix(r, n2);
    Eigen::MatrixXd X = L * W;
    StructuredSignal sig;
    sig.role = SignalRole::LowRank;
    sig.rank = r;
    sig.n1 = n1;
    sig.n2 = n2;
    sig.values = Eigen::Map<const Eigen::VectorXd>(X.data(), X.size());
    return sig;
}

struct DitherConfig {
    enum class Law { Uniform, Gaussian, UniformDynamicRange };
    Law law = Law::UniformDynamicRange;
    Index sequences = 1;   // m
    double lambda = 0.0;   // Uniform half-range
    double sigma = 0.0;    // Gaussian std

    static DitherConfig uniform(Index m, double lambda) { return {Law::Uniform, m, lambda, 0.0}; }
    static DitherConfig gaussian(Index m, double sigma) { return {Law::Gaussian, m, 0.0, sigma}; }
    static DitherConfig dynamic_range(Index m) { return {Law::UniformDynamicRange, m, 0.0, 0.0}; }
    static DitherConfig none(Index m = 1) { return {Law::Uniform, m, 0.0, 0.0}; }
};

struct NoiseConfig {
    enum class Law { None, Gaussian, Impulsive };
    Law law = Law::None;
    double sigma = 0.0;  // Gaussian std
    double p = 0.0;      // Impulsive corruption fraction
    double amp = 0.0;    // Impulsive magnitude

    static NoiseConfig none() { return {}; }
    static NoiseConfig gaussian(double sigma) {
        if (sigma < 0) throw std::invalid_argument("NoiseConfig: sigma must be >= 0");
        return {Law::Gaussian, sigma, 0.0, 0.0};
    }
    static NoiseConfig impulsive(double p, double amp) {
        if (p < 0 || p > 1) throw std::invalid_argument("NoiseConfig: p must be in [0,1]");
        return {Law::Impulsive, 0.0, p, amp};
    }
};

/// Sign bits and the exact thresholds they were taken against.
/// Column l of `signs`/`thresholds` is the l-th threshold sequence.
struct OneBitMeasurements {
    Eigen::MatrixXi signs;        // n x m, entries in {-1, +1}
    Eigen::MatrixXd thresholds;   // n x m
    SamplingModel model;
    double lambda_used = 0.0;     // realized uniform half-range (0 for Gaussian dither)

    Index n() const { return signs.rows(); }
    Index m() const { return signs.cols(); }
    Index total() const { return signs.size(); }
};

/// max_j |<a_j, x>| of the clean measurements.
inline double dynamic_range(const SamplingModel& model, const Eigen::VectorXd& x) {
    if (model.rows() == 0) return 0.0;
    return model.measure(x).cwiseAbs().maxCoeff();
}

/// One-bit quantization r_j^(l) = sgn(<a_j,x> + z_j^(l) - tau_j^(l)), sgn(0) = +1.
/// Thresholds and noise are drawn i.i.d. per entry and per sequence.
inline OneBitMeasurements quantize(const SamplingModel& model, const Eigen::VectorXd& x,
                                   const DitherConfig& dither, const NoiseConfig& noise,
                                   std::uint64_t seed) {
    const Index n = model.rows();
    const Index m = dither.sequences;
    if (m < 1) throw std::invalid_argument("quantize: dither.sequences must be >= 1");
    const Eigen::VectorXd y = model.measure(x);

    OneBitMeasurements out;
    out.model = model;
    out.signs.resize(n, m);
    out.thresholds.resize(n, m);

    double lambda = dither.lambda;
    if (dither.law == DitherConfig::Law::UniformDynamicRange) lambda = y.cwiseAbs().maxCoeff();
    out.lambda_used = (dither.law == DitherConfig::Law::Gaussian) ? 0.0 : lambda;

    rng::Stream dither_stream(rng::derive_seed(seed, 0x746175));
    rng::Stream noise_stream(rng::derive_seed(seed, 0x6e6f69));

    for (Index l = 0; l < m; ++l) {
        for (Index j = 0; j < n; ++j) {
            double tau;
            if (dither.law == DitherConfig::Law::Gaussian)
                tau = dither_stream.gaussian(dither.sigma);
            else
                tau = dither_stream.uniform(-lambda, lambda);
            double z = 0.0;
            switch (noise.law) {
                case NoiseConfig::Law::None: break;
                case NoiseConfig::Law::Gaussian: z = noise_stream.gaussian(noise.sigma); break;
                case NoiseConfig::Law::Impulsive: {
                    const double u = noise_stream.uniform();
                    const double sgn_draw = noise_stream.uniform();
                    if (u < noise.p) z = (sgn_draw < 0.5) ? noise.amp : -noise.amp;
                    break;
                }
            }
            out.thresholds(j, l) = tau;
            out.signs(j, l) = (y[j] + z - tau >= 0.0) ? 1 : -1;
        }
    }
    return out;
}

}  // namespace onebit
