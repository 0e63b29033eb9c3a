#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace onebit::rng {

/// splitmix64 step; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic seed for sub-stream `a` (optionally `b`) of `master`.
/// Every generator in the library owns a stream derived this way, so trials
/// are reproducible regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL + h;
    h = splitmix64(s);
    s ^= b * 0xc2b2ae3d27d4eb4fULL + h;
    return splitmix64(s);
}

class Stream {
public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    double gaussian() { return normal_(eng_); }
    double gaussian(double sigma) { return sigma * normal_(eng_); }
    double uniform() { return unit_(eng_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(eng_); }

    /// Uniform integer in [0, n).
    Eigen::Index index(Eigen::Index n) {
        return static_cast<Eigen::Index>(std::uniform_int_distribution<long long>(0, n - 1)(eng_));
    }

    std::mt19937_64& engine() { return eng_; }

    Eigen::VectorXd gaussian_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gaussian();
        return m;
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Samples indices with probability proportional to the given weights.
/// Prefix-sum + binary search; deterministic across platforms.
class DiscreteSampler {
public:
    explicit DiscreteSampler(const std::vector<double>& weights) { reset(weights); }

    void reset(const std::vector<double>& weights) {
        cumulative_.resize(weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            cumulative_[i] = acc;
        }
        total_ = acc;
    }

    Eigen::Index draw(Stream& stream) const {
        const double u = stream.uniform() * total_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<Eigen::Index>(it - cumulative_.begin());
    }

    double total() const { return total_; }

private:
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

}  // namespace onebit::rng
