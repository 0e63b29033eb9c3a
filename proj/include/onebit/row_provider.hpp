#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace onebit {

using Eigen::Index;

/// Supplier of rows (c_j, b_j) of a feasibility system C x >= b.
/// Rows may be materialized or generated on demand; norms must match the
/// rows exactly since they drive the selection probabilities.
class RowProvider {
public:
    virtual ~RowProvider() = default;

    virtual Index row_count() const = 0;
    virtual Index dim() const = 0;
    virtual void row(Index j, Eigen::VectorXd& c, double& b) const = 0;
    virtual double row_norm_sq(Index j) const = 0;
    virtual double frob_norm_sq() const = 0;

    /// Equality rows use the unclipped projection residual.
    virtual bool is_equality(Index) const { return false; }

    /// v_j = b_j - <c_j, x>; positive entries are violated constraints.
    virtual Eigen::VectorXd violations(const Eigen::VectorXd& x) const {
        Eigen::VectorXd v(row_count());
        Eigen::VectorXd c(dim());
        double b = 0.0;
        for (Index j = 0; j < row_count(); ++j) {
            row(j, c, b);
            v[j] = b - c.dot(x);
        }
        return v;
    }

    /// Block structure: rows are grouped into contiguous ranges. 0 = none.
    virtual Index block_count() const { return 0; }
    virtual std::pair<Index, Index> block_range(Index) const {
        throw std::logic_error("RowProvider: no block structure");
    }
    virtual double block_norm_sq(Index) const {
        throw std::logic_error("RowProvider: no block structure");
    }
    /// Violations restricted to one block, written to `out` (resized).
    virtual void block_violations(Index k, const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
        const auto [start, count] = block_range(k);
        out.resize(count);
        Eigen::VectorXd c(dim());
        double b = 0.0;
        for (Index i = 0; i < count; ++i) {
            row(start + i, c, b);
            out[i] = b - c.dot(x);
        }
    }

    virtual Eigen::MatrixXd materialize() const {
        Eigen::MatrixXd C(row_count(), dim());
        Eigen::VectorXd c(dim());
        double b = 0.0;
        for (Index j = 0; j < row_count(); ++j) {
            row(j, c, b);
            C.row(j) = c.transpose();
        }
        return C;
    }

    virtual Eigen::VectorXd materialize_rhs() const {
        Eigen::VectorXd rhs(row_count());
        Eigen::VectorXd c(dim());
        double b = 0.0;
        for (Index j = 0; j < row_count(); ++j) {
            row(j, c, b);
            rhs[j] = b;
        }
        return rhs;
    }
};

/// Fully materialized system. Optional uniform block size and per-row
/// equality flags (used by tests and the preconditioned solvers).
class DenseSystem final : public RowProvider {
public:
    DenseSystem(Eigen::MatrixXd C, Eigen::VectorXd b, Index block_size = 0)
        : C_(std::move(C)), b_(std::move(b)), block_size_(block_size) {
        if (C_.rows() != b_.size()) throw std::invalid_argument("DenseSystem: C rows and b length differ");
        if (block_size_ > 0 && C_.rows() % block_size_ != 0)
            throw std::invalid_argument("DenseSystem: rows must divide evenly into blocks");
        norms_sq_ = C_.rowwise().squaredNorm();
        frob_sq_ = norms_sq_.sum();
    }

    void set_equality_rows(std::vector<bool> eq) {
        if (static_cast<Index>(eq.size()) != C_.rows())
            throw std::invalid_argument("DenseSystem: equality flag count mismatch");
        equality_ = std::move(eq);
    }

    Index row_count() const override { return C_.rows(); }
    Index dim() const override { return C_.cols(); }
    void row(Index j, Eigen::VectorXd& c, double& b) const override {
        c = C_.row(j).transpose();
        b = b_[j];
    }
    double row_norm_sq(Index j) const override { return norms_sq_[j]; }
    double frob_norm_sq() const override { return frob_sq_; }
    bool is_equality(Index j) const override {
        return !equality_.empty() && equality_[static_cast<std::size_t>(j)];
    }

    Eigen::VectorXd violations(const Eigen::VectorXd& x) const override { return b_ - C_ * x; }

    Index block_count() const override { return block_size_ > 0 ? C_.rows() / block_size_ : 0; }
    std::pair<Index, Index> block_range(Index k) const override {
        if (block_size_ <= 0) throw std::logic_error("DenseSystem: no block structure");
        return {k * block_size_, block_size_};
    }
    double block_norm_sq(Index k) const override {
        const auto [start, count] = block_range(k);
        return norms_sq_.segment(start, count).sum();
    }
    void block_violations(Index k, const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
        const auto [start, count] = block_range(k);
        out = b_.segment(start, count) - C_.middleRows(start, count) * x;
    }

    Eigen::MatrixXd materialize() const override { return C_; }
    Eigen::VectorXd materialize_rhs() const override { return b_; }

    const Eigen::MatrixXd& matrix() const { return C_; }
    const Eigen::VectorXd& rhs() const { return b_; }

private:
    Eigen::MatrixXd C_;
    Eigen::VectorXd b_;
    Eigen::VectorXd norms_sq_;
    double frob_sq_ = 0.0;
    Index block_size_ = 0;
    std::vector<bool> equality_;
};

}  // namespace onebit
