#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"

namespace hsr {

using Index = Eigen::Index;

/// Column-major dense matrix. Every operator, factor and unfolding in the
/// library is one of these.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct Dims3 {
    Index I = 0;
    Index J = 0;
    Index K = 0;

    Index size() const { return I * J * K; }
    Index spatial() const { return I * J; }
    bool operator==(const Dims3&) const = default;

    std::string str() const {
        return std::to_string(I) + "x" + std::to_string(J) + "x" + std::to_string(K);
    }
};

/**
 * Dense real third-order array (space x space x spectrum).
 *
 * Storage is a single contiguous buffer with i fastest, then j, then k, so
 * slab k is a column-major I x J matrix and the whole buffer reinterpreted as
 * an (I*J) x K column-major matrix is the mode-3 unfolding: row l = i + I*j
 * holds the fiber t(i, j, :).
 */
class Tensor3 {
public:
    Tensor3() = default;

    explicit Tensor3(Dims3 dims) : dims_(dims), data_(Vector::Zero(checked_size(dims))) {}

    Tensor3(Index I, Index J, Index K) : Tensor3(Dims3{I, J, K}) {}

    Tensor3(Dims3 dims, Vector data) : dims_(dims), data_(std::move(data)) {
        detail::require_dims(data_.size() == checked_size(dims),
                             "Tensor3: buffer length " + std::to_string(data_.size()) +
                                 " does not match dims " + dims.str());
    }

    const Dims3& dims() const { return dims_; }
    Index rows() const { return dims_.I; }
    Index cols() const { return dims_.J; }
    Index bands() const { return dims_.K; }
    Index size() const { return data_.size(); }

    double& operator()(Index i, Index j, Index k) { return data_[i + dims_.I * (j + dims_.J * k)]; }
    double operator()(Index i, Index j, Index k) const {
        return data_[i + dims_.I * (j + dims_.J * k)];
    }

    const Vector& data() const { return data_; }
    Vector& data() { return data_; }

    /// Zero-copy (I*J) x K view of the mode-3 unfolding.
    ConstMatrixMap mode3() const { return {data_.data(), dims_.spatial(), dims_.K}; }
    MatrixMap mode3() { return {data_.data(), dims_.spatial(), dims_.K}; }

    /// Zero-copy I x J view of slab (:, :, k).
    ConstMatrixMap slab(Index k) const {
        return {data_.data() + dims_.spatial() * k, dims_.I, dims_.J};
    }
    MatrixMap slab(Index k) { return {data_.data() + dims_.spatial() * k, dims_.I, dims_.J}; }

    bool all_finite() const { return data_.allFinite(); }

    bool operator==(const Tensor3& o) const { return dims_ == o.dims_ && data_ == o.data_; }

private:
    static Index checked_size(const Dims3& d) {
        detail::require_dims(d.I > 0 && d.J > 0 && d.K > 0,
                             "Tensor3: dims must be positive, got " + d.str());
        return d.size();
    }

    Dims3 dims_;
    Vector data_;
};

/// (I*J) x K mode-3 unfolding; row l = i + I*j holds t(i, j, :).
inline Matrix unfold_mode3(const Tensor3& t) {
    return t.mode3();
}

/// Inverse of unfold_mode3.
inline Tensor3 refold_mode3(const Eigen::Ref<const Matrix>& m, Dims3 dims) {
    detail::require_dims(m.rows() == dims.spatial() && m.cols() == dims.K,
                         "refold_mode3: matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", dims " + dims.str() + " need (I*J)xK");
    Tensor3 t(dims);
    t.mode3() = m;
    return t;
}

/// Kronecker product: block (i, j) of the result is a(i, j) * b.
inline Matrix kron(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// Columnwise Khatri-Rao product: column j is a(:, j) kron b(:, j).
inline Matrix khatri_rao_col(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    detail::require_dims(a.cols() == b.cols(), "khatri_rao_col: column counts differ (" +
                                                   std::to_string(a.cols()) + " vs " +
                                                   std::to_string(b.cols()) + ")");
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
        }
    }
    return out;
}

/// Partitioned Khatri-Rao product: a and b are split into equal column blocks
/// of width `block` and block r of the result is a_r kron b_r.
inline Matrix khatri_rao_partitioned(const Eigen::Ref<const Matrix>& a,
                                     const Eigen::Ref<const Matrix>& b, Index block) {
    detail::require_dims(block > 0 && a.cols() % block == 0 && b.cols() % block == 0 &&
                             a.cols() / block == b.cols() / block,
                         "khatri_rao_partitioned: incompatible partitions");
    const Index parts = a.cols() / block;
    Matrix out(a.rows() * b.rows(), parts * block * block);
    for (Index r = 0; r < parts; ++r) {
        out.middleCols(r * block * block, block * block) =
            kron(a.middleCols(r * block, block), b.middleCols(r * block, block));
    }
    return out;
}

inline double frobenius_norm(const Tensor3& t) {
    return t.data().norm();
}

} // namespace hsr
