// SPDX-License-Identifier: Apache-2.0
//
// Dense complex linear algebra and third-order tensor primitives used by the
// PARAFAC channel estimators: Khatri-Rao / Kronecker products, the three
// matrix unfoldings of an L x T x K tensor, rank-1 truncated SVD and
// rank-checked least squares.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "irs_parafac/errors.hpp"

namespace irs_parafac {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Column-wise Kronecker product. Column n of the result is a_n (x) b_n,
/// so row index is i * B.rows() + j.
inline ComplexMatrix khatri_rao(const ComplexMatrix& A, const ComplexMatrix& B) {
    if (A.cols() != B.cols()) {
        throw InvalidArgument("khatri_rao: column counts differ (" + std::to_string(A.cols()) +
                              " vs " + std::to_string(B.cols()) + ")");
    }
    const Index rows_b = B.rows();
    ComplexMatrix out(A.rows() * rows_b, A.cols());
    for (Index n = 0; n < A.cols(); ++n) {
        for (Index i = 0; i < A.rows(); ++i) {
            out.col(n).segment(i * rows_b, rows_b) = A(i, n) * B.col(n);
        }
    }
    return out;
}

/// Block (i, j) of the result is a_ij * B.
inline ComplexMatrix kronecker(const ComplexMatrix& A, const ComplexMatrix& B) {
    const Index br = B.rows();
    const Index bc = B.cols();
    ComplexMatrix out(A.rows() * br, A.cols() * bc);
    for (Index j = 0; j < A.cols(); ++j) {
        for (Index i = 0; i < A.rows(); ++i) {
            out.block(i * br, j * bc, br, bc) = A(i, j) * B;
        }
    }
    return out;
}

/// Third-order complex tensor of shape L x T x K stored as K frontal slices
/// of size L x T.
class SignalTensor {
  public:
    SignalTensor() = default;

    SignalTensor(Index rows, Index cols, Index slices)
        : rows_(rows), cols_(cols), slices_(static_cast<std::size_t>(slices), ComplexMatrix::Zero(rows, cols)) {
        if (rows <= 0 || cols <= 0 || slices <= 0) {
            throw InvalidArgument("SignalTensor: all dimensions must be positive");
        }
    }

    Index dim_l() const noexcept { return rows_; }
    Index dim_t() const noexcept { return cols_; }
    Index dim_k() const noexcept { return static_cast<Index>(slices_.size()); }

    Complex& operator()(Index l, Index t, Index k) { return slices_[static_cast<std::size_t>(k)](l, t); }
    const Complex& operator()(Index l, Index t, Index k) const {
        return slices_[static_cast<std::size_t>(k)](l, t);
    }

    const ComplexMatrix& slice(Index k) const { return slices_.at(static_cast<std::size_t>(k)); }
    ComplexMatrix& slice(Index k) { return slices_.at(static_cast<std::size_t>(k)); }

    std::span<const ComplexMatrix> slices() const noexcept { return slices_; }

    SignalTensor& operator+=(const SignalTensor& other) {
        check_same_shape(other);
        for (std::size_t k = 0; k < slices_.size(); ++k) slices_[k] += other.slices_[k];
        return *this;
    }

    SignalTensor& operator*=(double scale) {
        for (auto& s : slices_) s *= scale;
        return *this;
    }

    friend SignalTensor operator+(SignalTensor lhs, const SignalTensor& rhs) { return lhs += rhs; }

    void check_same_shape(const SignalTensor& other) const {
        if (other.rows_ != rows_ || other.cols_ != cols_ || other.dim_k() != dim_k()) {
            throw InvalidArgument("SignalTensor: shape mismatch");
        }
    }

  private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<ComplexMatrix> slices_;
};

/// Stacks K equally sized L x T slices into a tensor.
inline SignalTensor fold_from_slices(std::span<const ComplexMatrix> slices) {
    if (slices.empty()) throw InvalidArgument("fold_from_slices: need at least one slice");
    const Index l = slices.front().rows();
    const Index t = slices.front().cols();
    SignalTensor out(l, t, static_cast<Index>(slices.size()));
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (slices[k].rows() != l || slices[k].cols() != t) {
            throw InvalidArgument("fold_from_slices: slice " + std::to_string(k) + " is " +
                                  std::to_string(slices[k].rows()) + "x" + std::to_string(slices[k].cols()) +
                                  ", expected " + std::to_string(l) + "x" + std::to_string(t));
        }
        out.slice(static_cast<Index>(k)) = slices[k];
    }
    return out;
}

/// Matrix unfoldings:
///   mode 1: L x TK, [Y[1] ... Y[K]]            column k*T + t
///   mode 2: T x LK, [Y[1]^T ... Y[K]^T]        column k*L + l
///   mode 3: K x LT, row k = vec(Y[k])^T        column t*L + l (column stacking)
inline ComplexMatrix unfold(const SignalTensor& y, int mode) {
    const Index l = y.dim_l();
    const Index t = y.dim_t();
    const Index kk = y.dim_k();
    switch (mode) {
    case 1: {
        ComplexMatrix out(l, t * kk);
        for (Index k = 0; k < kk; ++k) out.middleCols(k * t, t) = y.slice(k);
        return out;
    }
    case 2: {
        ComplexMatrix out(t, l * kk);
        for (Index k = 0; k < kk; ++k) out.middleCols(k * l, l) = y.slice(k).transpose();
        return out;
    }
    case 3: {
        ComplexMatrix out(kk, l * t);
        for (Index k = 0; k < kk; ++k) {
            out.row(k) = y.slice(k).reshaped().transpose();
        }
        return out;
    }
    default:
        throw InvalidArgument("unfold: mode must be 1, 2 or 3 (got " + std::to_string(mode) + ")");
    }
}

/// Inverse of unfold(): rebuilds an L x T x K tensor from its mode-n matrix.
inline SignalTensor fold(const ComplexMatrix& m, int mode, Index l, Index t, Index k) {
    const auto expect = [&](Index rows, Index cols) {
        if (m.rows() != rows || m.cols() != cols) {
            throw InvalidArgument("fold: mode-" + std::to_string(mode) + " matrix must be " + std::to_string(rows) +
                                  "x" + std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()));
        }
    };
    SignalTensor y(l, t, k);
    switch (mode) {
    case 1:
        expect(l, t * k);
        for (Index s = 0; s < k; ++s) y.slice(s) = m.middleCols(s * t, t);
        break;
    case 2:
        expect(t, l * k);
        for (Index s = 0; s < k; ++s) y.slice(s) = m.middleCols(s * l, l).transpose();
        break;
    case 3:
        expect(k, l * t);
        for (Index s = 0; s < k; ++s) y.slice(s) = m.row(s).transpose().reshaped(l, t);
        break;
    default:
        throw InvalidArgument("fold: mode must be 1, 2 or 3 (got " + std::to_string(mode) + ")");
    }
    return y;
}

inline double frobenius_norm_sq(const ComplexMatrix& m) { return m.squaredNorm(); }

inline double frobenius_norm_sq(const SignalTensor& y) {
    double acc = 0.0;
    for (const auto& s : y.slices()) acc += s.squaredNorm();
    return acc;
}

struct Rank1Svd {
    ComplexVector u;
    double sigma = 0.0;
    ComplexVector v;
};

/// Dominant singular triplet: u * sigma * v^H is the best rank-1 Frobenius
/// approximation of w. Computed from a full SVD; the phase of (u, v) is left
/// as returned by the decomposition.
inline Rank1Svd rank1_truncated_svd(const ComplexMatrix& w) {
    if (w.size() == 0 || w.cwiseAbs2().maxCoeff() == 0.0) {
        throw DegenerateInput("rank1_truncated_svd: all-zero input has no dominant direction");
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return Rank1Svd{svd.matrixU().col(0), svd.singularValues()(0), svd.matrixV().col(0)};
}

/// Relative tolerance below which the smallest singular value of a P x N
/// system counts as zero.
inline double rank_tolerance(Index rows, Index cols, double largest_sv) {
    return std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, cols)) * largest_sv;
}

/// argmin_X ||A X - B||_F for full column rank A (X = A^+ B).
inline ComplexMatrix ls_solve(const ComplexMatrix& A, const ComplexMatrix& B, const std::string& context = "ls_solve") {
    if (A.rows() != B.rows()) {
        throw InvalidArgument(context + ": row counts differ (" + std::to_string(A.rows()) + " vs " +
                              std::to_string(B.rows()) + ")");
    }
    if (A.rows() < A.cols()) {
        throw RankDeficiency(context + ": system is underdetermined (" + std::to_string(A.rows()) + " rows < " +
                             std::to_string(A.cols()) + " unknowns)");
    }
    Eigen::BDCSVD<ComplexMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double largest = sv.size() > 0 ? sv(0) : 0.0;
    const double smallest = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    if (largest == 0.0 || smallest < rank_tolerance(A.rows(), A.cols(), largest)) {
        throw RankDeficiency(context + ": matrix is not full column rank (smallest singular value " +
                             std::to_string(smallest) + ", largest " + std::to_string(largest) + ")");
    }
    return svd.solve(B);
}

} // namespace irs_parafac
