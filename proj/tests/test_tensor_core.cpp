// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "irs_parafac/tensor_core.hpp"
#include "test_support.hpp"

namespace irs_parafac {
namespace {

using testing::random_matrix;
using testing::rel_err;

// ---------------------------------------------------------------------------
// Khatri-Rao / Kronecker
// ---------------------------------------------------------------------------

TEST(KhatriRao, IdentityColumns) {
    const ComplexMatrix kr = khatri_rao(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(2, 2));
    ComplexMatrix expected = ComplexMatrix::Zero(4, 2);
    expected(0, 0) = 1.0;
    expected(3, 1) = 1.0;
    EXPECT_EQ(kr, expected);
}

TEST(KhatriRao, SingleColumnIsKronecker) {
    ComplexMatrix a(2, 1), b(2, 1);
    a << 1.0, 2.0;
    b << 3.0, 4.0;
    ComplexMatrix expected(4, 1);
    expected << 3.0, 4.0, 6.0, 8.0;
    EXPECT_EQ(khatri_rao(a, b), expected);
}

TEST(KhatriRao, MatchesColumnwiseKroneckerLoop) {
    const ComplexMatrix a = random_matrix(3, 2, 1);
    const ComplexMatrix b = random_matrix(2, 2, 2);
    ComplexMatrix oracle(6, 2);
    for (Index n = 0; n < 2; ++n)
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 2; ++j) oracle(i * 2 + j, n) = a(i, n) * b(j, n);
    EXPECT_LT(rel_err(khatri_rao(a, b), oracle), 1e-15);
}

TEST(KhatriRao, ColumnMismatchThrows) {
    EXPECT_THROW(khatri_rao(ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 3)), InvalidArgument);
}

TEST(Kronecker, ScalarScales) {
    ComplexMatrix a(1, 1);
    a << 2.0;
    const ComplexMatrix b = random_matrix(3, 2, 3);
    EXPECT_EQ(kronecker(a, b), (2.0 * b).eval());
}

TEST(Kronecker, IdentityTimesIdentity) {
    EXPECT_EQ(kronecker(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3)), ComplexMatrix::Identity(6, 6));
}

TEST(Kronecker, MatchesElementFormula) {
    const ComplexMatrix a = random_matrix(2, 2, 4);
    const ComplexMatrix b = random_matrix(2, 3, 5);
    const ComplexMatrix k = kronecker(a, b);
    ASSERT_EQ(k.rows(), 4);
    ASSERT_EQ(k.cols(), 6);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
            for (Index p = 0; p < 2; ++p)
                for (Index q = 0; q < 3; ++q) EXPECT_EQ(k(i * 2 + p, j * 3 + q), a(i, j) * b(p, q));
}

TEST(Kronecker, MixedProductWithKhatriRao) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Index n = 1 + static_cast<Index>(seed % 4);
        const ComplexMatrix a = random_matrix(2 + seed % 3, 3, 10 * seed + 1);
        const ComplexMatrix b = random_matrix(3, 2 + seed % 2, 10 * seed + 2);
        const ComplexMatrix c = random_matrix(3, n, 10 * seed + 3);
        const ComplexMatrix d = random_matrix(b.cols(), n, 10 * seed + 4);
        EXPECT_LT(rel_err(kronecker(a, b) * khatri_rao(c, d), khatri_rao(a * c, b * d)), 1e-10) << seed;
    }
}

// ---------------------------------------------------------------------------
// tensor, unfoldings
// ---------------------------------------------------------------------------

TEST(Unfold, SingleEntryPlacement) {
    SignalTensor y(2, 3, 2);
    const Complex c{1.5, -0.5};
    y(0, 0, 0) = c;
    for (int mode : {1, 2, 3}) {
        const ComplexMatrix m = unfold(y, mode);
        EXPECT_EQ(m(0, 0), c) << "mode " << mode;
        EXPECT_DOUBLE_EQ(m.squaredNorm(), std::norm(c));
    }
}

TEST(Unfold, Shapes) {
    const SignalTensor y(2, 3, 4);
    EXPECT_EQ(unfold(y, 1).rows(), 2);
    EXPECT_EQ(unfold(y, 1).cols(), 12);
    EXPECT_EQ(unfold(y, 2).rows(), 3);
    EXPECT_EQ(unfold(y, 2).cols(), 8);
    EXPECT_EQ(unfold(y, 3).rows(), 4);
    EXPECT_EQ(unfold(y, 3).cols(), 6);
}

TEST(Unfold, KnownIndexLayout) {
    SignalTensor y(2, 3, 2);
    // (l, t, k) -> position in each unfolding
    y(1, 2, 1) = 7.0;
    EXPECT_EQ(unfold(y, 1)(1, 1 * 3 + 2), Complex(7.0));
    EXPECT_EQ(unfold(y, 2)(2, 1 * 2 + 1), Complex(7.0));
    EXPECT_EQ(unfold(y, 3)(1, 2 * 2 + 1), Complex(7.0));
}

TEST(Unfold, InvalidModeThrows) {
    const SignalTensor y(1, 1, 1);
    EXPECT_THROW(unfold(y, 0), InvalidArgument);
    EXPECT_THROW(unfold(y, 4), InvalidArgument);
}

TEST(Unfold, FactorProductForms) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Index l = 1 + seed % 3, t = 1 + (seed / 3) % 4, k = 1 + (seed / 12) % 4, n = 1 + seed % 4;
        const ComplexMatrix g = random_matrix(l, n, 3 * seed + 100);
        const ComplexMatrix z = random_matrix(t, n, 3 * seed + 101);
        const ComplexMatrix s = random_matrix(k, n, 3 * seed + 102);
        const SignalTensor y = testing::parafac_by_loops(g, z, s);
        EXPECT_LT(rel_err(unfold(y, 1), g * khatri_rao(s, z).transpose()), 1e-10);
        EXPECT_LT(rel_err(unfold(y, 2), z * khatri_rao(s, g).transpose()), 1e-10);
        EXPECT_LT(rel_err(unfold(y, 3), s * khatri_rao(z, g).transpose()), 1e-10);
    }
}

TEST(Unfold, Mode3RowIsVectorizedSlice) {
    const ComplexMatrix g = random_matrix(2, 2, 7);
    const ComplexMatrix z = random_matrix(3, 2, 8);
    const ComplexMatrix s = random_matrix(2, 2, 9);
    const SignalTensor y = testing::parafac_by_loops(g, z, s);
    const ComplexMatrix y3 = unfold(y, 3);
    for (Index k = 0; k < 2; ++k) {
        const ComplexMatrix slice = g * s.row(k).transpose().asDiagonal() * z.transpose();
        ComplexMatrix vec(1, 6);
        for (Index t = 0; t < 3; ++t)
            for (Index l = 0; l < 2; ++l) vec(0, t * 2 + l) = slice(l, t);
        EXPECT_LT(rel_err(y3.row(k), vec), 1e-12);
    }
}

TEST(Fold, RoundTripAllModes) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Index l = 1 + seed % 3, t = 1 + seed % 4, k = 1 + seed % 5;
        SignalTensor y(l, t, k);
        for (Index s = 0; s < k; ++s) y.slice(s) = random_matrix(l, t, 50 + seed * 10 + s);
        for (int mode : {1, 2, 3}) {
            const SignalTensor back = fold(unfold(y, mode), mode, l, t, k);
            for (Index s = 0; s < k; ++s) EXPECT_EQ(back.slice(s), y.slice(s)) << "mode " << mode;
        }
    }
}

TEST(Fold, ShapeMismatchThrows) {
    EXPECT_THROW(fold(ComplexMatrix::Zero(2, 5), 1, 2, 3, 2), InvalidArgument);
    EXPECT_THROW(fold(ComplexMatrix::Zero(2, 6), 7, 2, 3, 2), InvalidArgument);
}

TEST(FoldFromSlices, SingleScalarSlice) {
    std::vector<ComplexMatrix> slices{ComplexMatrix::Constant(1, 1, Complex{2.0, 3.0})};
    const SignalTensor y = fold_from_slices(slices);
    EXPECT_EQ(y.dim_l(), 1);
    EXPECT_EQ(y.dim_t(), 1);
    EXPECT_EQ(y.dim_k(), 1);
    EXPECT_EQ(y(0, 0, 0), Complex(2.0, 3.0));
}

TEST(FoldFromSlices, UnfoldMode1IsConcatenation) {
    std::vector<ComplexMatrix> slices{random_matrix(2, 3, 1), random_matrix(2, 3, 2), random_matrix(2, 3, 3)};
    const ComplexMatrix y1 = unfold(fold_from_slices(slices), 1);
    ComplexMatrix expected(2, 9);
    expected << slices[0], slices[1], slices[2];
    EXPECT_EQ(y1, expected);
}

TEST(FoldFromSlices, EntriesByIndexLoop) {
    std::vector<ComplexMatrix> slices{random_matrix(3, 2, 11), random_matrix(3, 2, 12)};
    const SignalTensor y = fold_from_slices(slices);
    for (Index k = 0; k < 2; ++k)
        for (Index l = 0; l < 3; ++l)
            for (Index t = 0; t < 2; ++t) EXPECT_EQ(y(l, t, k), slices[k](l, t));
}

TEST(FoldFromSlices, InconsistentSlicesThrow) {
    std::vector<ComplexMatrix> slices{ComplexMatrix::Zero(2, 3), ComplexMatrix::Zero(3, 2)};
    EXPECT_THROW(fold_from_slices(slices), InvalidArgument);
    EXPECT_THROW(fold_from_slices(std::vector<ComplexMatrix>{}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// rank-1 SVD
// ---------------------------------------------------------------------------

TEST(Rank1Svd, ExactOuterProduct) {
    const ComplexMatrix a = random_matrix(4, 1, 21);
    const ComplexMatrix b = random_matrix(3, 1, 22);
    const ComplexMatrix w = a * b.adjoint();
    const Rank1Svd r = rank1_truncated_svd(w);
    EXPECT_NEAR(r.sigma, a.norm() * b.norm(), 1e-12 * r.sigma);
    EXPECT_LT(rel_err(r.u * r.sigma * r.v.adjoint(), w), 1e-13);
}

TEST(Rank1Svd, Diagonal) {
    ComplexMatrix w = ComplexMatrix::Zero(2, 2);
    w(0, 0) = 3.0;
    w(1, 1) = 1.0;
    const Rank1Svd r = rank1_truncated_svd(w);
    EXPECT_NEAR(r.sigma, 3.0, 1e-14);
    EXPECT_NEAR(std::abs(r.u(0)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(r.v(0)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(r.u(1)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.v(1)), 0.0, 1e-14);
}

TEST(Rank1Svd, MatchesGramEigenvalueOracle) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const ComplexMatrix w = random_matrix(4, 3, 300 + seed);
        // sigma_max^2 = largest eigenvalue of W^H W, from a Hermitian eigensolver
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(w.adjoint() * w);
        const double oracle = std::sqrt(eig.eigenvalues().maxCoeff());
        const Rank1Svd r = rank1_truncated_svd(w);
        EXPECT_NEAR(r.sigma, oracle, 1e-10 * oracle);
        EXPECT_NEAR(r.u.norm(), 1.0, 1e-12);
        EXPECT_NEAR(r.v.norm(), 1.0, 1e-12);
        // Eckart-Young residual
        const double resid = (w - r.u * r.sigma * r.v.adjoint()).squaredNorm();
        const double expected = w.squaredNorm() - r.sigma * r.sigma;
        EXPECT_NEAR(resid, expected, 1e-10 * w.squaredNorm());
    }
}

TEST(Rank1Svd, ZeroInputThrows) {
    EXPECT_THROW(rank1_truncated_svd(ComplexMatrix::Zero(2, 3)), DegenerateInput);
}

// ---------------------------------------------------------------------------
// least squares
// ---------------------------------------------------------------------------

TEST(LsSolve, Identity) {
    const ComplexMatrix b = random_matrix(4, 2, 31);
    EXPECT_LT(rel_err(ls_solve(ComplexMatrix::Identity(4, 4), b), b), 1e-14);
}

TEST(LsSolve, SemiUnitaryReducesToAdjoint) {
    const Eigen::HouseholderQR<ComplexMatrix> qr(random_matrix(6, 3, 32));
    const ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(6, 3);
    ASSERT_LT(rel_err(q.adjoint() * q, ComplexMatrix::Identity(3, 3)), 1e-13);
    const ComplexMatrix b = random_matrix(6, 2, 33);
    EXPECT_LT(rel_err(ls_solve(q, b), q.adjoint() * b), 1e-12);
}

TEST(LsSolve, RecoversConsistentSystem) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ComplexMatrix a = random_matrix(6, 3, 400 + seed);
        const ComplexMatrix x0 = random_matrix(3, 2, 500 + seed);
        EXPECT_LT(rel_err(ls_solve(a, a * x0), x0), 1e-10);
    }
}

TEST(LsSolve, RankDeficientThrows) {
    ComplexMatrix a = random_matrix(5, 3, 34);
    a.col(2) = a.col(0) * Complex(2.0, -1.0);
    EXPECT_THROW(ls_solve(a, random_matrix(5, 1, 35)), RankDeficiency);
    EXPECT_THROW(ls_solve(ComplexMatrix::Zero(3, 2), random_matrix(3, 1, 36)), RankDeficiency);
}

TEST(LsSolve, UnderdeterminedThrows) {
    EXPECT_THROW(ls_solve(random_matrix(2, 3, 37), random_matrix(2, 1, 38)), RankDeficiency);
}

TEST(LsSolve, RowMismatchThrows) {
    EXPECT_THROW(ls_solve(random_matrix(4, 2, 39), random_matrix(3, 1, 40)), InvalidArgument);
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

TEST(FrobeniusNormSq, Basics) {
    EXPECT_EQ(frobenius_norm_sq(ComplexMatrix::Zero(3, 2)), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm_sq(ComplexMatrix::Identity(3, 3)), 3.0);
}

TEST(FrobeniusNormSq, MatchesLoop) {
    const ComplexMatrix m = random_matrix(5, 4, 41);
    double acc = 0.0;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 4; ++j) acc += m(i, j).real() * m(i, j).real() + m(i, j).imag() * m(i, j).imag();
    EXPECT_NEAR(frobenius_norm_sq(m), acc, 1e-12 * acc);

    SignalTensor y(2, 2, 3);
    double tacc = 0.0;
    for (Index k = 0; k < 3; ++k) {
        y.slice(k) = random_matrix(2, 2, 42 + k);
        tacc += y.slice(k).cwiseAbs2().sum();
    }
    EXPECT_NEAR(frobenius_norm_sq(y), tacc, 1e-12 * tacc);
}

} // namespace
} // namespace irs_parafac
