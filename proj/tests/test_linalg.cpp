#include "quadkit/linalg.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace quadkit;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) a(i, j) = n(gen);
    return a;
}

} // namespace

TEST(TridiagonalEigen, MatchesEigenSelfAdjointSolver)
{
    const Index n = 12;
    Vector diag(n), off(n - 1);
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index i = 0; i < n; ++i) diag(i) = u(gen);
    for (Index i = 0; i + 1 < n; ++i) off(i) = u(gen);
    Matrix t = Matrix::Zero(n, n);
    t.diagonal() = diag;
    for (Index i = 0; i + 1 < n; ++i) t(i, i + 1) = t(i + 1, i) = off(i);

    const Eigen::SelfAdjointEigenSolver<Matrix> oracle(t);
    const auto ours = linalg::tridiagonal_eigen(diag, off);
    for (Index i = 0; i < n; ++i) {
        EXPECT_NEAR(ours.values(i), oracle.eigenvalues()(i), 1e-12);
        EXPECT_NEAR(std::abs(ours.vectors.col(i).dot(oracle.eigenvectors().col(i))), 1.0, 1e-10);
    }
}

TEST(TridiagonalEigen, SingleEntry)
{
    Vector diag(1);
    diag << 0.25;
    const auto e = linalg::tridiagonal_eigen(diag, Vector(0));
    EXPECT_DOUBLE_EQ(e.values(0), 0.25);
    EXPECT_DOUBLE_EQ(std::abs(e.vectors(0, 0)), 1.0);
}

TEST(PivotedQR, PivotOrderMatchesGreedyNormRule)
{
    const Matrix a = random_matrix(5, 9, 11);
    const auto f = linalg::pivoted_qr(a, 5);
    ASSERT_EQ(f.steps, 5);
    // first pivot is the column of largest norm
    Index best = 0;
    for (Index c = 1; c < a.cols(); ++c)
        if (a.col(c).norm() > a.col(best).norm()) best = c;
    EXPECT_EQ(f.permutation[0], best);
    // |R| diagonal is non-increasing and R1 reproduces the permuted columns' Gram
    Matrix ap(a.rows(), a.cols());
    for (Index c = 0; c < a.cols(); ++c) ap.col(c) = a.col(f.permutation[static_cast<std::size_t>(c)]);
    const Matrix r = f.r.topRows(5).triangularView<Eigen::Upper>();
    EXPECT_LT((r.transpose() * r - ap.transpose() * ap).cwiseAbs().maxCoeff(), 1e-10);
    for (Index j = 0; j + 1 < 5; ++j) EXPECT_GE(std::abs(f.r(j, j)) + 1e-12, std::abs(f.r(j + 1, j + 1)));
}

TEST(PivotedQR, TiesGoToLowestIndex)
{
    Matrix a = Matrix::Identity(3, 3);
    const auto f = linalg::pivoted_qr(a, 3);
    EXPECT_EQ(f.permutation, (std::vector<Index>{0, 1, 2}));
}

TEST(PivotedQR, StopsOnRankDeficiency)
{
    Matrix a(3, 4);
    a << 1, 2, 3, 4, 2, 4, 6, 8, 1, 1, 1, 1;
    const auto f = linalg::pivoted_qr(a, 3);
    EXPECT_EQ(f.steps, 2);
}

TEST(RowPivotedLU, ReconstructsPermutedMatrix)
{
    const Matrix a = random_matrix(8, 4, 5);
    const auto f = linalg::lu_row_pivoting(a, 4);
    ASSERT_EQ(f.steps, 4);
    Matrix l = Matrix::Zero(8, 4);
    for (Index j = 0; j < 4; ++j) {
        l(j, j) = 1.0;
        l.col(j).tail(8 - j - 1) = f.lu.col(j).tail(8 - j - 1);
    }
    const Matrix u = f.lu.topRows(4).triangularView<Eigen::Upper>();
    Matrix pa(8, 4);
    for (Index i = 0; i < 8; ++i) pa.row(i) = a.row(f.row_order[static_cast<std::size_t>(i)]);
    EXPECT_LT((l * u - pa).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(l.cwiseAbs().maxCoeff(), 1.0 + 1e-15);
}

TEST(JacobiSvd, MatchesEigenBdcSvd)
{
    for (auto [rows, cols] : {std::pair<Index, Index>{20, 6}, {6, 20}, {7, 7}}) {
        const Matrix a = random_matrix(rows, cols, static_cast<unsigned>(rows * 31 + cols));
        const auto ours = linalg::jacobi_svd(a);
        const Eigen::BDCSVD<Matrix> oracle(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        ASSERT_EQ(ours.singular_values.size(), oracle.singularValues().size());
        for (Index i = 0; i < ours.singular_values.size(); ++i)
            EXPECT_NEAR(ours.singular_values(i), oracle.singularValues()(i), 1e-11);
        const Matrix recon = ours.u * ours.singular_values.asDiagonal() * ours.v.transpose();
        EXPECT_LT((recon - a).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(Cholesky, SolvesSpdSystem)
{
    const Matrix b = random_matrix(10, 6, 2);
    const Matrix a = b.transpose() * b;
    const Vector rhs = Vector::LinSpaced(6, 1.0, 2.0);
    const Matrix l = linalg::cholesky(a);
    EXPECT_LT((l * l.transpose() - a).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((a * linalg::cholesky_solve(l, rhs) - rhs).norm(), 1e-10);
}

TEST(Cholesky, RejectsIndefinite)
{
    Matrix a(2, 2);
    a << 1, 2, 2, 1;
    EXPECT_THROW(linalg::cholesky(a), NumericalError);
}

TEST(HouseholderLeastSquares, MatchesEigenQr)
{
    const Matrix a = random_matrix(30, 7, 9);
    const Vector b = random_matrix(30, 1, 10).col(0);
    const auto ours = linalg::householder_least_squares(a, b);
    const Vector oracle = a.colPivHouseholderQr().solve(b);
    EXPECT_LT((ours.x - oracle).norm(), 1e-11);
    EXPECT_NEAR(ours.residual_norm, (a * oracle - b).norm(), 1e-11);
}

TEST(HouseholderLeastSquares, RankDeficient)
{
    Matrix a = random_matrix(10, 3, 4);
    a.col(2) = a.col(0) + a.col(1);
    EXPECT_THROW(linalg::householder_least_squares(a, Vector::Ones(10)), NumericalError);
}

TEST(Nnls, KktConditionsHold)
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        const Matrix a = random_matrix(12, 8, 100 + seed);
        const Vector b = random_matrix(12, 1, 200 + seed).col(0);
        const auto s = linalg::nnls(a, b);
        const Vector grad = a.transpose() * (b - a * s.x);
        for (Index j = 0; j < 8; ++j) {
            EXPECT_GE(s.x(j), 0.0);
            if (s.x(j) > 0.0) EXPECT_NEAR(grad(j), 0.0, 1e-9);
            else EXPECT_LE(grad(j), 1e-9);
        }
    }
}

TEST(Nnls, RecoversNonnegativeSolutionOfConsistentSystem)
{
    const Matrix a = random_matrix(10, 4, 77);
    Vector x(4);
    x << 0.5, 0.0, 2.0, 1.0;
    const auto s = linalg::nnls(a, a * x);
    EXPECT_LT((s.x - x).norm(), 1e-10);
    EXPECT_LT(s.residual_norm, 1e-10);
}
