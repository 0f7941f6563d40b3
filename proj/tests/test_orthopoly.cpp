#include "quadkit/orthopoly.hpp"
#include "quadkit/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace quadkit;

namespace {

double binom(int n, int k) { return std::round(std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0))); }

// Legendre P_n(x) by Bonnet's recursion, then orthonormalized for density 1/2.
double legendre_oracle(int n, double x)
{
    double p0 = 1.0, p1 = x;
    if (n == 0) return 1.0;
    for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1 * std::sqrt(2.0 * n + 1.0);
}

// Probabilists' Hermite He_n(x) / sqrt(n!).
double hermite_oracle(int n, double x)
{
    double h0 = 1.0, h1 = x;
    if (n == 0) return 1.0;
    for (int k = 1; k < n; ++k) {
        const double h2 = x * h1 - k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1 / std::sqrt(std::tgamma(n + 1.0));
}

double chebyshev_oracle(int n, double x) { return n == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(n * std::acos(x)); }

} // namespace

TEST(RecurrenceCoefficients, ClosedForms)
{
    const auto leg = recurrence_coefficients({Family::legendre}, 6);
    EXPECT_DOUBLE_EQ(leg.beta[0], 1.0);
    EXPECT_DOUBLE_EQ(leg.beta[1], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(leg.beta[2], 4.0 / 15.0);
    const auto her = recurrence_coefficients({Family::hermite}, 6);
    EXPECT_DOUBLE_EQ(her.beta[3], 3.0);
    const auto che = recurrence_coefficients({Family::chebyshev1}, 6);
    EXPECT_DOUBLE_EQ(che.beta[1], 0.5);
    EXPECT_DOUBLE_EQ(che.beta[4], 0.25);
    for (const auto* t : {&leg, &her, &che}) {
        EXPECT_TRUE(t->symmetric());
        for (double b : t->beta) EXPECT_GT(b, 0.0);
    }
}

TEST(RecurrenceCoefficients, JacobiReducesToLegendreAndChebyshev)
{
    const auto j00 = recurrence_coefficients({Family::jacobi, 0.0, 0.0}, 8);
    const auto leg = recurrence_coefficients({Family::legendre}, 8);
    const auto jh = recurrence_coefficients({Family::jacobi, -0.5, -0.5}, 8);
    const auto che = recurrence_coefficients({Family::chebyshev1}, 8);
    for (std::size_t k = 0; k < 8; ++k) {
        EXPECT_NEAR(j00.alpha[k], leg.alpha[k], 1e-15);
        EXPECT_NEAR(j00.beta[k], leg.beta[k], 1e-15);
        EXPECT_NEAR(jh.alpha[k], che.alpha[k], 1e-15);
        EXPECT_NEAR(jh.beta[k], che.beta[k], 1e-15);
    }
}

TEST(RecurrenceCoefficients, Errors)
{
    EXPECT_THROW(recurrence_coefficients({Family::legendre}, 0), InvalidArgument);
    EXPECT_THROW(recurrence_coefficients({Family::jacobi, -1.0, 0.0}, 3), InvalidArgument);
    EXPECT_THROW(recurrence_coefficients({Family::custom}, 3), InvalidArgument);
    EXPECT_THROW(parse_family("laguerre"), InvalidArgument);
}

TEST(EvaluateOrthonormal, MatchesClassicalOracles)
{
    const std::vector<double> xs{-0.9, -0.3, 0.0, 0.41, 0.77};
    const auto leg = evaluate_orthonormal(recurrence_coefficients({Family::legendre}, 11), 10, xs);
    const auto her = evaluate_orthonormal(recurrence_coefficients({Family::hermite}, 11), 10, xs);
    const auto che = evaluate_orthonormal(recurrence_coefficients({Family::chebyshev1}, 11), 10, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (int n = 0; n <= 10; ++n) {
            const auto ii = static_cast<Index>(i);
            EXPECT_NEAR(leg(ii, n), legendre_oracle(n, xs[i]), 1e-12);
            EXPECT_NEAR(her(ii, n), hermite_oracle(n, xs[i]), 1e-12);
            EXPECT_NEAR(che(ii, n), chebyshev_oracle(n, xs[i]), 1e-12);
        }
    }
}

TEST(EvaluateOrthonormal, TableTooShort)
{
    const std::vector<double> xs{0.0};
    EXPECT_THROW(evaluate_orthonormal(recurrence_coefficients({Family::legendre}, 3), 3, xs), InvalidArgument);
}

TEST(EvaluateOrthonormal, OrthonormalUnderGaussRule)
{
    // Jacobi(1, 2): orthonormality checked with a high-order Gauss rule of the same family.
    const Distribution dist{Family::jacobi, 1.0, 2.0};
    const auto t = recurrence_coefficients(dist, 20);
    const auto rule = golub_welsch(t, 20);
    const std::vector<double> xs(rule.points.col(0).begin(), rule.points.col(0).end());
    const Matrix psi = evaluate_orthonormal(t, 8, xs);
    const Matrix g = psi.transpose() * rule.weights.asDiagonal() * psi;
    EXPECT_LT((g - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiIndexSet, Cardinalities)
{
    for (int d = 1; d <= 4; ++d) {
        for (int k = 0; k <= 6; ++k) {
            EXPECT_EQ(multi_index_set(IndexKind::total_order, d, k).size(), static_cast<std::size_t>(binom(d + k, d)));
            EXPECT_EQ(multi_index_set(IndexKind::tensor_order, d, k).size(),
                      static_cast<std::size_t>(std::pow(k + 1, d)));
        }
    }
}

TEST(MultiIndexSet, GradedLexOrderNoDuplicates)
{
    for (auto kind : {IndexKind::total_order, IndexKind::tensor_order, IndexKind::hyperbolic_cross, IndexKind::hyperbolic_q}) {
        const auto s = multi_index_set(kind, 3, 5, 0.6);
        std::set<MultiIndex> unique(s.indices.begin(), s.indices.end());
        EXPECT_EQ(unique.size(), s.size());
        for (std::size_t i = 1; i < s.size(); ++i) EXPECT_TRUE(graded_lex_less(s.indices[i - 1], s.indices[i]));
        EXPECT_EQ(s.indices.front(), (MultiIndex{0, 0, 0}));
    }
}

TEST(MultiIndexSet, TotalOrderTwoDimensionalLayout)
{
    const auto s = multi_index_set(IndexKind::total_order, 2, 4);
    ASSERT_EQ(s.size(), 15u);
    EXPECT_EQ(s.indices[1], (MultiIndex{0, 1}));
    EXPECT_EQ(s.indices[2], (MultiIndex{1, 0}));
    EXPECT_EQ(s.indices.back(), (MultiIndex{4, 0}));
    EXPECT_EQ(s.find({2, 2}), 12);
    EXPECT_EQ(s.find({5, 0}), -1);
}

TEST(MultiIndexSet, HyperbolicRules)
{
    const auto hc = multi_index_set(IndexKind::hyperbolic_cross, 2, 3);
    for (const auto& p : hc.indices) EXPECT_LE((p[0] + 1) * (p[1] + 1), 4);
    EXPECT_EQ(hc.size(), 8u); // (0,0..3),(1,0),(1,1),(2,0),(3,0)
    const auto q1 = multi_index_set(IndexKind::hyperbolic_q, 3, 4, 1.0);
    EXPECT_EQ(q1.indices, multi_index_set(IndexKind::total_order, 3, 4).indices);
    const auto qh = multi_index_set(IndexKind::hyperbolic_q, 2, 4, 0.5);
    for (const auto& p : qh.indices) EXPECT_LE(std::sqrt(p[0]) + std::sqrt(p[1]), 2.0 + 1e-12);
    EXPECT_THROW(multi_index_set(IndexKind::hyperbolic_q, 2, 4, 1.5), InvalidArgument);
}

TEST(MultiIndexSet, CapEnforced)
{
    setenv("QUADKIT_CAP", "1000", 1);
    EXPECT_THROW(multi_index_set(IndexKind::tensor_order, 4, 9), CapExceeded);
    EXPECT_THROW(multi_index_set(IndexKind::total_order, 6, 10), CapExceeded);
    unsetenv("QUADKIT_CAP");
    EXPECT_NO_THROW(multi_index_set(IndexKind::tensor_order, 4, 9));
}

TEST(DesignMatrix, EntriesAndWeights)
{
    const auto basis = multi_index_set(IndexKind::total_order, 2, 2);
    Matrix pts(3, 2);
    pts << 0.1, 0.2, -0.5, 0.3, 0.9, -0.7;
    Vector w(3);
    w << 2.0, 1.0, 1.0;
    const auto a = design_matrix(basis, recurrences_for(basis, Distribution{Family::legendre}), pts, w);
    EXPECT_TRUE(a.weights_renormalized);
    EXPECT_NEAR(a.weights.sum(), 1.0, 1e-14);
    for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 6; ++j) {
            const auto& p = basis.indices[static_cast<std::size_t>(j)];
            const double expected = legendre_oracle(p[0], pts(i, 0)) * legendre_oracle(p[1], pts(i, 1)) *
                                    std::sqrt(a.weights(i));
            EXPECT_NEAR(a.entries(i, j), expected, 1e-14);
        }
    }
}

TEST(DesignMatrix, RejectsNonpositiveWeights)
{
    const auto basis = multi_index_set(IndexKind::total_order, 1, 1);
    Matrix pts(2, 1);
    pts << 0.0, 0.5;
    Vector w(2);
    w << 1.0, 0.0;
    EXPECT_THROW(design_matrix(basis, recurrences_for(basis, Distribution{}), pts, w), InvalidArgument);
}
