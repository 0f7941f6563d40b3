#pragma once

#include "quadkit/error.hpp"
#include "quadkit/linalg.hpp"
#include "quadkit/orthopoly.hpp"
#include "quadkit/subselect.hpp"

#include <cmath>
#include <vector>

namespace quadkit {

struct LeastSquaresResult {
    Vector x;
    double residual_norm = 0.0;
};

/// min ||A x - b||_2 by Householder QR; b(i) = sqrt(w_i) f(zeta_i).
inline LeastSquaresResult solve_least_squares(const DesignMatrix& a, const Vector& b)
{
    if (b.size() != a.rows()) {
        throw InvalidArgument("solve_least_squares: b has " + std::to_string(b.size()) + " entries, A has " +
                              std::to_string(a.rows()) + " rows");
    }
    const linalg::LeastSquares ls = linalg::householder_least_squares(a.entries, b);
    return {ls.x, ls.residual_norm};
}

/// Right-hand side sqrt(w_i) f(zeta_i) for function values f(zeta_i).
inline Vector weighted_rhs(const DesignMatrix& a, const Vector& f_values)
{
    require(f_values.size() == a.rows(), "weighted_rhs: value count mismatch");
    return a.weights.cwiseSqrt().cwiseProduct(f_values);
}

struct GramReport {
    Matrix gram;
    double max_offdiag_error = 0.0;  // max |G_pq - delta_pq| over all entries
    std::vector<std::vector<bool>> exactness_frontier; // |G_pq - delta_pq| < tol
    double tol = 1e-10;

    bool all_exact() const
    {
        for (const auto& row : exactness_frontier)
            for (bool v : row)
                if (!v) return false;
        return true;
    }
};

inline GramReport gram_report(const Matrix& a, double tol = 1e-10)
{
    GramReport r;
    r.tol = tol;
    r.gram = a.transpose() * a;
    const Index n = r.gram.rows();
    r.exactness_frontier.assign(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), true));
    for (Index p = 0; p < n; ++p) {
        for (Index q = 0; q < n; ++q) {
            const double err = std::abs(r.gram(p, q) - (p == q ? 1.0 : 0.0));
            r.max_offdiag_error = std::max(r.max_offdiag_error, err);
            r.exactness_frontier[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = err < tol;
        }
    }
    return r;
}

inline GramReport gram_report(const DesignMatrix& a, double tol = 1e-10) { return gram_report(a.entries, tol); }

/// 2-norm condition number of A (not of A^T A).
inline double condition_number(const Matrix& a)
{
    require(a.size() > 0 && a.cwiseAbs().maxCoeff() > 0.0, "condition_number: zero matrix");
    return condition_number_of(a);
}

inline double condition_number(const DesignMatrix& a) { return condition_number(a.entries); }

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of an orthonormal expansion (Parseval).
inline Moments moments(const Vector& coefficients, const MultiIndexSet& basis)
{
    require(coefficients.size() == static_cast<Index>(basis.size()), "moments: coefficient count mismatch");
    const Index zero = basis.find(MultiIndex(static_cast<std::size_t>(basis.dim), 0));
    if (zero < 0) throw InvalidArgument("moments: basis lacks the zero multi-index");
    Moments out;
    out.mean = coefficients(zero);
    out.variance = coefficients.squaredNorm() - out.mean * out.mean;
    return out;
}

} // namespace quadkit
