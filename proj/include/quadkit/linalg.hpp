#pragma once

// Dense factorizations used throughout quadkit. Eigen provides the storage
// and elementwise/BLAS-like arithmetic; the decompositions themselves are
// written out here so that pivot order and tie-breaking are fully specified.

#include "quadkit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace quadkit {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline constexpr double machine_epsilon = std::numeric_limits<double>::epsilon();

struct SymmetricEigen {
    Vector values;  // ascending
    Matrix vectors; // column i pairs with values(i)
};

/// Eigen-decomposition of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, by implicit-shift QL iteration. Each
/// eigenvalue gets at most `max_iterations` sweeps.
inline SymmetricEigen tridiagonal_eigen(const Vector& diagonal, const Vector& offdiagonal,
                                        int max_iterations = 200)
{
    const Index n = diagonal.size();
    require(n >= 1, "tridiagonal_eigen: empty matrix");
    require(offdiagonal.size() == n - 1, "tridiagonal_eigen: off-diagonal must have n-1 entries");

    Vector d = diagonal;
    Vector e = Vector::Zero(n);
    e.head(n - 1) = offdiagonal;
    Matrix z = Matrix::Identity(n, n);

    for (Index l = 0; l < n; ++l) {
        int iterations = 0;
        Index m = l;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d(m)) + std::abs(d(m + 1));
                if (std::abs(e(m)) <= machine_epsilon * dd) break;
            }
            if (m == l) break;
            if (iterations++ == max_iterations) {
                throw NumericalError("tridiagonal_eigen: no convergence for eigenvalue " +
                                     std::to_string(l) + " after " +
                                     std::to_string(max_iterations) + " iterations");
            }
            double g = (d(l + 1) - d(l)) / (2.0 * e(l));
            double r = std::hypot(g, 1.0);
            g = d(m) - d(l) + e(l) / (g + std::copysign(r, g));
            double s = 1.0;
            double c = 1.0;
            double p = 0.0;
            bool deflated = false;
            for (Index i = m - 1; i >= l; --i) {
                double f = s * e(i);
                const double b = c * e(i);
                r = std::hypot(f, g);
                e(i + 1) = r;
                if (r == 0.0) {
                    d(i + 1) -= p;
                    e(m) = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d(i + 1) - p;
                r = (d(i) - g) * s + 2.0 * c * b;
                p = s * r;
                d(i + 1) = g + p;
                g = c * r - b;
                for (Index k = 0; k < n; ++k) {
                    f = z(k, i + 1);
                    z(k, i + 1) = s * z(k, i) + c * f;
                    z(k, i) = c * z(k, i) - s * f;
                }
            }
            if (deflated) continue;
            d(l) -= p;
            e(l) = g;
            e(m) = 0.0;
        } while (m != l);
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d(a) < d(b); });

    SymmetricEigen result{Vector(n), Matrix(n, n)};
    for (Index i = 0; i < n; ++i) {
        result.values(i) = d(order[static_cast<std::size_t>(i)]);
        result.vectors.col(i) = z.col(order[static_cast<std::size_t>(i)]);
    }
    return result;
}

namespace detail {

// Reflect the leading column of `block` onto a multiple of e_1 and apply the
// same reflection to the remaining columns and to `extra` (if non-empty).
template <class Block, class Extra>
double householder_step(Block&& block, Extra&& extra)
{
    Vector v = block.col(0);
    const double norm = v.norm();
    if (norm == 0.0) return 0.0;
    const double alpha = v(0) > 0.0 ? -norm : norm;
    v(0) -= alpha;
    const double vv = v.squaredNorm();
    if (vv > 0.0) {
        block.rightCols(block.cols() - 1) -=
            (2.0 / vv) * v * (v.transpose() * block.rightCols(block.cols() - 1));
        if (extra.size() > 0) extra -= (2.0 / vv) * v * v.dot(extra);
    }
    block.col(0).setZero();
    block(0, 0) = alpha;
    return alpha;
}

} // namespace detail

struct PivotedQR {
    Matrix r;                      // upper-trapezoidal factor after `steps` reflections
    std::vector<Index> permutation; // permutation[j] = original column now in position j
    Index steps = 0;               // pivots accepted before the tolerance stopped the sweep
};

/// Householder QR with column pivoting. At every step the column of largest
/// residual norm is moved to the front; exact ties go to the lowest original
/// column index. Stops after `max_steps` pivots or when the best residual
/// norm falls to `relative_tolerance` times the largest initial column norm.
inline PivotedQR pivoted_qr(Matrix a, Index max_steps, double relative_tolerance = 1e-13)
{
    const Index rows = a.rows();
    const Index cols = a.cols();
    PivotedQR out;
    out.permutation.resize(static_cast<std::size_t>(cols));
    std::iota(out.permutation.begin(), out.permutation.end(), Index{0});

    double reference = 0.0;
    for (Index c = 0; c < cols; ++c) reference = std::max(reference, a.col(c).norm());

    const Index limit = std::min({rows, cols, max_steps});
    Vector none;
    for (Index j = 0; j < limit; ++j) {
        Index best = j;
        double best_norm = -1.0;
        for (Index c = j; c < cols; ++c) {
            const double nrm = a.col(c).tail(rows - j).squaredNorm();
            if (nrm > best_norm ||
                (nrm == best_norm && out.permutation[static_cast<std::size_t>(c)] <
                                         out.permutation[static_cast<std::size_t>(best)])) {
                best = c;
                best_norm = nrm;
            }
        }
        if (!(std::sqrt(best_norm) > relative_tolerance * reference)) break;
        if (best != j) {
            a.col(j).swap(a.col(best));
            std::swap(out.permutation[static_cast<std::size_t>(j)],
                      out.permutation[static_cast<std::size_t>(best)]);
        }
        detail::householder_step(a.block(j, j, rows - j, cols - j), none);
        ++out.steps;
    }
    out.r = std::move(a);
    return out;
}

struct RowPivotedLU {
    Matrix lu;                      // packed factors of the permuted matrix
    std::vector<Index> row_order;   // row_order[i] = original row now in position i
    Index steps = 0;
};

/// Gaussian elimination with partial (row) pivoting. Column j picks the
/// remaining row of largest magnitude; exact ties go to the lowest original
/// row index. Stops after `max_steps` columns or when the pivot magnitude
/// falls to `relative_tolerance` times the largest initial entry.
inline RowPivotedLU lu_row_pivoting(Matrix a, Index max_steps, double relative_tolerance = 1e-13)
{
    const Index rows = a.rows();
    const Index cols = a.cols();
    RowPivotedLU out;
    out.row_order.resize(static_cast<std::size_t>(rows));
    std::iota(out.row_order.begin(), out.row_order.end(), Index{0});
    const double reference = a.cwiseAbs().maxCoeff();

    const Index limit = std::min({rows, cols, max_steps});
    for (Index j = 0; j < limit; ++j) {
        Index best = j;
        double best_abs = -1.0;
        for (Index i = j; i < rows; ++i) {
            const double v = std::abs(a(i, j));
            if (v > best_abs || (v == best_abs && out.row_order[static_cast<std::size_t>(i)] <
                                                      out.row_order[static_cast<std::size_t>(best)])) {
                best = i;
                best_abs = v;
            }
        }
        if (!(best_abs > relative_tolerance * reference)) break;
        if (best != j) {
            a.row(j).swap(a.row(best));
            std::swap(out.row_order[static_cast<std::size_t>(j)],
                      out.row_order[static_cast<std::size_t>(best)]);
        }
        const double pivot = a(j, j);
        const Index below = rows - j - 1;
        if (below > 0) {
            a.col(j).tail(below) /= pivot;
            a.block(j + 1, j + 1, below, cols - j - 1) -=
                a.col(j).tail(below) * a.row(j).tail(cols - j - 1);
        }
        ++out.steps;
    }
    out.lu = std::move(a);
    return out;
}

struct SingularValueDecomposition {
    Vector singular_values; // descending
    Matrix u;               // rows x min(rows, cols), orthonormal columns
    Matrix v;               // cols x min(rows, cols)
    int sweeps = 0;
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations. Converged when every
/// column pair has |cos angle| <= tolerance.
inline SingularValueDecomposition jacobi_svd(const Matrix& a, double tolerance = 1e-12,
                                             int max_sweeps = 100)
{
    if (a.rows() < a.cols()) {
        SingularValueDecomposition t = jacobi_svd(a.transpose(), tolerance, max_sweeps);
        std::swap(t.u, t.v);
        return t;
    }
    const Index n = a.cols();
    Matrix u = a;
    Matrix v = Matrix::Identity(n, n);
    SingularValueDecomposition out;

    bool converged = n <= 1;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double alpha = u.col(p).squaredNorm();
                const double beta = u.col(q).squaredNorm();
                const double gamma = u.col(p).dot(u.col(q));
                if (gamma == 0.0 || std::abs(gamma) <= tolerance * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Index k = 0; k < u.rows(); ++k) {
                    const double up = u(k, p);
                    const double uq = u(k, q);
                    u(k, p) = c * up - s * uq;
                    u(k, q) = s * up + c * uq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double vp = v(k, p);
                    const double vq = v(k, q);
                    v(k, p) = c * vp - s * vq;
                    v(k, q) = s * vp + c * vq;
                }
            }
        }
        out.sweeps = sweep + 1;
        converged = !rotated;
    }
    if (!converged) {
        throw NumericalError("jacobi_svd: no convergence after " + std::to_string(max_sweeps) + " sweeps");
    }

    Vector sigma(n);
    for (Index j = 0; j < n; ++j) sigma(j) = u.col(j).norm();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sigma(x) > sigma(y); });

    out.singular_values.resize(n);
    out.u.resize(u.rows(), n);
    out.v.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        out.singular_values(j) = sigma(src);
        out.u.col(j) = sigma(src) > 0.0 ? Vector(u.col(src) / sigma(src)) : Vector(Vector::Zero(u.rows()));
        out.v.col(j) = v.col(src);
    }
    return out;
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
inline Matrix cholesky(const Matrix& a)
{
    require(a.rows() == a.cols(), "cholesky: matrix must be square");
    const Index n = a.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        double diag = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(diag > 0.0)) {
            throw NumericalError("cholesky: matrix not positive definite at column " + std::to_string(j));
        }
        l(j, j) = std::sqrt(diag);
        for (Index i = j + 1; i < n; ++i) {
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
        }
    }
    return l;
}

inline Vector cholesky_solve(const Matrix& lower, const Vector& b)
{
    const Vector y = lower.triangularView<Eigen::Lower>().solve(b);
    return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

struct LeastSquares {
    Vector x;
    double residual_norm = 0.0;
};

/// min ||a x - b||_2 for a tall full-column-rank matrix via Householder QR.
/// Throws NumericalError when some |R_jj| <= rank_tolerance * max |R_ii|.
inline LeastSquares householder_least_squares(Matrix a, Vector b, double rank_tolerance = 1e-13)
{
    const Index m = a.rows();
    const Index n = a.cols();
    require(b.size() == m, "householder_least_squares: right-hand side length mismatch");
    require(m >= n, "householder_least_squares: matrix must have at least as many rows as columns");

    for (Index j = 0; j < n; ++j) {
        auto tail = b.tail(m - j);
        detail::householder_step(a.block(j, j, m - j, n - j), tail);
    }
    double largest = 0.0;
    for (Index j = 0; j < n; ++j) largest = std::max(largest, std::abs(a(j, j)));
    for (Index j = 0; j < n; ++j) {
        if (!(std::abs(a(j, j)) > rank_tolerance * largest)) {
            throw NumericalError("householder_least_squares: rank deficient at column " + std::to_string(j));
        }
    }
    LeastSquares out;
    out.x = a.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(b.head(n));
    out.residual_norm = b.tail(m - n).norm();
    return out;
}

struct NonnegativeLeastSquares {
    Vector x;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Lawson-Hanson active-set solution of min ||a x - b||_2 subject to x >= 0.
inline NonnegativeLeastSquares nnls(const Matrix& a, const Vector& b, int max_iterations = 0)
{
    const Index m = a.rows();
    const Index n = a.cols();
    require(b.size() == m, "nnls: right-hand side length mismatch");
    if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);

    const double tolerance =
        10.0 * machine_epsilon * a.cwiseAbs().colwise().sum().maxCoeff() * static_cast<double>(std::max(m, n));

    Vector x = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);

    auto solve_passive = [&](Vector& s) -> bool {
        std::vector<Index> cols;
        for (Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
        s = Vector::Zero(n);
        if (cols.empty()) return true;
        if (static_cast<Index>(cols.size()) > m) return false;
        Matrix sub(m, static_cast<Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = a.col(cols[c]);
        try {
            const LeastSquares ls = householder_least_squares(sub, b, 1e-14);
            for (std::size_t c = 0; c < cols.size(); ++c) s(cols[c]) = ls.x(static_cast<Index>(c));
        } catch (const NumericalError&) {
            return false;
        }
        return true;
    };

    NonnegativeLeastSquares out;
    for (int outer = 0; outer < max_iterations; ++outer) {
        const Vector gradient = a.transpose() * (b - a * x);
        Index entering = -1;
        double best = tolerance;
        for (Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && gradient(j) > best) {
                best = gradient(j);
                entering = j;
            }
        }
        if (entering < 0) break;
        passive[static_cast<std::size_t>(entering)] = true;
        ++out.iterations;

        Vector s;
        if (!solve_passive(s)) {
            passive[static_cast<std::size_t>(entering)] = false;
            break;
        }
        for (int inner = 0; inner < max_iterations; ++inner) {
            double min_passive = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)]) min_passive = std::min(min_passive, s(j));
            if (min_passive > 0.0) break;

            double step = 1.0;
            for (Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
                    step = std::min(step, x(j) / (x(j) - s(j)));
                }
            }
            x += step * (s - x);
            for (Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tolerance) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
            }
            if (!solve_passive(s)) break;
        }
        x = s;
    }
    out.x = x;
    out.residual_norm = (a * x - b).norm();
    return out;
}

} // namespace linalg
} // namespace quadkit
