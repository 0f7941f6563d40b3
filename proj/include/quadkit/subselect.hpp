#pragma once

#include "quadkit/error.hpp"
#include "quadkit/linalg.hpp"
#include "quadkit/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadkit {

enum class Strategy { qr, lu, svd, newton, greedy };

inline std::string_view to_string(Strategy s)
{
    switch (s) {
    case Strategy::qr: return "qr";
    case Strategy::lu: return "lu";
    case Strategy::svd: return "svd";
    case Strategy::newton: return "newton";
    case Strategy::greedy: return "greedy";
    }
    return "unknown";
}

inline Strategy parse_strategy(std::string_view s)
{
    for (auto v : {Strategy::qr, Strategy::lu, Strategy::svd, Strategy::newton, Strategy::greedy}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidArgument("unknown subselection strategy '" + std::string(s) + "'");
}

/// Scalar diagnostics keyed by name: condition_number, log_det and
/// iterations are always present, the rest depend on the strategy.
using ObjectiveReport = std::map<std::string, double>;

struct Selection {
    Strategy strategy = Strategy::qr;
    std::vector<Index> row_indices; // ascending
    std::optional<Vector> z_relaxed;
    Vector renormalized_weights;
    ObjectiveReport objective_report;

    Index size() const { return static_cast<Index>(row_indices.size()); }
};

/// Rows `rows` of `a`, in the given order.
inline Matrix take_rows(const Matrix& a, std::span<const Index> rows)
{
    Matrix out(static_cast<Index>(rows.size()), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = a.row(rows[i]);
    return out;
}

/// log det(B^T B) for a matrix with at least as many rows as columns;
/// -infinity when B^T B is numerically singular.
inline double gram_log_det(const Matrix& b)
{
    if (b.rows() < b.cols()) return -std::numeric_limits<double>::infinity();
    try {
        const Matrix l = linalg::cholesky(b.transpose() * b);
        return 2.0 * l.diagonal().array().log().sum();
    } catch (const NumericalError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

inline double condition_number_of(const Matrix& b)
{
    const linalg::SingularValueDecomposition svd = linalg::jacobi_svd(b);
    const Index r = svd.singular_values.size();
    if (r == 0) return std::numeric_limits<double>::infinity();
    const double smallest = svd.singular_values(r - 1);
    if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
    return svd.singular_values(0) / smallest;
}

namespace detail {

inline void check_k(const DesignMatrix& a, Index k, std::string_view who)
{
    if (k < a.cols() || k > a.rows()) {
        throw InvalidArgument(std::string(who) + ": need n <= k <= m, got k = " + std::to_string(k) +
                              " with n = " + std::to_string(a.cols()) + ", m = " + std::to_string(a.rows()));
    }
}

inline Selection finish(const DesignMatrix& a, std::vector<Index> rows, Strategy strategy, ObjectiveReport report)
{
    std::sort(rows.begin(), rows.end());
    Selection s;
    s.strategy = strategy;
    s.row_indices = std::move(rows);
    s.renormalized_weights.resize(s.size());
    for (Index i = 0; i < s.size(); ++i) s.renormalized_weights(i) = a.weights(s.row_indices[static_cast<std::size_t>(i)]);
    s.renormalized_weights /= s.renormalized_weights.sum();
    const Matrix sub = take_rows(a.entries, s.row_indices);
    report["condition_number"] = condition_number_of(sub);
    report["log_det"] = gram_log_det(sub);
    report.try_emplace("iterations", 0.0);
    s.objective_report = std::move(report);
    return s;
}

inline std::vector<Index> identity_rows(Index m)
{
    std::vector<Index> rows(static_cast<std::size_t>(m));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
}

// Repeated pivoting passes over the rows not yet chosen until k rows are
// picked. Each pass contributes at most n rows.
template <class Pass>
std::vector<Index> multi_pass(const DesignMatrix& a, Index k, Pass&& pass, std::string_view who)
{
    std::vector<Index> chosen;
    std::vector<Index> remaining = identity_rows(a.rows());
    bool first = true;
    while (static_cast<Index>(chosen.size()) < k) {
        const Index want = std::min(a.cols(), k - static_cast<Index>(chosen.size()));
        const Matrix sub = take_rows(a.entries, remaining);
        const std::vector<Index> picked = pass(sub, want, first);
        if (first && static_cast<Index>(picked.size()) < a.cols()) {
            throw NumericalError(std::string(who) + ": rank deficiency, only " + std::to_string(picked.size()) +
                                 " independent rows of " + std::to_string(a.cols()));
        }
        if (picked.empty()) {
            // remaining rows are numerically zero; take them in index order
            for (Index i = 0; i < want; ++i) chosen.push_back(remaining[static_cast<std::size_t>(i)]);
            remaining.erase(remaining.begin(), remaining.begin() + want);
            continue;
        }
        std::vector<bool> taken(remaining.size(), false);
        for (Index p : picked) {
            chosen.push_back(remaining[static_cast<std::size_t>(p)]);
            taken[static_cast<std::size_t>(p)] = true;
        }
        std::vector<Index> next;
        for (std::size_t i = 0; i < remaining.size(); ++i)
            if (!taken[i]) next.push_back(remaining[i]);
        remaining = std::move(next);
        first = false;
    }
    return chosen;
}

} // namespace detail

/// Rows picked by Householder QR with column pivoting on A^T. The report
/// carries pivot_constant = max |R1^{-1} R2| of the first pass.
inline Selection qr_subselect(const DesignMatrix& a, Index k)
{
    detail::check_k(a, k, "qr_subselect");
    const Index n = a.cols();
    double pivot_constant = 0.0;
    auto pass = [&](const Matrix& sub, Index want, bool first) {
        const linalg::PivotedQR f = linalg::pivoted_qr(sub.transpose(), first ? n : want);
        if (first && f.steps == n && sub.rows() > n) {
            const Matrix r1 = f.r.topLeftCorner(n, n).triangularView<Eigen::Upper>();
            const Matrix t = r1.triangularView<Eigen::Upper>().solve(f.r.topRightCorner(n, sub.rows() - n));
            pivot_constant = t.cwiseAbs().maxCoeff();
        }
        const Index take = std::min(want, f.steps);
        return std::vector<Index>(f.permutation.begin(), f.permutation.begin() + take);
    };
    std::vector<Index> rows = detail::multi_pass(a, k, pass, "qr_subselect");
    return detail::finish(a, std::move(rows), Strategy::qr, {{"pivot_constant", pivot_constant}});
}

/// Rows picked by Gaussian elimination with partial pivoting on A.
inline Selection lu_subselect(const DesignMatrix& a, Index k)
{
    detail::check_k(a, k, "lu_subselect");
    auto pass = [&](const Matrix& sub, Index want, bool first) {
        const linalg::RowPivotedLU f = linalg::lu_row_pivoting(sub, first ? a.cols() : want);
        const Index take = std::min(want, f.steps);
        return std::vector<Index>(f.row_order.begin(), f.row_order.begin() + take);
    };
    std::vector<Index> rows = detail::multi_pass(a, k, pass, "lu_subselect");
    return detail::finish(a, std::move(rows), Strategy::lu, {});
}

/// Classical subset selection: pivoted QR on the transposed left singular
/// vectors of A. Only k = n.
inline Selection svd_subselect(const DesignMatrix& a, Index k)
{
    const Index n = a.cols();
    if (k != n) {
        throw InvalidArgument("svd_subselect: k must equal n = " + std::to_string(n) + ", got " + std::to_string(k));
    }
    detail::check_k(a, k, "svd_subselect");
    const linalg::SingularValueDecomposition svd = linalg::jacobi_svd(a.entries);
    if (!(svd.singular_values(n - 1) > 1e-13 * svd.singular_values(0))) {
        throw NumericalError("svd_subselect: A is rank deficient");
    }
    const linalg::PivotedQR f = linalg::pivoted_qr(svd.u.transpose(), n);
    if (f.steps < n) throw NumericalError("svd_subselect: rank deficiency in the singular vectors");
    std::vector<Index> rows(f.permutation.begin(), f.permutation.begin() + n);
    return detail::finish(a, std::move(rows), Strategy::svd, {{"sweeps", static_cast<double>(svd.sweeps)}});
}

// ---------------------------------------------------------------------------

/// Tracks G = B^T B and its inverse for a row set B so that the determinant
/// change of inserting, removing or swapping rows is O(n^2).
class DeterminantTracker {
public:
    explicit DeterminantTracker(const Matrix& rows)
    {
        const Matrix g = rows.transpose() * rows;
        const Matrix l = linalg::cholesky(g); // throws on a singular start
        log_det_ = 2.0 * l.diagonal().array().log().sum();
        inverse_ = l.transpose().triangularView<Eigen::Upper>().solve(
            Matrix(l.triangularView<Eigen::Lower>().solve(Matrix::Identity(g.rows(), g.cols()))));
    }

    double log_det() const { return log_det_; }
    const Matrix& inverse() const { return inverse_; }

    /// det(G + a a^T) / det(G)
    double insertion_ratio(const Vector& a) const { return 1.0 + a.dot(inverse_ * a); }

    /// det(G - b b^T) / det(G)
    double removal_ratio(const Vector& b) const { return 1.0 - b.dot(inverse_ * b); }

    /// det(G + a a^T - b b^T) / det(G)
    double swap_ratio(const Vector& add, const Vector& remove) const
    {
        const Vector ga = inverse_ * add;
        const Vector gb = inverse_ * remove;
        const double cross = add.dot(gb);
        return (1.0 + add.dot(ga)) * (1.0 - remove.dot(gb)) + cross * cross;
    }

    void insert(const Vector& a) { rank_one(a, 1.0); }
    void remove(const Vector& b) { rank_one(b, -1.0); }
    void swap(const Vector& add, const Vector& remove)
    {
        insert(add);
        this->remove(remove);
    }

private:
    void rank_one(const Vector& v, double sign)
    {
        const Vector gv = inverse_ * v;
        const double denom = 1.0 + sign * v.dot(gv);
        if (!(denom > 0.0)) throw NumericalError("DeterminantTracker: update makes the Gramian singular");
        log_det_ += std::log(denom);
        inverse_ -= (sign / denom) * gv * gv.transpose();
    }

    Matrix inverse_;
    double log_det_ = 0.0;
};

namespace detail {

// Best-improvement single swaps maximizing log det of the selected Gramian.
inline int refine_by_swaps(const Matrix& a, std::vector<Index>& rows, int max_swaps)
{
    const Index m = a.rows();
    std::vector<bool> in(static_cast<std::size_t>(m), false);
    for (Index r : rows) in[static_cast<std::size_t>(r)] = true;
    DeterminantTracker tracker(take_rows(a, rows));
    int swaps = 0;
    while (swaps < max_swaps) {
        const Matrix v = tracker.inverse() * a.transpose(); // n x m
        Vector self(m);
        for (Index i = 0; i < m; ++i) self(i) = a.row(i).dot(v.col(i));
        double best = 1.0 + 1e-10;
        Index best_out = -1;
        Index best_in = -1;
        for (std::size_t p = 0; p < rows.size(); ++p) {
            const Index out = rows[p];
            for (Index c = 0; c < m; ++c) {
                if (in[static_cast<std::size_t>(c)]) continue;
                const double cross = a.row(c).dot(v.col(out));
                const double ratio = (1.0 + self(c)) * (1.0 - self(out)) + cross * cross;
                if (ratio > best) {
                    best = ratio;
                    best_out = static_cast<Index>(p);
                    best_in = c;
                }
            }
        }
        if (best_out < 0) break;
        const Index out = rows[static_cast<std::size_t>(best_out)];
        tracker.swap(a.row(best_in).transpose(), a.row(out).transpose());
        in[static_cast<std::size_t>(out)] = false;
        in[static_cast<std::size_t>(best_in)] = true;
        rows[static_cast<std::size_t>(best_out)] = best_in;
        ++swaps;
    }
    return swaps;
}

} // namespace detail

struct NewtonOptions {
    double lambda = 1e-2;
    int max_iterations = 100;
    bool swap_refinement = true;
    int max_swaps = 1000;
};

/// Convex relaxation of D-optimal row selection solved by equality-constrained
/// Newton steps with backtracking:
///   minimize -log det(sum z_i a_i a_i^T) - lambda sum(log z_i + log(1 - z_i))
///   subject to 1^T z = k.
/// The relaxed z is rounded by descending value (skipping rows dependent on
/// those already taken until n are found) and then polished with
/// determinant-improving swaps.
inline Selection newton_subselect(const DesignMatrix& design, Index k, const NewtonOptions& options = {})
{
    detail::check_k(design, k, "newton_subselect");
    require(options.lambda > 0.0, "newton_subselect: lambda must be positive");
    const Matrix& a = design.entries;
    const Index m = a.rows();
    const Index n = a.cols();
    if (k == m) {
        Selection s = detail::finish(design, detail::identity_rows(m), Strategy::newton, {});
        s.z_relaxed = Vector::Ones(m);
        return s;
    }

    const double lambda = options.lambda;
    auto objective = [&](const Vector& z) {
        const double ld = gram_log_det(a.array().colwise() * z.array().sqrt());
        return -ld - lambda * ((z.array().log() + (1.0 - z.array()).log()).sum());
    };

    Vector z = Vector::Constant(m, static_cast<double>(k) / static_cast<double>(m));
    double f = objective(z);
    if (!std::isfinite(f)) throw NumericalError("newton_subselect: A is rank deficient");
    int iterations = 0;
    double decrement = std::numeric_limits<double>::infinity();
    const Vector ones = Vector::Ones(m);
    for (; iterations < options.max_iterations; ++iterations) {
        const Matrix w = a.transpose() * z.asDiagonal() * a;
        Matrix lw;
        try {
            lw = linalg::cholesky(w);
        } catch (const NumericalError&) {
            throw NumericalError("newton_subselect: Gramian factorization failed at iteration " +
                                 std::to_string(iterations));
        }
        const Matrix x = lw.triangularView<Eigen::Lower>().solve(Matrix(a.transpose())); // n x m
        const Matrix b = x.transpose() * x;
        const Vector g = -b.diagonal() - lambda * (z.cwiseInverse() - (ones - z).cwiseInverse());
        Matrix h = b.cwiseProduct(b);
        h.diagonal() += lambda * (z.cwiseInverse().cwiseAbs2() + (ones - z).cwiseInverse().cwiseAbs2());
        Matrix lh;
        try {
            lh = linalg::cholesky(h);
        } catch (const NumericalError&) {
            throw NumericalError("newton_subselect: Hessian factorization failed at iteration " +
                                 std::to_string(iterations));
        }
        const Vector hg = linalg::cholesky_solve(lh, g);
        const Vector h1 = linalg::cholesky_solve(lh, ones);
        const Vector dz = -hg + h1 * (ones.dot(hg) / ones.dot(h1));
        const double slope = g.dot(dz);
        decrement = std::sqrt(std::max(0.0, -slope));
        if (0.5 * decrement * decrement < 1e-8) break;

        double t = 1.0;
        while (((z + t * dz).array() <= 0.0).any() || ((z + t * dz).array() >= 1.0).any()) t *= 0.5;
        double trial = objective(z + t * dz);
        while (!(trial <= f + 0.01 * t * slope) && t > 1e-16) {
            t *= 0.5;
            trial = objective(z + t * dz);
        }
        if (!(trial <= f)) break;
        z += t * dz;
        f = trial;
    }

    // rounding
    std::vector<Index> order = detail::identity_rows(m);
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) { return z(p) > z(q); });
    std::vector<Index> rows;
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    Matrix basis(n, 0);
    const double row_scale = a.rowwise().norm().maxCoeff();
    for (Index r : order) {
        if (static_cast<Index>(rows.size()) == n) break;
        Vector v = a.row(r).transpose();
        for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
        if (v.norm() > 1e-10 * row_scale) {
            basis.conservativeResize(n, basis.cols() + 1);
            basis.col(basis.cols() - 1) = v.normalized();
            rows.push_back(r);
            used[static_cast<std::size_t>(r)] = true;
        }
    }
    if (static_cast<Index>(rows.size()) < n) throw NumericalError("newton_subselect: rank deficiency in rounding");
    for (Index r : order) {
        if (static_cast<Index>(rows.size()) == k) break;
        if (!used[static_cast<std::size_t>(r)]) rows.push_back(r);
    }
    int swaps = 0;
    if (options.swap_refinement) swaps = detail::refine_by_swaps(a, rows, options.max_swaps);

    Selection s = detail::finish(design, std::move(rows), Strategy::newton,
                                 {{"iterations", static_cast<double>(iterations)},
                                  {"relaxed_objective", f},
                                  {"newton_decrement", decrement},
                                  {"lambda", lambda},
                                  {"swaps", static_cast<double>(swaps)}});
    s.z_relaxed = z;
    return s;
}

/// S-optimality objective (sqrt(det(B^T B)) / prod_j ||B(:, j)||)^(1/k) in log form.
inline double s_optimality_log(const Matrix& b)
{
    const double ld = gram_log_det(b);
    if (!std::isfinite(ld)) return ld;
    const double cols = b.colwise().squaredNorm().array().log().sum();
    return 0.5 * (ld - cols) / static_cast<double>(b.rows());
}

/// Greedy S-optimal row addition starting from `seed_rows` (default: the
/// rows of qr_subselect with k = n). Candidates are scored with
/// determinant-lemma updates of the tracked Gramian inverse.
inline Selection greedy_det_subselect(const DesignMatrix& design, Index k,
                                      std::optional<std::vector<Index>> seed_rows = std::nullopt)
{
    detail::check_k(design, k, "greedy_det_subselect");
    const Matrix& a = design.entries;
    const Index m = a.rows();
    std::vector<Index> rows = seed_rows ? *seed_rows : qr_subselect(design, design.cols()).row_indices;
    std::vector<bool> in(static_cast<std::size_t>(m), false);
    for (Index r : rows) {
        require(r >= 0 && r < m, "greedy_det_subselect: seed row out of range");
        require(!in[static_cast<std::size_t>(r)], "greedy_det_subselect: duplicate seed row");
        in[static_cast<std::size_t>(r)] = true;
    }
    require(static_cast<Index>(rows.size()) <= k, "greedy_det_subselect: more seed rows than k");

    std::optional<DeterminantTracker> tracker;
    try {
        tracker.emplace(take_rows(a, rows));
    } catch (const NumericalError&) {
        throw NumericalError("greedy_det_subselect: singular starting Gramian");
    }
    Vector column_sq = take_rows(a, rows).colwise().squaredNorm().transpose();

    int added = 0;
    while (static_cast<Index>(rows.size()) < k) {
        double best = -std::numeric_limits<double>::infinity();
        Index pick = -1;
        for (Index c = 0; c < m; ++c) {
            if (in[static_cast<std::size_t>(c)]) continue;
            const Vector row = a.row(c).transpose();
            const double score = std::log(tracker->insertion_ratio(row)) -
                                 (column_sq + row.cwiseAbs2()).array().log().sum();
            if (score > best) {
                best = score;
                pick = c;
            }
        }
        const Vector row = a.row(pick).transpose();
        tracker->insert(row);
        column_sq += row.cwiseAbs2();
        rows.push_back(pick);
        in[static_cast<std::size_t>(pick)] = true;
        ++added;
    }
    const Matrix sub = take_rows(a, rows);
    return detail::finish(design, std::move(rows), Strategy::greedy,
                          {{"iterations", static_cast<double>(added)}, {"s_objective", s_optimality_log(sub)}});
}

inline Selection subselect(const DesignMatrix& a, Strategy strategy, Index k, const NewtonOptions& options = {})
{
    switch (strategy) {
    case Strategy::qr: return qr_subselect(a, k);
    case Strategy::lu: return lu_subselect(a, k);
    case Strategy::svd: return svd_subselect(a, k);
    case Strategy::newton: return newton_subselect(a, k, options);
    case Strategy::greedy: return greedy_det_subselect(a, k);
    }
    throw InvalidArgument("subselect: unknown strategy");
}

// ---------------------------------------------------------------------------

struct MomentWeights {
    Vector weights;
    Vector moment_residual; // P w - e
    double residual_norm = 0.0;
    bool exact = true;
    std::string status; // "exact" or "inexact rule"
    int iterations = 0;
};

/// Nonnegative weights matching the moments e (default e = [1, 0, ..., 0])
/// of the basis: minimize ||P w - e|| with P(i, j) = psi_i(zeta_j), w >= 0.
inline MomentWeights nnls_weights(const Matrix& points, const MultiIndexSet& basis,
                                  std::span<const RecurrenceTable> recurrences,
                                  std::optional<Vector> moments = std::nullopt, double threshold = 1e-8)
{
    const Matrix p = evaluate_basis(basis, recurrences, points).transpose();
    Vector e = Vector::Zero(p.rows());
    if (moments) {
        require(moments->size() == p.rows(), "nnls_weights: moment vector length mismatch");
        e = *moments;
    } else {
        require(basis.find(MultiIndex(static_cast<std::size_t>(basis.dim), 0)) == 0,
                "nnls_weights: basis must start with the zero index");
        e(0) = 1.0;
    }
    const linalg::NonnegativeLeastSquares sol = linalg::nnls(p, e);
    MomentWeights out;
    out.weights = sol.x;
    out.moment_residual = p * sol.x - e;
    out.residual_norm = out.moment_residual.norm();
    out.exact = out.residual_norm <= threshold;
    out.status = out.exact ? "exact" : "inexact rule";
    out.iterations = sol.iterations;
    return out;
}

} // namespace quadkit
