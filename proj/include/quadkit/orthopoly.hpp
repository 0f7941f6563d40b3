#pragma once

#include "quadkit/error.hpp"
#include "quadkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadkit {

enum class Family { legendre, hermite, chebyshev1, jacobi, custom };

inline std::string_view to_string(Family f)
{
    switch (f) {
    case Family::legendre: return "legendre";
    case Family::hermite: return "hermite";
    case Family::chebyshev1: return "chebyshev1";
    case Family::jacobi: return "jacobi";
    case Family::custom: return "custom";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name)
{
    if (name == "legendre" || name == "uniform") return Family::legendre;
    if (name == "hermite" || name == "gaussian" || name == "normal") return Family::hermite;
    if (name == "chebyshev1" || name == "chebyshev" || name == "arcsine") return Family::chebyshev1;
    if (name == "jacobi" || name == "beta") return Family::jacobi;
    if (name == "custom") return Family::custom;
    throw InvalidArgument("unsupported family '" + std::string(name) + "'");
}

/// A univariate probability density with unit mass. Jacobi densities are
/// proportional to (1-x)^a (1+x)^b on [-1, 1].
struct Distribution {
    Family family = Family::legendre;
    double a = 0.0;
    double b = 0.0;

    bool bounded() const { return family != Family::hermite; }
    friend bool operator==(const Distribution&, const Distribution&) = default;
};

/// Three-term recurrence for the orthonormal family of one density:
///   sqrt(beta[k+1]) psi_{k+1}(x) = (x - alpha[k]) psi_k(x) - sqrt(beta[k]) psi_{k-1}(x),
/// with psi_0 = 1 / sqrt(beta[0]). beta[0] is the total mass.
struct RecurrenceTable {
    Distribution distribution;
    std::vector<double> alpha;
    std::vector<double> beta;
    double support_lower = -1.0;
    double support_upper = 1.0;

    std::size_t size() const { return alpha.size(); }
    Family family() const { return distribution.family; }
    bool symmetric() const
    {
        return std::all_of(alpha.begin(), alpha.end(), [](double v) { return v == 0.0; });
    }
};

/// Closed-form recurrence coefficients of the orthonormal family for
/// `distribution`, under the unit-mass convention (beta[0] = 1).
inline RecurrenceTable recurrence_coefficients(const Distribution& distribution, std::size_t count)
{
    require(count >= 1, "recurrence_coefficients: count must be positive");
    RecurrenceTable t;
    t.distribution = distribution;
    t.alpha.assign(count, 0.0);
    t.beta.assign(count, 1.0);

    switch (distribution.family) {
    case Family::legendre:
        for (std::size_t k = 1; k < count; ++k) {
            const double kk = static_cast<double>(k * k);
            t.beta[k] = kk / (4.0 * kk - 1.0);
        }
        break;
    case Family::hermite:
        for (std::size_t k = 1; k < count; ++k) t.beta[k] = static_cast<double>(k);
        t.support_lower = -std::numeric_limits<double>::infinity();
        t.support_upper = std::numeric_limits<double>::infinity();
        break;
    case Family::chebyshev1:
        for (std::size_t k = 1; k < count; ++k) t.beta[k] = k == 1 ? 0.5 : 0.25;
        break;
    case Family::jacobi: {
        const double a = distribution.a;
        const double b = distribution.b;
        require(a > -1.0 && b > -1.0, "recurrence_coefficients: jacobi parameters must exceed -1");
        const double ab = a + b;
        t.alpha[0] = (b - a) / (ab + 2.0);
        for (std::size_t k = 1; k < count; ++k) {
            const double n = static_cast<double>(k);
            const double s = 2.0 * n + ab;
            t.alpha[k] = (b * b - a * a) / (s * (s + 2.0));
            if (k == 1) {
                t.beta[k] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
            } else {
                t.beta[k] = 4.0 * n * (n + a) * (n + b) * (n + ab) / (s * s * (s + 1.0) * (s - 1.0));
            }
        }
        break;
    }
    case Family::custom:
        throw InvalidArgument("recurrence_coefficients: custom densities need stieltjes_discretized");
    }
    return t;
}

/// Values of psi_0..psi_max_degree at each point (rows = points).
inline Matrix evaluate_orthonormal(const RecurrenceTable& table, std::size_t max_degree,
                                   std::span<const double> points)
{
    if (max_degree >= table.size()) {
        throw InvalidArgument("evaluate_orthonormal: degree " + std::to_string(max_degree) +
                              " needs " + std::to_string(max_degree + 1) + " recurrence pairs, table has " +
                              std::to_string(table.size()));
    }
    const auto rows = static_cast<Index>(points.size());
    const auto cols = static_cast<Index>(max_degree + 1);
    Matrix out(rows, cols);
    const double psi0 = 1.0 / std::sqrt(table.beta[0]);
    for (Index i = 0; i < rows; ++i) {
        const double x = points[static_cast<std::size_t>(i)];
        double previous = 0.0;
        double current = psi0;
        out(i, 0) = current;
        for (Index k = 0; k + 1 < cols; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const double next =
                ((x - table.alpha[uk]) * current - std::sqrt(table.beta[uk]) * previous) /
                std::sqrt(table.beta[uk + 1]);
            previous = current;
            current = next;
            out(i, k + 1) = current;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Multi-index sets

enum class IndexKind { total_order, tensor_order, hyperbolic_cross, hyperbolic_q };

inline std::string_view to_string(IndexKind k)
{
    switch (k) {
    case IndexKind::total_order: return "total_order";
    case IndexKind::tensor_order: return "tensor_order";
    case IndexKind::hyperbolic_cross: return "hyperbolic_cross";
    case IndexKind::hyperbolic_q: return "hyperbolic_q";
    }
    return "unknown";
}

inline IndexKind parse_index_kind(std::string_view name)
{
    if (name == "total_order" || name == "total") return IndexKind::total_order;
    if (name == "tensor_order" || name == "tensor") return IndexKind::tensor_order;
    if (name == "hyperbolic_cross" || name == "hyperbolic-cross") return IndexKind::hyperbolic_cross;
    if (name == "hyperbolic_q" || name == "hyperbolic") return IndexKind::hyperbolic_q;
    throw InvalidArgument("unsupported index set kind '" + std::string(name) + "'");
}

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& p) { return std::accumulate(p.begin(), p.end(), 0); }

/// Graded lexicographic order: total degree first, then lexicographic.
inline bool graded_lex_less(const MultiIndex& p, const MultiIndex& q)
{
    const int dp = total_degree(p);
    const int dq = total_degree(q);
    if (dp != dq) return dp < dq;
    return p < q;
}

struct MultiIndexSet {
    int dim = 1;
    IndexKind kind = IndexKind::total_order;
    int order = 0;
    double q = 1.0;
    std::vector<MultiIndex> indices;

    std::size_t size() const { return indices.size(); }

    /// Largest degree used along dimension `k`.
    int max_degree(int k) const
    {
        int m = 0;
        for (const auto& p : indices) m = std::max(m, p[static_cast<std::size_t>(k)]);
        return m;
    }

    /// Position of `p` in the set, or -1.
    Index find(const MultiIndex& p) const
    {
        const auto it = std::lower_bound(indices.begin(), indices.end(), p, graded_lex_less);
        if (it != indices.end() && *it == p) return static_cast<Index>(it - indices.begin());
        return -1;
    }
};

namespace detail {

template <class Accept>
void enumerate_indices(int dim, int order, MultiIndex& current, int position, Accept&& accept,
                       std::vector<MultiIndex>& out, std::uint64_t cap)
{
    if (position == dim) {
        out.push_back(current);
        if (out.size() > cap) {
            throw CapExceeded("multi_index_set: more than " + std::to_string(cap) + " indices");
        }
        return;
    }
    for (int v = 0; v <= order; ++v) {
        current[static_cast<std::size_t>(position)] = v;
        // every admissibility rule here is monotone in each coordinate
        if (!accept(current, position)) break;
        enumerate_indices(dim, order, current, position + 1, accept, out, cap);
    }
    current[static_cast<std::size_t>(position)] = 0;
}

} // namespace detail

/// Builds the multi-index set of the given kind in graded lexicographic order.
///   total_order       sum p_i <= k
///   tensor_order      max p_i <= k
///   hyperbolic_cross  prod (p_i + 1) <= k + 1
///   hyperbolic_q      (sum p_i^q)^(1/q) <= k, 0 < q <= 1
inline MultiIndexSet multi_index_set(IndexKind kind, int dim, int order, double q = 1.0)
{
    require(dim >= 1, "multi_index_set: dimension must be positive");
    require(order >= 0, "multi_index_set: order must be nonnegative");
    if (kind == IndexKind::hyperbolic_q) {
        require(q > 0.0 && q <= 1.0, "multi_index_set: q must lie in (0, 1]");
    }
    const std::uint64_t cap = size_cap();
    if (kind == IndexKind::tensor_order) {
        double count = std::pow(static_cast<double>(order) + 1.0, dim);
        if (count > static_cast<double>(cap)) {
            throw CapExceeded("multi_index_set: (k+1)^d = " + std::to_string(count) + " exceeds cap " +
                              std::to_string(cap));
        }
    }

    MultiIndexSet set;
    set.dim = dim;
    set.kind = kind;
    set.order = order;
    set.q = kind == IndexKind::hyperbolic_q ? q : 1.0;

    MultiIndex current(static_cast<std::size_t>(dim), 0);
    const double qk = std::pow(static_cast<double>(order), q) * (1.0 + 1e-12);

    auto accept = [&](const MultiIndex& p, int position) {
        const auto upto = p.begin() + position + 1;
        switch (kind) {
        case IndexKind::total_order: return std::accumulate(p.begin(), upto, 0) <= order;
        case IndexKind::tensor_order: return true;
        case IndexKind::hyperbolic_cross: {
            long long prod = 1;
            for (auto it = p.begin(); it != upto; ++it) prod *= (*it + 1);
            return prod <= static_cast<long long>(order) + 1;
        }
        case IndexKind::hyperbolic_q: {
            double s = 0.0;
            for (auto it = p.begin(); it != upto; ++it) s += *it > 0 ? std::pow(static_cast<double>(*it), q) : 0.0;
            return s <= qk;
        }
        }
        return false;
    };
    detail::enumerate_indices(dim, order, current, 0, accept, set.indices, cap);
    std::sort(set.indices.begin(), set.indices.end(), graded_lex_less);
    return set;
}

/// Psi matrix (rows = points, columns = basis functions), without weights.
/// `points` holds one d-dimensional point per row.
inline Matrix evaluate_basis(const MultiIndexSet& basis, std::span<const RecurrenceTable> recurrences,
                             const Matrix& points)
{
    const int d = basis.dim;
    if (points.cols() != d) {
        throw InvalidArgument("evaluate_basis: points have dimension " + std::to_string(points.cols()) +
                              ", basis has " + std::to_string(d));
    }
    if (static_cast<int>(recurrences.size()) != d) {
        throw InvalidArgument("evaluate_basis: need one recurrence table per dimension");
    }
    const Index m = points.rows();
    std::vector<Matrix> univariate;
    univariate.reserve(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const std::vector<double> column(points.col(k).begin(), points.col(k).end());
        univariate.push_back(evaluate_orthonormal(recurrences[static_cast<std::size_t>(k)],
                                                  static_cast<std::size_t>(basis.max_degree(k)), column));
    }
    Matrix psi(m, static_cast<Index>(basis.size()));
    for (Index j = 0; j < psi.cols(); ++j) {
        const MultiIndex& p = basis.indices[static_cast<std::size_t>(j)];
        for (Index i = 0; i < m; ++i) {
            double v = 1.0;
            for (int k = 0; k < d; ++k) v *= univariate[static_cast<std::size_t>(k)](i, p[static_cast<std::size_t>(k)]);
            psi(i, j) = v;
        }
    }
    return psi;
}

/// The weighted Vandermonde-type matrix A(i, j) = psi_j(zeta_i) sqrt(w_i).
struct DesignMatrix {
    Matrix entries;
    Matrix points;
    Vector weights;
    MultiIndexSet basis;
    std::vector<RecurrenceTable> recurrences;
    bool weights_renormalized = false;

    Index rows() const { return entries.rows(); }
    Index cols() const { return entries.cols(); }
};

inline DesignMatrix design_matrix(const MultiIndexSet& basis, std::vector<RecurrenceTable> recurrences,
                                  const Matrix& points, const Vector& weights)
{
    require(points.rows() == weights.size(), "design_matrix: point and weight counts differ");
    require(points.rows() >= 1, "design_matrix: no points");
    for (Index i = 0; i < weights.size(); ++i) {
        if (!(weights(i) > 0.0)) {
            throw InvalidArgument("design_matrix: weight " + std::to_string(i) + " is not positive");
        }
    }
    DesignMatrix a;
    a.basis = basis;
    a.recurrences = std::move(recurrences);
    a.points = points;
    a.weights = weights;
    const double total = weights.sum();
    if (std::abs(total - 1.0) > 1e-14) {
        a.weights /= total;
        a.weights_renormalized = true;
    }
    a.entries = evaluate_basis(a.basis, a.recurrences, a.points);
    for (Index i = 0; i < a.entries.rows(); ++i) a.entries.row(i) *= std::sqrt(a.weights(i));
    return a;
}

/// One recurrence table per dimension, long enough for every degree in `basis`.
inline std::vector<RecurrenceTable> recurrences_for(const MultiIndexSet& basis,
                                                    std::span<const Distribution> distributions)
{
    require(static_cast<int>(distributions.size()) == basis.dim,
            "recurrences_for: need one distribution per dimension");
    std::vector<RecurrenceTable> out;
    for (int k = 0; k < basis.dim; ++k) {
        out.push_back(recurrence_coefficients(distributions[static_cast<std::size_t>(k)],
                                              static_cast<std::size_t>(basis.max_degree(k)) + 1));
    }
    return out;
}

inline std::vector<RecurrenceTable> recurrences_for(const MultiIndexSet& basis, const Distribution& distribution)
{
    const std::vector<Distribution> all(static_cast<std::size_t>(basis.dim), distribution);
    return recurrences_for(basis, all);
}

} // namespace quadkit
