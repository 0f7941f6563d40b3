#pragma once

#include "quadkit/error.hpp"
#include "quadkit/linalg.hpp"
#include "quadkit/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadkit {

enum class Provenance { gauss, lobatto, clenshaw_curtis, tensor, sparse, sampled, subselected };

inline std::string_view to_string(Provenance p)
{
    switch (p) {
    case Provenance::gauss: return "gauss";
    case Provenance::lobatto: return "lobatto";
    case Provenance::clenshaw_curtis: return "clenshaw_curtis";
    case Provenance::tensor: return "tensor";
    case Provenance::sparse: return "sparse";
    case Provenance::sampled: return "sampled";
    case Provenance::subselected: return "subselected";
    }
    return "unknown";
}

inline Provenance parse_provenance(std::string_view s)
{
    for (auto p : {Provenance::gauss, Provenance::lobatto, Provenance::clenshaw_curtis, Provenance::tensor,
                   Provenance::sparse, Provenance::sampled, Provenance::subselected}) {
        if (to_string(p) == s) return p;
    }
    throw InvalidArgument("unknown provenance '" + std::string(s) + "'");
}

/// Points (one per row) and weights of a d-dimensional rule. Weights are
/// positive and sum to one, except sparse rules flagged with
/// `has_negative_weights`.
struct QuadratureRule {
    Matrix points;
    Vector weights;
    Provenance provenance = Provenance::gauss;
    bool has_negative_weights = false;
    std::map<std::string, std::string> metadata;

    Index size() const { return points.rows(); }
    int dim() const { return static_cast<int>(points.cols()); }

    double integrate(const Vector& values) const
    {
        require(values.size() == weights.size(), "QuadratureRule::integrate: value count mismatch");
        return weights.dot(values);
    }

    template <class F>
    double integrate_function(F&& f) const
    {
        double sum = 0.0;
        for (Index i = 0; i < size(); ++i) sum += weights(i) * f(Vector(points.row(i).transpose()));
        return sum;
    }
};

namespace detail {

inline QuadratureRule univariate_rule(std::vector<double> nodes, std::vector<double> weights, Provenance provenance)
{
    QuadratureRule rule;
    const auto m = static_cast<Index>(nodes.size());
    rule.points.resize(m, 1);
    rule.weights.resize(m);
    double total = 0.0;
    for (double w : weights) total += w;
    for (Index i = 0; i < m; ++i) {
        rule.points(i, 0) = nodes[static_cast<std::size_t>(i)];
        rule.weights(i) = weights[static_cast<std::size_t>(i)] / total;
    }
    rule.provenance = provenance;
    return rule;
}

// Enforce exact mirror symmetry about 0 for symmetric densities.
inline void symmetrize(std::vector<double>& nodes, std::vector<double>& weights)
{
    const std::size_t m = nodes.size();
    for (std::size_t i = 0; i < m / 2; ++i) {
        const std::size_t j = m - 1 - i;
        const double x = 0.5 * (nodes[j] - nodes[i]);
        const double w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = weights[j] = w;
    }
    if (m % 2 == 1) nodes[m / 2] = 0.0;
}

inline QuadratureRule rule_from_jacobi_matrix(const Vector& diagonal, const Vector& offdiagonal, double mass,
                                              bool symmetric, Provenance provenance)
{
    const linalg::SymmetricEigen eig = linalg::tridiagonal_eigen(diagonal, offdiagonal);
    const auto m = static_cast<std::size_t>(diagonal.size());
    std::vector<double> nodes(m);
    std::vector<double> weights(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto ii = static_cast<Index>(i);
        nodes[i] = eig.values(ii);
        weights[i] = mass * eig.vectors(0, ii) * eig.vectors(0, ii);
    }
    if (symmetric) symmetrize(nodes, weights);
    return univariate_rule(std::move(nodes), std::move(weights), provenance);
}

} // namespace detail

/// m-point Gauss rule from the eigen-decomposition of the Jacobi matrix.
inline QuadratureRule golub_welsch(const RecurrenceTable& table, std::size_t m)
{
    require(m >= 1, "golub_welsch: need at least one point");
    if (m > table.size()) {
        throw InvalidArgument("golub_welsch: " + std::to_string(m) + " points need " + std::to_string(m) +
                              " recurrence pairs, table has " + std::to_string(table.size()));
    }
    const auto n = static_cast<Index>(m);
    Vector diagonal(n);
    Vector offdiagonal(n - 1);
    for (Index i = 0; i < n; ++i) diagonal(i) = table.alpha[static_cast<std::size_t>(i)];
    for (Index i = 0; i + 1 < n; ++i) offdiagonal(i) = std::sqrt(table.beta[static_cast<std::size_t>(i + 1)]);
    return detail::rule_from_jacobi_matrix(diagonal, offdiagonal, table.beta[0], table.symmetric(),
                                           Provenance::gauss);
}

inline QuadratureRule gauss_rule(const Distribution& distribution, std::size_t m)
{
    return golub_welsch(recurrence_coefficients(distribution, m), m);
}

/// m-point Gauss-Lobatto rule with both support endpoints as nodes. The
/// last diagonal and off-diagonal entries of the (m x m) Jacobi matrix are
/// replaced so that the characteristic polynomial vanishes at both ends.
inline QuadratureRule gauss_lobatto(const RecurrenceTable& table, std::size_t m)
{
    require(m >= 2, "gauss_lobatto: need at least two points");
    if (!std::isfinite(table.support_lower) || !std::isfinite(table.support_upper)) {
        throw InvalidArgument("gauss_lobatto: density has unbounded support");
    }
    if (m - 1 > table.size()) {
        throw InvalidArgument("gauss_lobatto: " + std::to_string(m) + " points need " + std::to_string(m - 1) +
                              " recurrence pairs, table has " + std::to_string(table.size()));
    }
    const double lower = table.support_lower;
    const double upper = table.support_upper;
    const std::size_t n = m - 1;

    // ratio p_{n-1}(x) / p_n(x) of monic orthogonal polynomials
    auto ratio = [&](double x) {
        double r = 0.0;
        for (std::size_t k = 0; k < n; ++k) r = 1.0 / ((x - table.alpha[k]) - (k > 0 ? table.beta[k] * r : 0.0));
        return r;
    };
    const double ra = ratio(lower);
    const double rb = ratio(upper);
    const double beta_hat = (lower - upper) / (ra - rb);
    const double alpha_hat = lower - beta_hat * ra;
    if (!(beta_hat > 0.0)) throw NumericalError("gauss_lobatto: modified Jacobi matrix is not positive");

    const auto size = static_cast<Index>(m);
    Vector diagonal(size);
    Vector offdiagonal(size - 1);
    for (Index i = 0; i + 1 < size; ++i) diagonal(i) = table.alpha[static_cast<std::size_t>(i)];
    diagonal(size - 1) = alpha_hat;
    for (Index i = 0; i + 2 < size; ++i) offdiagonal(i) = std::sqrt(table.beta[static_cast<std::size_t>(i + 1)]);
    offdiagonal(size - 2) = std::sqrt(beta_hat);

    const bool symmetric = table.symmetric() && lower == -upper;
    QuadratureRule rule =
        detail::rule_from_jacobi_matrix(diagonal, offdiagonal, table.beta[0], symmetric, Provenance::lobatto);
    rule.points(0, 0) = lower;
    rule.points(size - 1, 0) = upper;
    return rule;
}

/// Clenshaw-Curtis rule on [-1, 1] for the uniform density (unit mass).
inline QuadratureRule clenshaw_curtis(std::size_t m)
{
    require(m >= 1, "clenshaw_curtis: need at least one point");
    if (m == 1) return detail::univariate_rule({0.0}, {1.0}, Provenance::clenshaw_curtis);
    const std::size_t n = m - 1;
    const double pi = std::numbers::pi;
    std::vector<double> nodes(m);
    std::vector<double> weights(m);
    for (std::size_t j = 0; j < m; ++j) {
        // -cos(pi j / n), written as a sine so the node set is exactly symmetric
        nodes[j] = std::sin(pi * (2.0 * static_cast<double>(j) - static_cast<double>(n)) / (2.0 * static_cast<double>(n)));
        double s = 0.0;
        for (std::size_t k = 1; k <= n / 2; ++k) {
            const double b = (2 * k == n) ? 1.0 : 2.0;
            const double kk = static_cast<double>(k);
            s += b / (4.0 * kk * kk - 1.0) * std::cos(2.0 * kk * static_cast<double>(j) * pi / static_cast<double>(n));
        }
        const double c = (j == 0 || j == n) ? 1.0 : 2.0;
        weights[j] = c / static_cast<double>(n) * (1.0 - s) / 2.0;
    }
    detail::symmetrize(nodes, weights);
    return detail::univariate_rule(std::move(nodes), std::move(weights), Provenance::clenshaw_curtis);
}

/// Recurrence coefficients of the discrete measure sum_i masses[i] delta(x - points[i]),
/// normalized to unit mass, by the Stieltjes procedure.
inline RecurrenceTable stieltjes_discretized(std::span<const double> points, std::span<const double> masses,
                                             std::size_t count)
{
    require(count >= 1, "stieltjes_discretized: count must be positive");
    require(points.size() == masses.size(), "stieltjes_discretized: point and mass counts differ");
    double total = 0.0;
    double lower = std::numeric_limits<double>::infinity();
    double upper = -std::numeric_limits<double>::infinity();
    double scale = 1.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        require(masses[i] >= 0.0, "stieltjes_discretized: negative density value");
        total += masses[i];
        if (masses[i] > 0.0) {
            lower = std::min(lower, points[i]);
            upper = std::max(upper, points[i]);
            scale = std::max(scale, points[i] * points[i]);
        }
    }
    if (!(total > 1e-300)) throw NumericalError("stieltjes_discretized: density has (near-)zero mass");

    const auto size = static_cast<Index>(points.size());
    const Eigen::Map<const Vector> x(points.data(), size);
    const Vector w = Eigen::Map<const Vector>(masses.data(), size) / total;

    RecurrenceTable t;
    t.distribution.family = Family::custom;
    t.alpha.assign(count, 0.0);
    t.beta.assign(count, 1.0);
    t.support_lower = lower;
    t.support_upper = upper;

    Vector previous = Vector::Zero(size);
    Vector current = Vector::Ones(size); // orthonormal in the discrete inner product
    for (std::size_t k = 0; k < count; ++k) {
        const Vector wc = w.cwiseProduct(current);
        t.alpha[k] = wc.dot(x.cwiseProduct(current));
        if (k + 1 == count) break;
        Vector next = (x.array() - t.alpha[k]).matrix().cwiseProduct(current) - std::sqrt(t.beta[k]) * previous;
        const double b = w.dot(next.cwiseProduct(next));
        if (!(b > 1e-12 * scale)) {
            throw NumericalError("stieltjes_discretized: positivity lost at beta[" + std::to_string(k + 1) + "]");
        }
        t.beta[k + 1] = b;
        previous = std::move(current);
        current = next / std::sqrt(b);
    }
    return t;
}

/// Cartesian product of univariate rules; the first factor varies slowest.
inline QuadratureRule tensor_grid(std::span<const QuadratureRule> rules)
{
    require(!rules.empty(), "tensor_grid: no factors");
    for (const auto& r : rules) require(r.dim() == 1, "tensor_grid: every factor must be univariate");
    if (rules.size() == 1) return rules[0];

    double count = 1.0;
    for (const auto& r : rules) count *= static_cast<double>(r.size());
    const std::uint64_t cap = size_cap();
    if (count > static_cast<double>(cap)) {
        throw CapExceeded("tensor_grid: " + std::to_string(count) + " points exceed cap " + std::to_string(cap));
    }
    const auto d = static_cast<Index>(rules.size());
    const auto m = static_cast<Index>(count);
    QuadratureRule out;
    out.provenance = Provenance::tensor;
    out.points.resize(m, d);
    out.weights.resize(m);
    std::vector<Index> digit(static_cast<std::size_t>(d), 0);
    for (Index i = 0; i < m; ++i) {
        double w = 1.0;
        for (Index k = 0; k < d; ++k) {
            const QuadratureRule& r = rules[static_cast<std::size_t>(k)];
            const Index j = digit[static_cast<std::size_t>(k)];
            out.points(i, k) = r.points(j, 0);
            w *= r.weights(j);
        }
        out.weights(i) = w;
        for (Index k = d - 1; k >= 0; --k) {
            auto& dk = digit[static_cast<std::size_t>(k)];
            if (++dk < rules[static_cast<std::size_t>(k)].size()) break;
            dk = 0;
        }
    }
    out.has_negative_weights =
        std::any_of(rules.begin(), rules.end(), [](const QuadratureRule& r) { return r.has_negative_weights; });
    return out;
}

inline QuadratureRule tensor_grid(std::initializer_list<QuadratureRule> rules)
{
    const std::vector<QuadratureRule> v(rules);
    return tensor_grid(std::span<const QuadratureRule>(v));
}

// ---------------------------------------------------------------------------
// Smolyak sparse grids

enum class Growth { linear, exponential };
enum class SparseBaseRule { gauss, clenshaw_curtis };

inline std::string_view to_string(Growth g) { return g == Growth::linear ? "linear" : "exponential"; }

inline Growth parse_growth(std::string_view s)
{
    if (s == "linear") return Growth::linear;
    if (s == "exponential") return Growth::exponential;
    throw InvalidArgument("unknown growth rule '" + std::string(s) + "'");
}

struct SparseGridSpec {
    int dim = 1;
    int level = 0;
    Growth growth = Growth::linear;
    bool merged = true;
    SparseBaseRule base_rule = SparseBaseRule::gauss;
};

/// Number of univariate points used for multi-index entry r (r >= 1).
///   linear:       r
///   exponential:  1 for r = 1, 2^(r-1) + 1 otherwise
inline std::size_t growth_points(Growth growth, int r)
{
    require(r >= 1, "growth_points: index entries start at 1");
    if (growth == Growth::linear) return static_cast<std::size_t>(r);
    if (r == 1) return 1;
    if (r > 40) throw CapExceeded("growth_points: exponential growth overflows at r = " + std::to_string(r));
    return (std::size_t{1} << (r - 1)) + 1;
}

inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(out);
}

/// Combination coefficient alpha(r) = (-1)^(l+d-|r|) C(d-1, l+d-|r|).
inline double combination_coefficient(int dim, int level, int norm_r)
{
    const int j = level + dim - norm_r;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    return sign * binomial(dim - 1, j);
}

struct SparseTerm {
    std::vector<int> r;
    double coefficient = 0.0;
};

/// Multi-indices r >= 1 with l+1 <= |r| <= l+d and their coefficients.
inline std::vector<SparseTerm> sparse_terms(int dim, int level)
{
    require(dim >= 1, "sparse_grid: dimension must be positive");
    require(level >= 0, "sparse_grid: level must be nonnegative");
    std::vector<SparseTerm> terms;
    std::vector<int> r(static_cast<std::size_t>(dim), 1);
    const int max_entry = level + 1;
    while (true) {
        const int s = std::accumulate(r.begin(), r.end(), 0);
        if (s >= level + 1 && s <= level + dim) terms.push_back({r, combination_coefficient(dim, level, s)});
        int k = dim - 1;
        while (k >= 0 && r[static_cast<std::size_t>(k)] == max_entry) {
            r[static_cast<std::size_t>(k)] = 1;
            --k;
        }
        if (k < 0) break;
        ++r[static_cast<std::size_t>(k)];
    }
    return terms;
}

/// Smolyak combination of anisotropic tensor grids. Coincident points
/// (componentwise within 1e-12) are merged by summing weights; merged
/// weights below 1e-14 in magnitude are dropped.
inline QuadratureRule sparse_grid(const SparseGridSpec& spec, std::span<const RecurrenceTable> tables)
{
    require(static_cast<int>(tables.size()) == spec.dim, "sparse_grid: need one recurrence table per dimension");
    const std::vector<SparseTerm> terms = sparse_terms(spec.dim, spec.level);

    // univariate rules, cached per (dimension, point count)
    std::vector<std::map<std::size_t, QuadratureRule>> cache(static_cast<std::size_t>(spec.dim));
    auto univariate = [&](int k, std::size_t m) -> const QuadratureRule& {
        auto& slot = cache[static_cast<std::size_t>(k)];
        auto it = slot.find(m);
        if (it == slot.end()) {
            const RecurrenceTable& t = tables[static_cast<std::size_t>(k)];
            QuadratureRule rule;
            if (spec.base_rule == SparseBaseRule::clenshaw_curtis) {
                require(t.family() == Family::legendre, "sparse_grid: Clenshaw-Curtis base needs a uniform density");
                rule = clenshaw_curtis(m);
            } else if (m <= t.size()) {
                rule = golub_welsch(t, m);
            } else if (t.family() != Family::custom) {
                rule = golub_welsch(recurrence_coefficients(t.distribution, m), m);
            } else {
                throw InvalidArgument("sparse_grid: recurrence table too short for " + std::to_string(m) + " points");
            }
            it = slot.emplace(m, std::move(rule)).first;
        }
        return it->second;
    };

    double raw_count = 0.0;
    for (const auto& term : terms) {
        double c = 1.0;
        for (int v : term.r) c *= static_cast<double>(growth_points(spec.growth, v));
        raw_count += c;
    }
    const std::uint64_t cap = size_cap();
    if (raw_count > static_cast<double>(cap)) {
        throw CapExceeded("sparse_grid: " + std::to_string(raw_count) + " tensor points exceed cap " +
                          std::to_string(cap));
    }

    std::vector<QuadratureRule> grids;
    grids.reserve(terms.size());
    for (const auto& term : terms) {
        std::vector<QuadratureRule> factors;
        for (int k = 0; k < spec.dim; ++k) {
            factors.push_back(univariate(k, growth_points(spec.growth, term.r[static_cast<std::size_t>(k)])));
        }
        grids.push_back(tensor_grid(std::span<const QuadratureRule>(factors)));
    }

    QuadratureRule out;
    out.provenance = Provenance::sparse;
    out.metadata["growth"] = std::string(to_string(spec.growth));
    out.metadata["growth_convention"] =
        spec.growth == Growth::linear ? "m(r) = r, r >= 1" : "m(1) = 1, m(r) = 2^(r-1) + 1 for r >= 2";
    out.metadata["index_set"] = "r >= 1, l+1 <= |r| <= l+d";
    out.metadata["level"] = std::to_string(spec.level);
    out.metadata["base_rule"] = spec.base_rule == SparseBaseRule::gauss ? "gauss" : "clenshaw_curtis";
    out.metadata["tensor_terms"] = std::to_string(terms.size());

    const auto d = static_cast<Index>(spec.dim);
    if (!spec.merged) {
        Index total = 0;
        for (const auto& g : grids) total += g.size();
        out.points.resize(total, d);
        out.weights.resize(total);
        Index row = 0;
        for (std::size_t t = 0; t < grids.size(); ++t) {
            out.points.middleRows(row, grids[t].size()) = grids[t].points;
            out.weights.segment(row, grids[t].size()) = terms[t].coefficient * grids[t].weights;
            row += grids[t].size();
        }
    } else {
        // canonical coordinate values per dimension
        std::vector<std::vector<double>> canon(static_cast<std::size_t>(spec.dim));
        for (int k = 0; k < spec.dim; ++k) {
            std::vector<double> values;
            for (const auto& [m, rule] : cache[static_cast<std::size_t>(k)]) {
                for (Index i = 0; i < rule.size(); ++i) values.push_back(rule.points(i, 0));
            }
            std::sort(values.begin(), values.end());
            auto& c = canon[static_cast<std::size_t>(k)];
            for (double v : values) {
                if (c.empty() || std::abs(v - c.back()) > 1e-12 * std::max(1.0, std::abs(v))) c.push_back(v);
            }
        }
        auto canonical_id = [&](int k, double v) {
            const auto& c = canon[static_cast<std::size_t>(k)];
            auto it = std::lower_bound(c.begin(), c.end(), v - 1e-12 * std::max(1.0, std::abs(v)));
            return static_cast<int>(it - c.begin());
        };

        std::map<std::vector<int>, double> merged;
        for (std::size_t t = 0; t < grids.size(); ++t) {
            const QuadratureRule& g = grids[t];
            for (Index i = 0; i < g.size(); ++i) {
                std::vector<int> key(static_cast<std::size_t>(spec.dim));
                for (int k = 0; k < spec.dim; ++k) key[static_cast<std::size_t>(k)] = canonical_id(k, g.points(i, k));
                merged[key] += terms[t].coefficient * g.weights(i);
            }
        }
        std::vector<std::pair<std::vector<int>, double>> kept;
        for (const auto& kv : merged) {
            if (std::abs(kv.second) >= 1e-14) kept.push_back(kv);
        }
        if (kept.empty()) throw NumericalError("sparse_grid: every weight cancelled");
        out.points.resize(static_cast<Index>(kept.size()), d);
        out.weights.resize(static_cast<Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) {
            for (int k = 0; k < spec.dim; ++k) {
                out.points(static_cast<Index>(i), k) =
                    canon[static_cast<std::size_t>(k)][static_cast<std::size_t>(kept[i].first[static_cast<std::size_t>(k)])];
            }
            out.weights(static_cast<Index>(i)) = kept[i].second;
        }
    }
    out.has_negative_weights = (out.weights.array() < 0.0).any();
    const double total = out.weights.sum();
    if (std::abs(total - 1.0) > 1e-12) {
        throw NumericalError("sparse_grid: combination weights sum to " + std::to_string(total));
    }
    out.metadata["unique_points"] = std::to_string(out.size());
    return out;
}

/// Discrete projection x_i = sum_j f(zeta_j) psi_i(zeta_j) w_j.
inline Vector pseudospectral_coefficients(const Vector& f_values, const QuadratureRule& rule,
                                          const MultiIndexSet& basis, std::span<const RecurrenceTable> recurrences)
{
    if (f_values.size() != rule.size()) {
        throw InvalidArgument("pseudospectral_coefficients: " + std::to_string(f_values.size()) + " values for " +
                              std::to_string(rule.size()) + " points");
    }
    const Matrix psi = evaluate_basis(basis, recurrences, rule.points);
    return psi.transpose() * rule.weights.cwiseProduct(f_values);
}

/// Padua points of degree N on [-1,1]^2, (N+1)(N+2)/2 of them: x = cos(j pi / N) for
/// j = 0..N, y = cos(k pi / (N+1)) with k odd when j is even and k even when j is odd.
/// Sorted lexicographically.
inline Matrix padua_points(int degree)
{
    require(degree >= 1, "padua_points: degree must be positive");
    const double pi = std::numbers::pi;
    std::vector<std::pair<double, double>> pts;
    for (int j = 0; j <= degree; ++j) {
        for (int k = 0; k <= degree + 1; ++k) {
            if ((j + k) % 2 == 0) continue;
            // cos(j pi / N) as a sine keeps the centre and mirror images exact
            pts.emplace_back(std::sin(pi * (degree - 2 * j) / (2.0 * degree)),
                             std::sin(pi * (degree + 1 - 2 * k) / (2.0 * (degree + 1))));
        }
    }
    std::sort(pts.begin(), pts.end());
    Matrix out(static_cast<Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out(static_cast<Index>(i), 0) = pts[i].first;
        out(static_cast<Index>(i), 1) = pts[i].second;
    }
    return out;
}

} // namespace quadkit
