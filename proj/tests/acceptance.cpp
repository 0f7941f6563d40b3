// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "quadkit/quadkit.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace quadkit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

DesignMatrix univariate_design(const QuadratureRule& r, int max_degree)
{
    const auto basis = multi_index_set(IndexKind::total_order, 1, max_degree);
    return design_matrix(basis, recurrences_for(basis, Distribution{Family::legendre}), r.points, r.weights);
}

bool frontier_holds(const GramReport& g, int degree)
{
    const auto n = static_cast<int>(g.gram.rows());
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            if (p + q <= degree && !g.exactness_frontier[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]) return false;
    return true;
}

Outcome exactness_frontiers()
{
    // basis up to degree 5 so the Gauss frontier p+q <= 9 is fully visible
    const auto t = recurrence_coefficients({Family::legendre}, 5);
    const auto gauss = gram_report(univariate_design(gauss_rule({Family::legendre}, 5), 5), 1e-10);
    const auto lobatto = gram_report(univariate_design(gauss_lobatto(t, 5), 5), 1e-10);
    const auto cc = gram_report(univariate_design(clenshaw_curtis(5), 5), 1e-10);
    std::ostringstream s;
    s << "exactness degrees gauss=" << exactness_degree(gauss) << " lobatto=" << exactness_degree(lobatto)
      << " cc=" << exactness_degree(cc);
    return {frontier_holds(gauss, 9) && frontier_holds(lobatto, 7) && frontier_holds(cc, 4), s.str()};
}

Outcome gauss_recovery()
{
    const auto grid = gauss_rule({Family::legendre}, 101);
    bool ok = true;
    std::ostringstream s;
    for (int k : {4, 8}) {
        const DesignMatrix a = univariate_design(grid, k - 1);
        const auto g = gauss_rule({Family::legendre}, static_cast<std::size_t>(k));
        for (Strategy st : {Strategy::qr, Strategy::lu, Strategy::svd}) {
            const Selection sel = subselect(a, st, k);
            double worst = 0.0;
            for (int i = 0; i < k; ++i)
                worst = std::max(worst, std::abs(a.points(sel.row_indices[static_cast<std::size_t>(i)], 0) - g.points(i, 0)));
            ok = ok && worst < 0.03;
            s << to_string(st) << "(k=" << k << ")=" << worst << " ";
        }
    }
    return {ok, "max node error " + s.str()};
}

Outcome padua_recovery()
{
    const PaduaOutcome p = padua_experiment(4);
    const Matrix chosen = take_rows(p.grid.points, p.selection.row_indices);
    const double diff = chosen.rows() == p.closed_form.rows() ? (chosen - p.closed_form).cwiseAbs().maxCoeff() : 1.0;
    bool pattern = true;
    const auto& idx = p.design.basis.indices;
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const bool high = idx[i] == MultiIndex{4, 0} && idx[j] == MultiIndex{4, 0};
            pattern = pattern && p.nnls_gram.exactness_frontier[i][j] == !high;
        }
    std::ostringstream s;
    s << "max point diff " << diff << ", nnls residual " << p.nnls.residual_norm
      << ", gram fails only at (4,0): " << (pattern ? "yes" : "no");
    return {p.matches_closed_form && pattern, s.str()};
}

Outcome point_counts()
{
    const auto g = gauss_rule({Family::legendre}, 36);
    const auto tensor = tensor_grid({g, g});
    const std::vector<RecurrenceTable> t(2, recurrence_coefficients({Family::legendre}, 64));
    const Index lin = sparse_grid({2, 12, Growth::linear}, t).size();
    const Index exp5 = sparse_grid({2, 5, Growth::exponential}, t).size();
    const Index exp6 = sparse_grid({2, 6, Growth::exponential}, t).size();
    const auto within = [](Index n, double target) { return std::abs(static_cast<double>(n) - target) <= 0.1 * target; };
    std::ostringstream s;
    s << "tensor=" << tensor.size() << " linear(l=12)=" << lin << " exponential(l=5)=" << exp5
      << " exponential(l=6)=" << exp6 << " (linear l=13 gives " << sparse_grid({2, 13, Growth::linear}, t).size() << ")";
    return {tensor.size() == 1296 && within(lin, 1015) && (within(exp5, 667) || within(exp6, 667)), s.str()};
}

Outcome coefficient_decay()
{
    const auto g = gauss_rule({Family::legendre}, 36);
    const auto rule = tensor_grid({g, g});
    const auto basis = multi_index_set(IndexKind::tensor_order, 2, 35);
    const auto rec = recurrences_for(basis, Distribution{Family::legendre});
    Vector f(rule.size());
    for (Index i = 0; i < rule.size(); ++i) f(i) = std::exp(3.0 * rule.points(i, 0) + rule.points(i, 1));
    const Vector x = pseudospectral_coefficients(f, rule, basis, rec);
    const double mean = std::sinh(3.0) / 3.0 * std::sinh(1.0);
    double tail = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis.indices[i][0] + basis.indices[i][1] >= 12) tail = std::max(tail, std::abs(x(static_cast<Index>(i))));
    std::ostringstream s;
    s << "|x00 - exact|=" << std::abs(x(0) - mean) << " max |x| at total order >= 12: " << tail;
    return {std::abs(x(0) - mean) < 1e-10 && tail < 1e-9, s.str()};
}

Outcome conditioning_comparison()
{
    bool ok = true;
    std::ostringstream s;
    int worst_order = 0;
    double worst_ratio = 0.0;
    for (int order = 1; order <= 15; ++order) {
        double mc = 0.0;
        double cs = 0.0;
        for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
            mc += condition_number(sampled_design(SamplingStrategy::monte_carlo, 2, order, 2.0, seed)) / 10.0;
            cs += condition_number(sampled_design(SamplingStrategy::christoffel, 2, order, 2.0, seed)) / 10.0;
        }
        ok = ok && cs <= mc;
        if (cs > mc) s << "order " << order << " christoffel " << cs << " > mc " << mc << "; ";
        if (cs / mc > worst_ratio) {
            worst_ratio = cs / mc;
            worst_order = order;
        }
    }
    s << "largest christoffel/mc mean ratio " << worst_ratio << " at order " << worst_order;
    return {ok, s.str()};
}

Outcome condition_bound()
{
    std::mt19937_64 gen(31);
    int held = 0;
    double tightest = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int d = 1 + static_cast<int>(gen() % 3);
        const int max_order = d == 1 ? 19 : (d == 2 ? 4 : 2);
        const int order = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(max_order));
        const auto basis = multi_index_set(IndexKind::total_order, d, order);
        const auto n = static_cast<Index>(basis.size());
        const Index m = n + 1 + static_cast<Index>(gen() % static_cast<std::uint64_t>(200 - n));
        const auto smp = monte_carlo_sample(Distribution{Family::legendre}, d, m, 5000 + static_cast<std::uint64_t>(t));
        const DesignMatrix a = design_matrix(basis, recurrences_for(basis, Distribution{Family::legendre}), smp.points,
                                             Vector::Constant(m, 1.0 / static_cast<double>(m)));
        const Selection sel = qr_subselect(a, n);
        const double sc = sel.objective_report.at("pivot_constant");
        const double bound = condition_number(a) * std::sqrt(1.0 + sc * sc * static_cast<double>(n * (m - n)));
        const double kz = sel.objective_report.at("condition_number");
        held += kz <= bound;
        tightest = std::max(tightest, kz / bound);
    }
    std::ostringstream s;
    s << held << "/50 designs within bound, largest ratio " << tightest;
    return {held == 50, s.str()};
}

std::vector<double> exhaustive_log_dets(const Matrix& a, int k)
{
    const int m = static_cast<int>(a.rows());
    std::vector<double> out;
    std::vector<bool> mask(static_cast<std::size_t>(m), false);
    std::fill(mask.begin(), mask.begin() + k, true);
    do {
        std::vector<Index> rows;
        for (int i = 0; i < m; ++i)
            if (mask[static_cast<std::size_t>(i)]) rows.push_back(i);
        out.push_back(gram_log_det(take_rows(a, rows)));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

Outcome oracle_equivalence()
{
    int newton = 0;
    int greedy = 0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto basis = multi_index_set(IndexKind::total_order, 1, 2);
        const auto smp = monte_carlo_sample(Distribution{Family::legendre}, 1, 12, 9000 + t);
        const DesignMatrix a = design_matrix(basis, recurrences_for(basis, Distribution{Family::legendre}), smp.points,
                                             Vector::Constant(12, 1.0 / 12.0));
        const auto ranking = exhaustive_log_dets(a.entries, 3);
        const double cut = ranking[static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(ranking.size()))) - 1] - 1e-10;
        newton += gram_log_det(take_rows(a.entries, newton_subselect(a, 3).row_indices)) >= cut;
        greedy += gram_log_det(take_rows(a.entries, greedy_det_subselect(a, 3).row_indices)) >= cut;
    }
    std::ostringstream s;
    s << "top decile: newton " << newton << "/20, greedy " << greedy << "/20";
    return {newton >= 19 && greedy >= 19, s.str()};
}

Outcome stieltjes_round_trip()
{
    constexpr std::size_t fine = 400;
    double coeff_err = 0.0;
    double rule_err = 0.0;
    // uniform: discretize with a fine Gauss-Legendre rule
    {
        const auto disc = gauss_rule({Family::legendre}, fine);
        const std::vector<double> x(disc.points.col(0).begin(), disc.points.col(0).end());
        const std::vector<double> w(disc.weights.begin(), disc.weights.end());
        const auto t = stieltjes_discretized(x, w, 8);
        const auto exact = recurrence_coefficients({Family::legendre}, 8);
        for (std::size_t k = 0; k < 8; ++k)
            coeff_err = std::max({coeff_err, std::abs(t.alpha[k] - exact.alpha[k]), std::abs(t.beta[k] - exact.beta[k])});
        for (std::size_t m = 1; m <= 8; ++m) {
            const auto a = golub_welsch(t, m);
            const auto b = golub_welsch(exact, m);
            rule_err = std::max({rule_err, (a.points - b.points).cwiseAbs().maxCoeff(),
                                 (a.weights - b.weights).cwiseAbs().maxCoeff()});
        }
    }
    // arcsine: equal masses at Chebyshev nodes; compare to cos((2i-1)pi/2m) with weights 1/m
    {
        std::vector<double> x(fine);
        const std::vector<double> w(fine, 1.0 / static_cast<double>(fine));
        const double pi = std::acos(-1.0);
        for (std::size_t i = 0; i < fine; ++i) x[i] = std::cos((2.0 * static_cast<double>(i) + 1.0) * pi / (2.0 * fine));
        const auto t = stieltjes_discretized(x, w, 8);
        const auto exact = recurrence_coefficients({Family::chebyshev1}, 8);
        for (std::size_t k = 0; k < 8; ++k)
            coeff_err = std::max({coeff_err, std::abs(t.alpha[k] - exact.alpha[k]), std::abs(t.beta[k] - exact.beta[k])});
        for (std::size_t m = 1; m <= 8; ++m) {
            const auto r = golub_welsch(t, m);
            for (std::size_t i = 0; i < m; ++i) {
                const double node = -std::cos((2.0 * static_cast<double>(i) + 1.0) * pi / (2.0 * static_cast<double>(m)));
                rule_err = std::max({rule_err, std::abs(r.points(static_cast<Index>(i), 0) - node),
                                     std::abs(r.weights(static_cast<Index>(i)) - 1.0 / static_cast<double>(m))});
            }
        }
    }
    std::ostringstream s;
    s << "max coefficient error " << coeff_err << ", max node/weight error " << rule_err;
    return {coeff_err < 1e-8 && rule_err < 1e-8, s.str()};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exactness frontiers (m=5)", exactness_frontiers},
        {"gauss recovery from 101-point grid", gauss_recovery},
        {"padua recovery and nnls exactness", padua_recovery},
        {"tensor and sparse point counts", point_counts},
        {"coefficient decay of exp(3x+y)", coefficient_decay},
        {"christoffel vs monte carlo conditioning", conditioning_comparison},
        {"subselection condition bound", condition_bound},
        {"newton/greedy vs exhaustive log-det", oracle_equivalence},
        {"stieltjes round trip", stieltjes_round_trip},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::printf("criterion %zu %s: %s [%.2f s] %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                    o.detail.c_str());
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
