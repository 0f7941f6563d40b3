#pragma once

#include "quadkit/diagnostics.hpp"
#include "quadkit/io.hpp"
#include "quadkit/orthopoly.hpp"
#include "quadkit/quadrature.hpp"
#include "quadkit/sampling.hpp"
#include "quadkit/subselect.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#ifndef QUADKIT_VERSION
#define QUADKIT_VERSION "0.1.0"
#endif

namespace quadkit {

// ---------------------------------------------------------------------------
// building blocks shared by the experiments and the tests

/// Tensor grid of Chebyshev-Lobatto rules (arcsine density) with the given
/// number of points per dimension.
inline QuadratureRule chebyshev_lobatto_grid(std::span<const int> points_per_dim)
{
    std::vector<QuadratureRule> factors;
    for (int p : points_per_dim) {
        const auto t = recurrence_coefficients(Distribution{Family::chebyshev1}, static_cast<std::size_t>(p));
        factors.push_back(gauss_lobatto(t, static_cast<std::size_t>(p)));
    }
    return tensor_grid(std::span<const QuadratureRule>(factors));
}

/// Design matrix on random samples with total order basis and uniform density.
/// Monte Carlo rows get equal weights, Christoffel rows get sample_weights.
inline DesignMatrix sampled_design(SamplingStrategy strategy, int d, int order, double ratio, std::uint64_t seed)
{
    const Distribution uniform{Family::legendre};
    const MultiIndexSet basis = multi_index_set(IndexKind::total_order, d, order);
    const auto rec = recurrences_for(basis, uniform);
    const auto m = static_cast<Index>(std::ceil(ratio * static_cast<double>(basis.size()) - 1e-9));
    if (strategy == SamplingStrategy::monte_carlo) {
        const SampleSet s = monte_carlo_sample(uniform, d, m, seed);
        return design_matrix(basis, rec, s.points, Vector::Constant(m, 1.0 / static_cast<double>(m)));
    }
    const SampleSet s = christoffel_sample(d, m, seed);
    return design_matrix(basis, rec, s.points, sample_weights(s.points, basis, rec));
}

struct PaduaOutcome {
    QuadratureRule grid;
    DesignMatrix design;
    Selection selection;
    Matrix closed_form;
    bool matches_closed_form = false;
    MomentWeights nnls;
    GramReport nnls_gram;
};

/// Newton subselection of (N+1)(N+2)/2 rows from the (N+1) x (N+2)
/// Chebyshev-Lobatto grid with a total order N basis.
inline PaduaOutcome padua_experiment(int degree, const NewtonOptions& options = {})
{
    PaduaOutcome out;
    const std::vector<int> counts{degree + 1, degree + 2};
    out.grid = chebyshev_lobatto_grid(counts);
    const MultiIndexSet basis = multi_index_set(IndexKind::total_order, 2, degree);
    out.design = design_matrix(basis, recurrences_for(basis, Distribution{Family::chebyshev1}), out.grid.points,
                               out.grid.weights);
    out.selection = newton_subselect(out.design, static_cast<Index>(basis.size()), options);
    out.closed_form = padua_points(degree);
    const Matrix chosen = take_rows(out.grid.points, out.selection.row_indices);
    out.matches_closed_form = chosen.rows() == out.closed_form.rows() &&
                              (chosen - out.closed_form).cwiseAbs().maxCoeff() < 1e-12;
    out.nnls = nnls_weights(chosen, basis, out.design.recurrences);
    Matrix a = evaluate_basis(basis, out.design.recurrences, chosen);
    for (Index i = 0; i < a.rows(); ++i) a.row(i) *= std::sqrt(std::max(0.0, out.nnls.weights(i)));
    out.nnls_gram = gram_report(a);
    return out;
}

/// Largest D with |G_pq - delta_pq| < tol for every p + q <= D (univariate basis).
inline int exactness_degree(const GramReport& r)
{
    const Index n = r.gram.rows();
    for (Index s = 0; s <= 2 * (n - 1); ++s) {
        for (Index p = 0; p < n; ++p) {
            const Index q = s - p;
            if (q < 0 || q >= n) continue;
            if (!r.exactness_frontier[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]) return static_cast<int>(s - 1);
        }
    }
    return static_cast<int>(2 * (n - 1));
}

// ---------------------------------------------------------------------------
// validation of stored selections

/// Recomputes the Gram matrix (with renormalized weights), condition number
/// and log-determinant of the selected rows and compares them with the
/// stored objective report.
inline io::json validate_selection(const io::json& selection, const io::json& design_json, double tol = 1e-10)
{
    const DesignMatrix a = io::design_from_json(design_json);
    if (selection.contains("design_checksum") &&
        selection.at("design_checksum").get<std::string>() != io::design_checksum(a)) {
        throw InvalidArgument("validate: checksum mismatch between selection and design");
    }
    const Selection s = io::selection_from_json(selection);
    std::set<Index> seen;
    for (Index r : s.row_indices) {
        if (r < 0 || r >= a.rows()) {
            throw InvalidArgument("validate: row index " + std::to_string(r) + " out of range [0, " +
                                  std::to_string(a.rows()) + ")");
        }
        if (!seen.insert(r).second) throw InvalidArgument("validate: duplicate row index " + std::to_string(r));
    }
    const Matrix sub = take_rows(a.entries, s.row_indices);
    double tau = 0.0;
    for (Index r : s.row_indices) tau += a.weights(r);
    const GramReport g = gram_report(Matrix(sub / std::sqrt(tau)), tol);

    io::json failing = io::json::array();
    for (Index p = 0; p < g.gram.rows(); ++p)
        for (Index q = 0; q < g.gram.cols(); ++q)
            if (!g.exactness_frontier[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)])
                failing.push_back({a.basis.indices[static_cast<std::size_t>(p)], a.basis.indices[static_cast<std::size_t>(q)]});

    const double kappa = condition_number_of(sub);
    const double ld = gram_log_det(sub);
    io::json diffs = io::json::object();
    bool consistent = true;
    auto compare = [&](const char* key, double recomputed) {
        const auto it = s.objective_report.find(key);
        if (it == s.objective_report.end()) return;
        const double stored = it->second;
        bool same;
        if (std::isfinite(stored) && std::isfinite(recomputed)) {
            same = std::abs(stored - recomputed) <= 1e-8 * std::max(1.0, std::abs(recomputed));
        } else {
            same = stored == recomputed;
        }
        consistent = consistent && same;
        diffs[key] = {{"stored", io::number(stored)}, {"recomputed", io::number(recomputed)}, {"match", same}};
    };
    compare("condition_number", kappa);
    compare("log_det", ld);

    const double wsum = s.renormalized_weights.sum();
    return {{"valid", consistent && std::abs(wsum - 1.0) < 1e-12},
            {"k", s.size()},
            {"condition_number", io::number(kappa)},
            {"gram_condition_number", io::number(kappa * kappa)},
            {"log_det", io::number(ld)},
            {"max_gram_error", g.max_offdiag_error},
            {"failing_entries", failing},
            {"report_diff", diffs},
            {"weights_sum", wsum}};
}

// ---------------------------------------------------------------------------
// experiment runner

inline const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"doe-gram",         "sparse-decay", "cs-conditioning",
                                                "subsample-gauss-1d", "subsample-gauss-2d", "padua",
                                                "timing"};
    return names;
}

namespace detail {

class ExperimentContext {
public:
    ExperimentContext(std::string name, io::json params, std::filesystem::path dir)
        : dir_(std::move(dir))
    {
        manifest_["experiment"] = std::move(name);
        manifest_["parameters"] = std::move(params);
        manifest_["library_version"] = QUADKIT_VERSION;
        manifest_["rng_algorithm"] = std::string(CounterRng::algorithm);
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        manifest_["started_at"] = stamp;
        manifest_["stages"] = io::json::array();
        manifest_["outputs"] = io::json::array();
        manifest_["seeds"] = io::json::array();
    }

    const io::json& params() const { return manifest_["parameters"]; }
    io::json& manifest() { return manifest_; }

    void write(const std::string& file, const std::string& content)
    {
        io::write_file((dir_ / file).string(), content);
        manifest_["outputs"].push_back(file);
    }

    void stage(const std::string& name, const std::function<void()>& body)
    {
        const auto start = std::chrono::steady_clock::now();
        io::json record = {{"name", name}};
        try {
            body();
        } catch (...) {
            record["status"] = "failed";
            record["seconds"] = seconds_since(start);
            manifest_["stages"].push_back(record);
            manifest_["failing_stage"] = name;
            throw;
        }
        record["status"] = "ok";
        record["seconds"] = seconds_since(start);
        manifest_["stages"].push_back(record);
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point start)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    std::filesystem::path dir_;
    io::json manifest_;
};

inline io::json with_defaults(const std::string& name, const io::json& given)
{
    static const std::map<std::string, io::json> defaults = {
        {"doe-gram", {{"m", 5}, {"rules", {"gauss", "lobatto", "clenshaw_curtis"}}}},
        {"sparse-decay", {{"order", 35}, {"linear_level", 12}, {"exponential_levels", {5, 6}}}},
        {"cs-conditioning",
         {{"d", 2}, {"orders", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}}, {"m_ratio", 2.0}, {"trials", 10},
          {"seed_base", 1000}, {"gram_order", 3}}},
        {"subsample-gauss-1d",
         {{"candidates", 101}, {"k", {4, 8}}, {"strategies", {"qr", "lu", "svd", "newton", "greedy"}}}},
        {"subsample-gauss-2d",
         {{"points_per_dim", 51}, {"order", 3}, {"candidates", "gauss"}, {"use_sample_weights", false},
          {"strategies", {"qr", "lu", "svd", "newton", "greedy"}}}},
        {"padua", {{"N", 4}, {"lambda", 1e-2}}},
        {"timing", {{"d", 3}, {"orders", {2, 3, 4, 5, 6, 7, 8}}, {"strategies", {"qr", "lu", "svd", "newton", "greedy"}}}},
    };
    const auto it = defaults.find(name);
    if (it == defaults.end()) throw InvalidArgument("unknown experiment '" + name + "'");
    io::json p = it->second;
    for (const auto& [key, value] : given.items()) {
        if (key == "seeds" && name == "cs-conditioning") {
            p[key] = value;
            continue;
        }
        if (!p.contains(key)) throw InvalidArgument("experiment '" + name + "': unknown parameter '" + key + "'");
        if (p[key].type() != value.type() && !(p[key].is_number() && value.is_number())) {
            throw InvalidArgument("experiment '" + name + "': parameter '" + key + "' has the wrong type");
        }
        p[key] = value;
    }
    return p;
}

inline void run_doe_gram(ExperimentContext& ctx)
{
    const int m = ctx.params().at("m").get<int>();
    require(m >= 2, "doe-gram: m must be at least 2");
    const Distribution uniform{Family::legendre};
    const MultiIndexSet basis = multi_index_set(IndexKind::total_order, 1, m - 1);
    const auto rec = recurrences_for(basis, uniform);
    io::CsvWriter summary({"rule", "m", "exact_degree", "max_error"});
    for (const auto& name : ctx.params().at("rules")) {
        const std::string rule_name = name.get<std::string>();
        ctx.stage(rule_name, [&] {
            QuadratureRule rule;
            const auto t = recurrence_coefficients(uniform, static_cast<std::size_t>(m));
            if (rule_name == "gauss") rule = golub_welsch(t, static_cast<std::size_t>(m));
            else if (rule_name == "lobatto") rule = gauss_lobatto(t, static_cast<std::size_t>(m));
            else if (rule_name == "clenshaw_curtis") rule = clenshaw_curtis(static_cast<std::size_t>(m));
            else throw InvalidArgument("doe-gram: unknown rule '" + rule_name + "'");
            const GramReport g = gram_report(design_matrix(basis, rec, rule.points, rule.weights));
            ctx.write("gram_" + rule_name + ".csv", io::gram_csv(g));
            summary.row_strings({rule_name, std::to_string(m), std::to_string(exactness_degree(g)),
                                 io::format_double(g.max_offdiag_error)});
        });
    }
    ctx.write("frontier.csv", summary.str());
}

inline void run_sparse_decay(ExperimentContext& ctx)
{
    const int order = ctx.params().at("order").get<int>();
    const Distribution uniform{Family::legendre};
    ctx.stage("tensor", [&] {
        const QuadratureRule g = gauss_rule(uniform, static_cast<std::size_t>(order + 1));
        const QuadratureRule rule = tensor_grid({g, g});
        const MultiIndexSet basis = multi_index_set(IndexKind::tensor_order, 2, order);
        const auto rec = recurrences_for(basis, uniform);
        Vector f(rule.size());
        for (Index i = 0; i < rule.size(); ++i) f(i) = std::exp(3.0 * rule.points(i, 0) + rule.points(i, 1));
        const Vector x = pseudospectral_coefficients(f, rule, basis, rec);
        io::CsvWriter c({"p1", "p2", "total_degree", "coefficient"});
        for (std::size_t j = 0; j < basis.size(); ++j) {
            const auto& p = basis.indices[j];
            c.row_strings({std::to_string(p[0]), std::to_string(p[1]), std::to_string(p[0] + p[1]),
                           io::format_double(x(static_cast<Index>(j)))});
        }
        ctx.write("tensor_points.csv", io::rule_csv(rule));
        ctx.write("coefficients.csv", c.str());
        const Moments mo = moments(x, basis);
        const double mean = std::sinh(3.0) / 3.0 * std::sinh(1.0);
        const double second = std::sinh(6.0) / 6.0 * std::sinh(2.0) / 2.0;
        ctx.write("moments.json", io::json{{"mean", mo.mean},
                                           {"variance", mo.variance},
                                           {"analytic_mean", mean},
                                           {"analytic_variance", second - mean * mean},
                                           {"points", rule.size()}}
                                      .dump(2));
    });
    ctx.stage("sparse", [&] {
        const std::vector<RecurrenceTable> tables(2, recurrence_coefficients(uniform, 64));
        io::CsvWriter counts({"grid", "growth", "level", "points", "reference"});
        counts.row_strings({"tensor", "-", std::to_string(order), std::to_string((order + 1) * (order + 1)), "1296"});
        auto one = [&](Growth growth, int level, const char* reference) {
            const QuadratureRule r = sparse_grid({2, level, growth, true, SparseBaseRule::gauss}, tables);
            const std::string tag = std::string(to_string(growth)) + "_l" + std::to_string(level);
            ctx.write("sparse_" + tag + ".csv", io::rule_csv(r));
            counts.row_strings({"sparse", std::string(to_string(growth)), std::to_string(level),
                                std::to_string(r.size()), reference});
        };
        one(Growth::linear, ctx.params().at("linear_level").get<int>(), "1015");
        for (const auto& l : ctx.params().at("exponential_levels")) one(Growth::exponential, l.get<int>(), "667");
        ctx.write("counts.csv", counts.str());
    });
}

inline std::vector<std::uint64_t> trial_seeds(const io::json& p)
{
    std::vector<std::uint64_t> seeds;
    if (p.contains("seeds")) {
        seeds = p.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
        const int trials = p.at("trials").get<int>();
        const auto base = p.at("seed_base").get<std::uint64_t>();
        for (int t = 0; t < trials; ++t) seeds.push_back(base + static_cast<std::uint64_t>(t));
    }
    require(!seeds.empty(), "cs-conditioning: no seeds");
    return seeds;
}

inline void run_cs_conditioning(ExperimentContext& ctx)
{
    const io::json& p = ctx.params();
    const int d = p.at("d").get<int>();
    const double ratio = p.at("m_ratio").get<double>();
    const std::vector<std::uint64_t> seeds = trial_seeds(p);
    ctx.manifest()["seeds"] = seeds;
    io::CsvWriter trials({"order", "n", "m", "strategy", "seed", "condition_number"});
    io::CsvWriter summary({"order", "n", "m", "monte_carlo_mean", "christoffel_mean", "christoffel_not_worse"});
    for (const auto& o : p.at("orders")) {
        const int order = o.get<int>();
        ctx.stage("order_" + std::to_string(order), [&] {
            double sum[2] = {0.0, 0.0};
            Index n = 0;
            Index m = 0;
            for (int s = 0; s < 2; ++s) {
                const auto strategy = s == 0 ? SamplingStrategy::monte_carlo : SamplingStrategy::christoffel;
                for (std::uint64_t seed : seeds) {
                    const DesignMatrix a = sampled_design(strategy, d, order, ratio, seed);
                    const double kappa = condition_number(a);
                    n = a.cols();
                    m = a.rows();
                    sum[s] += kappa;
                    trials.row_strings({std::to_string(order), std::to_string(n), std::to_string(m),
                                        std::string(to_string(strategy)), std::to_string(seed),
                                        io::format_double(kappa)});
                }
            }
            const double mc = sum[0] / static_cast<double>(seeds.size());
            const double ch = sum[1] / static_cast<double>(seeds.size());
            summary.row_strings({std::to_string(order), std::to_string(n), std::to_string(m), io::format_double(mc),
                                 io::format_double(ch), ch <= mc ? "1" : "0"});
        });
    }
    ctx.write("trials.csv", trials.str());
    ctx.write("summary.csv", summary.str());
    ctx.stage("gram", [&] {
        const DesignMatrix a =
            sampled_design(SamplingStrategy::christoffel, d, p.at("gram_order").get<int>(), ratio, seeds.front());
        const GramReport g = gram_report(a);
        ctx.write("gram_christoffel.csv", io::gram_csv(g));
        ctx.write("gram_christoffel_points.csv", io::points_csv(a.points, &a.weights));
        const double kappa = condition_number(a);
        ctx.write("gram_christoffel.json",
                  io::json{{"condition_number_A", kappa}, {"condition_number_G", kappa * kappa}}.dump(2));
    });
}

inline void run_subsample_1d(ExperimentContext& ctx)
{
    const io::json& p = ctx.params();
    const Distribution uniform{Family::legendre};
    const QuadratureRule cand = gauss_rule(uniform, p.at("candidates").get<std::size_t>());
    io::CsvWriter nodes({"k", "strategy", "i", "row", "node", "gauss_node", "abs_error"});
    io::CsvWriter summary({"k", "strategy", "max_abs_error", "condition_number"});
    for (const auto& kj : p.at("k")) {
        const int k = kj.get<int>();
        const MultiIndexSet basis = multi_index_set(IndexKind::total_order, 1, k - 1);
        const DesignMatrix a = design_matrix(basis, recurrences_for(basis, uniform), cand.points, cand.weights);
        const QuadratureRule g = gauss_rule(uniform, static_cast<std::size_t>(k));
        for (const auto& sj : p.at("strategies")) {
            const Strategy strategy = parse_strategy(sj.get<std::string>());
            ctx.stage("k" + std::to_string(k) + "_" + std::string(to_string(strategy)), [&] {
                const Selection s = subselect(a, strategy, k);
                double worst = 0.0;
                for (int i = 0; i < k; ++i) {
                    const Index row = s.row_indices[static_cast<std::size_t>(i)];
                    const double err = std::abs(cand.points(row, 0) - g.points(i, 0));
                    worst = std::max(worst, err);
                    nodes.row_strings({std::to_string(k), std::string(to_string(strategy)), std::to_string(i),
                                       std::to_string(row), io::format_double(cand.points(row, 0)),
                                       io::format_double(g.points(i, 0)), io::format_double(err)});
                }
                summary.row_strings({std::to_string(k), std::string(to_string(strategy)), io::format_double(worst),
                                     io::format_double(s.objective_report.at("condition_number"))});
            });
        }
    }
    ctx.write("nodes.csv", nodes.str());
    ctx.write("summary.csv", summary.str());
}

inline void run_subsample_2d(ExperimentContext& ctx)
{
    const io::json& p = ctx.params();
    const int per_dim = p.at("points_per_dim").get<int>();
    const int order = p.at("order").get<int>();
    const std::string candidates = p.at("candidates").get<std::string>();
    const Distribution uniform{Family::legendre};
    const MultiIndexSet basis = multi_index_set(IndexKind::tensor_order, 2, order);
    const auto rec = recurrences_for(basis, uniform);

    QuadratureRule grid;
    Vector weights;
    if (candidates == "gauss") {
        const QuadratureRule g = gauss_rule(uniform, static_cast<std::size_t>(per_dim));
        grid = tensor_grid({g, g});
        weights = grid.weights;
    } else if (candidates == "chebyshev") {
        const std::vector<int> counts{per_dim, per_dim};
        grid = chebyshev_lobatto_grid(counts);
        weights = p.at("use_sample_weights").get<bool>()
                      ? sample_weights(grid.points, basis, rec)
                      : Vector(Vector::Constant(grid.size(), 1.0 / static_cast<double>(grid.size())));
    } else {
        throw InvalidArgument("subsample-gauss-2d: candidates must be 'gauss' or 'chebyshev'");
    }
    const DesignMatrix a = design_matrix(basis, rec, grid.points, weights);
    const QuadratureRule g1 = gauss_rule(uniform, static_cast<std::size_t>(order + 1));
    const QuadratureRule target = tensor_grid({g1, g1});
    const auto k = static_cast<Index>(basis.size());

    io::CsvWriter summary({"strategy", "k", "condition_number", "max_distance_to_gauss_tensor"});
    for (const auto& sj : p.at("strategies")) {
        const Strategy strategy = parse_strategy(sj.get<std::string>());
        ctx.stage(std::string(to_string(strategy)), [&] {
            const Selection s = subselect(a, strategy, k);
            const Matrix chosen = take_rows(grid.points, s.row_indices);
            double worst = 0.0;
            for (Index i = 0; i < chosen.rows(); ++i) {
                double nearest = std::numeric_limits<double>::infinity();
                for (Index t = 0; t < target.size(); ++t)
                    nearest = std::min(nearest, (chosen.row(i) - target.points.row(t)).cwiseAbs().maxCoeff());
                worst = std::max(worst, nearest);
            }
            ctx.write("selection_" + std::string(to_string(strategy)) + ".csv",
                      io::points_csv(chosen, &s.renormalized_weights));
            summary.row_strings({std::string(to_string(strategy)), std::to_string(k),
                                 io::format_double(s.objective_report.at("condition_number")),
                                 io::format_double(worst)});
        });
    }
    ctx.write("summary.csv", summary.str());
}

inline void run_padua(ExperimentContext& ctx)
{
    const int degree = ctx.params().at("N").get<int>();
    NewtonOptions options;
    options.lambda = ctx.params().at("lambda").get<double>();
    PaduaOutcome out;
    ctx.stage("newton", [&] { out = padua_experiment(degree, options); });
    ctx.stage("write", [&] {
        ctx.write("grid.csv", io::rule_csv(out.grid));
        ctx.write("selection.csv", io::points_csv(take_rows(out.grid.points, out.selection.row_indices),
                                                  &out.selection.renormalized_weights));
        ctx.write("closed_form.csv", io::points_csv(out.closed_form));
        ctx.write("gram_full.csv", io::gram_csv(gram_report(out.design)));
        const Matrix sub = take_rows(out.design.entries, out.selection.row_indices);
        double tau = 0.0;
        for (Index r : out.selection.row_indices) tau += out.design.weights(r);
        ctx.write("gram_subsampled.csv", io::gram_csv(gram_report(Matrix(sub / std::sqrt(tau)))));
        ctx.write("gram_nnls.csv", io::gram_csv(out.nnls_gram));
        ctx.write("nnls_weights.csv", io::points_csv(take_rows(out.grid.points, out.selection.row_indices),
                                                     &out.nnls.weights));
        io::json failing = io::json::array();
        const auto& idx = out.design.basis.indices;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                if (!out.nnls_gram.exactness_frontier[i][j]) failing.push_back({idx[i], idx[j]});
        ctx.write("summary.json", io::json{{"matches_closed_form", out.matches_closed_form},
                                           {"row_indices", out.selection.row_indices},
                                           {"objective_report", io::to_json(out.selection.objective_report)},
                                           {"nnls_residual", out.nnls.residual_norm},
                                           {"nnls_status", out.nnls.status},
                                           {"nnls_gram_failing_entries", failing}}
                                      .dump(2));
    });
}

inline void run_timing(ExperimentContext& ctx)
{
    const io::json& p = ctx.params();
    const int d = p.at("d").get<int>();
    io::CsvWriter table({"order", "n", "m", "strategy", "seconds", "condition_number"});
    for (const auto& oj : p.at("orders")) {
        const int order = oj.get<int>();
        const std::vector<int> counts(static_cast<std::size_t>(d), order + 1);
        const QuadratureRule grid = chebyshev_lobatto_grid(counts);
        const MultiIndexSet basis = multi_index_set(IndexKind::total_order, d, order);
        const DesignMatrix a =
            design_matrix(basis, recurrences_for(basis, Distribution{Family::legendre}), grid.points,
                          Vector::Constant(grid.size(), 1.0 / static_cast<double>(grid.size())));
        for (const auto& sj : p.at("strategies")) {
            const Strategy strategy = parse_strategy(sj.get<std::string>());
            ctx.stage("order" + std::to_string(order) + "_" + std::string(to_string(strategy)), [&] {
                const auto start = std::chrono::steady_clock::now();
                const Selection s = subselect(a, strategy, a.cols());
                const double seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                table.row_strings({std::to_string(order), std::to_string(a.cols()), std::to_string(a.rows()),
                                   std::string(to_string(strategy)), io::format_double(seconds),
                                   io::format_double(s.objective_report.at("condition_number"))});
            });
        }
    }
    ctx.write("timing.csv", table.str());
}

} // namespace detail

struct ExperimentResult {
    io::json manifest;
    bool ok = false;
};

/// Runs one experiment into `out_dir`. manifest.json is written in every
/// case; on failure it names the failing stage and the error.
inline ExperimentResult run_experiment(const std::string& name, const io::json& parameters,
                                       const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    io::json params = parameters.is_null() ? io::json::object() : parameters;
    detail::ExperimentContext ctx(name, params, out_dir);
    ExperimentResult result;
    try {
        ctx.manifest()["parameters"] = detail::with_defaults(name, params);
        if (name == "doe-gram") detail::run_doe_gram(ctx);
        else if (name == "sparse-decay") detail::run_sparse_decay(ctx);
        else if (name == "cs-conditioning") detail::run_cs_conditioning(ctx);
        else if (name == "subsample-gauss-1d") detail::run_subsample_1d(ctx);
        else if (name == "subsample-gauss-2d") detail::run_subsample_2d(ctx);
        else if (name == "padua") detail::run_padua(ctx);
        else if (name == "timing") detail::run_timing(ctx);
        ctx.manifest()["status"] = "ok";
        result.ok = true;
    } catch (const Error& e) {
        ctx.manifest()["status"] = "failed";
        ctx.manifest()["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    } catch (const std::exception& e) {
        ctx.manifest()["status"] = "failed";
        ctx.manifest()["error"] = {{"kind", "error"}, {"message", e.what()}};
    }
    if (!ctx.manifest().contains("failing_stage") && !result.ok) ctx.manifest()["failing_stage"] = "setup";
    io::write_file((out_dir / "manifest.json").string(), ctx.manifest().dump(2));
    result.manifest = ctx.manifest();
    return result;
}

} // namespace quadkit
