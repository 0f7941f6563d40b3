#include "quadkit/quadkit.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace quadkit;
using io::json;

struct Globals {
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "csv";
};

void emit(const Globals& g, const std::string& text)
{
    if (g.out.empty() || g.out == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
        io::write_file(g.out, text);
    }
}

std::vector<Distribution> distributions(const std::string& family, double a, double b, int d)
{
    Distribution dist{parse_family(family), a, b};
    return std::vector<Distribution>(static_cast<std::size_t>(d), dist);
}

QuadratureRule univariate(const std::string& type, const Distribution& dist, std::size_t m)
{
    if (type == "clenshaw_curtis" || type == "cc") {
        require(dist.family == Family::legendre, "Clenshaw-Curtis rules are for the uniform density");
        return clenshaw_curtis(m);
    }
    const RecurrenceTable t = recurrence_coefficients(dist, m);
    if (type == "gauss") return golub_welsch(t, m);
    if (type == "lobatto") return gauss_lobatto(t, m);
    throw InvalidArgument("unknown rule type '" + type + "'");
}

std::string render_rule(const Globals& g, const QuadratureRule& r)
{
    return g.format == "json" ? io::to_json(r).dump(2) : io::rule_csv(r);
}

Matrix read_points(const std::string& path, std::optional<Vector>& weights, bool last_column_is_weight)
{
    const auto rows = io::read_csv(io::read_file(path));
    require(!rows.empty(), "no points in '" + path + "'");
    const std::size_t cols = rows.front().size();
    const std::size_t d = last_column_is_weight ? cols - 1 : cols;
    require(d >= 1, "points file has no coordinate columns");
    Matrix pts(static_cast<Index>(rows.size()), static_cast<Index>(d));
    Vector w(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == cols, "ragged row " + std::to_string(i) + " in '" + path + "'");
        for (std::size_t k = 0; k < d; ++k) pts(static_cast<Index>(i), static_cast<Index>(k)) = io::parse_double(rows[i][k]);
        if (last_column_is_weight) w(static_cast<Index>(i)) = io::parse_double(rows[i][cols - 1]);
    }
    if (last_column_is_weight) weights = w;
    return pts;
}

void gnuplot_hints(const std::filesystem::path& dir, const json& manifest)
{
    std::string text;
    for (const auto& f : manifest.at("outputs")) {
        const std::string name = f.get<std::string>();
        if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
        const std::string body = io::read_file((dir / name).string());
        const std::string header = body.substr(0, body.find('\n'));
        text += name + ":";
        std::size_t col = 1;
        std::size_t start = 0;
        while (start <= header.size()) {
            const std::size_t end = std::min(header.find(',', start), header.size());
            text += " " + std::to_string(col++) + "=" + header.substr(start, end - start);
            start = end + 1;
        }
        text += "\n";
    }
    io::write_file((dir / "gnuplot_hints.txt").string(), text);
}

int fail(const std::string& kind, const std::string& message)
{
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
    return 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"quadkit: quadrature rules, sparse grids, sampling and subset selection"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Seed for random sampling")->capture_default_str();
    app.add_option("--out", g.out, "Output file (experiment: output directory)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    // rule
    auto* rule = app.add_subcommand("rule", "Univariate or tensor-product quadrature rule");
    std::string rule_type = "gauss", family = "legendre";
    double ja = 0.0, jb = 0.0;
    std::size_t m = 5;
    int d = 1;
    rule->add_option("--type", rule_type, "gauss | lobatto | clenshaw_curtis")->capture_default_str();
    rule->add_option("--family", family, "legendre | hermite | chebyshev1 | jacobi")->capture_default_str();
    rule->add_option("--alpha-param", ja, "Jacobi parameter a");
    rule->add_option("--beta-param", jb, "Jacobi parameter b");
    rule->add_option("--m", m, "Points per dimension")->capture_default_str();
    rule->add_option("--d", d, "Dimension (tensor product)")->capture_default_str();

    // sparse
    auto* sparse = app.add_subcommand("sparse", "Smolyak sparse grid");
    int level = 2;
    std::string growth = "linear", base = "gauss";
    bool unmerged = false;
    sparse->add_option("--d", d, "Dimension")->capture_default_str();
    sparse->add_option("--level", level, "Level l")->capture_default_str();
    sparse->add_option("--growth", growth, "linear | exponential")->capture_default_str();
    sparse->add_option("--family", family)->capture_default_str();
    sparse->add_option("--base", base, "gauss | clenshaw_curtis")->capture_default_str();
    sparse->add_flag("--unmerged", unmerged, "Keep coincident points separate");

    // sample
    auto* sample = app.add_subcommand("sample", "Monte Carlo or Christoffel samples");
    std::string strategy_name = "monte_carlo";
    Index sample_m = 100;
    int weight_order = -1;
    sample->add_option("--strategy", strategy_name, "monte_carlo | christoffel")->capture_default_str();
    sample->add_option("--d", d)->capture_default_str();
    sample->add_option("--m", sample_m)->capture_default_str();
    sample->add_option("--family", family)->capture_default_str();
    sample->add_option("--weights-order", weight_order, "Append sample weights for this total order basis");

    // design
    auto* design = app.add_subcommand("design", "Weighted design matrix from a points file");
    std::string in_path, basis_kind = "total_order";
    int order = 2;
    double q = 1.0;
    bool no_weights = false;
    design->add_option("--in", in_path, "CSV with x1..xd,weight")->required();
    design->add_flag("--no-weights", no_weights, "Input has no weight column; use equal weights");
    design->add_option("--basis", basis_kind, "total_order | tensor_order | hyperbolic_cross | hyperbolic_q")
        ->capture_default_str();
    design->add_option("--order", order)->capture_default_str();
    design->add_option("--q", q)->capture_default_str();
    design->add_option("--family", family)->capture_default_str();
    design->add_option("--alpha-param", ja);
    design->add_option("--beta-param", jb);

    // subselect
    auto* sub = app.add_subcommand("subselect", "Choose k rows of a design matrix");
    std::string sub_strategy = "qr";
    Index k = 0;
    NewtonOptions newton;
    bool no_swap = false;
    sub->add_option("--strategy", sub_strategy, "qr | lu | svd | newton | greedy")->capture_default_str();
    sub->add_option("--k", k, "Rows to keep (default n)");
    sub->add_option("--in", in_path, "design.json")->required();
    sub->add_option("--lambda", newton.lambda, "Newton barrier weight")->capture_default_str();
    sub->add_option("--max-iter", newton.max_iterations, "Newton iteration limit")->capture_default_str();
    sub->add_flag("--no-swap", no_swap, "Skip swap refinement after Newton rounding");

    // lsq
    auto* lsq = app.add_subcommand("lsq", "Weighted least-squares coefficients");
    std::string values_path;
    lsq->add_option("--in", in_path, "design.json")->required();
    lsq->add_option("--values", values_path, "CSV with one column of f values at the design points")->required();

    // gram
    auto* gram = app.add_subcommand("gram", "Gram matrix and exactness frontier");
    double tol = 1e-10;
    gram->add_option("--in", in_path, "design.json")->required();
    gram->add_option("--tol", tol)->capture_default_str();

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a named experiment");
    std::string exp_name, params_text, params_file;
    int trials = 0;
    std::vector<std::uint64_t> seeds;
    bool hints = false;
    exp->add_option("name", exp_name)->required()->check(CLI::IsMember(experiment_names()));
    exp->add_option("--params", params_text, "JSON object of parameters");
    exp->add_option("--params-file", params_file, "File holding a JSON object of parameters");
    exp->add_option("--trials", trials, "Number of seeded trials");
    exp->add_option("--seeds", seeds, "Explicit trial seeds");
    exp->add_flag("--emit-gnuplot-hints", hints, "Write column descriptions of every CSV");

    // validate
    auto* val = app.add_subcommand("validate", "Re-check a stored selection against its design");
    std::string selection_path;
    val->add_option("--selection", selection_path, "selection.json")->required();
    val->add_option("--design", in_path, "design.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }

    try {
        if (rule->parsed()) {
            require(d >= 1, "--d must be positive");
            const auto dists = distributions(family, ja, jb, d);
            std::vector<QuadratureRule> factors;
            for (const auto& dist : dists) factors.push_back(univariate(rule_type, dist, m));
            emit(g, render_rule(g, tensor_grid(std::span<const QuadratureRule>(factors))));
        } else if (sparse->parsed()) {
            require(d >= 1, "--d must be positive");
            const auto dists = distributions(family, 0.0, 0.0, d);
            std::vector<RecurrenceTable> tables;
            for (const auto& dist : dists) tables.push_back(recurrence_coefficients(dist, 8));
            SparseGridSpec spec{d, level, parse_growth(growth), !unmerged,
                                base == "gauss" ? SparseBaseRule::gauss : SparseBaseRule::clenshaw_curtis};
            require(base == "gauss" || base == "clenshaw_curtis", "--base must be gauss or clenshaw_curtis");
            emit(g, render_rule(g, sparse_grid(spec, tables)));
        } else if (sample->parsed()) {
            const SamplingStrategy s = parse_sampling_strategy(strategy_name);
            const auto dists = distributions(family, 0.0, 0.0, d);
            const SampleSet set = s == SamplingStrategy::monte_carlo
                                      ? monte_carlo_sample(dists, sample_m, g.seed)
                                      : christoffel_sample(d, sample_m, g.seed, dists.front());
            std::optional<Vector> w;
            if (weight_order >= 0) {
                const MultiIndexSet basis = multi_index_set(IndexKind::total_order, d, weight_order);
                const auto rec = recurrences_for(basis, dists);
                w = sample_weights(set.points, basis, rec);
            }
            if (g.format == "json") {
                json j = io::to_json(set);
                if (w) j["weights"] = io::to_json(*w);
                emit(g, j.dump(2));
            } else {
                emit(g, io::points_csv(set.points, w ? &*w : nullptr));
            }
        } else if (design->parsed()) {
            std::optional<Vector> w;
            const Matrix pts = read_points(in_path, w, !no_weights);
            const int dim = static_cast<int>(pts.cols());
            const MultiIndexSet basis = multi_index_set(parse_index_kind(basis_kind), dim, order, q);
            const auto dists = distributions(family, ja, jb, dim);
            const DesignMatrix a = design_matrix(basis, recurrences_for(basis, dists), pts,
                                                 w ? *w : Vector(Vector::Constant(pts.rows(), 1.0 / static_cast<double>(pts.rows()))));
            emit(g, io::to_json(a).dump(2));
        } else if (sub->parsed()) {
            const DesignMatrix a = io::design_from_json(json::parse(io::read_file(in_path)));
            newton.swap_refinement = !no_swap;
            const Selection s = subselect(a, parse_strategy(sub_strategy), k > 0 ? k : a.cols(), newton);
            if (g.format == "csv" && !g.out.empty() && g.out.size() > 4 && g.out.substr(g.out.size() - 4) == ".csv") {
                emit(g, io::points_csv(take_rows(a.points, s.row_indices), &s.renormalized_weights));
            } else {
                emit(g, io::to_json(s, a).dump(2));
            }
        } else if (lsq->parsed()) {
            const DesignMatrix a = io::design_from_json(json::parse(io::read_file(in_path)));
            const auto rows = io::read_csv(io::read_file(values_path));
            require(static_cast<Index>(rows.size()) == a.rows(), "value count does not match the design rows");
            Vector f(a.rows());
            for (Index i = 0; i < a.rows(); ++i) f(i) = io::parse_double(rows[static_cast<std::size_t>(i)].at(0));
            const LeastSquaresResult r = solve_least_squares(a, weighted_rhs(a, f));
            if (g.format == "json") {
                const Moments mo = moments(r.x, a.basis);
                emit(g, json{{"coefficients", io::to_json(r.x)},
                             {"residual_norm", r.residual_norm},
                             {"mean", mo.mean},
                             {"variance", mo.variance}}
                            .dump(2));
            } else {
                io::CsvWriter w({"index", "coefficient"});
                for (Index j = 0; j < r.x.size(); ++j) {
                    std::string label;
                    for (int v : a.basis.indices[static_cast<std::size_t>(j)]) label += (label.empty() ? "" : " ") + std::to_string(v);
                    w.row_strings({label, io::format_double(r.x(j))});
                }
                emit(g, w.str());
            }
        } else if (gram->parsed()) {
            const DesignMatrix a = io::design_from_json(json::parse(io::read_file(in_path)));
            const GramReport r = gram_report(a, tol);
            if (g.format == "json") {
                json j = io::to_json(r);
                const double kappa = condition_number(a);
                j["condition_number_A"] = io::number(kappa);
                j["condition_number_G"] = io::number(kappa * kappa);
                emit(g, j.dump(2));
            } else {
                emit(g, io::gram_csv(r));
            }
        } else if (exp->parsed()) {
            json params = json::object();
            if (!params_file.empty()) params = json::parse(io::read_file(params_file));
            if (!params_text.empty()) params.update(json::parse(params_text));
            if (trials > 0) params["trials"] = trials;
            if (!seeds.empty()) params["seeds"] = seeds;
            const std::filesystem::path dir = g.out.empty() ? std::filesystem::path("out") / exp_name : std::filesystem::path(g.out);
            const ExperimentResult r = run_experiment(exp_name, params, dir);
            if (hints && r.ok) gnuplot_hints(dir, r.manifest);
            if (!r.ok) {
                std::cerr << json{{"error", r.manifest.at("error")}, {"failing_stage", r.manifest.at("failing_stage")}}.dump()
                          << '\n';
                return 2;
            }
            std::cout << (dir / "manifest.json").string() << '\n';
        } else if (val->parsed()) {
            const json report = validate_selection(json::parse(io::read_file(selection_path)),
                                                   json::parse(io::read_file(in_path)));
            emit(g, report.dump(2));
            return report.at("valid").get<bool>() ? 0 : 3;
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const json::exception& e) {
        return fail("parse_error", e.what());
    } catch (const std::exception& e) {
        return fail("error", e.what());
    }
    return 0;
}
