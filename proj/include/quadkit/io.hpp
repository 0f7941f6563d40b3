#pragma once

#include "quadkit/diagnostics.hpp"
#include "quadkit/error.hpp"
#include "quadkit/orthopoly.hpp"
#include "quadkit/quadrature.hpp"
#include "quadkit/sampling.hpp"
#include "quadkit/subselect.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace quadkit::io {

using json = nlohmann::json;

/// Locale-independent rendering with 17 significant digits.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

/// Rows of comma-separated cells with one header line.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size())
    {
        row_strings(header);
    }

    CsvWriter& row(std::initializer_list<double> values) { return row(std::vector<double>(values)); }

    CsvWriter& row(const std::vector<double>& values)
    {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_double(v));
        return row_strings(cells);
    }

    CsvWriter& row_strings(const std::vector<std::string>& cells)
    {
        if (cells.size() != columns_) throw InvalidArgument("CsvWriter: wrong number of cells");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        return *this;
    }

    std::string str() const { return out_.str(); }

private:
    std::size_t columns_;
    std::ostringstream out_;
};

inline std::vector<std::vector<std::string>> read_csv(const std::string& text, bool skip_header = true)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && skip_header) {
            first = false;
            continue;
        }
        first = false;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    f << content;
}

// ---------------------------------------------------------------------------
// CSV

/// x1..xd[,weight]
inline std::string points_csv(const Matrix& points, const Vector* weights = nullptr)
{
    std::vector<std::string> header;
    for (Index k = 0; k < points.cols(); ++k) header.push_back("x" + std::to_string(k + 1));
    if (weights) header.push_back("weight");
    CsvWriter w(header);
    for (Index i = 0; i < points.rows(); ++i) {
        std::vector<double> row(points.row(i).begin(), points.row(i).end());
        if (weights) row.push_back((*weights)(i));
        w.row(row);
    }
    return w.str();
}

inline std::string rule_csv(const QuadratureRule& rule) { return points_csv(rule.points, &rule.weights); }

inline QuadratureRule rule_from_csv(const std::string& text)
{
    const auto rows = read_csv(text);
    require(!rows.empty(), "rule_from_csv: no rows");
    const std::size_t cols = rows.front().size();
    require(cols >= 2, "rule_from_csv: need coordinates and a weight column");
    QuadratureRule rule;
    rule.points.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols - 1));
    rule.weights.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == cols, "rule_from_csv: ragged row " + std::to_string(i));
        for (std::size_t k = 0; k + 1 < cols; ++k) rule.points(static_cast<Index>(i), static_cast<Index>(k)) = parse_double(rows[i][k]);
        rule.weights(static_cast<Index>(i)) = parse_double(rows[i][cols - 1]);
    }
    rule.has_negative_weights = (rule.weights.array() < 0.0).any();
    return rule;
}

/// p,q,value,exact (n^2 rows)
inline std::string gram_csv(const GramReport& r)
{
    CsvWriter w({"p", "q", "value", "exact"});
    for (Index p = 0; p < r.gram.rows(); ++p) {
        for (Index q = 0; q < r.gram.cols(); ++q) {
            w.row_strings({std::to_string(p), std::to_string(q), format_double(r.gram(p, q)),
                           r.exactness_frontier[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] ? "1" : "0"});
        }
    }
    return w.str();
}

// ---------------------------------------------------------------------------
// JSON

inline json number(double v)
{
    if (std::isfinite(v)) return v;
    return format_double(v); // "inf", "-inf", "nan"
}

inline double to_double(const json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_double(j.get<std::string>());
    if (j.is_null()) return std::nan("");
    throw InvalidArgument("expected a number");
}

inline json to_json(const Matrix& m)
{
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) out.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return out;
}

inline json to_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

inline Matrix matrix_from_json(const json& j)
{
    require(j.is_array(), "expected an array of rows");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        require(static_cast<Index>(j[static_cast<std::size_t>(i)].size()) == cols, "ragged matrix");
        for (Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

inline Vector vector_from_json(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline json to_json(const Distribution& d)
{
    return {{"family", std::string(to_string(d.family))}, {"a", d.a}, {"b", d.b}};
}

inline Distribution distribution_from_json(const json& j)
{
    Distribution d;
    d.family = parse_family(j.at("family").get<std::string>());
    d.a = j.value("a", 0.0);
    d.b = j.value("b", 0.0);
    return d;
}

inline json to_json(const RecurrenceTable& t)
{
    return {{"distribution", to_json(t.distribution)},
            {"alpha", t.alpha},
            {"beta", t.beta},
            {"support", {number(t.support_lower), number(t.support_upper)}}};
}

inline RecurrenceTable recurrence_from_json(const json& j)
{
    RecurrenceTable t;
    t.distribution = distribution_from_json(j.at("distribution"));
    t.alpha = j.at("alpha").get<std::vector<double>>();
    t.beta = j.at("beta").get<std::vector<double>>();
    t.support_lower = to_double(j.at("support")[0]);
    t.support_upper = to_double(j.at("support")[1]);
    require(t.alpha.size() == t.beta.size(), "recurrence table: alpha and beta lengths differ");
    return t;
}

inline json to_json(const MultiIndexSet& s)
{
    return {{"dim", s.dim}, {"kind", std::string(to_string(s.kind))}, {"order", s.order}, {"q", s.q},
            {"indices", s.indices}};
}

inline MultiIndexSet index_set_from_json(const json& j)
{
    MultiIndexSet s;
    s.dim = j.at("dim").get<int>();
    s.kind = parse_index_kind(j.at("kind").get<std::string>());
    s.order = j.at("order").get<int>();
    s.q = j.value("q", 1.0);
    if (j.contains("indices")) {
        s.indices = j.at("indices").get<std::vector<MultiIndex>>();
        for (const auto& p : s.indices) require(static_cast<int>(p.size()) == s.dim, "index set: wrong tuple length");
    } else {
        s = multi_index_set(s.kind, s.dim, s.order, s.q);
    }
    return s;
}

inline json to_json(const QuadratureRule& r)
{
    return {{"points", to_json(r.points)},
            {"weights", to_json(r.weights)},
            {"provenance", std::string(to_string(r.provenance))},
            {"has_negative_weights", r.has_negative_weights},
            {"metadata", r.metadata}};
}

inline QuadratureRule rule_from_json(const json& j)
{
    QuadratureRule r;
    r.points = matrix_from_json(j.at("points"));
    r.weights = vector_from_json(j.at("weights"));
    r.provenance = parse_provenance(j.value("provenance", std::string("gauss")));
    r.has_negative_weights = j.value("has_negative_weights", false);
    if (j.contains("metadata")) r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    require(r.points.rows() == r.weights.size(), "rule: point and weight counts differ");
    return r;
}

/// FNV-1a over the 17-digit text of points, weights and basis indices.
inline std::string design_checksum(const DesignMatrix& a)
{
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= ';';
        h *= 1099511628211ULL;
    };
    for (Index i = 0; i < a.points.rows(); ++i)
        for (Index k = 0; k < a.points.cols(); ++k) feed(format_double(a.points(i, k)));
    for (Index i = 0; i < a.weights.size(); ++i) feed(format_double(a.weights(i)));
    for (const auto& p : a.basis.indices)
        for (int v : p) feed(std::to_string(v));
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

/// Entries are not stored; they are recomputed from points, weights, basis
/// and recurrences on load.
inline json to_json(const DesignMatrix& a)
{
    json rec = json::array();
    for (const auto& t : a.recurrences) rec.push_back(to_json(t));
    return {{"rows", a.rows()},
            {"cols", a.cols()},
            {"points", to_json(a.points)},
            {"weights", to_json(a.weights)},
            {"basis", to_json(a.basis)},
            {"recurrences", rec},
            {"checksum", design_checksum(a)}};
}

inline DesignMatrix design_from_json(const json& j)
{
    std::vector<RecurrenceTable> rec;
    for (const auto& t : j.at("recurrences")) rec.push_back(recurrence_from_json(t));
    DesignMatrix a = design_matrix(index_set_from_json(j.at("basis")), std::move(rec),
                                   matrix_from_json(j.at("points")), vector_from_json(j.at("weights")));
    if (j.contains("checksum") && j.at("checksum").get<std::string>() != design_checksum(a)) {
        throw InvalidArgument("design: checksum mismatch");
    }
    return a;
}

inline json to_json(const ObjectiveReport& r)
{
    json out = json::object();
    for (const auto& [k, v] : r) out[k] = number(v);
    return out;
}

inline json to_json(const Selection& s, const DesignMatrix& a)
{
    json out = {{"strategy", std::string(to_string(s.strategy))},
                {"k", s.size()},
                {"row_indices", s.row_indices},
                {"weights", to_json(s.renormalized_weights)},
                {"points", to_json(take_rows(a.points, s.row_indices))},
                {"objective_report", to_json(s.objective_report)},
                {"design_checksum", design_checksum(a)}};
    if (s.z_relaxed) out["z_relaxed"] = to_json(*s.z_relaxed);
    return out;
}

inline Selection selection_from_json(const json& j)
{
    Selection s;
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.row_indices = j.at("row_indices").get<std::vector<Index>>();
    s.renormalized_weights = vector_from_json(j.at("weights"));
    if (j.contains("z_relaxed")) s.z_relaxed = vector_from_json(j.at("z_relaxed"));
    if (j.contains("objective_report"))
        for (const auto& [k, v] : j.at("objective_report").items()) s.objective_report[k] = to_double(v);
    return s;
}

inline json to_json(const SampleSet& s)
{
    json dens = json::array();
    for (const auto& d : s.densities) dens.push_back(to_json(d));
    return {{"points", to_json(s.points)},
            {"strategy", std::string(to_string(s.strategy))},
            {"seed", s.seed},
            {"densities", dens},
            {"algorithm", s.algorithm}};
}

inline json to_json(const GramReport& r)
{
    return {{"gram", to_json(r.gram)},
            {"max_offdiag_error", r.max_offdiag_error},
            {"exactness_frontier", r.exactness_frontier},
            {"tol", r.tol}};
}

} // namespace quadkit::io
