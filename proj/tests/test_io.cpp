#include "quadkit/experiments.hpp"
#include "quadkit/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace quadkit;
using io::json;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("quadkit_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

DesignMatrix small_design()
{
    const auto rule = gauss_rule({Family::legendre}, 6);
    const auto basis = multi_index_set(IndexKind::total_order, 1, 5);
    return design_matrix(basis, recurrences_for(basis, Distribution{Family::legendre}), rule.points, rule.weights);
}

} // namespace

TEST(Format, SeventeenDigitsRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, -0.0}) {
        EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(1.0), "1");
    EXPECT_THROW(io::parse_double("1.0x"), InvalidArgument);
}

TEST(Csv, RuleRoundTrip)
{
    const auto g = gauss_rule({Family::legendre}, 3);
    const auto r = tensor_grid({g, g});
    const auto back = io::rule_from_csv(io::rule_csv(r));
    EXPECT_EQ(back.points, r.points);
    EXPECT_EQ(back.weights, r.weights);
    EXPECT_EQ(io::rule_csv(r).substr(0, 12), "x1,x2,weight");
}

TEST(Csv, GramRows)
{
    const auto rep = gram_report(small_design());
    const auto rows = io::read_csv(io::gram_csv(rep));
    EXPECT_EQ(rows.size(), 36u);
    EXPECT_EQ(rows[0][0], "0");
    EXPECT_EQ(rows[0][3], "1");
}

TEST(Json, RuleRoundTrip)
{
    const std::vector<RecurrenceTable> t(2, recurrence_coefficients({Family::legendre}, 8));
    const auto s = sparse_grid({2, 3, Growth::linear}, t);
    const auto back = io::rule_from_json(json::parse(io::to_json(s).dump()));
    EXPECT_EQ(back.points, s.points);
    EXPECT_EQ(back.weights, s.weights);
    EXPECT_EQ(back.provenance, Provenance::sparse);
    EXPECT_EQ(back.has_negative_weights, s.has_negative_weights);
    EXPECT_EQ(back.metadata, s.metadata);
}

TEST(Json, DesignRoundTripRecomputesEntries)
{
    const DesignMatrix a = small_design();
    const json j = json::parse(io::to_json(a).dump());
    EXPECT_FALSE(j.contains("entries"));
    const DesignMatrix b = io::design_from_json(j);
    EXPECT_EQ(b.entries, a.entries);
    EXPECT_EQ(io::design_checksum(b), io::design_checksum(a));
    json bad = j;
    bad["points"][0][0] = 0.123;
    EXPECT_THROW(io::design_from_json(bad), InvalidArgument);
}

TEST(Json, HermiteSupportSurvives)
{
    const auto basis = multi_index_set(IndexKind::total_order, 1, 2);
    Matrix pts(3, 1);
    pts << -1, 0, 1;
    const auto a = design_matrix(basis, recurrences_for(basis, Distribution{Family::hermite}), pts, Vector::Constant(3, 1.0 / 3));
    const DesignMatrix b = io::design_from_json(json::parse(io::to_json(a).dump()));
    EXPECT_TRUE(std::isinf(b.recurrences[0].support_upper));
}

TEST(Validate, IdentityOnGaussDesign)
{
    const DesignMatrix a = small_design();
    const Selection s = qr_subselect(a, 6);
    const json report = validate_selection(io::to_json(s, a), io::to_json(a));
    EXPECT_TRUE(report.at("valid").get<bool>());
    EXPECT_NEAR(report.at("condition_number").get<double>(), 1.0, 1e-10);
    EXPECT_TRUE(report.at("failing_entries").empty());
}

TEST(Validate, PaduaFailsOnlyAtHighestPower)
{
    const PaduaOutcome p = padua_experiment(4);
    const json report = validate_selection(io::to_json(p.selection, p.design), io::to_json(p.design));
    EXPECT_TRUE(report.at("valid").get<bool>());
    ASSERT_EQ(report.at("failing_entries").size(), 1u);
    EXPECT_EQ(report.at("failing_entries")[0][0], (std::vector<int>{4, 0}));
    EXPECT_EQ(report.at("failing_entries")[0][1], (std::vector<int>{4, 0}));
}

TEST(Validate, Errors)
{
    const DesignMatrix a = small_design();
    json sel = io::to_json(qr_subselect(a, 6), a);
    json bad = sel;
    bad["row_indices"][5] = 7; // m + 1
    EXPECT_THROW(validate_selection(bad, io::to_json(a)), InvalidArgument);
    bad = sel;
    bad["design_checksum"] = "0000000000000000";
    EXPECT_THROW(validate_selection(bad, io::to_json(a)), InvalidArgument);
    bad = sel;
    bad["objective_report"]["condition_number"] = 5.0;
    EXPECT_FALSE(validate_selection(bad, io::to_json(a)).at("valid").get<bool>());
}

TEST(Experiment, DoeGramFrontiers)
{
    const auto dir = scratch("doe");
    const auto r = run_experiment("doe-gram", json::object(), dir);
    ASSERT_TRUE(r.ok) << r.manifest.dump();
    const auto rows = io::read_csv(io::read_file((dir / "frontier.csv").string()));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0][0], "gauss");
    EXPECT_EQ(rows[0][2], "8"); // basis up to degree 4 caps the visible frontier at 8
    EXPECT_EQ(rows[1][2], "7");
    EXPECT_GE(std::stoi(rows[2][2]), 5);
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
}

TEST(Experiment, ReproducibleBodies)
{
    const auto d1 = scratch("rep1");
    const auto d2 = scratch("rep2");
    const json params = {{"orders", {1, 2, 3}}, {"trials", 3}};
    ASSERT_TRUE(run_experiment("cs-conditioning", params, d1).ok);
    ASSERT_TRUE(run_experiment("cs-conditioning", params, d2).ok);
    for (const char* f : {"trials.csv", "summary.csv", "gram_christoffel.csv"}) {
        EXPECT_EQ(io::read_file((d1 / f).string()), io::read_file((d2 / f).string())) << f;
    }
}

TEST(Experiment, ManifestWrittenOnFailure)
{
    const auto dir = scratch("fail");
    const auto r = run_experiment("doe-gram", json{{"rules", {"gauss", "bogus"}}}, dir);
    EXPECT_FALSE(r.ok);
    const json m = json::parse(io::read_file((dir / "manifest.json").string()));
    EXPECT_EQ(m.at("status"), "failed");
    EXPECT_EQ(m.at("failing_stage"), "bogus");
    EXPECT_EQ(m.at("error").at("kind"), "invalid_argument");
}

TEST(Experiment, UnknownParameterRejected)
{
    const auto dir = scratch("badparam");
    const auto r = run_experiment("padua", json{{"degree", 4}}, dir);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.manifest.at("failing_stage"), "setup");
}

TEST(Experiment, PaduaMatchesClosedForm)
{
    const auto dir = scratch("padua");
    ASSERT_TRUE(run_experiment("padua", json::object(), dir).ok);
    const json s = json::parse(io::read_file((dir / "summary.json").string()));
    EXPECT_TRUE(s.at("matches_closed_form").get<bool>());
    EXPECT_EQ(io::read_csv(io::read_file((dir / "selection.csv").string())).size(), 15u);
}
