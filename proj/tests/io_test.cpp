#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <regex>
#include <sstream>

using namespace psel;

namespace {

std::size_t count(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

} // namespace

TEST(Format, FullPrecisionRoundTrips)
{
    for (double v : {0.1, 249.6, -1.0 / 3.0, 1e-300, 6.02214076e23}) {
        const auto s = format_full(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(format_fixed(249.64), "249.6");
    EXPECT_EQ(format_fixed(2.0, 3), "2.000");
}

TEST(ObjectiveTableIo, ReadsFixture)
{
    const auto t = read_objective_table(support::data_file("avian_richness_results.csv"));
    ASSERT_EQ(t.points.size(), 24u);
    ASSERT_TRUE(t.n);
    EXPECT_EQ(*t.n, 49u);
    EXPECT_FALSE(t.c_hat);
    EXPECT_EQ(t.points[0].model_id, "1");
    EXPECT_EQ(t.points[0].f1, 369.6);
    EXPECT_EQ(t.points.back().p, 7u);
}

TEST(ObjectiveTableIo, FitResultsRoundTrip)
{
    const auto data = support::simulate_richness(21);
    const auto list = load_model_list(support::data_file("avian_richness_models.txt"), data.covariate_names());
    std::vector<FittedModel> fits;
    for (const auto& s : list) fits.push_back(fit_model(data, s, Family::poisson));
    const auto dir = support::scratch_dir("io_roundtrip");
    const auto file = dir / "results.csv";
    {
        std::ofstream out(file);
        write_fit_results(out, fits);
    }
    const auto t = read_objective_table(file.string());
    const auto expected = objective_points(fits);
    ASSERT_EQ(t.points.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_EQ(t.points[i].model_id, expected[i].model_id);
        EXPECT_EQ(t.points[i].f1, expected[i].f1);
        EXPECT_EQ(t.points[i].f2, expected[i].f2);
        EXPECT_EQ(t.points[i].p, expected[i].p);
    }
    EXPECT_EQ(*t.n, 49u);
    ASSERT_TRUE(t.c_hat);
    EXPECT_NEAR(*t.c_hat, estimate_c_hat(fits), 1e-12);
}

TEST(ObjectiveTableIo, SkipsNonConvergedAndRejectsBadRows)
{
    const auto dir = support::scratch_dir("io_bad");
    write_file(dir / "a.csv", "label,f1,f2,converged\nx,1.5,2,true\ny,nan,3,false\n");
    const auto a = read_objective_table((dir / "a.csv").string());
    EXPECT_EQ(a.points.size(), 1u);
    EXPECT_EQ(a.skipped_nonconverged, 1u);
    EXPECT_EQ(a.points[0].p, 2u);

    write_file(dir / "b.csv", "label,f1\nx,1\n");
    EXPECT_THROW(read_objective_table((dir / "b.csv").string()), DataError);
    write_file(dir / "c.csv", "label,f1,f2\nx,1,2\nx,2,3\n");
    EXPECT_THROW(read_objective_table((dir / "c.csv").string()), DataError);
    write_file(dir / "d.csv", "label,f1,f2\nx,abc,2\n");
    EXPECT_THROW(read_objective_table((dir / "d.csv").string()), DataError);
    write_file(dir / "e.csv", "label,f1,f2\nx,1,2.5\n");
    EXPECT_THROW(read_objective_table((dir / "e.csv").string()), DataError);
}

TEST(FrontierJson, Schema)
{
    const auto rep = pareto_frontier(support::avian_points());
    const auto j = nlohmann::json::parse(frontier_to_json(rep).dump());
    ASSERT_TRUE(j["points"].is_array());
    EXPECT_EQ(j["points"].size(), 24u);
    for (const auto& p : j["points"]) {
        for (const char* key : {"id", "f1", "f2", "p", "pareto"}) EXPECT_TRUE(p.contains(key)) << key;
    }
    EXPECT_EQ(j["frontier_ids"].size(), 6u);
    EXPECT_EQ(j["dominated_ids"].size(), 18u);
    EXPECT_EQ(j["dominated_count"], 18);
    EXPECT_EQ(j["elbow_id"], "area + temp");
    ASSERT_EQ(j["marginal_returns"].size(), 5u);
    EXPECT_NEAR(j["marginal_returns"][0]["delta_f1"].get<double>(), 86.0, 1e-9);
    EXPECT_EQ(j["marginal_returns"][0]["from"], "1");
    EXPECT_TRUE(j["duplicate_groups"].empty());

    const std::vector<ObjectivePoint> one{{"x", 1.0, 1.0, 1}};
    EXPECT_TRUE(frontier_to_json(pareto_frontier(one))["elbow_id"].is_null());
}

TEST(RankedCsv, Columns)
{
    CriterionSpec aic;
    const auto table = rank_models(support::avian_points(), aic, 49);
    std::ostringstream out;
    write_ranked_csv(out, table);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "rank,label,p,f1,f2,score,delta");
    std::getline(in, line);
    EXPECT_EQ(line.rfind("1,area + precip + precip^2 + temp + temp^2,6,", 0), 0u) << line;
    std::size_t rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 24u);
}

TEST(PathCsv, Columns)
{
    const auto data = support::simulate_richness(22);
    const auto design = build_design_matrix(data, parse_model_formula("area + temp"), true);
    const std::vector<double> grid{0.0, 1.0};
    const auto path = regularization_path(design, data.response_vector(), 2.0, grid);
    std::ostringstream out;
    write_path_csv(out, path, design.column_names());
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "w2,rss,penalty,objective,(Intercept),area,temp");
    EXPECT_EQ(count(out.str(), "\n"), 3u);
}

TEST(Svg, FixturePlot)
{
    const auto rep = pareto_frontier(support::avian_points());
    const auto plain = render_frontier_svg(rep);
    EXPECT_EQ(count(plain, "<circle class=\"point "), 24u);
    EXPECT_EQ(count(plain, "<circle class=\"point frontier\""), 6u);
    EXPECT_EQ(count(plain, "<circle class=\"point dominated\""), 18u);
    EXPECT_EQ(count(plain, "<polyline class=\"frontier-line\""), 1u);
    EXPECT_EQ(count(plain, "class=\"highlight\""), 0u);
    EXPECT_NE(plain.find("model complexity"), std::string::npos);

    const std::regex poly("points=\"([^\"]*)\"");
    std::smatch m;
    ASSERT_TRUE(std::regex_search(plain, m, poly));
    EXPECT_EQ(count(m[1].str(), ","), 6u);

    PlotOptions opt;
    opt.highlight_id = "area + precip + precip^2 + temp + temp^2";
    const auto lit = render_frontier_svg(rep, opt);
    EXPECT_EQ(count(lit, "<circle class=\"highlight\""), 1u);
    EXPECT_NE(lit.find("selected: area + precip + precip^2 + temp + temp^2"), std::string::npos);
    EXPECT_EQ(render_frontier_svg(rep, opt), lit);
}
