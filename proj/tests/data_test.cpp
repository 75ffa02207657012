#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

using namespace psel;

namespace {

std::string write_file(const std::filesystem::path& dir, const std::string& name, const std::string& body)
{
    const auto path = (dir / name).string();
    std::ofstream(path) << body;
    return path;
}

std::vector<std::string> covs() { return {"area", "temp", "precip"}; }

} // namespace

TEST(LoadDataset, ParsesThreeRowsAndSkipsTextColumns)
{
    const auto dir = support::scratch_dir("data_load");
    const auto path = write_file(dir, "d.csv", "state,richness,area\nAL,10,1.5\nAK,20,2.5\nAZ,30,3.5\n");
    const auto d = load_dataset(path, "richness");
    EXPECT_EQ(d.n(), 3u);
    EXPECT_EQ(d.covariate_names(), std::vector<std::string>{"area"});
    EXPECT_EQ(d.response(), (std::vector<double>{10, 20, 30}));
    EXPECT_EQ(d.covariate("area"), (std::vector<double>{1.5, 2.5, 3.5}));
    EXPECT_EQ(d.row_labels(), (std::vector<std::string>{"AL", "AK", "AZ"}));
    EXPECT_TRUE(d.response_is_counts());
}

TEST(LoadDataset, NonNumericCovariateCellNamesRowAndColumn)
{
    const auto dir = support::scratch_dir("data_bad_cell");
    const auto path = write_file(dir, "d.csv", "richness,area,temp\n1,2,3\n4,oops,6\n");
    try {
        load_dataset(path, "richness");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'area'"), std::string::npos) << msg;
    }
}

TEST(LoadDataset, ErrorPaths)
{
    const auto dir = support::scratch_dir("data_errors");
    EXPECT_THROW(load_dataset((dir / "missing.csv").string(), "y"), DataError);
    const auto no_resp = write_file(dir, "a.csv", "a,b\n1,2\n");
    EXPECT_THROW(load_dataset(no_resp, "y"), DataError);
    const auto ragged = write_file(dir, "b.csv", "y,a\n1,2\n3\n");
    try {
        load_dataset(ragged, "y");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    const auto empty = write_file(dir, "c.csv", "y,a\n");
    EXPECT_THROW(load_dataset(empty, "y"), DataError);
    const auto dup = write_file(dir, "e.csv", "y,a,a\n1,2,3\n");
    EXPECT_THROW(load_dataset(dup, "y"), DataError);
}

TEST(LoadDataset, HandlesQuotesBomAndCrlf)
{
    const auto dir = support::scratch_dir("data_quotes");
    const auto path = write_file(dir, "d.csv", "\xEF\xBB\xBFname,y,x\r\n\"Washington, D.C.\",3,0.5\r\n\"Ohio\",4,1.5\r\n");
    const auto d = load_dataset(path, "y");
    EXPECT_EQ(d.n(), 2u);
    EXPECT_EQ(d.row_labels().front(), "Washington, D.C.");
    EXPECT_EQ(d.covariate("x"), (std::vector<double>{0.5, 1.5}));
}

TEST(DatasetCreate, EnforcesInvariants)
{
    EXPECT_THROW(Dataset::create("y", {}, {}, {}), DataError);
    EXPECT_THROW(Dataset::create("y", {1, 2}, {"a"}, {{1}}), DataError);
    EXPECT_THROW(Dataset::create("y", {1, 2}, {"a", "a"}, {{1, 2}, {3, 4}}), DataError);
    EXPECT_THROW(Dataset::create("y", {1, 2}, {""}, {{1, 2}}), DataError);
    EXPECT_THROW(Dataset::create("y", {1, std::nan("")}, {}, {}), DataError);
    EXPECT_FALSE(Dataset::create("y", {1.5, 2}, {}, {}).response_is_counts());
    EXPECT_FALSE(Dataset::create("y", {-1, 2}, {}, {}).response_is_counts());
}

TEST(ParseFormula, StarredSixParameterModel)
{
    const auto c = covs();
    const auto spec = parse_model_formula("area + precip + precip^2 + temp + temp^2", c);
    EXPECT_EQ(spec.parameter_count(), 6u);
    EXPECT_EQ(spec.label(), "area + precip + precip^2 + temp + temp^2");
}

TEST(ParseFormula, EmptyIsInterceptOnly)
{
    const auto spec = parse_model_formula("");
    EXPECT_EQ(spec.parameter_count(), 1u);
    EXPECT_TRUE(spec.terms().empty());
    EXPECT_EQ(parse_model_formula("   "), spec);
    EXPECT_EQ(parse_model_formula("1"), spec);
}

TEST(ParseFormula, Errors)
{
    const auto c = covs();
    EXPECT_THROW(parse_model_formula("area + bogus", c), DataError);
    EXPECT_THROW(parse_model_formula("area + + temp"), DataError);
    EXPECT_THROW(parse_model_formula("area^3"), DataError);
    EXPECT_THROW(parse_model_formula("area^"), DataError);
    EXPECT_THROW(parse_model_formula("3area"), DataError);
    EXPECT_THROW(parse_model_formula("area + area"), DataError);
    EXPECT_THROW(parse_model_formula("area +"), DataError);
}

TEST(ParseFormula, QuadraticDoesNotImplyLinearAndOrderIsCanonical)
{
    const auto spec = parse_model_formula("temp^2 +area");
    EXPECT_EQ(spec.parameter_count(), 3u);
    EXPECT_FALSE(spec.contains({"temp", 1}));
    EXPECT_EQ(spec.label(), "area + temp^2");
    EXPECT_EQ(parse_model_formula(" temp ^ 2 + area "), spec);
}

TEST(ParseFormula, LabelRoundTripOverEnumeration)
{
    const std::vector<std::string> names{"a", "b_2", "c.x", "d"};
    for (const auto& spec : enumerate_hierarchical_models(names)) {
        EXPECT_EQ(parse_model_formula(spec.label(), names), spec) << spec.label();
    }
}

TEST(Enumerate, CountsAndOrdering)
{
    const auto c = covs();
    const auto specs = enumerate_hierarchical_models(c);
    ASSERT_EQ(specs.size(), 27u);
    std::set<std::string> labels;
    for (const auto& s : specs) labels.insert(s.label());
    EXPECT_EQ(labels.size(), 27u);
    for (std::size_t i = 1; i < specs.size(); ++i) {
        const auto& a = specs[i - 1];
        const auto& b = specs[i];
        EXPECT_TRUE(a.parameter_count() < b.parameter_count() ||
                    (a.parameter_count() == b.parameter_count() && a.label() < b.label()));
    }
    // every quadratic term comes with its linear term
    for (const auto& s : specs) {
        for (const auto& t : s.terms()) {
            if (t.degree == 2) {
                EXPECT_TRUE(s.contains({t.covariate, 1}));
            }
        }
    }

    const std::vector<std::string> one{"area"};
    const auto base = enumerate_hierarchical_models(one);
    ASSERT_EQ(base.size(), 3u);
    EXPECT_EQ(base[0].label(), "1");
    EXPECT_EQ(base[1].label(), "area");
    EXPECT_EQ(base[2].label(), "area + area^2");

    const std::vector<std::string> five{"a", "b", "c", "d", "e"};
    EXPECT_EQ(enumerate_hierarchical_models(five).size(), 243u);
    EXPECT_THROW(enumerate_hierarchical_models(std::span<const std::string>{}), UsageError);
}

TEST(ModelList, BundledListHas24ModelsInsideTheEnumeration)
{
    const auto c = covs();
    const auto list = load_model_list(support::data_file("avian_richness_models.txt"), c);
    ASSERT_EQ(list.size(), 24u);
    const auto all = enumerate_hierarchical_models(c);
    std::vector<std::string> missing;
    for (const auto& spec : all) {
        if (std::find(list.begin(), list.end(), spec) == list.end()) missing.push_back(spec.label());
    }
    for (const auto& spec : list) {
        EXPECT_NE(std::find(all.begin(), all.end(), spec), all.end()) << spec.label();
    }
    // the three absent specs are the one-quadratic, two-linear forms
    EXPECT_EQ(missing, (std::vector<std::string>{"area + area^2 + precip + temp",
                                                 "area + precip + precip^2 + temp",
                                                 "area + precip + temp + temp^2"}));

    // the results fixture lists the same models, in the same order
    const auto pts = support::avian_points();
    ASSERT_EQ(pts.size(), list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        EXPECT_EQ(pts[i].model_id, list[i].label());
        EXPECT_EQ(pts[i].p, list[i].parameter_count());
    }
}

TEST(ModelList, CommentsAndErrors)
{
    const auto dir = support::scratch_dir("data_models");
    const auto ok = write_file(dir, "m.txt", "# header\n\n1\narea\n  # indented comment\narea + temp\n");
    EXPECT_EQ(load_model_list(ok).size(), 3u);
    const auto dup = write_file(dir, "d.txt", "area\narea\n");
    EXPECT_THROW(load_model_list(dup), DataError);
    const auto bad = write_file(dir, "b.txt", "area\nfoo\n");
    const auto c = covs();
    try {
        load_model_list(bad, c);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(DesignMatrix, NullSpecIsOnesColumn)
{
    const auto d = Dataset::create("y", {1, 2, 3}, {"area"}, {{1, 2, 3}});
    const auto x = build_design_matrix(d, ModelSpec{}, true);
    ASSERT_EQ(x.cols(), 1);
    EXPECT_TRUE((x.matrix().col(0).array() == 1.0).all());
}

TEST(DesignMatrix, StandardizesWithSampleSd)
{
    const auto d = Dataset::create("y", {1, 2, 3}, {"area"}, {{1, 2, 3}});
    const auto x = build_design_matrix(d, parse_model_formula("area"), true);
    ASSERT_EQ(x.cols(), 2);
    EXPECT_DOUBLE_EQ(x.matrix()(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(x.matrix()(1, 1), 0.0);
    EXPECT_DOUBLE_EQ(x.matrix()(2, 1), 1.0);
    EXPECT_DOUBLE_EQ(x.scaling()[0].mean, 2.0);
    EXPECT_DOUBLE_EQ(x.scaling()[0].scale, 1.0);
}

TEST(DesignMatrix, ZeroVarianceRejected)
{
    const auto d = Dataset::create("y", {1, 2, 3}, {"c"}, {{0.1, 0.1, 0.1}});
    EXPECT_THROW(build_design_matrix(d, parse_model_formula("c"), true), DataError);
    EXPECT_NO_THROW(build_design_matrix(d, parse_model_formula("c"), false));
}

TEST(DesignMatrix, QuadraticSquaresRawBeforeStandardizing)
{
    const auto d = Dataset::create("y", {1, 2, 3, 4}, {"t"}, {{1, 2, 3, 5}});
    const auto x = build_design_matrix(d, parse_model_formula("t + t^2"), true);
    ASSERT_EQ(x.column_names(), (std::vector<std::string>{"(Intercept)", "t", "t^2"}));
    // raw squares 1, 4, 9, 25: mean 9.75
    EXPECT_DOUBLE_EQ(x.scaling()[1].mean, 9.75);
    const Eigen::VectorXd sq = x.matrix().col(2) * x.scaling()[1].scale + Eigen::VectorXd::Constant(4, 9.75);
    EXPECT_NEAR(sq[3], 25.0, 1e-12);
}

TEST(DesignMatrix, StandardizedColumnsHaveUnitMoments)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(3.0, 7.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(37), b(37), y(37, 1.0);
        for (auto& v : a) v = z(rng);
        for (auto& v : b) v = std::exp(z(rng) / 7.0);
        const auto d = Dataset::create("y", y, {"a", "b"}, {a, b});
        const auto x = build_design_matrix(d, parse_model_formula("a + a^2 + b + b^2"), true);
        for (Eigen::Index j = 1; j < x.cols(); ++j) {
            const auto m = column_moments(x.matrix().col(j));
            EXPECT_LT(std::abs(m.mean), 1e-12);
            EXPECT_LT(std::abs(m.scale - 1.0), 1e-12);
        }
    }
}

TEST(DesignMatrix, RawScaleBackTransform)
{
    const auto d = Dataset::create("y", {1, 2, 3, 4}, {"t"}, {{1, 2, 4, 8}});
    const auto x = build_design_matrix(d, parse_model_formula("t"), true);
    const auto raw = build_design_matrix(d, parse_model_formula("t"), false);
    Eigen::VectorXd beta(2);
    beta << 0.7, -1.3;
    const Eigen::VectorXd back = x.to_raw_scale(beta);
    EXPECT_LT((x.matrix() * beta - raw.matrix() * back).cwiseAbs().maxCoeff(), 1e-12);
}
