#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kis/features.hpp"
#include "kis/io.hpp"
#include "kis/synthetic.hpp"
#include "oracles.hpp"

namespace {

kis::CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return kis::read_csv(in);
}

void expect_csv_error(const std::string& text, std::size_t row, std::size_t col) {
  try {
    parse(text);
    FAIL() << "expected CsvError for:\n" << text;
  } catch (const kis::CsvError& e) {
    EXPECT_EQ(e.row(), row) << e.what();
    EXPECT_EQ(e.column(), col) << e.what();
  }
}

TEST(Csv, ReadsHeaderAndValues) {
  const auto t = parse("a, b ,y\n1,2,3\n\n-4.5,+6e-1,7\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "y"}));
  ASSERT_EQ(t.values.rows(), 2);
  EXPECT_EQ(t.values(1, 0), -4.5);
  EXPECT_EQ(t.values(1, 1), 0.6);
  const auto q = parse("\"x,1\",y\n1,2\n");
  EXPECT_EQ(q.header[0], "x,1");
}

TEST(Csv, ErrorsCarryLocation) {
  expect_csv_error("", 1, 1);
  expect_csv_error("a,y\n1,2\n3\n", 3, 2);
  expect_csv_error("a,y\n1,2\n3,4,5\n", 3, 3);
  expect_csv_error("a,y\n1,abc\n", 2, 2);
  expect_csv_error("a,y\n1,\n", 2, 2);
  expect_csv_error("a,y\nnan,1\n", 2, 1);
  expect_csv_error("a,y\n1,inf\n", 2, 2);
  expect_csv_error("a,,y\n1,2,3\n", 1, 2);
  EXPECT_THROW(kis::read_csv_file("/nonexistent/file.csv"), std::runtime_error);
}

TEST(Csv, SeventeenDigitRoundTrip) {
  std::mt19937_64 rng(1);
  kis::RowMatrix v = oracle::random_X(20, 3, rng, 1e3);
  v(0, 0) = 0.1;
  v(1, 1) = 1e-300;
  v(2, 2) = -std::nextafter(1.0, 2.0);
  std::ostringstream out;
  kis::write_csv(out, {"a", "b", "c"}, v);
  const auto t = parse(out.str());
  EXPECT_EQ(t.values, v);
  EXPECT_THROW(kis::write_csv(out, {"a"}, v), std::invalid_argument);
}

TEST(Dataset, ResponseColumn) {
  const auto t = parse("x1,y,x2\n1,2,3\n4,5,6\n");
  const auto last = kis::dataset_from_table(t);
  EXPECT_EQ(last.Y, (kis::Vector(2) << 3, 6).finished());
  EXPECT_EQ(last.names, (std::vector<std::string>{"x1", "y"}));
  const auto named = kis::dataset_from_table(t, "y");
  EXPECT_EQ(named.Y, (kis::Vector(2) << 2, 5).finished());
  EXPECT_EQ(named.X(1, 1), 6.0);
  EXPECT_THROW(kis::dataset_from_table(t, "z"), std::invalid_argument);
  EXPECT_THROW(kis::dataset_from_table(parse("y\n1\n")), std::invalid_argument);
  EXPECT_THROW(kis::dataset_from_table(parse("x,y\n")), std::invalid_argument);
}

TEST(Dataset, Standardize) {
  auto d = kis::dataset_from_table(parse("a,b,y\n1,5,0\n2,5,0\n3,5,0\n6,5,1\n"));
  const auto s = kis::standardize(d);
  EXPECT_NEAR(d.X.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(std::sqrt(d.X.col(0).squaredNorm() / 3.0), 1.0, 1e-14);
  EXPECT_EQ(d.X.col(1), kis::Vector::Zero(4));
  EXPECT_EQ(s.sd[1], 0.0);
  EXPECT_EQ(d.standardized, (std::vector<bool>{true, true}));
  kis::ColumnScaling bad;
  EXPECT_THROW(kis::apply_scaling(d, bad), std::invalid_argument);
}

TEST(Config, KeyValueAndJson) {
  kis::RunSettings st;
  kis::apply_config_text("# prior\ns = 3\nalpha1 = 4  # shape\nbeta4: \"0.5\"\nseed = 12\n", st);
  EXPECT_EQ(st.skim.s, 3.0);
  EXPECT_EQ(st.skim.alpha1, 4.0);
  EXPECT_EQ(st.skim.beta4, 0.5);
  EXPECT_EQ(st.seed, 12u);
  EXPECT_TRUE(st.explicit_keys.count("alpha1"));
  kis::RunSettings js;
  kis::apply_config_text(R"({"alpha5": 2.5, "s": 1})", js);
  EXPECT_EQ(js.skim.alpha5, 2.5);
  EXPECT_FALSE(js.seed.has_value());
}

TEST(Config, Errors) {
  kis::RunSettings st;
  EXPECT_THROW(kis::apply_config_text("gamma = 1\n", st), std::invalid_argument);
  EXPECT_THROW(kis::apply_config_text("s 1\n", st), std::invalid_argument);
  EXPECT_THROW(kis::apply_config_text("s = one\n", st), std::invalid_argument);
  EXPECT_THROW(kis::apply_config_text("seed = 1.5\n", st), std::invalid_argument);
  EXPECT_THROW(kis::apply_config_text(R"({"s": "2"})", st), std::invalid_argument);
  EXPECT_THROW(kis::apply_config_text(R"({"bogus": 2})", st), std::invalid_argument);
  EXPECT_THROW(kis::apply_config_file("/nonexistent/cfg", st), std::runtime_error);
}

TEST(Synthetic, CovariateVarianceAndTruth) {
  kis::SyntheticSpec spec;
  spec.n = 10000;
  spec.p = 5;
  spec.lambda = 5.0;
  spec.seed = 3;
  const auto s = kis::simulate(spec);
  for (Eigen::Index c = 0; c < 5; ++c) {
    const auto col = s.data.X.col(c);
    const double var = (col.array() - col.mean()).square().sum() / 9999.0;
    EXPECT_NEAR(var / 25.0, 1.0, 0.05);
  }
  EXPECT_EQ(s.true_mains.size(), 5u);
  EXPECT_EQ(s.true_pairs.size(), 10u);
  // noise-free part of y is theta^T Phi_2(x)
  const kis::Vector resid = s.data.Y - kis::phi2_design(s.data.X) * s.theta;
  EXPECT_NEAR(resid.squaredNorm() / 10000.0, 25.0, 1.5);
}

TEST(Synthetic, SeededAndValidated) {
  kis::SyntheticSpec spec;
  spec.n = 20;
  spec.p = 8;
  spec.seed = 9;
  const auto a = kis::simulate(spec);
  const auto b = kis::simulate(spec);
  EXPECT_EQ(a.data.X, b.data.X);
  EXPECT_EQ(a.data.Y, b.data.Y);
  spec.true_mains = {2, 2};
  EXPECT_THROW(kis::simulate(spec), std::invalid_argument);
  spec.true_mains = {9};
  EXPECT_THROW(kis::simulate(spec), std::invalid_argument);
  spec.true_mains = {1, 4};
  const auto c = kis::simulate(spec);
  EXPECT_EQ(c.true_pairs, (std::vector<std::pair<int, int>>{{1, 4}}));
  const auto j = kis::truth_json(spec, c);
  EXPECT_EQ(j["true_mains"], nlohmann::json::array({1, 4}));
  spec.p = 4;
  EXPECT_THROW(kis::simulate(spec), std::invalid_argument);
}

}  // namespace
