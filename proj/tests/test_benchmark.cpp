#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kis/benchmark.hpp"
#include "kis/features.hpp"

namespace {

using kis::BenchmarkRow;

BenchmarkRow row(const std::string& m, std::size_t p, double s) {
  BenchmarkRow r;
  r.method = m;
  r.n = 10;
  r.p = p;
  r.seconds = s;
  return r;
}

TEST(Benchmark, MethodNames) {
  for (auto m : {kis::MarginalMethod::kis, kis::MarginalMethod::woodbury, kis::MarginalMethod::naive}) {
    EXPECT_EQ(kis::parse_method(kis::method_name(m)), m);
  }
  EXPECT_THROW(kis::parse_method("gp"), std::invalid_argument);
}

TEST(Benchmark, FitRecoversPowerLaw) {
  std::vector<BenchmarkRow> rows;
  for (std::size_t p : {10u, 20u, 40u, 80u}) {
    const double t = 3e-6 * std::pow(static_cast<double>(p), 2.0);
    rows.push_back(row("woodbury", p, t));
    rows.push_back(row("woodbury", p, 5 * t));  // outlier
    rows.push_back(row("woodbury", p, t));
    rows.push_back(row("kis", p, 1.0));
  }
  BenchmarkRow skipped = row("woodbury", 160, std::nan(""));
  skipped.skipped = true;
  rows.push_back(skipped);
  const auto fit = kis::fit_scaling(rows, "woodbury");
  EXPECT_NEAR(fit.slope, 2.0, 1e-10);
  EXPECT_NEAR(fit.intercept, std::log(3e-6), 1e-9);
  EXPECT_EQ(fit.p, (std::vector<std::size_t>{10, 20, 40, 80}));
  EXPECT_NEAR(kis::fit_scaling(rows, "kis").slope, 0.0, 1e-12);
  EXPECT_THROW(kis::fit_scaling(rows, "naive"), std::invalid_argument);
}

TEST(Benchmark, SmallGridRunsAndSkipsOverCap) {
  kis::BenchmarkOptions o;
  o.n = 8;
  o.p_grid = {4, 30};
  o.repetitions = 2;
  o.min_seconds = 0.001;
  o.feature_cap = kis::phi2_dim(10);
  const auto k = kis::benchmark_marginal(kis::MarginalMethod::kis, o);
  ASSERT_EQ(k.size(), 4u);
  for (const auto& r : k) {
    EXPECT_FALSE(r.skipped);
    EXPECT_GT(r.seconds, 0.0);
    EXPECT_EQ(r.bytes_peak_estimate, kis::peak_bytes_estimate(kis::MarginalMethod::kis, 8, r.p));
  }
  const auto w = kis::benchmark_marginal(kis::MarginalMethod::woodbury, o);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_TRUE(w.back().skipped);
  EXPECT_TRUE(std::isnan(w.back().seconds));
  std::ostringstream os;
  kis::write_benchmark_csv(os, w);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("method,N,p,rep,seconds,bytes_peak_estimate\n", 0), 0u);
  EXPECT_NE(s.find("woodbury,8,30,0,skipped,"), std::string::npos);
  o.repetitions = 0;
  EXPECT_THROW(kis::benchmark_marginal(kis::MarginalMethod::kis, o), std::invalid_argument);
}

// Cost at fixed p is dominated by the N x N factorization and Gram, so
// doubling N should multiply time by roughly 4 to 8.
TEST(Benchmark, DoublingNAtFixedP) {
  kis::BenchmarkOptions o;
  o.p_grid = {200};
  o.repetitions = 5;
  o.min_seconds = 0.05;
  const auto median = [](std::vector<BenchmarkRow> rows) {
    std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.seconds < b.seconds; });
    return rows[rows.size() / 2].seconds;
  };
  o.n = 200;
  const double t1 = median(kis::benchmark_marginal(kis::MarginalMethod::kis, o));
  o.n = 400;
  const double t2 = median(kis::benchmark_marginal(kis::MarginalMethod::kis, o));
  EXPECT_GE(t2 / t1, 3.5);
  EXPECT_LE(t2 / t1, 9.0);
}

}  // namespace
