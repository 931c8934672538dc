#pragma once

// Wall-clock scaling of the marginal-likelihood evaluators in p at fixed N.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kis {

enum class MarginalMethod { kis, woodbury, naive };

std::string method_name(MarginalMethod m);
// "kis", "woodbury" or "naive"; throws std::invalid_argument otherwise.
MarginalMethod parse_method(const std::string& name);

struct BenchmarkOptions {
  std::size_t n = 50;
  std::vector<std::size_t> p_grid;
  int repetitions = 5;
  std::uint64_t seed = 1;
  // Explicit-feature routes skip cells whose feature dimension exceeds this.
  std::size_t feature_cap = 400000;
  // Each repetition loops the evaluation until this much time has elapsed
  // and reports the per-evaluation average.
  double min_seconds = 0.02;
};

struct BenchmarkRow {
  std::string method;
  std::size_t n = 0;
  std::size_t p = 0;
  int rep = 0;
  double seconds = 0.0;  // per evaluation; NaN for skipped cells
  std::size_t bytes_peak_estimate = 0;
  bool skipped = false;
};

// The kernel is the isotropic block kernel (all block variances 1) and the
// explicit routes use the matching all-ones prior, so every method computes
// the same quantity.
std::vector<BenchmarkRow> benchmark_marginal(MarginalMethod method, const BenchmarkOptions& opts);

// columns: method,N,p,rep,seconds,bytes_peak_estimate
void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRow>& rows);

struct ScalingFit {
  std::string method;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<std::size_t> p;
  std::vector<double> median_seconds;
};

// Least-squares slope of log(median seconds) against log p for one method.
ScalingFit fit_scaling(const std::vector<BenchmarkRow>& rows, const std::string& method);

std::size_t peak_bytes_estimate(MarginalMethod method, std::size_t n, std::size_t p);

}  // namespace kis
