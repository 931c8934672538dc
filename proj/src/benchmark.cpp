#include "kis/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "kis/features.hpp"
#include "kis/kernels.hpp"
#include "kis/likelihood.hpp"

namespace kis {
namespace {

Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.Y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) d.X(r, c) = normal(rng);
  }
  for (Eigen::Index r = 0; r < d.Y.size(); ++r) d.Y[r] = normal(rng);
  return d;
}

double evaluate(MarginalMethod method, const Dataset& d, std::size_t cap) {
  constexpr double sigma2 = 1.0;
  switch (method) {
    case MarginalMethod::kis: {
      const KernelForm k = block_kernel_form({1.0, 1.0, 1.0}, 1.0, d.p());
      return gp_log_marginal(k.gram(d.X), sigma2, d.Y).log_density;
    }
    case MarginalMethod::woodbury: {
      const PriorDiag prior(d.p(), Vector::Ones(static_cast<Eigen::Index>(phi2_dim(d.p()))));
      return woodbury_log_marginal(prior, d, sigma2, cap).log_density;
    }
    case MarginalMethod::naive: {
      const PriorDiag prior(d.p(), Vector::Ones(static_cast<Eigen::Index>(phi2_dim(d.p()))));
      return naive_log_marginal(prior, d, sigma2, cap).log_density;
    }
  }
  throw std::logic_error("unknown method");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string method_name(MarginalMethod m) {
  switch (m) {
    case MarginalMethod::kis: return "kis";
    case MarginalMethod::woodbury: return "woodbury";
    case MarginalMethod::naive: return "naive";
  }
  return "?";
}

MarginalMethod parse_method(const std::string& name) {
  if (name == "kis") return MarginalMethod::kis;
  if (name == "woodbury") return MarginalMethod::woodbury;
  if (name == "naive") return MarginalMethod::naive;
  throw std::invalid_argument("unknown benchmark method '" + name + "' (expected kis, woodbury or naive)");
}

std::size_t peak_bytes_estimate(MarginalMethod method, std::size_t n, std::size_t p) {
  const std::size_t d = phi2_dim(p);
  switch (method) {
    case MarginalMethod::kis: return sizeof(double) * (n * p * 2 + 2 * n * n);
    case MarginalMethod::woodbury: return sizeof(double) * (n * std::min<std::size_t>(d, 1024) + 2 * n * n + 4 * d);
    case MarginalMethod::naive: return sizeof(double) * (n * d + 2 * d * d + 2 * d);
  }
  return 0;
}

std::vector<BenchmarkRow> benchmark_marginal(MarginalMethod method, const BenchmarkOptions& opts) {
  if (opts.n == 0) throw std::invalid_argument("benchmark: N must be >= 1");
  if (opts.repetitions < 1) throw std::invalid_argument("benchmark: repetitions must be >= 1");
  using clock = std::chrono::steady_clock;
  std::vector<BenchmarkRow> rows;
  for (std::size_t p : opts.p_grid) {
    BenchmarkRow base;
    base.method = method_name(method);
    base.n = opts.n;
    base.p = p;
    const bool explicit_route = method != MarginalMethod::kis;
    if (p == 0 || (explicit_route && phi2_dim(p) > opts.feature_cap)) {
      base.skipped = true;
      base.seconds = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(base);
      continue;
    }
    base.bytes_peak_estimate = peak_bytes_estimate(method, opts.n, p);
    const Dataset d = random_dataset(opts.n, p, opts.seed + p);
    volatile double sink = evaluate(method, d, opts.feature_cap);  // warm caches and allocator
    for (int rep = 0; rep < opts.repetitions; ++rep) {
      std::size_t count = 0;
      const auto start = clock::now();
      double elapsed = 0.0;
      do {
        sink = evaluate(method, d, opts.feature_cap);
        ++count;
        elapsed = std::chrono::duration<double>(clock::now() - start).count();
      } while (elapsed < opts.min_seconds);
      BenchmarkRow row = base;
      row.rep = rep;
      row.seconds = elapsed / static_cast<double>(count);
      rows.push_back(row);
    }
    (void)sink;
  }
  return rows;
}

void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRow>& rows) {
  os << "method,N,p,rep,seconds,bytes_peak_estimate\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.method << ',' << r.n << ',' << r.p << ',' << r.rep << ',';
    if (r.skipped) {
      os << "skipped,";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", r.seconds);
      os << buf << ',';
    }
    os << r.bytes_peak_estimate << '\n';
  }
}

ScalingFit fit_scaling(const std::vector<BenchmarkRow>& rows, const std::string& method) {
  ScalingFit fit;
  fit.method = method;
  std::vector<std::size_t> ps;
  for (const auto& r : rows) {
    if (r.method == method && !r.skipped && std::find(ps.begin(), ps.end(), r.p) == ps.end()) ps.push_back(r.p);
  }
  std::sort(ps.begin(), ps.end());
  for (std::size_t p : ps) {
    std::vector<double> t;
    for (const auto& r : rows) {
      if (r.method == method && !r.skipped && r.p == p) t.push_back(r.seconds);
    }
    fit.p.push_back(p);
    fit.median_seconds.push_back(median(t));
  }
  if (fit.p.size() < 2) throw std::invalid_argument("fit_scaling: need at least two grid points for " + method);
  const auto m = static_cast<Eigen::Index>(fit.p.size());
  Matrix A(m, 2);
  Vector b(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    A(k, 0) = std::log(static_cast<double>(fit.p[static_cast<std::size_t>(k)]));
    A(k, 1) = 1.0;
    b[k] = std::log(fit.median_seconds[static_cast<std::size_t>(k)]);
  }
  const Vector coef = A.colPivHouseholderQr().solve(b);
  fit.slope = coef[0];
  fit.intercept = coef[1];
  return fit;
}

}  // namespace kis
