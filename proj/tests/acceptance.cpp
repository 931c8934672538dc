// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs a
// single criterion; the exit status is nonzero if any criterion run fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kis/benchmark.hpp"
#include "kis/select.hpp"
#include "kis/synthetic.hpp"
#include "kis/trick.hpp"
#include "oracles.hpp"

namespace {

using kis::Dataset;
using kis::EffectId;
using kis::Matrix;
using kis::Vector;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Dataset make(const kis::RowMatrix& X, const Vector& Y) {
  Dataset d;
  d.X = X;
  d.Y = Y;
  return d;
}

kis::SkimConfig skim_config(std::size_t p, std::size_t n) {
  kis::SkimConfig c;
  c.p = p;
  c.n = n;
  c.s = std::max(1.0, std::min(5.0, static_cast<double>(p) - 1.0));
  return c;
}

// A kernel and its induced prior, either SKIM (p >= 2) or a generic two-way spec.
struct RandomKernel {
  kis::KernelForm kernel;
  kis::PriorDiag prior;
  Vector oracle_prior;
};

RandomKernel random_kernel(std::size_t p, bool skim, std::mt19937_64& rng) {
  if (skim && p >= 2) {
    const auto st = oracle::random_state(skim_config(p, 10), rng);
    return {kis::to_kernel(st), kis::induced_prior(st), oracle::skim_prior(st)};
  }
  std::uniform_int_distribution<int> m(0, 3);
  const auto spec = oracle::random_spec(p, static_cast<std::size_t>(1 + m(rng)), static_cast<std::size_t>(m(rng)), rng);
  return {spec.compile(), kis::induced_prior_diag(spec), oracle::spec_prior(spec)};
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> pd(1, 8);
  std::uniform_int_distribution<int> nd(1, 12);
  std::uniform_real_distribution<double> sd(0.1, 3.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto p = static_cast<std::size_t>(pd(rng));
    const int n = nd(rng);
    const auto rk = random_kernel(p, t % 2 == 0, rng);
    const auto data = make(oracle::random_X(n, static_cast<Eigen::Index>(p), rng), oracle::random_vec(n, rng, 2.0));
    const double s2 = sd(rng);
    const double gp = kis::gp_log_marginal(rk.kernel.gram(data.X), s2, data.Y).log_density;
    const double naive = kis::naive_log_marginal(rk.prior, data, s2).log_density;
    const double wood = kis::woodbury_log_marginal(rk.prior, data, s2).log_density;
    const double scale = std::max({std::abs(gp), std::abs(naive), std::abs(wood)});
    worst = std::max({worst, std::abs(gp - naive) / scale, std::abs(gp - wood) / scale, std::abs(naive - wood) / scale});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 10.0, fmt("max relative disagreement %.3g (tol 1e-8), %.2f s (limit 10 s)", worst, secs)};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> pd(1, 10);
  std::uniform_int_distribution<int> md(0, 3);
  double worst_k = 0.0;
  double worst_closed = 0.0;
  double worst_rec = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto p = static_cast<std::size_t>(pd(rng));
    const auto spec =
        oracle::random_spec(p, static_cast<std::size_t>(1 + md(rng)), static_cast<std::size_t>(md(rng)), rng);
    const Vector S = oracle::spec_prior(spec);
    const auto pi = static_cast<Eigen::Index>(p);
    for (int r = 0; r < 5; ++r) {
      const Vector x = oracle::random_vec(pi, rng);
      const Vector y = oracle::random_vec(pi, rng);
      const double k = kis::two_way_eval(spec, kis::as_span(x), kis::as_span(y));
      worst_k = std::max(worst_k, std::abs(k - oracle::feature_form(S, x, y)) / (1.0 + std::abs(k)));
    }
    const Vector got = kis::induced_prior_diag(spec).variances();
    const Vector rec = oracle::probe_reconstruction(
        [&](const Vector& x, const Vector& y) { return kis::two_way_eval(spec, kis::as_span(x), kis::as_span(y)); }, p);
    for (Eigen::Index j = 0; j < got.size(); ++j) {
      worst_closed = std::max(worst_closed, oracle::rel_err(got[j], S[j]));
      worst_rec = std::max(worst_rec, oracle::rel_err(got[j], rec[j]));
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_k <= 1e-10 && worst_closed <= 1e-10 && worst_rec <= 1e-10 && secs < 5.0;
  return {pass, fmt("kernel vs feature map %.3g, prior vs closed form %.3g, vs reconstruction %.3g (tol 1e-10), "
                    "%.2f s (limit 5 s)",
                    worst_k, worst_closed, worst_rec, secs)};
}

bool exact_combination_check(std::size_t p, const std::vector<int>& subset) {
  const auto probes = kis::ProbeSet::for_subset(subset);
  std::vector<EffectId> effects{EffectId::intercept()};
  for (int i : subset) effects.push_back(EffectId::main(i));
  for (std::size_t a = 0; a < subset.size(); ++a) {
    for (std::size_t b = a + 1; b < subset.size(); ++b) effects.push_back(EffectId::pair(subset[a], subset[b]));
  }
  for (int i : subset) effects.push_back(EffectId::quad(i));
  const auto C = kis::CombinationMatrix::build(effects, probes);
  Matrix F(static_cast<Eigen::Index>(probes.size()), static_cast<Eigen::Index>(kis::phi2_dim(p)));
  for (std::size_t a = 0; a < probes.size(); ++a) F.row(static_cast<Eigen::Index>(a)) = oracle::phi2(probes.rows[a].dense(p)).transpose();
  const Matrix sel = C.rows * F;
  for (std::size_t e = 0; e < effects.size(); ++e) {
    const auto target = static_cast<Eigen::Index>(kis::effect_index(effects[e], p));
    for (Eigen::Index f = 0; f < sel.cols(); ++f) {
      if (sel(static_cast<Eigen::Index>(e), f) != (f == target ? 1.0 : 0.0)) return false;
    }
  }
  return true;
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> pd(1, 6);
  std::uniform_int_distribution<int> nd(1, 20);
  std::uniform_real_distribution<double> sd(0.2, 2.0);
  double worst_single = 0.0;
  double worst_joint = 0.0;
  bool exact = true;
  for (int t = 0; t < 30; ++t) {
    const auto p = static_cast<std::size_t>(pd(rng));
    const int n = nd(rng);
    const auto rk = random_kernel(p, t % 2 == 0, rng);
    const auto data = make(oracle::random_X(n, static_cast<Eigen::Index>(p), rng), oracle::random_vec(n, rng, 2.0));
    const double s2 = sd(rng);
    const auto ref = oracle::conjugate_posterior(rk.oracle_prior, oracle::phi2_rows(data.X), data.Y, s2);
    const kis::GpPosterior post(rk.kernel, data, s2);
    for (const auto& e : kis::all_effects(p)) {
      const auto k = static_cast<Eigen::Index>(kis::effect_index(e, p));
      const auto g = kis::effect_posterior(post, e);
      worst_single = std::max({worst_single, oracle::rel_err(g.mean[0], ref.mean[k]),
                               oracle::rel_err(g.variance(), ref.cov(k, k))});
    }
    // the full joint block and a random sub-block
    std::vector<int> all(p);
    for (std::size_t i = 0; i < p; ++i) all[i] = static_cast<int>(i + 1);
    std::vector<int> sub = all;
    std::shuffle(sub.begin(), sub.end(), rng);
    sub.resize(std::uniform_int_distribution<std::size_t>(1, p)(rng));
    std::sort(sub.begin(), sub.end());
    for (const auto& subset : {all, sub}) {
      const auto j = kis::joint_posterior(post, subset, {true, true, true, true});
      for (std::size_t a = 0; a < j.effects.size(); ++a) {
        const auto ia = static_cast<Eigen::Index>(kis::effect_index(j.effects[a], p));
        const auto aa = static_cast<Eigen::Index>(a);
        worst_joint = std::max(worst_joint, oracle::rel_err(j.mean[aa], ref.mean[ia]));
        for (std::size_t b = 0; b < j.effects.size(); ++b) {
          const auto ib = static_cast<Eigen::Index>(kis::effect_index(j.effects[b], p));
          worst_joint = std::max(worst_joint, oracle::rel_err(j.covariance(aa, static_cast<Eigen::Index>(b)), ref.cov(ia, ib)));
        }
      }
      exact = exact && exact_combination_check(p, subset);
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_single <= 1e-6 && worst_joint <= 1e-6 && exact && secs < 10.0;
  return {pass, fmt("single effects %.3g, joint blocks %.3g (tol 1e-6), exact selection %s, %.2f s (limit 10 s)",
                    worst_single, worst_joint, exact ? "ok" : "FAILED", secs)};
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> pd(2, 10);
  int mismatches = 0;
  for (int t = 0; t < 50; ++t) {
    const auto p = static_cast<std::size_t>(pd(rng));
    const auto st = oracle::random_state(skim_config(p, 50), rng);
    const Vector got = kis::induced_prior(st).variances();
    const Vector want = oracle::skim_prior(st);
    for (Eigen::Index k = 0; k < got.size(); ++k) mismatches += got[k] != want[k];
  }
  // eta1^2 kappa_i^2 <= m^2, up to rounding in the products on each side
  const auto cfg = skim_config(10, 100);
  std::mt19937_64 draw_rng(4005);
  long violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const auto s = kis::sample_prior(cfg, draw_rng);
    for (Eigen::Index i = 0; i < s.kappa.size(); ++i) {
      const double lhs = s.eta1 * s.eta1 * s.kappa[i] * s.kappa[i];
      worst = std::max(worst, lhs / s.m2);
      if (lhs > s.m2 * (1.0 + 4 * std::numeric_limits<double>::epsilon())) ++violations;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && violations == 0 && secs < 10.0,
          fmt("%d inexact induced variances over 50 states, %ld truncation violations in 1e5 draws "
              "(max eta1^2 kappa^2 / m^2 = %.17g), %.2f s (limit 10 s)",
              mismatches, violations, worst, secs)};
}

double median_at(const std::vector<kis::BenchmarkRow>& rows, std::size_t p) {
  std::vector<double> t;
  for (const auto& r : rows) {
    if (r.p == p && !r.skipped) t.push_back(r.seconds);
  }
  std::sort(t.begin(), t.end());
  return t.empty() ? std::nan("") : t[t.size() / 2];
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  kis::BenchmarkOptions o;
  o.n = 50;
  o.repetitions = 5;
  o.seed = 5005;
  o.p_grid = {200, 400, 800, 1600, 3200, 6400};
  const auto kis_rows = kis::benchmark_marginal(kis::MarginalMethod::kis, o);
  o.p_grid = {50, 100, 200, 400, 800};
  const auto wood_rows = kis::benchmark_marginal(kis::MarginalMethod::woodbury, o);
  const auto kf = kis::fit_scaling(kis_rows, "kis");
  const auto wf = kis::fit_scaling(wood_rows, "woodbury");
  std::size_t common = 0;
  for (std::size_t p : kf.p) {
    if (std::find(wf.p.begin(), wf.p.end(), p) != wf.p.end()) common = std::max(common, p);
  }
  const double speedup = common ? median_at(wood_rows, common) / median_at(kis_rows, common) : 0.0;
  const double secs = seconds_since(t0);
  const bool pass = kf.slope >= 0.8 && kf.slope <= 1.3 && wf.slope >= 1.7 && wf.slope <= 2.3 && speedup >= 10.0 &&
                    secs < 300.0;
  return {pass, fmt("KIS slope %.3f in [0.8, 1.3], Woodbury slope %.3f in [1.7, 2.3], speedup %.1fx at p=%zu "
                    "(need >= 10x), %.1f s (limit 300 s)",
                    kf.slope, wf.slope, speedup, common, secs)};
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  kis::SyntheticSpec spec;  // N=200, p=50, lambda=5, noise variance 25, magnitude 1
  spec.seed = 11;
  const auto sim = kis::simulate(spec);
  const auto cfg = skim_config(spec.p, spec.n);
  kis::SamplerConfig sc;
  sc.chains = 4;
  sc.warmup = 1000;
  sc.iterations = 1000;
  sc.seed = 5;
  const auto traces = kis::run_chains(sim.data, cfg, sc);
  double max_rhat = 0.0;
  std::string worst_name;
  for (const auto& e : kis::rhat_table(traces)) {
    if (!(e.rhat <= max_rhat)) {
      max_rhat = e.rhat;
      worst_name = e.name;
    }
  }
  const auto report = kis::hierarchical_screen(traces, sim.data, 5, kis::kDefaultZ);
  const std::set<int> true_mains(sim.true_mains.begin(), sim.true_mains.end());
  const std::set<std::pair<int, int>> true_pairs(sim.true_pairs.begin(), sim.true_pairs.end());
  int tp_main = 0, fp_main = 0, tp_pair = 0, fp_pair = 0;
  for (const auto& r : report.selected_mains()) (true_mains.count(r.summary.effect.i) ? tp_main : fp_main)++;
  for (const auto& r : report.selected_pairs()) {
    (true_pairs.count({r.summary.effect.i, r.summary.effect.j}) ? tp_pair : fp_pair)++;
  }
  const double secs = seconds_since(t0);
  const bool pass = max_rhat < 1.05 && tp_main >= 4 && fp_main == 0 && tp_pair >= 1 && fp_pair == 0 && secs < 600.0;
  return {pass, fmt("data seed 11, sampler seed 5: max split-Rhat %.4f (%s, need < 1.05), mains %d/5 true + %d false, "
                    "screened pairs %d true + %d false of %zu candidates, %.0f s (limit 600 s)",
                    max_rhat, worst_name.c_str(), tp_main, fp_main, tp_pair, fp_pair, report.candidate_pair_count,
                    secs)};
}

Outcome criterion7() {
  const auto s = kis::aggregate_conditionals(EffectId::main(1), {0.0, 2.0}, {0.1, 0.1});
  const bool selected = kis::interval_excludes_zero(s.mu, s.sigma, kis::kDefaultZ);
  return {s.mu == 1.0 && s.sigma == 0.1 && selected,
          fmt("mu_T = %.17g, sigma_T = %.17g, selected at z = 2.59: %s", s.mu, s.sigma, selected ? "yes" : "no")};
}

Outcome criterion8() {
  const double constant = kis::split_rhat({std::vector<double>(1000, 0.3), std::vector<double>(1000, 0.3),
                                           std::vector<double>(1000, 0.3), std::vector<double>(1000, 0.3)});
  std::mt19937_64 rng(8008);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> chains(4, std::vector<double>(1000));
  for (auto& c : chains) {
    for (auto& x : c) x = g(rng);
  }
  const double iid = kis::split_rhat(chains);
  return {constant == 1.0 && iid >= 0.99 && iid <= 1.02,
          fmt("constant chains %.17g (need exactly 1), iid normal 4 x 1000: %.5f (need [0.99, 1.02])", constant, iid)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria{
    {"evaluator equivalence", criterion1},   {"kernel and feature-map oracle", criterion2},
    {"kernel interaction trick", criterion3}, {"SKIM prior fidelity", criterion4},
    {"scaling in p", criterion5},            {"end-to-end selection", criterion6},
    {"selection arithmetic", criterion7},    {"split-Rhat diagnostics", criterion8},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  int failures = 0;
  for (std::size_t c = 0; c < kCriteria.size(); ++c) {
    if (only != 0 && static_cast<std::size_t>(only) != c + 1) continue;
    Outcome out;
    try {
      out = kCriteria[c].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %zu (%s): %s\n", out.pass ? "PASS" : "FAIL", c + 1, kCriteria[c].first.c_str(),
                out.detail.c_str());
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures == 0 ? 0 : 1;
}
