// Command-line front end: simulate, fit, select, benchmark.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kis/benchmark.hpp"
#include "kis/io.hpp"
#include "kis/sampler.hpp"
#include "kis/select.hpp"
#include "kis/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  bool seed_set = false;
  int threads = 0;
  std::string out = ".";
  std::string config;
};

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const long long v = std::stoll(item, &pos);
    if (pos != item.size() || v < 0) throw std::invalid_argument("bad list element '" + item + "'");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

// Resolves the seed: explicit --seed wins over the config file.
kis::RunSettings resolve_settings(const Common& c) {
  kis::RunSettings st;
  if (!c.config.empty()) kis::apply_config_file(c.config, st);
  if (c.seed_set || !st.seed) st.seed = c.seed;
  return st;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  std::size_t n = 200;
  std::size_t p = 50;
  double lambda = 5.0;
  std::string mains;
  double magnitude = 1.0;
  double noise_variance = 25.0;
};

int cmd_simulate(const Common& common, const SimulateArgs& a) {
  const auto settings = resolve_settings(common);
  kis::SyntheticSpec spec;
  spec.n = a.n;
  spec.p = a.p;
  spec.lambda = a.lambda;
  spec.effect_magnitude = a.magnitude;
  spec.noise_variance = a.noise_variance;
  spec.seed = *settings.seed;
  if (!a.mains.empty()) spec.true_mains = parse_list<int>(a.mains);
  const auto sim = kis::simulate(spec);

  fs::create_directories(common.out);
  std::vector<std::string> header = sim.data.names;
  header.push_back("y");
  kis::RowMatrix table(sim.data.X.rows(), sim.data.X.cols() + 1);
  table.leftCols(sim.data.X.cols()) = sim.data.X;
  table.col(sim.data.X.cols()) = sim.data.Y;
  {
    std::ofstream f(fs::path(common.out) / "data.csv");
    kis::write_csv(f, header, table);
  }
  write_json(fs::path(common.out) / "truth.json", kis::truth_json(spec, sim));
  std::cout << "wrote " << (fs::path(common.out) / "data.csv").string() << " (N=" << spec.n << ", p=" << spec.p
            << ", seed=" << spec.seed << ")\n";
  return 0;
}

// ------------------------------------------------------------------ fit

struct FitArgs {
  std::string data;
  std::string response;
  std::string algorithm = "adaptive-rwm";
  int chains = 4;
  int warmup = 1000;
  int iterations = 1000;
  double target_accept = -1.0;
  int hmc_steps = 16;
  int joint_moves = 10;
  bool standardize = false;
};

kis::Dataset load_dataset(const std::string& path, const std::string& response, bool standardize,
                          kis::ColumnScaling* scaling) {
  kis::Dataset d = kis::dataset_from_table(kis::read_csv_file(path), response);
  if (standardize) {
    const auto s = kis::standardize(d);
    if (scaling != nullptr) *scaling = s;
  }
  return d;
}

void write_trace_csv(const fs::path& path, const kis::Trace& t, const json& meta) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "# " << meta.dump() << '\n';
  const std::size_t p = t.draws.empty() ? 0 : t.draws.front().p();
  f << "iteration,log_post,accept_rate,m2,xi2,psi2,c2,sigma,eta1";
  for (std::size_t i = 1; i <= p; ++i) f << ",lambda_" << i;
  f << '\n';
  using kis::format_double;
  for (std::size_t k = 0; k < t.draws.size(); ++k) {
    const auto& s = t.draws[k];
    f << k << ',' << format_double(t.log_post[k]) << ',' << format_double(t.accept_rate[k]) << ','
      << format_double(s.m2) << ',' << format_double(s.xi2) << ',' << format_double(s.psi2) << ','
      << format_double(s.c2) << ',' << format_double(s.sigma) << ',' << format_double(s.eta1);
    for (Eigen::Index i = 0; i < s.lambda.size(); ++i) f << ',' << format_double(s.lambda[i]);
    f << '\n';
  }
}

std::vector<kis::Trace> read_traces(const fs::path& dir, int chains, const kis::SkimConfig& skim) {
  std::vector<kis::Trace> traces;
  for (int c = 0; c < chains; ++c) {
    const fs::path path = dir / ("chain_" + std::to_string(c) + ".csv");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing trace file " + path.string());
    std::stringstream body;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.front() == '#') continue;
      body << line << '\n';
    }
    const auto table = kis::read_csv(body);
    if (table.values.cols() != static_cast<Eigen::Index>(9 + skim.p)) {
      throw std::runtime_error("trace file " + path.string() + " does not match p = " + std::to_string(skim.p));
    }
    kis::Trace t;
    t.chain_id = c;
    for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
      const auto row = table.values.row(r);
      const kis::Vector lambda = row.tail(static_cast<Eigen::Index>(skim.p)).transpose();
      t.draws.push_back(kis::make_state(row[3], row[4], row[5], row[6], row[7], row[8], lambda, skim));
      t.z.push_back(kis::unconstrain(t.draws.back()));
      t.log_post.push_back(row[1]);
      t.accept_rate.push_back(row[2]);
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

int cmd_fit(const Common& common, const FitArgs& a) {
  auto settings = resolve_settings(common);
  const bool s_given = settings.explicit_keys.count("s") > 0;
  kis::ColumnScaling scaling;
  const kis::Dataset data = load_dataset(a.data, a.response, a.standardize, &scaling);
  kis::SkimConfig& skim = settings.skim;
  skim.p = data.p();
  skim.n = data.n();
  if (!s_given && skim.p >= 2 && skim.s >= static_cast<double>(skim.p)) skim.s = static_cast<double>(skim.p - 1);
  kis::SamplerConfig sc;
  sc.algorithm = kis::parse_algorithm(a.algorithm);
  sc.chains = a.chains;
  sc.warmup = a.warmup;
  sc.iterations = a.iterations;
  sc.target_accept = a.target_accept > 0.0 ? a.target_accept : (sc.algorithm == kis::Algorithm::hmc ? 0.8 : 0.44);
  sc.hmc_steps = a.hmc_steps;
  sc.joint_moves = a.joint_moves;
  sc.seed = *settings.seed;
  sc.threads = common.threads;

  const auto traces = kis::run_chains(data, skim, sc);

  json meta;
  meta["skim_config"] = skim;
  meta["sampler_config"] = sc;
  meta["seed"] = sc.seed;
  meta["data"] = fs::absolute(a.data).string();
  meta["response"] = a.response;
  meta["standardize"] = a.standardize;
  if (a.standardize) meta["scaling"] = {{"mean", scaling.mean}, {"sd", scaling.sd}};
  meta["defaults_note"] = "InvGamma(2,1) hyperpriors, alpha5 = 5 and s = 5 are defaults unless overridden";

  fs::create_directories(common.out);
  for (const auto& t : traces) {
    json m = meta;
    m["chain_id"] = t.chain_id;
    write_trace_csv(fs::path(common.out) / ("chain_" + std::to_string(t.chain_id) + ".csv"), t, m);
  }

  json fit = meta;
  fit["chains"] = json::array();
  for (const auto& t : traces) {
    fit["chains"].push_back({{"chain_id", t.chain_id},
                             {"file", "chain_" + std::to_string(t.chain_id) + ".csv"},
                             {"infeasible_rejections", t.infeasible_rejections},
                             {"factorization_failures", t.factorization_failures},
                             {"warnings", t.warnings}});
  }
  double worst = 0.0;
  if (traces.size() >= 2 && traces.front().draws.size() >= 4) {
    fit["rhat"] = json::object();
    for (const auto& e : kis::rhat_table(traces)) {
      fit["rhat"][e.name] = e.rhat;
      worst = std::max(worst, e.rhat);
    }
    fit["max_rhat"] = worst;
  }
  std::vector<kis::EffectId> mains;
  for (std::size_t i = 1; i <= data.p(); ++i) mains.push_back(kis::EffectId::main(static_cast<int>(i)));
  fit["main_summaries"] = json::array();
  for (const auto& s : kis::posterior_summaries(traces, data, mains)) {
    fit["main_summaries"].push_back({{"effect", s.effect.label()},
                                     {"mu_T", s.mu},
                                     {"sigma_T", s.sigma},
                                     {"sd_of_means", s.sd_of_means}});
  }
  write_json(fs::path(common.out) / "fit.json", fit);
  std::cout << "fit: " << traces.size() << " chains x " << sc.iterations << " draws";
  if (fit.contains("max_rhat")) std::cout << ", max split-Rhat " << worst;
  std::cout << "\n";
  return 0;
}

// ------------------------------------------------------------------ select

int cmd_select(const Common& common, const std::string& fit_dir, std::size_t k, double z) {
  const fs::path dir(fit_dir);
  std::ifstream in(dir / "fit.json");
  if (!in) throw std::runtime_error("missing " + (dir / "fit.json").string());
  const json fit = json::parse(in);
  const auto& sj = fit.at("skim_config");
  kis::SkimConfig skim;
  skim.p = sj.at("p");
  skim.n = sj.at("N");
  skim.s = sj.at("s");
  skim.alpha1 = sj.at("alpha1");
  skim.alpha2 = sj.at("alpha2");
  skim.alpha3 = sj.at("alpha3");
  skim.alpha4 = sj.at("alpha4");
  skim.alpha5 = sj.at("alpha5");
  skim.beta1 = sj.at("beta1");
  skim.beta2 = sj.at("beta2");
  skim.beta3 = sj.at("beta3");
  skim.beta4 = sj.at("beta4");
  kis::Dataset data = load_dataset(fit.at("data"), fit.at("response"), false, nullptr);
  if (fit.at("standardize").get<bool>()) {
    kis::ColumnScaling s;
    s.mean = fit.at("scaling").at("mean").get<std::vector<double>>();
    s.sd = fit.at("scaling").at("sd").get<std::vector<double>>();
    kis::apply_scaling(data, s);
  }
  const auto traces = read_traces(dir, fit.at("sampler_config").at("chains"), skim);
  const auto report = kis::hierarchical_screen(traces, data, k, z);
  json j = report;
  j["fit"] = fs::absolute(dir).string();
  j["k"] = k;
  j["seed"] = fit.at("seed");
  j["skim_config"] = fit.at("skim_config");
  j["sampler_config"] = fit.at("sampler_config");
  fs::create_directories(common.out);
  write_json(fs::path(common.out) / "report.json", j);
  std::ofstream table(fs::path(common.out) / "report.txt");
  table << "# z = " << z << ", k = " << k << ", seed = " << fit.at("seed") << '\n';
  kis::write_table(table, report);
  kis::write_table(std::cout, report);
  return 0;
}

// ------------------------------------------------------------------ benchmark

std::vector<std::size_t> default_grid(kis::MarginalMethod m) {
  switch (m) {
    case kis::MarginalMethod::kis: return {200, 400, 800, 1600, 3200, 6400};
    case kis::MarginalMethod::woodbury: return {50, 100, 200, 400, 800};
    case kis::MarginalMethod::naive: return {10, 20, 40, 80};
  }
  return {};
}

int cmd_benchmark(const Common& common, const std::string& methods, std::size_t n, const std::string& grid, int reps,
                  std::size_t cap) {
  const auto settings = resolve_settings(common);
  std::vector<kis::BenchmarkRow> rows;
  json slopes = json::object();
  std::stringstream ss(methods);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    const auto m = kis::parse_method(name);
    kis::BenchmarkOptions opts;
    opts.n = n;
    opts.p_grid = grid.empty() ? default_grid(m) : parse_list<std::size_t>(grid);
    opts.repetitions = reps;
    opts.seed = *settings.seed;
    opts.feature_cap = cap;
    const auto r = kis::benchmark_marginal(m, opts);
    rows.insert(rows.end(), r.begin(), r.end());
    try {
      const auto fit = kis::fit_scaling(r, name);
      slopes[name] = {{"slope", fit.slope}, {"p", fit.p}, {"median_seconds", fit.median_seconds}};
      std::cout << name << ": log-log slope " << fit.slope << "\n";
    } catch (const std::invalid_argument& e) {
      slopes[name] = {{"error", e.what()}};
    }
  }
  fs::create_directories(common.out);
  const json meta = {{"methods", methods}, {"N", n}, {"repetitions", reps}, {"seed", *settings.seed}, {"feature_cap", cap}};
  {
    std::ofstream f(fs::path(common.out) / "benchmark.csv");
    f << "# " << meta.dump() << '\n';
    kis::write_benchmark_csv(f, rows);
  }
  json out = meta;
  out["slopes"] = slopes;
  write_json(fs::path(common.out) / "slopes.json", out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian interaction regression with kernel interaction sampling"};
  app.require_subcommand(1);
  Common common;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed")->each([&](const std::string&) { common.seed_set = true; });
    sub->add_option("--threads", common.threads, "Worker threads (0: available parallelism)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--config", common.config, "Config file (JSON or key = value)");
  };

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and its ground truth");
  add_common(simulate);
  simulate->add_option("--n", sim.n, "Observations");
  simulate->add_option("--p", sim.p, "Covariates");
  simulate->add_option("--lambda", sim.lambda, "Covariate scale");
  simulate->add_option("--mains", sim.mains, "Comma-separated true main effects (1-based); default: five drawn from the seed");
  simulate->add_option("--magnitude", sim.magnitude, "Magnitude of nonzero effects");
  simulate->add_option("--noise-variance", sim.noise_variance, "Noise variance");

  FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "Run the sampler on a CSV dataset");
  add_common(fitcmd);
  fitcmd->add_option("--data", fit.data, "Input CSV")->required();
  fitcmd->add_option("--response", fit.response, "Response column (default: last column)");
  fitcmd->add_option("--algorithm", fit.algorithm, "adaptive-rwm or hmc");
  fitcmd->add_option("--chains", fit.chains, "Number of chains");
  fitcmd->add_option("--warmup", fit.warmup, "Warmup iterations per chain");
  fitcmd->add_option("--iterations", fit.iterations, "Stored iterations per chain");
  fitcmd->add_option("--target-accept", fit.target_accept, "Acceptance target");
  fitcmd->add_option("--hmc-steps", fit.hmc_steps, "Leapfrog steps per HMC iteration");
  fitcmd->add_option("--joint-moves", fit.joint_moves, "Joint covariance-adapted moves per RWM iteration");
  fitcmd->add_flag("--standardize", fit.standardize, "Standardize covariate columns");

  std::string fit_dir;
  std::size_t k = 5;
  double z = kis::kDefaultZ;
  auto* select = app.add_subcommand("select", "Select effects from a fit directory");
  add_common(select);
  select->add_option("--fit", fit_dir, "Directory written by fit")->required();
  select->add_option("--k", k, "Number of top main effects to screen for interactions");
  select->add_option("--z", z, "Interval multiplier");

  std::string methods = "kis,woodbury";
  std::size_t bench_n = 50;
  std::string grid;
  int reps = 5;
  std::size_t cap = 400000;
  auto* bench = app.add_subcommand("benchmark", "Time the marginal-likelihood evaluators");
  add_common(bench);
  bench->add_option("--methods", methods, "Comma-separated: kis, woodbury, naive");
  bench->add_option("--n", bench_n, "Observations");
  bench->add_option("--p-grid", grid, "Comma-separated p values (default depends on method)");
  bench->add_option("--reps", reps, "Repetitions per cell");
  bench->add_option("--feature-cap", cap, "Largest explicit feature dimension to attempt");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(common, sim);
    if (*fitcmd) return cmd_fit(common, fit);
    if (*select) return cmd_select(common, fit_dir, k, z);
    if (*bench) return cmd_benchmark(common, methods, bench_n, grid, reps, cap);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
