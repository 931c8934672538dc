#include "kis/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "kis/trick.hpp"

namespace kis {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class EvalStatus { ok, infeasible, factorization };

struct Eval {
  double value = kNegInf;
  EvalStatus status = EvalStatus::ok;
};

Eval evaluate(const Vector& z, const Dataset& data, const SkimConfig& config, const SkimMoments* moments = nullptr) {
  if (!z.allFinite()) return {kNegInf, EvalStatus::infeasible};
  const HyperState s = constrain(z, config);
  if (!kernel_feasible(s)) return {kNegInf, EvalStatus::infeasible};
  const double prior = log_prior_unconstrained(z, config);
  try {
    double ll;
    if (moments && moments->single_change(s.kappa) != -2) {
      ll = gp_log_marginal(moments->kernel(s), s.sigma2(), data.Y).log_density;
    } else {
      ll = state_log_likelihood(s, data);
    }
    const double v = ll + prior;
    if (!std::isfinite(v)) return {kNegInf, EvalStatus::factorization};
    return {v, EvalStatus::ok};
  } catch (const FactorizationError&) {
    return {kNegInf, EvalStatus::factorization};
  } catch (const std::invalid_argument&) {
    // non-finite kernel entries from extreme states
    return {kNegInf, EvalStatus::factorization};
  }
}

// Entrywise SKIM kernel on the lower triangle, with an optional rank-one
// change of weight dk2 (linear) / dk4 (squared) along column x of X.
Matrix skim_gram(const HyperState& s, const Matrix& A, const Matrix& B, const Vector* x, double dk2, double dk4) {
  const double e1 = s.eta1 * s.eta1;
  const double e2 = s.eta2 * s.eta2;
  const double e3 = s.eta3 * s.eta3;
  const double c2w = 0.5 * e2;
  const double cb = e3 - 0.5 * e2;
  const double ca = e1 - e2;
  const double c0 = s.c2 - 0.5 * e2;
  const Eigen::Index n = A.rows();
  Matrix K(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const double xb = x ? (*x)[b] : 0.0;
    const double u2 = dk2 * xb;
    const double u4 = dk4 * xb * xb;
    for (Eigen::Index a = b; a < n; ++a) {
      double lin = A(a, b);
      double sq = B(a, b);
      if (x) {
        const double xa = (*x)[a];
        lin += u2 * xa;
        sq += u4 * xa * xa;
      }
      const double l1 = lin + 1.0;
      K(a, b) = c2w * l1 * l1 + cb * sq + ca * lin + c0;
    }
  }
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  if (!K.allFinite()) throw std::invalid_argument("kernel_matrix: non-finite entries");
  return K;
}

std::mt19937_64 chain_rng(std::uint64_t seed, int chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain), 0x6b69u};
  return std::mt19937_64(seq);
}

struct ChainState {
  Vector z;
  Eval cur;
};

class ChainRunner {
 public:
  ChainRunner(const Dataset& data, const SkimConfig& skim, const SamplerConfig& cfg, int chain)
      : data_(data), skim_(skim), cfg_(cfg), rng_(chain_rng(cfg.seed, chain)) {
    trace_.chain_id = chain;
    trace_.seed = cfg.seed;
  }

  Trace run() {
    init();
    if (cfg_.algorithm == Algorithm::adaptive_rwm) {
      run_rwm();
    } else {
      run_hmc();
    }
    finish();
    return std::move(trace_);
  }

 private:
  Eval eval(const Vector& z) {
    Eval e = evaluate(z, data_, skim_, moments_.kappa().size() > 0 ? &moments_ : nullptr);
    if (e.status == EvalStatus::infeasible) ++trace_.infeasible_rejections;
    if (e.status == EvalStatus::factorization) ++trace_.factorization_failures;
    return e;
  }

  void init() {
    const std::size_t d = skim_dim(skim_.p);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Vector z(static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = u(rng_);
      const Eval e = eval(z);
      if (std::isfinite(e.value)) {
        st_ = {z, e};
        return;
      }
    }
    throw std::runtime_error("sampler: no valid initial state found in 1000 attempts");
  }

  void store(double accept_rate, double step) {
    trace_.draws.push_back(constrain(st_.z, skim_));
    trace_.z.push_back(st_.z);
    trace_.log_post.push_back(st_.cur.value);
    trace_.accept_rate.push_back(accept_rate);
    trace_.step_size.push_back(step);
  }

  // Component-wise random-walk Metropolis, plus one move along the
  // direction (+1 on log eta1, -1 on every log lambda_i), which leaves the
  // products eta1 lambda_i unchanged and lets the global/local scale ridge
  // mix. Joint moves use the z covariance collected over the second half of
  // warmup. All proposal scales adapt during warmup only.
  void run_rwm() {
    const auto d = static_cast<Eigen::Index>(skim_dim(skim_.p));
    Vector ridge = Vector::Zero(d);
    ridge[static_cast<Eigen::Index>(zi::log_eta1)] = 1.0;
    ridge.tail(static_cast<Eigen::Index>(skim_.p)).array() = -1.0;
    RwmSweep sweep;
    sweep.extra_directions = {ridge};
    sweep.target_accept = cfg_.target_accept;
    sweep.log_density = [&](const Vector& z) { return eval(z).value; };
    sweep.on_accept = [&](const Vector& z) { moments_.set_kappa(constrain(z, skim_).kappa); };
    Vector log_scale = Vector::Constant(d + 1, std::log(0.5));

    const int collect_from = cfg_.warmup / 2;
    Vector mean = Vector::Zero(d);
    Matrix scatter = Matrix::Zero(d, d);
    double seen = 0.0;
    Matrix chol;
    double log_joint = std::log(2.38 / std::sqrt(static_cast<double>(d)));

    const int total = cfg_.warmup + cfg_.iterations;
    for (int t = 0; t < total; ++t) {
      const bool warm = t < cfg_.warmup;
      const double gain = std::pow(static_cast<double>(t + 1), -0.6);
      sweep.gain = warm ? gain : 0.0;
      // fresh moments each sweep so rank-one updates do not accumulate drift
      moments_ = SkimMoments(data_.X, constrain(st_.z, skim_).kappa);
      int accepted = rwm_sweep(sweep, st_.z, st_.cur.value, log_scale, rng_);

      if (warm && t >= collect_from) {
        seen += 1.0;
        const Vector delta = st_.z - mean;
        mean += delta / seen;
        scatter.noalias() += delta * (st_.z - mean).transpose();
        if (seen >= 20.0 && ((t - collect_from) % 25 == 0 || t + 1 == cfg_.warmup)) {
          Matrix cov = scatter / (seen - 1.0);
          cov.diagonal().array() += 1e-8;
          Eigen::LLT<Matrix> llt(cov);
          if (llt.info() == Eigen::Success) chol = llt.matrixL();
        }
      }
      if (chol.size() > 0) {
        for (int j = 0; j < cfg_.joint_moves; ++j) {
          Vector step(d);
          for (Eigen::Index k = 0; k < d; ++k) step[k] = normal_(rng_);
          Vector zp = st_.z + std::exp(log_joint) * (chol * step);
          const Eval e = eval(zp);
          bool ok = false;
          if (std::isfinite(e.value)) {
            const double log_ratio = e.value - st_.cur.value;
            ok = log_ratio >= 0.0 || std::log(unif_(rng_)) < log_ratio;
          }
          if (ok) {
            moments_.set_kappa(constrain(zp, skim_).kappa);
            st_ = {std::move(zp), e};
          }
          if (warm) log_joint += gain * ((ok ? 1.0 : 0.0) - 0.234);
        }
      }
      if (!warm) store(static_cast<double>(accepted) / static_cast<double>(d + 1), log_scale.array().exp().mean());
    }
  }

  Eval eval_grad(const Vector& z, Vector& g) {
    Eval e;
    e.value = target_log_density(z, data_, skim_, g);
    if (!std::isfinite(e.value)) {
      const HyperState s = z.allFinite() ? constrain(z, skim_) : HyperState{};
      e.status = (z.allFinite() && kernel_feasible(s)) ? EvalStatus::factorization : EvalStatus::infeasible;
      if (e.status == EvalStatus::infeasible) ++trace_.infeasible_rejections;
      else ++trace_.factorization_failures;
    }
    return e;
  }

  // Static-length HMC with dual-averaged step size during warmup.
  void run_hmc() {
    const auto d = static_cast<Eigen::Index>(skim_dim(skim_.p));
    Vector grad;
    st_.cur = eval_grad(st_.z, grad);
    double log_eps = std::log(0.05);
    const double mu = std::log(10.0 * 0.05);
    double log_eps_bar = 0.0;
    double h_bar = 0.0;
    const int total = cfg_.warmup + cfg_.iterations;
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    for (int t = 0; t < total; ++t) {
      const bool warm = t < cfg_.warmup;
      const double eps = std::exp(warm ? log_eps : log_eps_bar) * jitter(rng_);
      Vector mom(d);
      for (Eigen::Index k = 0; k < d; ++k) mom[k] = normal_(rng_);
      const double h0 = -st_.cur.value + 0.5 * mom.squaredNorm();
      Vector z = st_.z;
      Vector g = grad;
      Eval e = st_.cur;
      bool diverged = false;
      mom += 0.5 * eps * g;
      for (int s = 0; s < cfg_.hmc_steps; ++s) {
        z += eps * mom;
        e = eval_grad(z, g);
        if (!std::isfinite(e.value)) {
          diverged = true;
          break;
        }
        if (s + 1 < cfg_.hmc_steps) mom += eps * g;
      }
      double accept_prob = 0.0;
      if (!diverged) {
        mom += 0.5 * eps * g;
        const double h1 = -e.value + 0.5 * mom.squaredNorm();
        accept_prob = std::isfinite(h1) ? std::min(1.0, std::exp(h0 - h1)) : 0.0;
      }
      const bool ok = !diverged && unif_(rng_) < accept_prob;
      if (ok) {
        st_ = {std::move(z), e};
        grad = std::move(g);
      }
      if (warm) {
        const double m = static_cast<double>(t + 1);
        const double w = 1.0 / (m + 10.0);
        h_bar = (1.0 - w) * h_bar + w * (cfg_.target_accept - accept_prob);
        log_eps = mu - std::sqrt(m) / 0.05 * h_bar;
        const double eta = std::pow(m, -0.75);
        log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
      } else {
        store(ok ? 1.0 : 0.0, eps);
      }
    }
  }

  void finish() {
    if (trace_.accept_rate.empty()) return;
    const double mean = std::accumulate(trace_.accept_rate.begin(), trace_.accept_rate.end(), 0.0) /
                        static_cast<double>(trace_.accept_rate.size());
    if (mean < 0.01) {
      trace_.warnings.push_back("post-warmup acceptance rate " + std::to_string(mean) + " is below 1%");
    }
  }

  const Dataset& data_;
  const SkimConfig& skim_;
  const SamplerConfig& cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  ChainState st_;
  SkimMoments moments_;
  Trace trace_;
};

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) s += v[k];
  return s / static_cast<double>(end - begin);
}

}  // namespace

SkimMoments::SkimMoments(const RowMatrix& X, const Vector& kappa) : X_(&X), kappa_(kappa) {
  if (kappa.size() != X.cols()) throw std::invalid_argument("SkimMoments: kappa length does not match X");
  rebuild();
}

void SkimMoments::rebuild() {
  const Matrix Xs = *X_ * kappa_.asDiagonal();
  const Matrix X2s = X_->array().square().matrix() * kappa_.array().square().matrix().asDiagonal();
  A_.noalias() = Xs * Xs.transpose();
  B_.noalias() = X2s * X2s.transpose();
}

int SkimMoments::single_change(const Vector& kappa) const {
  int idx = -1;
  for (Eigen::Index k = 0; k < kappa.size(); ++k) {
    if (kappa[k] != kappa_[k]) {
      if (idx != -1) return -2;
      idx = static_cast<int>(k);
    }
  }
  return idx;
}

Matrix SkimMoments::kernel(const HyperState& state) const {
  const int i = single_change(state.kappa);
  if (i == -2) throw std::invalid_argument("SkimMoments: more than one kappa changed");
  if (i == -1) return skim_gram(state, A_, B_, nullptr, 0.0, 0.0);
  const Vector x = X_->col(i);
  const double k2n = state.kappa[i] * state.kappa[i];
  const double k2o = kappa_[i] * kappa_[i];
  return skim_gram(state, A_, B_, &x, k2n - k2o, k2n * k2n - k2o * k2o);
}

void SkimMoments::set_kappa(const Vector& kappa) {
  const int i = single_change(kappa);
  if (i == -1) return;
  if (i == -2) {
    kappa_ = kappa;
    rebuild();
    return;
  }
  const Vector x = X_->col(i);
  const Vector x2 = x.array().square();
  const double k2n = kappa[i] * kappa[i];
  const double k2o = kappa_[i] * kappa_[i];
  A_.noalias() += (k2n - k2o) * x * x.transpose();
  B_.noalias() += (k2n * k2n - k2o * k2o) * x2 * x2.transpose();
  kappa_ = kappa;
}

int rwm_sweep(const RwmSweep& sweep, Vector& z, double& log_p, Vector& log_scale, std::mt19937_64& rng) {
  const Eigen::Index d = z.size();
  const auto moves = d + static_cast<Eigen::Index>(sweep.extra_directions.size());
  if (log_scale.size() != moves) throw std::invalid_argument("rwm_sweep: one log scale per move required");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int accepted = 0;
  for (Eigen::Index k = 0; k < moves; ++k) {
    Vector zp = z;
    const double step = std::exp(log_scale[k]) * normal(rng);
    if (k < d) {
      zp[k] += step;
    } else {
      zp += step * sweep.extra_directions[static_cast<std::size_t>(k - d)];
    }
    const double lp = sweep.log_density(zp);
    bool ok = false;
    if (std::isfinite(lp)) {
      const double log_ratio = lp - log_p;
      ok = log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio;
    }
    if (ok) {
      if (sweep.on_accept) sweep.on_accept(zp);
      z = std::move(zp);
      log_p = lp;
      ++accepted;
    }
    if (sweep.gain != 0.0) log_scale[k] += sweep.gain * ((ok ? 1.0 : 0.0) - sweep.target_accept);
  }
  return accepted;
}

std::string algorithm_name(Algorithm a) { return a == Algorithm::hmc ? "hmc" : "adaptive-rwm"; }

Algorithm parse_algorithm(const std::string& name) {
  if (name == "adaptive-rwm" || name == "rwm") return Algorithm::adaptive_rwm;
  if (name == "hmc") return Algorithm::hmc;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected adaptive-rwm or hmc)");
}

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
  if (warmup < 1) throw std::invalid_argument("sampler: warmup must be >= 1");
  if (iterations < 1) throw std::invalid_argument("sampler: iterations must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw std::invalid_argument("sampler: target_accept must be in (0, 1)");
  if (threads < 0) throw std::invalid_argument("sampler: threads must be >= 0");
  if (hmc_steps < 1) throw std::invalid_argument("sampler: hmc_steps must be >= 1");
  if (joint_moves < 0) throw std::invalid_argument("sampler: joint_moves must be >= 0");
}

void to_json(nlohmann::json& j, const SamplerConfig& c) {
  j = {{"algorithm", algorithm_name(c.algorithm)},
       {"chains", c.chains},
       {"warmup", c.warmup},
       {"iterations", c.iterations},
       {"target_accept", c.target_accept},
       {"seed", c.seed},
       {"hmc_steps", c.hmc_steps},
       {"joint_moves", c.joint_moves}};
}

double state_log_likelihood(const HyperState& state, const Dataset& data) {
  const KernelForm k = to_kernel(state);
  return gp_log_marginal(k.gram(data.X), state.sigma2(), data.Y).log_density;
}

double target_log_density(const Vector& z, const Dataset& data, const SkimConfig& config) {
  return evaluate(z, data, config).value;
}

double target_log_density(const Vector& z, const Dataset& data, const SkimConfig& config, Vector& grad) {
  const auto d = static_cast<Eigen::Index>(skim_dim(config.p));
  grad = Vector::Zero(d);
  if (!z.allFinite()) return kNegInf;
  const HyperState s = constrain(z, config);
  if (!kernel_feasible(s)) return kNegInf;

  const double e1 = s.eta1 * s.eta1;
  const double e2 = s.eta2 * s.eta2;
  const double e3 = s.eta3 * s.eta3;
  const double c2w = 0.5 * e2;
  const double cb = e3 - 0.5 * e2;
  const double ca = e1 - e2;
  const double c0 = s.c2 - 0.5 * e2;
  const Vector k2 = s.kappa.array().square();

  const Matrix X = data.X;
  const Matrix X2 = X.array().square();
  const Matrix Xs = X * s.kappa.asDiagonal();
  const Matrix X2s = X2 * k2.asDiagonal();
  const Matrix A = Xs * Xs.transpose();
  const Matrix B = X2s * X2s.transpose();
  const Matrix A1 = A.array() + 1.0;
  const Matrix K = (c2w * A1.array().square() + cb * B.array() + ca * A.array() + c0).matrix();

  double ll;
  Matrix W;
  try {
    const KernelFactor f(K, s.sigma2());
    ll = gp_log_marginal(f, data.Y).log_density;
    const Vector alpha = f.solve(data.Y);
    W = alpha * alpha.transpose() - f.inverse();
  } catch (const FactorizationError&) {
    return kNegInf;
  } catch (const std::invalid_argument&) {
    return kNegInf;
  }
  Vector prior_grad;
  const double lp = log_prior_unconstrained(z, config, &prior_grad);
  if (!std::isfinite(ll + lp)) return kNegInf;

  // d log p / d K = W / 2
  const double t2 = 0.5 * (W.array() * A1.array().square()).sum();
  const double tb = 0.5 * (W.array() * B.array()).sum();
  const double ta = 0.5 * (W.array() * A.array()).sum();
  const double t0 = 0.5 * W.sum();
  const double d_e2 = 0.5 * t2 - 0.5 * tb - ta - 0.5 * t0;
  const double d_e3 = tb;
  const double d_e1 = ta;
  const double d_c2 = t0;
  const double d_s2 = 0.5 * W.trace();

  const Matrix G = (2.0 * c2w * A1.array() + ca).matrix();
  const Matrix WG = W.cwiseProduct(G);
  const Vector q1 = X.cwiseProduct(WG * X).colwise().sum().transpose();
  const Vector q2 = X2.cwiseProduct(W * X2).colwise().sum().transpose();
  // d log p / d kappa_i^2, times kappa_i^2
  const Vector g_k = (0.5 * (q1.array() + 2.0 * cb * k2.array() * q2.array()) * k2.array()).matrix();

  const Vector e1l2 = e1 * s.lambda.array().square();
  const Vector r = (e1l2.array() / (s.m2 + e1l2.array())).matrix();
  Vector g = Vector::Zero(d);
  g[zi::log_m2] = g_k.dot(r) - 2.0 * (d_e2 * e2 + d_e3 * e3);
  g[zi::log_eta1] = -2.0 * g_k.dot(r) + 2.0 * d_e1 * e1 + 4.0 * (d_e2 * e2 + d_e3 * e3);
  g[zi::log_xi2] = d_e2 * e2;
  g[zi::log_psi2] = d_e3 * e3;
  g[zi::log_c2] = d_c2 * s.c2;
  g[zi::log_sigma] = 2.0 * d_s2 * s.sigma2();
  g.tail(static_cast<Eigen::Index>(config.p)) = (2.0 * g_k.array() * (1.0 - r.array())).matrix();
  grad = g + prior_grad;
  return ll + lp;
}

std::vector<Trace> run_chains(const Dataset& data, const SkimConfig& skim, const SamplerConfig& config) {
  data.validate();
  skim.validate();
  config.validate();
  if (skim.p != data.p() || skim.n != data.n()) throw std::invalid_argument("run_chains: config does not match data");
  std::vector<Trace> traces(static_cast<std::size_t>(config.chains));
  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.chains)));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(traces.size());
  const auto work = [&] {
    for (int c = next.fetch_add(1); c < config.chains; c = next.fetch_add(1)) {
      try {
        traces[static_cast<std::size_t>(c)] = ChainRunner(data, skim, config, c).run();
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("split_rhat: need at least 2 chains");
  const std::size_t len = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != len) throw std::invalid_argument("split_rhat: chains must have equal length");
  }
  if (len < 4) throw std::invalid_argument("split_rhat: need at least 4 draws per chain");
  const std::size_t n = len / 2;
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    for (std::size_t h = 0; h < 2; ++h) {
      const std::size_t b = h * n;
      // a constant half has mean and variance exactly (c[b], 0); summation
      // would leave rounding noise in both
      const bool constant = std::all_of(c.begin() + static_cast<std::ptrdiff_t>(b),
                                        c.begin() + static_cast<std::ptrdiff_t>(b + n), [&](double v) { return v == c[b]; });
      const double m = constant ? c[b] : mean_of(c, b, b + n);
      double ss = 0.0;
      if (!constant) {
        for (std::size_t k = b; k < b + n; ++k) ss += (c[k] - m) * (c[k] - m);
      }
      means.push_back(m);
      vars.push_back(ss / static_cast<double>(n - 1));
    }
  }
  const double nd = static_cast<double>(n);
  const double msq = static_cast<double>(means.size());
  const double W = std::accumulate(vars.begin(), vars.end(), 0.0) / msq;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / msq;
  double bsum = 0.0;
  for (double m : means) bsum += (m - grand) * (m - grand);
  const double B = nd * bsum / (msq - 1.0);
  if (W == 0.0) return B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(((nd - 1.0) / nd * W + B / nd) / W);
}

double split_rhat(const std::vector<Trace>& traces, const std::function<double(const HyperState&)>& summary) {
  std::vector<std::vector<double>> seqs;
  for (const auto& t : traces) {
    std::vector<double> v;
    v.reserve(t.draws.size());
    for (const auto& s : t.draws) v.push_back(summary(s));
    seqs.push_back(std::move(v));
  }
  return split_rhat(seqs);
}

std::vector<std::string> coordinate_names(std::size_t p) {
  std::vector<std::string> names{"log_m2", "log_xi2", "log_psi2", "log_c2", "log_sigma", "log_eta1"};
  for (std::size_t i = 1; i <= p; ++i) names.push_back("log_lambda_" + std::to_string(i));
  return names;
}

std::vector<RhatEntry> rhat_table(const std::vector<Trace>& traces) {
  if (traces.empty()) throw std::invalid_argument("rhat_table: no traces");
  const std::size_t p = traces.front().draws.empty() ? 0 : traces.front().draws.front().p();
  const auto names = coordinate_names(p);
  std::vector<RhatEntry> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<std::vector<double>> seqs;
    for (const auto& t : traces) {
      std::vector<double> v;
      for (const auto& z : t.z) v.push_back(z[static_cast<Eigen::Index>(k)]);
      seqs.push_back(std::move(v));
    }
    out.push_back({names[k], split_rhat(seqs)});
  }
  std::vector<std::vector<double>> lp;
  for (const auto& t : traces) lp.push_back(t.log_post);
  out.push_back({"log_post", split_rhat(lp)});
  return out;
}

EffectSummary aggregate_conditionals(const EffectId& effect, const std::vector<double>& means,
                                     const std::vector<double>& sds) {
  if (means.empty() || means.size() != sds.size()) {
    throw std::invalid_argument("aggregate_conditionals: need matching, nonempty mean and sd lists");
  }
  EffectSummary s;
  s.effect = effect;
  s.draws = means.size();
  const double t = static_cast<double>(means.size());
  s.mu = std::accumulate(means.begin(), means.end(), 0.0) / t;
  s.sigma = std::accumulate(sds.begin(), sds.end(), 0.0) / t;
  if (means.size() > 1) {
    double ss = 0.0;
    for (double m : means) ss += (m - s.mu) * (m - s.mu);
    s.sd_of_means = std::sqrt(ss / (t - 1.0));
  }
  return s;
}

std::vector<EffectSummary> posterior_summaries(const std::vector<Trace>& traces, const Dataset& data,
                                               const std::vector<EffectId>& effects) {
  std::size_t total = 0;
  for (const auto& t : traces) total += t.draws.size();
  if (total == 0) throw std::invalid_argument("posterior_summaries: traces contain no draws");
  for (const auto& e : effects) (void)effect_index(e, data.p());
  std::vector<std::vector<double>> means(effects.size());
  std::vector<std::vector<double>> sds(effects.size());
  Vector m;
  Vector v;
  for (const auto& t : traces) {
    for (const auto& s : t.draws) {
      const GpPosterior post(to_kernel(s), data, s.sigma2());
      post.marginals(effects, m, v);
      for (std::size_t e = 0; e < effects.size(); ++e) {
        means[e].push_back(m[static_cast<Eigen::Index>(e)]);
        sds[e].push_back(std::sqrt(v[static_cast<Eigen::Index>(e)]));
      }
    }
  }
  std::vector<EffectSummary> out;
  out.reserve(effects.size());
  for (std::size_t e = 0; e < effects.size(); ++e) out.push_back(aggregate_conditionals(effects[e], means[e], sds[e]));
  return out;
}

}  // namespace kis
