#include "kis/skim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace kis {
namespace {

void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("skim config: ") + name + " must be > 0");
}

// d/dz of log InvGamma(e^z; a, b) + z
double inv_gamma_grad(double x, double a, double b) { return -a + b / x; }

double draw_inv_gamma(double shape, double scale, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(shape, 1.0 / scale);
  return 1.0 / g(rng);
}

double draw_half_cauchy(double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // |scale * tan(pi (U - 1/2))| = scale * tan(pi U / 2)
  double v;
  do {
    v = u(rng);
  } while (v == 0.0);
  return scale * std::tan(0.5 * std::numbers::pi * v);
}

}  // namespace

void SkimConfig::validate() const {
  if (p < 1) throw std::invalid_argument("skim config: p must be >= 1");
  if (n < 1) throw std::invalid_argument("skim config: N must be >= 1");
  if (!(s >= 1.0) || !(s < static_cast<double>(p))) {
    throw std::invalid_argument("skim config: need 1 <= s < p (s = " + std::to_string(s) + ", p = " +
                                std::to_string(p) + ")");
  }
  positive(alpha1, "alpha1");
  positive(alpha2, "alpha2");
  positive(alpha3, "alpha3");
  positive(alpha4, "alpha4");
  positive(alpha5, "alpha5");
  positive(beta1, "beta1");
  positive(beta2, "beta2");
  positive(beta3, "beta3");
  positive(beta4, "beta4");
}

double SkimConfig::phi(double sigma) const {
  return s / (static_cast<double>(p) - s) * sigma / std::sqrt(static_cast<double>(n));
}

void to_json(nlohmann::json& j, const SkimConfig& c) {
  j = {{"p", c.p},           {"N", c.n},           {"s", c.s},           {"alpha1", c.alpha1},
       {"alpha2", c.alpha2}, {"alpha3", c.alpha3}, {"alpha4", c.alpha4}, {"alpha5", c.alpha5},
       {"beta1", c.beta1},   {"beta2", c.beta2},   {"beta3", c.beta3},   {"beta4", c.beta4}};
}

void HyperState::refresh(const SkimConfig& config) {
  const double e1 = eta1 * eta1;
  // m lambda / sqrt(m^2 + e1 lambda^2); hypot keeps it finite and nonzero
  // when lambda^2 would underflow or overflow
  const double m = std::sqrt(m2);
  kappa.resize(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) kappa[i] = m * (lambda[i] / std::hypot(m, eta1 * lambda[i]));
  eta2 = e1 * std::sqrt(xi2) / m2;
  eta3 = e1 * std::sqrt(psi2) / m2;
  phi = config.phi(sigma);
}

HyperState make_state(double m2, double xi2, double psi2, double c2, double sigma, double eta1, Vector lambda,
                      const SkimConfig& config) {
  HyperState s;
  s.m2 = m2;
  s.xi2 = xi2;
  s.psi2 = psi2;
  s.c2 = c2;
  s.sigma = sigma;
  s.eta1 = eta1;
  s.lambda = std::move(lambda);
  s.refresh(config);
  return s;
}

HyperState constrain(const Vector& z, const SkimConfig& config) {
  if (static_cast<std::size_t>(z.size()) != skim_dim(config.p)) {
    throw std::invalid_argument("constrain: z must have length p + 6");
  }
  return make_state(std::exp(z[zi::log_m2]), std::exp(z[zi::log_xi2]), std::exp(z[zi::log_psi2]),
                    std::exp(z[zi::log_c2]), std::exp(z[zi::log_sigma]), std::exp(z[zi::log_eta1]),
                    z.tail(static_cast<Eigen::Index>(config.p)).array().exp().matrix(), config);
}

Vector unconstrain(const HyperState& state) {
  Vector z(static_cast<Eigen::Index>(skim_dim(state.p())));
  z[zi::log_m2] = std::log(state.m2);
  z[zi::log_xi2] = std::log(state.xi2);
  z[zi::log_psi2] = std::log(state.psi2);
  z[zi::log_c2] = std::log(state.c2);
  z[zi::log_sigma] = std::log(state.sigma);
  z[zi::log_eta1] = std::log(state.eta1);
  z.tail(state.lambda.size()) = state.lambda.array().log().matrix();
  return z;
}

double log_inv_gamma(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double log_half_normal(double x, double scale) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.5 * std::log(2.0 / std::numbers::pi) - std::log(scale) - 0.5 * (x / scale) * (x / scale);
}

double log_half_cauchy(double x, double scale) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  const double u = x / scale;
  return std::log(2.0 / std::numbers::pi) - std::log(scale) - std::log1p(u * u);
}

double log_prior_unconstrained(const Vector& z, const SkimConfig& config, Vector* grad) {
  const std::size_t d = skim_dim(config.p);
  if (static_cast<std::size_t>(z.size()) != d) throw std::invalid_argument("log prior: z must have length p + 6");
  const double m2 = std::exp(z[zi::log_m2]);
  const double xi2 = std::exp(z[zi::log_xi2]);
  const double psi2 = std::exp(z[zi::log_psi2]);
  const double c2 = std::exp(z[zi::log_c2]);
  const double sigma = std::exp(z[zi::log_sigma]);
  const double eta1 = std::exp(z[zi::log_eta1]);
  const double phi = config.phi(sigma);

  // The exp transform contributes log|dx/dz| = z for every coordinate.
  double lp = z.sum();
  lp += log_inv_gamma(m2, config.alpha1, config.beta1);
  lp += log_inv_gamma(xi2, config.alpha2, config.beta2);
  lp += log_inv_gamma(c2, config.alpha3, config.beta3);
  lp += log_inv_gamma(psi2, config.alpha4, config.beta4);
  lp += log_half_normal(sigma, config.alpha5);
  lp += log_half_cauchy(eta1, phi);
  const double u_eta = (eta1 / phi) * (eta1 / phi);
  for (std::size_t i = 0; i < config.p; ++i) {
    lp += log_half_cauchy(std::exp(z[static_cast<Eigen::Index>(zi::first_lambda + i)]), 1.0);
  }

  if (grad != nullptr) {
    grad->resize(static_cast<Eigen::Index>(d));
    Vector& g = *grad;
    g[zi::log_m2] = inv_gamma_grad(m2, config.alpha1, config.beta1);
    g[zi::log_xi2] = inv_gamma_grad(xi2, config.alpha2, config.beta2);
    g[zi::log_c2] = inv_gamma_grad(c2, config.alpha3, config.beta3);
    g[zi::log_psi2] = inv_gamma_grad(psi2, config.alpha4, config.beta4);
    const double w = 2.0 * u_eta / (1.0 + u_eta);
    g[zi::log_eta1] = 1.0 - w;
    // phi scales with sigma: d/dlog(sigma) of -log(phi) - log1p((eta1/phi)^2)
    g[zi::log_sigma] = 1.0 - (sigma / config.alpha5) * (sigma / config.alpha5) - 1.0 + w;
    for (std::size_t i = 0; i < config.p; ++i) {
      const auto k = static_cast<Eigen::Index>(zi::first_lambda + i);
      const double l2 = std::exp(2.0 * z[k]);
      g[k] = 1.0 - 2.0 * l2 / (1.0 + l2);
    }
  }
  return lp;
}

HyperState sample_prior(const SkimConfig& config, std::mt19937_64& rng) {
  config.validate();
  const double m2 = draw_inv_gamma(config.alpha1, config.beta1, rng);
  const double xi2 = draw_inv_gamma(config.alpha2, config.beta2, rng);
  const double c2 = draw_inv_gamma(config.alpha3, config.beta3, rng);
  const double psi2 = draw_inv_gamma(config.alpha4, config.beta4, rng);
  std::normal_distribution<double> normal(0.0, config.alpha5);
  const double sigma = std::abs(normal(rng));
  const double eta1 = draw_half_cauchy(config.phi(sigma), rng);
  Vector lambda(static_cast<Eigen::Index>(config.p));
  for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda[i] = draw_half_cauchy(1.0, rng);
  return make_state(m2, xi2, psi2, c2, sigma, eta1, std::move(lambda), config);
}

HyperState sample_prior(const SkimConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_prior(config, rng);
}

bool kernel_feasible(const HyperState& s) {
  return block_weights_feasible({s.eta1, s.eta2, s.eta3}, s.c2) && s.kappa.allFinite();
}

SkimKernelParams to_kernel_params(const HyperState& s) {
  check_block_weights({s.eta1, s.eta2, s.eta3}, s.c2);
  return {{s.eta1, s.eta2, s.eta3}, s.c2, s.kappa};
}

KernelForm to_kernel(const HyperState& state) { return skim_kernel_form(to_kernel_params(state)); }

PriorDiag induced_prior(const HyperState& state) { return skim_prior_diag(to_kernel_params(state)); }

}  // namespace kis
