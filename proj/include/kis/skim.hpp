#pragma once

// Sparse kernel interaction model (SKIM) hyperprior.
//
//   m^2, xi^2, c^2, psi^2 ~ InvGamma(alpha_k, beta_k)
//   sigma                 ~ HalfNormal(alpha5)
//   eta1                  ~ HalfCauchy(phi),  phi = s / (p - s) * sigma / sqrt(N)
//   lambda_i              ~ HalfCauchy(1)
//
// with derived kernel parameters
//   kappa_i = m lambda_i / sqrt(m^2 + eta1^2 lambda_i^2)
//   eta2    = eta1^2 xi / m^2
//   eta3    = eta1^2 psi / m^2
//
// The sampler works on z = (log m^2, log xi^2, log psi^2, log c^2, log sigma,
// log eta1, log lambda_1 .. log lambda_p).

#include <cstddef>
#include <cstdint>
#include <random>

#include "json.hpp"
#include "kis/kernels.hpp"
#include "kis/types.hpp"

namespace kis {

struct SkimConfig {
  std::size_t p = 0;
  std::size_t n = 0;
  double s = 5.0;
  double alpha1 = 2.0, beta1 = 1.0;  // m^2
  double alpha2 = 2.0, beta2 = 1.0;  // xi^2
  double alpha3 = 2.0, beta3 = 1.0;  // c^2
  double alpha4 = 2.0, beta4 = 1.0;  // psi^2
  double alpha5 = 5.0;               // sigma

  // Throws std::invalid_argument unless 1 <= s < p, N >= 1 and every
  // shape/scale is finite and > 0.
  void validate() const;
  double phi(double sigma) const;
};

void to_json(nlohmann::json& j, const SkimConfig& c);

// Unconstrained coordinate layout.
namespace zi {
inline constexpr std::size_t log_m2 = 0;
inline constexpr std::size_t log_xi2 = 1;
inline constexpr std::size_t log_psi2 = 2;
inline constexpr std::size_t log_c2 = 3;
inline constexpr std::size_t log_sigma = 4;
inline constexpr std::size_t log_eta1 = 5;
inline constexpr std::size_t first_lambda = 6;
}  // namespace zi

inline std::size_t skim_dim(std::size_t p) { return p + zi::first_lambda; }

struct HyperState {
  double m2 = 1.0;
  double xi2 = 1.0;
  double psi2 = 1.0;
  double c2 = 1.0;
  double sigma = 1.0;
  double eta1 = 1.0;
  Vector lambda;

  // derived by refresh()
  Vector kappa;
  double eta2 = 0.0;
  double eta3 = 0.0;
  double phi = 0.0;

  // Recomputes kappa, eta2, eta3 and phi from the stored fields.
  void refresh(const SkimConfig& config);
  std::size_t p() const { return static_cast<std::size_t>(lambda.size()); }
  double sigma2() const { return sigma * sigma; }
};

HyperState make_state(double m2, double xi2, double psi2, double c2, double sigma, double eta1, Vector lambda,
                      const SkimConfig& config);

HyperState constrain(const Vector& z, const SkimConfig& config);
Vector unconstrain(const HyperState& state);

// Component log-densities.
double log_inv_gamma(double x, double shape, double scale);
double log_half_normal(double x, double scale);
double log_half_cauchy(double x, double scale);

// Sum of component log-densities plus the log-Jacobian of the exp transform.
// When `grad` is non-null it receives the gradient with respect to z.
double log_prior_unconstrained(const Vector& z, const SkimConfig& config, Vector* grad = nullptr);

HyperState sample_prior(const SkimConfig& config, std::mt19937_64& rng);
HyperState sample_prior(const SkimConfig& config, std::uint64_t seed);

// Kernel weights must be nonnegative:
//   eta1^2 >= eta2^2, eta3^2 >= eta2^2 / 2, c^2 >= eta2^2 / 2.
bool kernel_feasible(const HyperState& state);
// Throws InfeasibleError when the weights are negative.
SkimKernelParams to_kernel_params(const HyperState& state);
KernelForm to_kernel(const HyperState& state);
PriorDiag induced_prior(const HyperState& state);

}  // namespace kis
