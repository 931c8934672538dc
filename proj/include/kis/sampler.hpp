#pragma once

// MCMC over the unconstrained SKIM hyperparameters with theta integrated out,
// split-R-hat diagnostics and posterior summaries of coefficients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "kis/features.hpp"
#include "kis/likelihood.hpp"
#include "kis/skim.hpp"

namespace kis {

enum class Algorithm { adaptive_rwm, hmc };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct SamplerConfig {
  Algorithm algorithm = Algorithm::adaptive_rwm;
  int chains = 4;
  int warmup = 1000;
  int iterations = 1000;
  // Per-coordinate acceptance target for adaptive RWM; trajectory
  // acceptance target for HMC.
  double target_accept = 0.44;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: available parallelism
  int hmc_steps = 16;
  // Adaptive RWM only: joint Gaussian moves per iteration, using the
  // covariance of z over the second half of warmup (frozen afterwards).
  int joint_moves = 10;

  void validate() const;
};

void to_json(nlohmann::json& j, const SamplerConfig& c);

struct Trace {
  int chain_id = 0;
  std::uint64_t seed = 0;
  std::vector<HyperState> draws;   // post-warmup, one per iteration
  std::vector<Vector> z;           // unconstrained coordinates of each draw
  std::vector<double> log_post;
  std::vector<double> accept_rate; // fraction of proposals accepted per iteration
  std::vector<double> step_size;   // mean proposal scale per iteration
  std::size_t infeasible_rejections = 0;
  std::size_t factorization_failures = 0;
  std::vector<std::string> warnings;
};

// Cached linear and squared moment matrices A = X diag(kappa^2) X^T and
// B = X^2 diag(kappa^4) (X^2)^T. The SKIM Gram matrix is an entrywise
// function of (A, B), so a move that changes one kappa_i only needs a
// rank-one correction.
class SkimMoments {
 public:
  SkimMoments() = default;
  SkimMoments(const RowMatrix& X, const Vector& kappa);

  const Vector& kappa() const { return kappa_; }
  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }

  // Index of the single coordinate where `kappa` differs from the cached
  // one; -1 if identical, -2 if more than one differs.
  int single_change(const Vector& kappa) const;
  // Gram matrix at `state`, whose kappa may differ from the cache in at
  // most one coordinate. Throws std::invalid_argument otherwise.
  Matrix kernel(const HyperState& state) const;
  // Moves the cache to `kappa`, incrementally when only one coordinate changed.
  void set_kappa(const Vector& kappa);

 private:
  const RowMatrix* X_ = nullptr;
  Vector kappa_;
  Matrix A_;
  Matrix B_;
  void rebuild();
};

// One component-wise random-walk Metropolis sweep on an arbitrary target:
// a Gaussian move along each coordinate axis, then along each extra
// direction. log_scale holds one log proposal scale per move (coordinates
// first) and is nudged by Robbins-Monro, gain * (accepted - target_accept),
// after every move; gain 0 freezes it. on_accept sees each accepted state.
// Returns the number of accepted moves.
struct RwmSweep {
  std::function<double(const Vector&)> log_density;
  std::vector<Vector> extra_directions;
  double gain = 0.0;
  double target_accept = 0.44;
  std::function<void(const Vector&)> on_accept;
};
int rwm_sweep(const RwmSweep& sweep, Vector& z, double& log_p, Vector& log_scale, std::mt19937_64& rng);

// log p(Y | tau(z), sigma(z)^2) + log prior(z); -infinity for states whose
// kernel weights are negative or whose kernel matrix cannot be factorized.
double target_log_density(const Vector& z, const Dataset& data, const SkimConfig& config);

// Same value with the analytic gradient with respect to z.
double target_log_density(const Vector& z, const Dataset& data, const SkimConfig& config, Vector& grad);

// Log marginal likelihood only, at a constrained state.
double state_log_likelihood(const HyperState& state, const Dataset& data);

std::vector<Trace> run_chains(const Dataset& data, const SkimConfig& skim, const SamplerConfig& config);

// Split-R-hat over sequences of equal length (chains are halved first; an odd
// trailing draw is dropped). Returns exactly 1 when every half has zero
// variance and all halves agree; +infinity when the halves are constant at
// different levels. Throws std::invalid_argument with fewer than 2 chains or
// fewer than 4 draws per chain.
double split_rhat(const std::vector<std::vector<double>>& chains);
double split_rhat(const std::vector<Trace>& traces, const std::function<double(const HyperState&)>& summary);

struct RhatEntry {
  std::string name;
  double rhat = 0.0;
};

// Every unconstrained coordinate plus log_post.
std::vector<RhatEntry> rhat_table(const std::vector<Trace>& traces);
std::vector<std::string> coordinate_names(std::size_t p);

struct EffectSummary {
  EffectId effect;
  double mu = 0.0;           // mean of conditional means
  double sigma = 0.0;        // mean of conditional standard deviations
  double sd_of_means = 0.0;  // across-draw SD of conditional means
  std::size_t draws = 0;
};

// Combines per-draw conditional (mean, sd) pairs for one effect.
EffectSummary aggregate_conditionals(const EffectId& effect, const std::vector<double>& means,
                                     const std::vector<double>& sds);

// Factorizes once per stored draw and queries every effect against it.
std::vector<EffectSummary> posterior_summaries(const std::vector<Trace>& traces, const Dataset& data,
                                               const std::vector<EffectId>& effects);

}  // namespace kis
