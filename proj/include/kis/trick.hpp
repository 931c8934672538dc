#pragma once

// Exact Gaussian posteriors of individual degree-2 coefficients recovered
// from the GP posterior at sparse probe points.
//
// For a coefficient theta_e with combination row a over probes A,
//   mean      a K(A, X) (K + sigma^2 I)^{-1} Y
//   variance  a [K(A, A) - K(A, X) (K + sigma^2 I)^{-1} K(X, A)] a^T
// which equals its conjugate posterior under the diagonal prior induced by
// the kernel.

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "kis/features.hpp"
#include "kis/kernel_form.hpp"
#include "kis/likelihood.hpp"

namespace kis {

struct ProbeSet {
  std::vector<Probe> rows;

  // [e_i, -e_i, e_j, -e_j, e_i + e_j, 0]
  static ProbeSet for_pair(int i, int j);
  // [e_k, -e_k for k in E] ++ [e_k + e_l for k < l in E] ++ [0]
  static ProbeSet for_subset(const std::vector<int>& subset);
  // The probes a single effect's combination row touches.
  static ProbeSet for_effect(const EffectId& e);

  // Throws std::invalid_argument on out-of-range indices or when the origin
  // is not present exactly once.
  void validate(std::size_t p) const;
  // Position of `probe`, or throws std::out_of_range.
  std::size_t index_of(const Probe& probe) const;
  std::size_t size() const { return rows.size(); }
};

// One row per effect, one column per probe.
struct CombinationMatrix {
  std::vector<EffectId> effects;
  Matrix rows;

  //   intercept  1 at 0
  //   main(i)    1/2 at e_i, -1/2 at -e_i
  //   quad(i)    1/2 at e_i, 1/2 at -e_i, -1 at 0
  //   pair(i,j)  1 at e_i+e_j, -1 at e_i, -1 at e_j, 1 at 0
  static CombinationMatrix build(const std::vector<EffectId>& effects, const ProbeSet& probes);
};

struct GaussianSummary {
  std::vector<EffectId> effects;
  Vector mean;
  Matrix covariance;

  double variance(std::size_t k = 0) const { return covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)); }
};

void to_json(nlohmann::json& j, const GaussianSummary& s);

// GP posterior for one kernel: factor of K + sigma^2 I and the weights
// (K + sigma^2 I)^{-1} Y, shared by every effect query.
class GpPosterior {
 public:
  GpPosterior(KernelForm kernel, const Dataset& data, double sigma2);

  const KernelForm& kernel() const { return kernel_; }
  const KernelFactor& factor() const { return factor_; }
  const Vector& weights() const { return weights_; }
  const Dataset& data() const { return *data_; }
  double log_marginal() const;

  GaussianSummary summarize(const ProbeSet& probes, const CombinationMatrix& comb) const;

  // Marginal means and variances of many effects; one triangular solve per
  // effect, batched.
  void marginals(const std::vector<EffectId>& effects, Vector& mean, Vector& variance) const;

 private:
  KernelForm kernel_;
  const Dataset* data_;
  KernelFactor factor_;
  Vector weights_;
};

GaussianSummary effect_posterior(const GpPosterior& post, const EffectId& effect);
GaussianSummary effect_posterior(const KernelForm& kernel, const Dataset& data, double sigma2,
                                 const EffectId& effect);

struct EffectSelectors {
  bool mains = true;
  bool pairs = true;
  bool quads = true;
  bool intercept = false;
};

inline constexpr std::size_t kDefaultJointCap = 64;

// Effects ordered: intercept, mains, pairs (lexicographic), quads, each
// restricted to the subset. Throws std::invalid_argument on duplicate or
// out-of-range indices and std::length_error over the cap.
GaussianSummary joint_posterior(const GpPosterior& post, const std::vector<int>& subset,
                                EffectSelectors include = {}, std::size_t cap = kDefaultJointCap);
GaussianSummary joint_posterior(const KernelForm& kernel, const Dataset& data, double sigma2,
                                const std::vector<int>& subset, EffectSelectors include = {},
                                std::size_t cap = kDefaultJointCap);

Matrix probe_gram(const KernelForm& kernel, const ProbeSet& probes);

}  // namespace kis
