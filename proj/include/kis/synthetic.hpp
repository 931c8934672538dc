#pragma once

// Synthetic regression data with a sparse set of main effects and all
// pairwise interactions among them.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kis/likelihood.hpp"

namespace kis {

struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t p = 50;
  double lambda = 5.0;  // covariates ~ N(0, lambda^2 I)
  std::vector<int> true_mains;  // 1-based; empty: five drawn from the seed
  double effect_magnitude = 1.0;
  double noise_variance = 25.0;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument for lambda <= 0, p < 5, duplicate or
  // out-of-range mains, or nonpositive noise variance.
  void validate() const;
};

struct SyntheticData {
  Dataset data;
  std::vector<int> true_mains;  // sorted
  std::vector<std::pair<int, int>> true_pairs;
  Vector theta;  // over the canonical degree-2 features
};

// y = theta^T Phi_2(x) + eps, eps ~ N(0, noise_variance), theta holding the
// true mains and their pairwise products at effect_magnitude.
SyntheticData simulate(const SyntheticSpec& spec);

nlohmann::json truth_json(const SyntheticSpec& spec, const SyntheticData& d);

}  // namespace kis
