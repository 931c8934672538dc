#include "kis/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "kis/features.hpp"

namespace kis {

void SyntheticSpec::validate() const {
  if (n < 1) throw std::invalid_argument("simulate: N must be >= 1");
  if (p < 5) throw std::invalid_argument("simulate: p must be >= 5");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("simulate: lambda must be > 0");
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("simulate: noise variance must be > 0");
  }
  if (!std::isfinite(effect_magnitude)) throw std::invalid_argument("simulate: effect magnitude must be finite");
  std::set<int> seen;
  for (int i : true_mains) {
    if (i < 1 || static_cast<std::size_t>(i) > p) throw std::invalid_argument("simulate: true main outside 1..p");
    if (!seen.insert(i).second) throw std::invalid_argument("simulate: duplicate true main " + std::to_string(i));
  }
}

SyntheticData simulate(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticData out;
  out.true_mains = spec.true_mains;
  if (out.true_mains.empty()) {
    std::vector<int> all(spec.p);
    std::iota(all.begin(), all.end(), 1);
    std::shuffle(all.begin(), all.end(), rng);
    out.true_mains.assign(all.begin(), all.begin() + 5);
  }
  std::sort(out.true_mains.begin(), out.true_mains.end());
  for (std::size_t a = 0; a < out.true_mains.size(); ++a) {
    for (std::size_t b = a + 1; b < out.true_mains.size(); ++b) out.true_pairs.emplace_back(out.true_mains[a], out.true_mains[b]);
  }
  out.theta = Vector::Zero(static_cast<Eigen::Index>(phi2_dim(spec.p)));
  for (int i : out.true_mains) out.theta[static_cast<Eigen::Index>(effect_index(EffectId::main(i), spec.p))] = spec.effect_magnitude;
  for (const auto& [i, j] : out.true_pairs) {
    out.theta[static_cast<Eigen::Index>(effect_index(EffectId::pair(i, j), spec.p))] = spec.effect_magnitude;
  }

  std::normal_distribution<double> cov(0.0, spec.lambda);
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
  Dataset& d = out.data;
  d.X.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.p));
  for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) d.X(r, c) = cov(rng);
  }
  d.Y.resize(d.X.rows());
  for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
    double mean = 0.0;
    for (int i : out.true_mains) mean += spec.effect_magnitude * d.X(r, i - 1);
    for (const auto& [i, j] : out.true_pairs) mean += spec.effect_magnitude * d.X(r, i - 1) * d.X(r, j - 1);
    d.Y[r] = mean + noise(rng);
  }
  for (std::size_t c = 1; c <= spec.p; ++c) d.names.push_back("x" + std::to_string(c));
  d.standardized.assign(spec.p, false);
  return out;
}

nlohmann::json truth_json(const SyntheticSpec& spec, const SyntheticData& d) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [i, j] : d.true_pairs) pairs.push_back({i, j});
  return {{"true_mains", d.true_mains},
          {"true_pairs", pairs},
          {"magnitude", spec.effect_magnitude},
          {"noise_variance", spec.noise_variance},
          {"config", {{"N", spec.n}, {"p", spec.p}, {"lambda", spec.lambda}, {"seed", spec.seed}}}};
}

}  // namespace kis
