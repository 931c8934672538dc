#pragma once

// Interval-based selection from posterior summaries, and the lazy
// hierarchical screen that only examines interactions among the strongest
// main effects.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "kis/sampler.hpp"

namespace kis {

inline constexpr double kDefaultZ = 2.59;
inline constexpr double kSigmaFloor = 1e-12;

struct SelectionRow {
  EffectSummary summary;
  double lower = 0.0;
  double upper = 0.0;
  bool selected = false;
};

struct SelectionReport {
  std::vector<SelectionRow> mains;
  std::vector<SelectionRow> pairs;
  std::vector<SelectionRow> quads;
  std::vector<SelectionRow> other;  // intercept
  double z = kDefaultZ;
  std::size_t candidate_pair_count = 0;
  std::vector<int> top_mains;  // screened mains, strongest first

  std::vector<SelectionRow> selected_mains() const;
  std::vector<SelectionRow> selected_pairs() const;
};

// Selected iff |mu| > z sigma, i.e. 0 lies outside (mu - z sigma, mu + z sigma)
// and the effect is not identically zero. Throws std::invalid_argument on a
// negative sigma or a nonpositive z.
bool interval_excludes_zero(double mu, double sigma, double z);
SelectionReport select_effects(const std::vector<EffectSummary>& summaries, double z = kDefaultZ);

// |mu| / max(sigma, 1e-12)
double ranking_statistic(const EffectSummary& s);

// Ranks every main effect, keeps the top k, and summarizes the pairs and
// squares among them only. k = 0 gives an empty report.
SelectionReport hierarchical_screen(const std::vector<Trace>& traces, const Dataset& data, std::size_t k,
                                    double z = kDefaultZ);
// Same, from precomputed main-effect summaries.
SelectionReport hierarchical_screen(const std::vector<EffectSummary>& main_summaries, const std::vector<Trace>& traces,
                                    const Dataset& data, std::size_t k, double z = kDefaultZ);

void to_json(nlohmann::json& j, const SelectionReport& r);
// columns: effect, mu_T, sigma_T, lower, upper, selected
void write_table(std::ostream& os, const SelectionReport& r);

}  // namespace kis
