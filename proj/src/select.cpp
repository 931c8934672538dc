#include "kis/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace kis {
namespace {

SelectionRow make_row(const EffectSummary& s, double z) {
  if (!(s.sigma >= 0.0)) throw std::invalid_argument("selection: negative sigma_T for " + s.effect.label());
  SelectionRow r;
  r.summary = s;
  r.lower = s.mu - z * s.sigma;
  r.upper = s.mu + z * s.sigma;
  r.selected = interval_excludes_zero(s.mu, s.sigma, z);
  return r;
}

std::vector<SelectionRow> only_selected(const std::vector<SelectionRow>& rows) {
  std::vector<SelectionRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [](const SelectionRow& r) { return r.selected; });
  return out;
}

nlohmann::json rows_json(const std::vector<SelectionRow>& rows) {
  auto a = nlohmann::json::array();
  for (const auto& r : rows) {
    a.push_back({{"effect", r.summary.effect.label()},
                 {"mu_T", r.summary.mu},
                 {"sigma_T", r.summary.sigma},
                 {"sd_of_means", r.summary.sd_of_means},
                 {"lower", r.lower},
                 {"upper", r.upper},
                 {"selected", r.selected}});
  }
  return a;
}

}  // namespace

std::vector<SelectionRow> SelectionReport::selected_mains() const { return only_selected(mains); }
std::vector<SelectionRow> SelectionReport::selected_pairs() const { return only_selected(pairs); }

bool interval_excludes_zero(double mu, double sigma, double z) {
  if (!(z > 0.0)) throw std::invalid_argument("selection: z must be > 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("selection: sigma must be >= 0");
  return std::abs(mu) > z * sigma;
}

SelectionReport select_effects(const std::vector<EffectSummary>& summaries, double z) {
  if (!(z > 0.0)) throw std::invalid_argument("selection: z must be > 0");
  SelectionReport r;
  r.z = z;
  for (const auto& s : summaries) {
    SelectionRow row = make_row(s, z);
    switch (s.effect.kind) {
      case EffectKind::main: r.mains.push_back(row); break;
      case EffectKind::pair: r.pairs.push_back(row); break;
      case EffectKind::quad: r.quads.push_back(row); break;
      case EffectKind::intercept: r.other.push_back(row); break;
    }
  }
  return r;
}

double ranking_statistic(const EffectSummary& s) { return std::abs(s.mu) / std::max(s.sigma, kSigmaFloor); }

SelectionReport hierarchical_screen(const std::vector<EffectSummary>& main_summaries, const std::vector<Trace>& traces,
                                    const Dataset& data, std::size_t k, double z) {
  if (k > data.p()) throw std::invalid_argument("hierarchical_screen: k exceeds p");
  SelectionReport report;
  report.z = z;
  if (k == 0) return report;
  for (const auto& s : main_summaries) {
    if (s.effect.kind != EffectKind::main) throw std::invalid_argument("hierarchical_screen: expected main effects only");
  }
  if (main_summaries.size() < k) throw std::invalid_argument("hierarchical_screen: fewer main summaries than k");
  report = select_effects(main_summaries, z);
  std::vector<std::size_t> order(main_summaries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranking_statistic(main_summaries[a]) > ranking_statistic(main_summaries[b]);
  });
  std::vector<EffectId> candidates;
  for (std::size_t r = 0; r < k; ++r) report.top_mains.push_back(main_summaries[order[r]].effect.i);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const int i = report.top_mains[a];
      const int j = report.top_mains[b];
      candidates.push_back(EffectId::pair(std::min(i, j), std::max(i, j)));
    }
  }
  report.candidate_pair_count = candidates.size();
  for (int i : report.top_mains) candidates.push_back(EffectId::quad(i));
  const auto summaries = posterior_summaries(traces, data, candidates);
  const SelectionReport inner = select_effects(summaries, z);
  report.pairs = inner.pairs;
  report.quads = inner.quads;
  return report;
}

SelectionReport hierarchical_screen(const std::vector<Trace>& traces, const Dataset& data, std::size_t k, double z) {
  if (k > data.p()) throw std::invalid_argument("hierarchical_screen: k exceeds p");
  if (k == 0) {
    SelectionReport r;
    r.z = z;
    return r;
  }
  std::vector<EffectId> mains;
  for (std::size_t i = 1; i <= data.p(); ++i) mains.push_back(EffectId::main(static_cast<int>(i)));
  return hierarchical_screen(posterior_summaries(traces, data, mains), traces, data, k, z);
}

void to_json(nlohmann::json& j, const SelectionReport& r) {
  j = {{"z", r.z},
       {"candidate_pair_count", r.candidate_pair_count},
       {"top_mains", r.top_mains},
       {"mains", rows_json(r.mains)},
       {"pairs", rows_json(r.pairs)},
       {"quads", rows_json(r.quads)}};
  auto sel = nlohmann::json::array();
  for (const auto& row : r.selected_mains()) sel.push_back(row.summary.effect.i);
  j["selected_mains"] = sel;
  auto selp = nlohmann::json::array();
  for (const auto& row : r.selected_pairs()) selp.push_back({row.summary.effect.i, row.summary.effect.j});
  j["selected_pairs"] = selp;
  if (!r.other.empty()) j["other"] = rows_json(r.other);
}

void write_table(std::ostream& os, const SelectionReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %12s %12s %12s %12s  %s\n", "effect", "mu_T", "sigma_T", "lower", "upper",
                "selected");
  os << buf;
  const auto emit = [&](const std::vector<SelectionRow>& rows) {
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "%-12s %12.5g %12.5g %12.5g %12.5g  %s\n", row.summary.effect.label().c_str(),
                    row.summary.mu, row.summary.sigma, row.lower, row.upper, row.selected ? "yes" : "no");
      os << buf;
    }
  };
  emit(r.other);
  emit(r.mains);
  emit(r.pairs);
  emit(r.quads);
}

}  // namespace kis
