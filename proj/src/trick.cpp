#include "kis/trick.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace kis {
namespace {

using Term = std::pair<Probe, double>;

std::vector<Term> combination_of(const EffectId& e) {
  switch (e.kind) {
    case EffectKind::intercept:
      return {{Probe::origin(), 1.0}};
    case EffectKind::main:
      return {{Probe::unit(e.i), 0.5}, {Probe::unit(e.i, -1.0), -0.5}};
    case EffectKind::quad:
      return {{Probe::unit(e.i), 0.5}, {Probe::unit(e.i, -1.0), 0.5}, {Probe::origin(), -1.0}};
    case EffectKind::pair:
      return {{Probe::sum(e.i, e.j), 1.0}, {Probe::unit(e.i), -1.0}, {Probe::unit(e.j), -1.0}, {Probe::origin(), 1.0}};
  }
  throw std::logic_error("unknown effect kind");
}

// Relative clamp for variances that are zero up to roundoff.
double clamp_variance(double v, double scale, const EffectId& e) {
  const double tol = 1e-10 * std::max(1.0, std::abs(scale));
  if (v >= 0.0) return v;
  if (v >= -tol) return 0.0;
  std::ostringstream os;
  os << "posterior variance of " << e.label() << " is " << v << " (factorization is unreliable)";
  throw std::runtime_error(os.str());
}

void check_effect(const EffectId& e, std::size_t p) { (void)effect_index(e, p); }

}  // namespace

ProbeSet ProbeSet::for_pair(int i, int j) {
  return {{Probe::unit(i), Probe::unit(i, -1.0), Probe::unit(j), Probe::sum(i, j), Probe::origin()}};
}

ProbeSet ProbeSet::for_subset(const std::vector<int>& subset) {
  ProbeSet s;
  for (int k : subset) {
    s.rows.push_back(Probe::unit(k));
    s.rows.push_back(Probe::unit(k, -1.0));
  }
  for (std::size_t a = 0; a < subset.size(); ++a) {
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      s.rows.push_back(Probe::sum(std::min(subset[a], subset[b]), std::max(subset[a], subset[b])));
    }
  }
  s.rows.push_back(Probe::origin());
  return s;
}

ProbeSet ProbeSet::for_effect(const EffectId& e) {
  switch (e.kind) {
    case EffectKind::intercept: return {{Probe::origin()}};
    case EffectKind::main:
    case EffectKind::quad: return {{Probe::unit(e.i), Probe::unit(e.i, -1.0), Probe::origin()}};
    case EffectKind::pair: return for_pair(e.i, e.j);
  }
  throw std::logic_error("unknown effect kind");
}

void ProbeSet::validate(std::size_t p) const {
  std::size_t origins = 0;
  const auto ok = [p](int v) { return v >= 0 && static_cast<std::size_t>(v) <= p; };
  for (const auto& r : rows) {
    if (!ok(r.i) || !ok(r.j)) throw std::invalid_argument("probe set: index outside 1..p");
    if (r == Probe::origin()) ++origins;
  }
  if (origins != 1) throw std::invalid_argument("probe set: origin must appear exactly once");
}

std::size_t ProbeSet::index_of(const Probe& probe) const {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] == probe) return k;
  }
  throw std::out_of_range("probe set: probe not present");
}

CombinationMatrix CombinationMatrix::build(const std::vector<EffectId>& effects, const ProbeSet& probes) {
  CombinationMatrix c;
  c.effects = effects;
  c.rows = Matrix::Zero(static_cast<Eigen::Index>(effects.size()), static_cast<Eigen::Index>(probes.size()));
  for (std::size_t r = 0; r < effects.size(); ++r) {
    for (const auto& [probe, coef] : combination_of(effects[r])) {
      c.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(probes.index_of(probe))) += coef;
    }
  }
  return c;
}

void to_json(nlohmann::json& j, const GaussianSummary& s) {
  j = nlohmann::json::object();
  j["effects"] = nlohmann::json::array();
  for (const auto& e : s.effects) j["effects"].push_back(e.label());
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  // lower triangle, row by row
  std::vector<double> tri;
  for (Eigen::Index r = 0; r < s.covariance.rows(); ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) tri.push_back(s.covariance(r, c));
  }
  j["covariance_lower"] = tri;
}

GpPosterior::GpPosterior(KernelForm kernel, const Dataset& data, double sigma2)
    : kernel_(std::move(kernel)), data_(&data), factor_(kernel_.gram(data.X), sigma2) {
  if (data.p() != kernel_.dim()) throw std::invalid_argument("GP posterior: kernel and data dimensions differ");
  weights_ = factor_.solve(data.Y);
}

double GpPosterior::log_marginal() const { return gp_log_marginal(factor_, data_->Y).log_density; }

GaussianSummary GpPosterior::summarize(const ProbeSet& probes, const CombinationMatrix& comb) const {
  probes.validate(kernel_.dim());
  if (comb.rows.cols() != static_cast<Eigen::Index>(probes.size())) {
    throw std::invalid_argument("summarize: combination matrix does not match probe set");
  }
  const Matrix kax = cross_kernel_at_probes(kernel_, probes.rows, data_->X);
  const Matrix kaa = probe_gram(kernel_, probes);
  const Matrix C = comb.rows * kax;  // effects x N
  GaussianSummary out;
  out.effects = comb.effects;
  out.mean = C * weights_;
  const Matrix V = factor_.solve_lower(Matrix(C.transpose()));
  const Matrix prior = comb.rows * kaa * comb.rows.transpose();
  Matrix cov = prior - V.transpose() * V;
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (Eigen::Index k = 0; k < cov.rows(); ++k) {
    cov(k, k) = clamp_variance(cov(k, k), prior(k, k), out.effects[static_cast<std::size_t>(k)]);
  }
  out.covariance = std::move(cov);
  return out;
}

void GpPosterior::marginals(const std::vector<EffectId>& effects, Vector& mean, Vector& variance) const {
  const std::size_t p = kernel_.dim();
  const Eigen::Index n = static_cast<Eigen::Index>(data_->n());
  const auto m = static_cast<Eigen::Index>(effects.size());
  Matrix Ct = Matrix::Zero(n, m);
  Vector prior(m);
  for (Eigen::Index e = 0; e < m; ++e) {
    const EffectId& id = effects[static_cast<std::size_t>(e)];
    check_effect(id, p);
    const auto terms = combination_of(id);
    double pv = 0.0;
    for (const auto& [pa, ca] : terms) {
      for (Eigen::Index r = 0; r < n; ++r) Ct(r, e) += ca * kernel_.at_probe(pa, row_span(data_->X, r));
      for (const auto& [pb, cb] : terms) pv += ca * cb * kernel_.between_probes(pa, pb);
    }
    prior[e] = pv;
  }
  mean = Ct.transpose() * weights_;
  const Matrix V = factor_.solve_lower(Ct);
  variance = prior - V.colwise().squaredNorm().transpose();
  for (Eigen::Index e = 0; e < m; ++e) {
    variance[e] = clamp_variance(variance[e], prior[e], effects[static_cast<std::size_t>(e)]);
  }
}

GaussianSummary effect_posterior(const GpPosterior& post, const EffectId& effect) {
  check_effect(effect, post.kernel().dim());
  const ProbeSet probes = ProbeSet::for_effect(effect);
  return post.summarize(probes, CombinationMatrix::build({effect}, probes));
}

GaussianSummary effect_posterior(const KernelForm& kernel, const Dataset& data, double sigma2,
                                 const EffectId& effect) {
  const GpPosterior post(kernel, data, sigma2);
  return effect_posterior(post, effect);
}

GaussianSummary joint_posterior(const GpPosterior& post, const std::vector<int>& subset, EffectSelectors include,
                                std::size_t cap) {
  const std::size_t p = post.kernel().dim();
  if (subset.size() > cap) {
    throw std::length_error("joint_posterior: subset of size " + std::to_string(subset.size()) + " exceeds cap " +
                            std::to_string(cap));
  }
  std::set<int> seen;
  for (int k : subset) {
    if (k < 1 || static_cast<std::size_t>(k) > p) throw std::invalid_argument("joint_posterior: index outside 1..p");
    if (!seen.insert(k).second) throw std::invalid_argument("joint_posterior: duplicate index " + std::to_string(k));
  }
  std::vector<EffectId> effects;
  if (include.intercept) effects.push_back(EffectId::intercept());
  if (include.mains) {
    for (int k : subset) effects.push_back(EffectId::main(k));
  }
  if (include.pairs) {
    for (std::size_t a = 0; a < subset.size(); ++a) {
      for (std::size_t b = a + 1; b < subset.size(); ++b) {
        effects.push_back(EffectId::pair(std::min(subset[a], subset[b]), std::max(subset[a], subset[b])));
      }
    }
  }
  if (include.quads) {
    for (int k : subset) effects.push_back(EffectId::quad(k));
  }
  const ProbeSet probes = ProbeSet::for_subset(subset);
  return post.summarize(probes, CombinationMatrix::build(effects, probes));
}

GaussianSummary joint_posterior(const KernelForm& kernel, const Dataset& data, double sigma2,
                                const std::vector<int>& subset, EffectSelectors include, std::size_t cap) {
  const GpPosterior post(kernel, data, sigma2);
  return joint_posterior(post, subset, include, cap);
}

Matrix probe_gram(const KernelForm& kernel, const ProbeSet& probes) {
  const auto m = static_cast<Eigen::Index>(probes.size());
  Matrix G(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      G(a, b) = kernel.between_probes(probes.rows[static_cast<std::size_t>(a)], probes.rows[static_cast<std::size_t>(b)]);
      G(b, a) = G(a, b);
    }
  }
  return G;
}

}  // namespace kis
