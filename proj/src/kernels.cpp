#include "kis/kernels.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "kis/simd.hpp"

namespace kis {
namespace {

void require_same_length(ConstSpan x, ConstSpan y, const char* who) {
  if (x.size() != y.size()) {
    std::ostringstream os;
    os << who << ": length mismatch (" << x.size() << " vs " << y.size() << ")";
    throw std::invalid_argument(os.str());
  }
}

void require_nonnegative(const Vector& v, std::size_t p, const char* name) {
  if (static_cast<std::size_t>(v.size()) != p) {
    throw std::invalid_argument(std::string("two-way spec: ") + name + " has wrong length");
  }
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k]) || v[k] < 0.0) {
      throw std::invalid_argument(std::string("two-way spec: ") + name + " must be finite and >= 0");
    }
  }
}

// Relative agreement used when checking that a target has a structured form.
bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b)) + 1e-300; }

}  // namespace

// ---------------------------------------------------------------- PriorDiag

PriorDiag::PriorDiag(std::size_t p, Vector variances) : p_(p), v_(std::move(variances)) {
  if (static_cast<std::size_t>(v_.size()) != phi2_dim(p_)) {
    throw std::invalid_argument("PriorDiag: expected " + std::to_string(phi2_dim(p_)) + " variances");
  }
  for (Eigen::Index k = 0; k < v_.size(); ++k) {
    if (!(v_[k] >= 0.0) || !std::isfinite(v_[k])) {
      throw std::invalid_argument("PriorDiag: variance of " + effect_at(static_cast<std::size_t>(k), p_).label() +
                                  " must be finite and >= 0");
    }
  }
}

PriorDiag PriorDiag::zeros(std::size_t p) { return PriorDiag(p, Vector::Zero(static_cast<Eigen::Index>(phi2_dim(p)))); }

void PriorDiag::set(const EffectId& e, double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("PriorDiag: variance must be >= 0");
  v_[static_cast<Eigen::Index>(effect_index(e, p_))] = value;
}

// ---------------------------------------------------------------- two-way

void TwoWayKernelSpec::validate() const {
  if (p == 0) throw std::invalid_argument("two-way spec: p must be >= 1");
  for (const auto& l : lambdas) require_nonnegative(l, p, "lambda");
  require_nonnegative(alpha, p, "alpha");
  require_nonnegative(psi, p, "psi");
  for (const auto& t : pair_terms) {
    if (t.i < 1 || t.j <= t.i || static_cast<std::size_t>(t.j) > p) {
      throw std::invalid_argument("two-way spec: pair term requires 1 <= i < j <= p");
    }
    if (!std::isfinite(t.nu) || t.nu < 0.0) throw std::invalid_argument("two-way spec: nu must be >= 0");
  }
  if (!std::isfinite(a_const)) throw std::invalid_argument("two-way spec: non-finite A");
  if (static_cast<double>(m1()) + a_const < 0.0) {
    throw std::invalid_argument("two-way spec: induced intercept variance M1 + A is negative");
  }
}

TwoWayKernelSpec TwoWayKernelSpec::zero(std::size_t p) {
  TwoWayKernelSpec s;
  s.p = p;
  s.alpha = Vector::Zero(static_cast<Eigen::Index>(p));
  s.psi = Vector::Zero(static_cast<Eigen::Index>(p));
  return s;
}

KernelForm TwoWayKernelSpec::compile() const {
  validate();
  std::vector<Channel> channels;
  std::vector<PolyTerm> terms;
  for (const auto& l : lambdas) {
    terms.push_back({channels.size(), 1.0, 1.0, 2});
    channels.push_back({l.array().square().matrix(), 1});
  }
  terms.push_back({channels.size(), 1.0, 0.0, 1});
  channels.push_back({alpha.array().square().matrix(), 1});
  terms.push_back({channels.size(), 1.0, 0.0, 1});
  channels.push_back({psi.array().square().matrix(), 2});
  std::vector<ProductTerm> products;
  products.reserve(pair_terms.size());
  for (const auto& t : pair_terms) products.push_back({{t.i, t.j}, t.nu});
  return KernelForm(p, std::move(channels), std::move(terms), std::move(products), a_const);
}

void to_json(nlohmann::json& j, const TwoWayKernelSpec& s) {
  const auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j = nlohmann::json::object();
  j["p"] = s.p;
  j["m1"] = s.m1();
  j["lambdas"] = nlohmann::json::array();
  for (const auto& l : s.lambdas) j["lambdas"].push_back(vec(l));
  j["pair_terms"] = nlohmann::json::array();
  for (const auto& t : s.pair_terms) j["pair_terms"].push_back({{"i", t.i}, {"j", t.j}, {"nu", t.nu}});
  j["alpha"] = vec(s.alpha);
  j["psi"] = vec(s.psi);
  j["a_const"] = s.a_const;
}

void from_json(const nlohmann::json& j, TwoWayKernelSpec& s) {
  const auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  s = TwoWayKernelSpec{};
  s.alpha = vec(j.at("alpha"));
  s.psi = vec(j.at("psi"));
  s.p = j.contains("p") ? j.at("p").get<std::size_t>() : static_cast<std::size_t>(s.alpha.size());
  for (const auto& l : j.at("lambdas")) s.lambdas.push_back(vec(l));
  if (j.at("m1").get<std::size_t>() != s.lambdas.size()) {
    throw std::invalid_argument("two-way spec JSON: m1 does not match number of lambda vectors");
  }
  for (const auto& t : j.at("pair_terms")) {
    s.pair_terms.push_back({t.at("i").get<int>(), t.at("j").get<int>(), t.at("nu").get<double>()});
  }
  s.a_const = j.at("a_const").get<double>();
  s.validate();
}

double poly_kernel(ConstSpan x, ConstSpan y, double c, int d) {
  require_same_length(x, y, "poly_kernel");
  if (d < 1) throw std::invalid_argument("poly_kernel: degree must be >= 1");
  const double base = simd::active_ops().dot(x.data(), y.data(), x.size()) + c;
  double r = 1.0;
  for (int k = 0; k < d; ++k) r *= base;
  return r;
}

double two_way_eval(const TwoWayKernelSpec& spec, ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "two_way_eval");
  if (x.size() != spec.p) throw std::invalid_argument("two_way_eval: input dimension does not match spec");
  return spec.compile()(x, y);
}

PriorDiag induced_prior_diag(const TwoWayKernelSpec& spec) {
  spec.validate();
  const std::size_t p = spec.p;
  PriorDiag out = PriorDiag::zeros(p);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(phi2_dim(p)));
  v[0] = static_cast<double>(spec.m1()) + spec.a_const;
  for (std::size_t i = 1; i <= p; ++i) {
    const auto ii = static_cast<Eigen::Index>(i - 1);
    double main = spec.alpha[ii] * spec.alpha[ii];
    double quad = spec.psi[ii] * spec.psi[ii];
    for (const auto& l : spec.lambdas) {
      const double l2 = l[ii] * l[ii];
      main += 2.0 * l2;
      quad += l2 * l2;
    }
    v[static_cast<Eigen::Index>(effect_index(EffectId::main(static_cast<int>(i)), p))] = main;
    v[static_cast<Eigen::Index>(effect_index(EffectId::quad(static_cast<int>(i)), p))] = quad;
    for (std::size_t j = i + 1; j <= p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j - 1);
      double pair = 0.0;
      for (const auto& l : spec.lambdas) {
        const double prod = l[ii] * l[jj];
        pair += 2.0 * prod * prod;
      }
      v[static_cast<Eigen::Index>(effect_index(EffectId::pair(static_cast<int>(i), static_cast<int>(j)), p))] = pair;
    }
  }
  for (const auto& t : spec.pair_terms) {
    v[static_cast<Eigen::Index>(effect_index(EffectId::pair(t.i, t.j), p))] += t.nu;
  }
  return PriorDiag(p, std::move(v));
}

namespace {

// Structured solve shared by the block and skim-like families. `w` holds
// eta2 * kappa_i^2, i.e. sqrt(2) * lambda_i^2 of the single polynomial
// component.
TwoWayKernelSpec structured_spec(const PriorDiag& target, const Vector& w) {
  const std::size_t p = target.p();
  TwoWayKernelSpec s = TwoWayKernelSpec::zero(p);
  Vector lambda2 = w / std::sqrt(2.0);
  s.lambdas.push_back(lambda2.array().sqrt().matrix());
  for (std::size_t i = 1; i <= p; ++i) {
    const auto ii = static_cast<Eigen::Index>(i - 1);
    const double main = target[EffectId::main(static_cast<int>(i))];
    const double quad = target[EffectId::quad(static_cast<int>(i))];
    const double alpha2 = main - 2.0 * lambda2[ii];
    const double psi2 = quad - lambda2[ii] * lambda2[ii];
    if (alpha2 < -1e-12 * main) {
      throw InfeasibleError("solve_spec_from_diag: main(" + std::to_string(i) +
                            ") = alpha_i^2 + 2 lambda_i^2 requires alpha_i^2 < 0");
    }
    if (psi2 < -1e-12 * quad) {
      throw InfeasibleError("solve_spec_from_diag: quad(" + std::to_string(i) +
                            ") = psi_i^2 + lambda_i^4 requires psi_i^2 < 0");
    }
    s.alpha[ii] = std::sqrt(std::max(alpha2, 0.0));
    s.psi[ii] = std::sqrt(std::max(psi2, 0.0));
  }
  s.a_const = target[EffectId::intercept()] - 1.0;
  return s;
}

TwoWayKernelSpec no_pair_spec(const PriorDiag& target) {
  const std::size_t p = target.p();
  TwoWayKernelSpec s = TwoWayKernelSpec::zero(p);
  for (std::size_t i = 1; i <= p; ++i) {
    s.alpha[static_cast<Eigen::Index>(i - 1)] = std::sqrt(target[EffectId::main(static_cast<int>(i))]);
    s.psi[static_cast<Eigen::Index>(i - 1)] = std::sqrt(target[EffectId::quad(static_cast<int>(i))]);
  }
  s.a_const = target[EffectId::intercept()];
  return s;
}

bool has_pair_variance(const PriorDiag& t) {
  const std::size_t p = t.p();
  const auto& v = t.variances();
  for (std::size_t k = 1 + p; k < 1 + p + p * (p - 1) / 2; ++k) {
    if (v[static_cast<Eigen::Index>(k)] != 0.0) return true;
  }
  return false;
}

void check_round_trip(const TwoWayKernelSpec& s, const PriorDiag& target, const char* family) {
  const auto got = induced_prior_diag(s).variances();
  const auto& want = target.variances();
  for (Eigen::Index k = 0; k < want.size(); ++k) {
    if (std::abs(got[k] - want[k]) > 1e-9 * (1.0 + std::abs(want[k]))) {
      throw InfeasibleError(std::string("solve_spec_from_diag: target is not ") + family + "-structured at " +
                            effect_at(static_cast<std::size_t>(k), target.p()).label());
    }
  }
}

}  // namespace

TwoWayKernelSpec solve_spec_from_diag(const PriorDiag& target, SpecFamily family) {
  const std::size_t p = target.p();
  if (p == 0) throw std::invalid_argument("solve_spec_from_diag: empty target");

  if (family == SpecFamily::general) {
    TwoWayKernelSpec s = no_pair_spec(target);
    for (std::size_t i = 1; i <= p; ++i) {
      for (std::size_t j = i + 1; j <= p; ++j) {
        s.pair_terms.push_back({static_cast<int>(i), static_cast<int>(j),
                                target[EffectId::pair(static_cast<int>(i), static_cast<int>(j))]});
      }
    }
    return s;
  }

  if (!has_pair_variance(target)) {
    TwoWayKernelSpec s = no_pair_spec(target);
    if (family == SpecFamily::block) check_round_trip(s, target, "block");
    return s;
  }

  Vector w(static_cast<Eigen::Index>(p));
  if (family == SpecFamily::block) {
    const double pair = target[EffectId::pair(1, 2)];
    for (std::size_t i = 1; i <= p; ++i) {
      const double m = target[EffectId::main(static_cast<int>(i))];
      const double q = target[EffectId::quad(static_cast<int>(i))];
      if (!close(m, target[EffectId::main(1)]) || !close(q, target[EffectId::quad(1)])) {
        throw InfeasibleError("solve_spec_from_diag: target is not block-structured (unequal main/quad variances)");
      }
    }
    w.setConstant(std::sqrt(pair));
  } else {
    // pair(i,j) = w_i w_j and main_i / main_j = w_i / w_j
    if (p < 2) throw InfeasibleError("solve_spec_from_diag: skim-like target needs p >= 2");
    for (std::size_t i = 1; i <= p; ++i) {
      const int anchor = i == 1 ? 2 : 1;
      const int a = std::min(static_cast<int>(i), anchor);
      const int b = std::max(static_cast<int>(i), anchor);
      const double mi = target[EffectId::main(static_cast<int>(i))];
      const double ma = target[EffectId::main(anchor)];
      if (ma <= 0.0) throw InfeasibleError("solve_spec_from_diag: skim-like target needs positive main variances");
      w[static_cast<Eigen::Index>(i - 1)] = std::sqrt(target[EffectId::pair(a, b)] * mi / ma);
    }
  }
  TwoWayKernelSpec s = structured_spec(target, w);
  check_round_trip(s, target, family == SpecFamily::block ? "block" : "skim-like");
  return s;
}

// ---------------------------------------------------------------- block / SKIM

void check_block_weights(const BlockEta& eta, double c2) {
  const double e1 = eta.eta1 * eta.eta1;
  const double e2 = eta.eta2 * eta.eta2;
  const double e3 = eta.eta3 * eta.eta3;
  if (!std::isfinite(e1) || !std::isfinite(e2) || !std::isfinite(e3) || !std::isfinite(c2)) {
    throw InfeasibleError("block kernel: non-finite hyperparameters");
  }
  if (e1 < e2) throw InfeasibleError("block kernel: linear weight eta1^2 - eta2^2 is negative");
  if (e3 < 0.5 * e2) throw InfeasibleError("block kernel: quadratic weight eta3^2 - eta2^2/2 is negative");
  if (c2 < 0.5 * e2) throw InfeasibleError("block kernel: constant c^2 - eta2^2/2 is negative");
}

bool block_weights_feasible(const BlockEta& eta, double c2) {
  const double e1 = eta.eta1 * eta.eta1;
  const double e2 = eta.eta2 * eta.eta2;
  const double e3 = eta.eta3 * eta.eta3;
  return std::isfinite(e1) && std::isfinite(e2) && std::isfinite(e3) && std::isfinite(c2) && e1 >= e2 &&
         e3 >= 0.5 * e2 && c2 >= 0.5 * e2;
}

namespace {

KernelForm block_form_with(const BlockEta& eta, double c2, Vector kappa2) {
  check_block_weights(eta, c2);
  const double e1 = eta.eta1 * eta.eta1;
  const double e2 = eta.eta2 * eta.eta2;
  const double e3 = eta.eta3 * eta.eta3;
  const std::size_t p = static_cast<std::size_t>(kappa2.size());
  Vector kappa4 = kappa2.array().square();
  std::vector<Channel> channels{{std::move(kappa2), 1}, {std::move(kappa4), 2}};
  std::vector<PolyTerm> terms{
      {0, 0.5 * e2, 1.0, 2},
      {1, e3 - 0.5 * e2, 0.0, 1},
      {0, e1 - e2, 0.0, 1},
  };
  return KernelForm(p, std::move(channels), std::move(terms), {}, c2 - 0.5 * e2);
}

}  // namespace

KernelForm block_kernel_form(const BlockEta& eta, double c2, std::size_t p) {
  return block_form_with(eta, c2, Vector::Ones(static_cast<Eigen::Index>(p)));
}

double block_kernel_eval(const BlockEta& eta, double c2, ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "block_kernel_eval");
  check_block_weights(eta, c2);
  const double e1 = eta.eta1 * eta.eta1;
  const double e2 = eta.eta2 * eta.eta2;
  const double e3 = eta.eta3 * eta.eta3;
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(x.size()));
  const auto m = simd::active_ops().weighted_moments(ones.data(), ones.data(), x.data(), y.data(), x.size());
  const double lin = m.first;
  return 0.5 * e2 * (lin + 1.0) * (lin + 1.0) + (e3 - 0.5 * e2) * m.second + (e1 - e2) * lin + c2 - 0.5 * e2;
}

KernelForm skim_kernel_form(const SkimKernelParams& params) {
  for (Eigen::Index k = 0; k < params.kappa.size(); ++k) {
    if (!std::isfinite(params.kappa[k])) throw InfeasibleError("skim kernel: non-finite kappa");
  }
  return block_form_with(params.eta, params.c2, params.kappa.array().square());
}

double skim_kernel_eval(const SkimKernelParams& params, ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "skim_kernel_eval");
  if (x.size() != static_cast<std::size_t>(params.kappa.size())) {
    throw std::invalid_argument("skim_kernel_eval: input dimension does not match kappa");
  }
  return skim_kernel_form(params)(x, y);
}

PriorDiag skim_prior_diag(const SkimKernelParams& params) {
  const auto p = static_cast<std::size_t>(params.kappa.size());
  const double e1 = params.eta.eta1 * params.eta.eta1;
  const double e2 = params.eta.eta2 * params.eta.eta2;
  const double e3 = params.eta.eta3 * params.eta.eta3;
  Vector v(static_cast<Eigen::Index>(phi2_dim(p)));
  v[0] = params.c2;
  const Vector k2 = params.kappa.array().square();
  for (std::size_t i = 1; i <= p; ++i) {
    const double ki = k2[static_cast<Eigen::Index>(i - 1)];
    v[static_cast<Eigen::Index>(effect_index(EffectId::main(static_cast<int>(i)), p))] = e1 * ki;
    v[static_cast<Eigen::Index>(effect_index(EffectId::quad(static_cast<int>(i)), p))] = e3 * ki * ki;
    for (std::size_t j = i + 1; j <= p; ++j) {
      v[static_cast<Eigen::Index>(effect_index(EffectId::pair(static_cast<int>(i), static_cast<int>(j)), p))] =
          e2 * ki * k2[static_cast<Eigen::Index>(j - 1)];
    }
  }
  return PriorDiag(p, std::move(v));
}

KernelForm poly_kernel_form(double c, int d, std::size_t p) {
  if (d < 1) throw std::invalid_argument("poly kernel: degree must be >= 1");
  return KernelForm(p, {{Vector::Ones(static_cast<Eigen::Index>(p)), 1}}, {{0, 1.0, c, d}}, {}, 0.0);
}

PriorDiag poly_induced_prior(double c, std::size_t p) {
  if (p == 0) throw std::invalid_argument("poly_induced_prior: p must be >= 1");
  if (c < 0.0) throw std::invalid_argument("poly_induced_prior: c must be >= 0");
  Vector v(static_cast<Eigen::Index>(phi2_dim(p)));
  v[0] = c * c;
  for (std::size_t k = 1; k <= p; ++k) v[static_cast<Eigen::Index>(k)] = 2.0 * c;
  for (std::size_t k = 1 + p; k < 1 + p + p * (p - 1) / 2; ++k) v[static_cast<Eigen::Index>(k)] = 2.0;
  for (std::size_t k = 1 + p + p * (p - 1) / 2; k < phi2_dim(p); ++k) v[static_cast<Eigen::Index>(k)] = 1.0;
  return PriorDiag(p, std::move(v));
}

Matrix kernel_matrix(const KernelForm& k, const RowMatrix& X) { return k.gram(X); }

Matrix cross_kernel_at_probes(const KernelForm& k, std::span<const Probe> probes, const RowMatrix& X) {
  if (static_cast<std::size_t>(X.cols()) != k.dim()) {
    throw std::invalid_argument("cross_kernel_at_probes: dimension mismatch");
  }
  Matrix out(static_cast<Eigen::Index>(probes.size()), X.rows());
  for (std::size_t r = 0; r < probes.size(); ++r) {
    for (Eigen::Index n = 0; n < X.rows(); ++n) {
      out(static_cast<Eigen::Index>(r), n) = k.at_probe(probes[r], row_span(X, n));
    }
  }
  return out;
}

// ---------------------------------------------------------------- r-way

void RWaySpec::validate() const {
  if (degree < 2) throw std::invalid_argument("r-way spec: degree must be >= 2");
  if (degree == 2) {
    if (base.p != p) throw std::invalid_argument("r-way spec: base dimension mismatch");
    base.validate();
    return;
  }
  for (const auto& l : lambdas) require_nonnegative(l, p, "lambda");
  for (const auto& pr : products) {
    if (pr.indices.size() != static_cast<std::size_t>(degree)) {
      throw std::invalid_argument("r-way spec: product terms need exactly `degree` indices");
    }
    for (int idx : pr.indices) {
      if (idx < 1 || static_cast<std::size_t>(idx) > p) throw std::invalid_argument("r-way spec: product index out of range");
    }
    if (!std::isfinite(pr.nu) || pr.nu < 0.0) throw std::invalid_argument("r-way spec: nu must be >= 0");
  }
  if (nablas.size() != children.size()) throw std::invalid_argument("r-way spec: each child needs one nabla");
  for (std::size_t m = 0; m < children.size(); ++m) {
    require_nonnegative(nablas[m], p, "nabla");
    if (children[m].degree != degree - 1 || children[m].p != p) {
      throw std::invalid_argument("r-way spec: child must have degree r-1 and the same dimension");
    }
    children[m].validate();
  }
}

namespace {

double r_way_eval_unchecked(const RWaySpec& spec, const Vector& x, const Vector& y) {
  if (spec.degree == 2) return spec.base.compile()(as_span(x), as_span(y));
  const auto& ops = simd::active_ops();
  const auto p = static_cast<std::size_t>(x.size());
  double k = 0.0;
  for (const auto& l : spec.lambdas) {
    const Vector w = l.array().square();
    const double base = ops.weighted_dot(w.data(), x.data(), y.data(), p) + 1.0;
    double term = 1.0;
    for (int d = 0; d < spec.degree; ++d) term *= base;
    k += term;
  }
  for (const auto& pr : spec.products) {
    double v = pr.nu;
    for (int idx : pr.indices) v *= x[idx - 1] * y[idx - 1];
    k += v;
  }
  for (std::size_t m = 0; m < spec.children.size(); ++m) {
    const Vector xs = spec.nablas[m].cwiseProduct(x);
    const Vector ys = spec.nablas[m].cwiseProduct(y);
    k += r_way_eval_unchecked(spec.children[m], xs, ys);
  }
  return k;
}

}  // namespace

double r_way_eval(const RWaySpec& spec, ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "r_way_eval");
  spec.validate();
  if (x.size() != spec.p) throw std::invalid_argument("r_way_eval: input dimension does not match spec");
  const Vector xv = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Vector yv = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  return r_way_eval_unchecked(spec, xv, yv);
}

}  // namespace kis
