#include "kis/features.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace kis {
namespace {

void check_input(ConstSpan x) {
  if (x.empty()) throw std::invalid_argument("feature map: input dimension must be >= 1");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k])) {
      throw std::invalid_argument("feature map: non-finite input at coordinate " +
                                  std::to_string(k + 1));
    }
  }
}

std::size_t pair_offset(std::size_t i, std::size_t p) {
  // number of pairs (a, b) with a < i, for 1-based i
  return (i - 1) * p - (i - 1) * i / 2;
}

}  // namespace

std::string EffectId::label() const {
  switch (kind) {
    case EffectKind::intercept: return "intercept";
    case EffectKind::main: return "x" + std::to_string(i);
    case EffectKind::pair: return "x" + std::to_string(i) + ":x" + std::to_string(j);
    case EffectKind::quad: return "x" + std::to_string(i) + "^2";
  }
  return "?";
}

std::size_t phi2_dim(std::size_t p) {
  if (p == 0) throw std::invalid_argument("phi2_dim: p must be >= 1");
  return 1 + 2 * p + p * (p - 1) / 2;
}

std::size_t effect_index(const EffectId& e, std::size_t p) {
  const auto in_range = [p](int v) { return v >= 1 && static_cast<std::size_t>(v) <= p; };
  switch (e.kind) {
    case EffectKind::intercept:
      return 0;
    case EffectKind::main:
      if (!in_range(e.i)) throw std::out_of_range("effect index out of range: " + e.label());
      return static_cast<std::size_t>(e.i);
    case EffectKind::pair: {
      if (!in_range(e.i) || !in_range(e.j) || e.i >= e.j) {
        throw std::out_of_range("invalid pair effect: " + e.label());
      }
      const auto i = static_cast<std::size_t>(e.i);
      const auto j = static_cast<std::size_t>(e.j);
      return 1 + p + pair_offset(i, p) + (j - i - 1);
    }
    case EffectKind::quad:
      if (!in_range(e.i)) throw std::out_of_range("effect index out of range: " + e.label());
      return 1 + p + p * (p - 1) / 2 + static_cast<std::size_t>(e.i - 1);
  }
  throw std::out_of_range("unknown effect kind");
}

EffectId effect_at(std::size_t index, std::size_t p) {
  const std::size_t npairs = p * (p - 1) / 2;
  if (index >= phi2_dim(p)) throw std::out_of_range("effect_at: index out of range");
  if (index == 0) return EffectId::intercept();
  if (index <= p) return EffectId::main(static_cast<int>(index));
  std::size_t k = index - 1 - p;
  if (k >= npairs) return EffectId::quad(static_cast<int>(k - npairs + 1));
  std::size_t i = 1;
  while (k >= p - i) {
    k -= p - i;
    ++i;
  }
  return EffectId::pair(static_cast<int>(i), static_cast<int>(i + 1 + k));
}

std::vector<EffectId> all_effects(std::size_t p) {
  std::vector<EffectId> out;
  out.reserve(phi2_dim(p));
  out.push_back(EffectId::intercept());
  for (std::size_t i = 1; i <= p; ++i) out.push_back(EffectId::main(static_cast<int>(i)));
  for (std::size_t i = 1; i <= p; ++i) {
    for (std::size_t j = i + 1; j <= p; ++j) {
      out.push_back(EffectId::pair(static_cast<int>(i), static_cast<int>(j)));
    }
  }
  for (std::size_t i = 1; i <= p; ++i) out.push_back(EffectId::quad(static_cast<int>(i)));
  return out;
}

Vector phi2_map(ConstSpan x) {
  check_input(x);
  const std::size_t p = x.size();
  Vector out(static_cast<Eigen::Index>(phi2_dim(p)));
  Eigen::Index k = 0;
  out[k++] = 1.0;
  for (std::size_t i = 0; i < p; ++i) out[k++] = x[i];
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) out[k++] = x[i] * x[j];
  }
  for (std::size_t i = 0; i < p; ++i) out[k++] = x[i] * x[i];
  return out;
}

Matrix phi2_design(const RowMatrix& X) {
  if (X.rows() == 0) throw std::invalid_argument("phi2_design: empty design");
  const auto p = static_cast<std::size_t>(X.cols());
  Matrix out(X.rows(), static_cast<Eigen::Index>(phi2_dim(p)));
  for (Eigen::Index n = 0; n < X.rows(); ++n) out.row(n) = phi2_map(row_span(X, n)).transpose();
  return out;
}

std::vector<std::vector<int>> monomial_exponents(std::size_t p, int r) {
  if (r < 1) throw std::invalid_argument("monomial_exponents: degree must be >= 1");
  if (p == 0) throw std::invalid_argument("monomial_exponents: p must be >= 1");
  std::vector<std::vector<int>> out;
  out.emplace_back(p, 0);
  std::vector<int> exps(p, 0);
  // nondecreasing index tuples of length d, lexicographic
  std::function<void(int, std::size_t)> rec = [&](int remaining, std::size_t start) {
    if (remaining == 0) {
      out.push_back(exps);
      return;
    }
    for (std::size_t v = start; v < p; ++v) {
      ++exps[v];
      rec(remaining - 1, v);
      --exps[v];
    }
  };
  for (int d = 1; d <= r; ++d) rec(d, 0);
  return out;
}

Vector phi_r_map(ConstSpan x, int r) {
  check_input(x);
  const auto exps = monomial_exponents(x.size(), r);
  Vector out(static_cast<Eigen::Index>(exps.size()));
  for (std::size_t k = 0; k < exps.size(); ++k) {
    double v = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int e = 0; e < exps[k][i]; ++e) v *= x[i];
    }
    out[static_cast<Eigen::Index>(k)] = v;
  }
  return out;
}

}  // namespace kis
