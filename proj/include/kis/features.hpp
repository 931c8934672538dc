#pragma once

// Explicit polynomial feature maps. These materialize O(p^2) (or O(p^r))
// vectors and exist for oracles, the explicit-feature likelihood baselines,
// and tests; the sampling path never calls them at large p.
//
// Canonical degree-2 ordering (shared by every module):
//   [intercept, x_1..x_p, x_1x_2, x_1x_3, .., x_{p-1}x_p, x_1^2..x_p^2]

#include <cstddef>
#include <string>
#include <vector>

#include "kis/types.hpp"

namespace kis {

enum class EffectKind { intercept, main, pair, quad };

// Indices are 1-based; pairs satisfy i < j.
struct EffectId {
  EffectKind kind = EffectKind::intercept;
  int i = 0;
  int j = 0;

  static EffectId intercept() { return {EffectKind::intercept, 0, 0}; }
  static EffectId main(int i) { return {EffectKind::main, i, 0}; }
  static EffectId pair(int i, int j) { return {EffectKind::pair, i, j}; }
  static EffectId quad(int i) { return {EffectKind::quad, i, 0}; }

  bool operator==(const EffectId&) const = default;

  // "intercept", "x3", "x1:x4", "x2^2"
  std::string label() const;
};

std::size_t phi2_dim(std::size_t p);

// Position of `e` in the canonical ordering; throws std::out_of_range when
// the id is malformed for dimension p.
std::size_t effect_index(const EffectId& e, std::size_t p);
EffectId effect_at(std::size_t index, std::size_t p);
std::vector<EffectId> all_effects(std::size_t p);

Vector phi2_map(ConstSpan x);
// Row n is phi2_map(X.row(n)).
Matrix phi2_design(const RowMatrix& X);

// Exponent vectors of all monomials of total degree 0..r in p variables,
// grouped by degree; within a degree, variables are chosen as nondecreasing
// index tuples in lexicographic order (x1^2, x1x2, .., x2^2, ..).
std::vector<std::vector<int>> monomial_exponents(std::size_t p, int r);

// Leading constant 1 followed by every monomial of degree 1..r, in the order
// of monomial_exponents.
Vector phi_r_map(ConstSpan x, int r);

}  // namespace kis
