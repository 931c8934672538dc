#pragma once

// Compiled representation shared by every interaction kernel in the library.
//
// A kernel is a sum of
//   * polynomial terms   coef * (s_c(x, y) + offset)^degree
//   * product terms      nu * prod_s x_{i_s} y_{i_s}
//   * a constant,
// where each channel sum s_c(x, y) = sum_i w_c[i] * (x_i y_i)^power_c with
// power 1 or 2 and w_c >= 0. Two-way interaction kernels, the block and
// sparse (SKIM) kernels and plain polynomial kernels all compile to this
// form, so kernel matrices, probe evaluations and induced priors are written
// once.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "kis/types.hpp"

namespace kis {

class PriorDiag;

struct Channel {
  Vector weights;  // length p, entrywise >= 0
  int power = 1;   // 1: x_i y_i, 2: x_i^2 y_i^2
};

struct PolyTerm {
  std::size_t channel = 0;
  double coef = 1.0;
  double offset = 0.0;
  int degree = 1;
};

struct ProductTerm {
  std::vector<int> indices;  // 1-based, repeats allowed
  double nu = 0.0;
};

// A point with at most two nonzero coordinates: c_i e_i + c_j e_j.
// i == 0 means no first coordinate; j == 0 means no second. Indices 1-based.
struct Probe {
  int i = 0;
  int j = 0;
  double ci = 0.0;
  double cj = 0.0;

  static Probe origin() { return {}; }
  static Probe unit(int i, double c = 1.0) { return {i, 0, c, 0.0}; }
  static Probe sum(int i, int j) { return {i, j, 1.0, 1.0}; }

  bool operator==(const Probe&) const = default;
  // Dense coordinates, for oracles and tests.
  Vector dense(std::size_t p) const;
};

class KernelForm {
 public:
  KernelForm(std::size_t dim, std::vector<Channel> channels, std::vector<PolyTerm> terms,
             std::vector<ProductTerm> products, double constant);

  std::size_t dim() const { return dim_; }
  const std::vector<Channel>& channels() const { return channels_; }
  const std::vector<PolyTerm>& terms() const { return terms_; }
  const std::vector<ProductTerm>& products() const { return products_; }
  double constant() const { return constant_; }

  // O(channels * p + terms + product arity).
  double operator()(ConstSpan x, ConstSpan y) const;

  // N x N symmetric kernel matrix; O(N^2 p) for a fixed number of channels.
  Matrix gram(const RowMatrix& X) const;
  // rows(A) x rows(X) cross-kernel matrix with dense rows.
  Matrix cross(const RowMatrix& A, const RowMatrix& X) const;

  // k(probe, x) in time independent of p.
  double at_probe(const Probe& a, ConstSpan x) const;
  // k(a, b) for two probes, time independent of p.
  double between_probes(const Probe& a, const Probe& b) const;

  // Diagonal prior over the canonical degree-2 features induced by this
  // kernel. Throws std::domain_error when a term produces monomials outside
  // the degree-2 feature map.
  PriorDiag induced_prior() const;

 private:
  double combine(std::span<const double> channel_sums) const;
  double products_on_support(const Probe& a, ConstSpan x) const;
  double products_between(const Probe& a, const Probe& b) const;
  static std::uint64_t support_key(int i, int j);

  std::size_t dim_;
  std::vector<Channel> channels_;
  std::vector<PolyTerm> terms_;
  std::vector<ProductTerm> products_;
  double constant_;
  // Products whose index set has at most two distinct members, keyed by that
  // set; everything else vanishes on probes.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> sparse_products_;
};

// Generic slow path for an arbitrary kernel closure.
template <class Kernel>
Matrix kernel_matrix_of(const Kernel& k, const RowMatrix& X) {
  const Eigen::Index n = X.rows();
  Matrix K(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      K(a, b) = k(row_span(X, a), row_span(X, b));
      K(b, a) = K(a, b);
    }
  }
  return K;
}

}  // namespace kis
