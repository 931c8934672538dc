#pragma once

// Two-way and r-way interaction kernels, their induced diagonal priors, and
// construction of kernels from target prior variances.

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "kis/features.hpp"
#include "kis/kernel_form.hpp"
#include "kis/types.hpp"

namespace kis {

// Prior variances over the canonical degree-2 features.
class PriorDiag {
 public:
  PriorDiag() = default;
  // Throws std::invalid_argument on a length mismatch or a negative entry.
  PriorDiag(std::size_t p, Vector variances);
  static PriorDiag zeros(std::size_t p);

  std::size_t p() const { return p_; }
  const Vector& variances() const { return v_; }
  double operator[](const EffectId& e) const { return v_[static_cast<Eigen::Index>(effect_index(e, p_))]; }
  void set(const EffectId& e, double value);

 private:
  std::size_t p_ = 0;
  Vector v_;
};

struct PairWeight {
  int i = 0;  // 1-based, i < j
  int j = 0;
  double nu = 0.0;
};

// k(x,y) = sum_m (lambda_m.x . lambda_m.y + 1)^2 + sum_m nu_m x_i x_j y_i y_j
//          + (alpha.x . alpha.y + A) + (psi.x.x . psi.y.y)
struct TwoWayKernelSpec {
  std::size_t p = 0;
  std::vector<Vector> lambdas;  // M1 vectors of length p
  std::vector<PairWeight> pair_terms;  // M2 single-pair components
  Vector alpha;
  Vector psi;
  double a_const = 0.0;

  std::size_t m1() const { return lambdas.size(); }
  std::size_t m2() const { return pair_terms.size(); }

  // Throws std::invalid_argument on shape errors, negative weights, or a
  // negative induced intercept variance M1 + A.
  void validate() const;
  KernelForm compile() const;

  static TwoWayKernelSpec zero(std::size_t p);
};

void to_json(nlohmann::json& j, const TwoWayKernelSpec& s);
void from_json(const nlohmann::json& j, TwoWayKernelSpec& s);

// (x.y + c)^d
double poly_kernel(ConstSpan x, ConstSpan y, double c, int d);

double two_way_eval(const TwoWayKernelSpec& spec, ConstSpan x, ConstSpan y);

// Closed-form diagonal of the induced prior:
//   main(i)   alpha_i^2 + 2 sum_m lambda_mi^2
//   pair(i,j) 2 sum_m (lambda_mi lambda_mj)^2 + sum of nu on (i,j)
//   quad(i)   psi_i^2 + sum_m lambda_mi^4
//   intercept M1 + A
PriorDiag induced_prior_diag(const TwoWayKernelSpec& spec);

enum class SpecFamily { block, skim_like, general };

// Builds a two-way spec whose induced prior equals `target`.
//   block      one variance per degree block; M1 = 1, M2 = 0
//   skim_like  main eta1^2 k_i^2, pair eta2^2 k_i^2 k_j^2, quad eta3^2 k_i^4;
//              M1 = 1, M2 = 0
//   general    any target; lambda = 0, one pair term per pair (Theta(p^2))
// When the target has no pair variance the structured families fall back to
// M1 = 0. Throws InfeasibleError naming the violated equation.
TwoWayKernelSpec solve_spec_from_diag(const PriorDiag& target, SpecFamily family);

// Degree-block kernel
//   (e2^2/2)(x.y + 1)^2 + (e3^2 - e2^2/2)(x.x . y.y) + (e1^2 - e2^2)(x.y)
//   + c2 - e2^2/2
// with the component weights required to be nonnegative.
struct BlockEta {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
};

// Throws InfeasibleError when e1^2 < e2^2, e3^2 < e2^2/2 or c2 < e2^2/2.
void check_block_weights(const BlockEta& eta, double c2);
bool block_weights_feasible(const BlockEta& eta, double c2);

double block_kernel_eval(const BlockEta& eta, double c2, ConstSpan x, ConstSpan y);

// Sparse interaction kernel: the block kernel applied to (kappa.x, kappa.y).
// Induced variances: main eta1^2 kappa_i^2, pair eta2^2 kappa_i^2 kappa_j^2,
// quad eta3^2 kappa_i^4, intercept c2.
struct SkimKernelParams {
  BlockEta eta;
  double c2 = 0.0;
  Vector kappa;
};

KernelForm block_kernel_form(const BlockEta& eta, double c2, std::size_t p);
KernelForm skim_kernel_form(const SkimKernelParams& params);
double skim_kernel_eval(const SkimKernelParams& params, ConstSpan x, ConstSpan y);
PriorDiag skim_prior_diag(const SkimKernelParams& params);

KernelForm poly_kernel_form(double c, int d, std::size_t p);
// Prior induced by (x.y + c)^2: quads 1, pairs 2, mains 2c, intercept c^2.
PriorDiag poly_induced_prior(double c, std::size_t p);

Matrix kernel_matrix(const KernelForm& k, const RowMatrix& X);
// probes x N matrix of k(probe, x^(n)), each entry in O(1).
Matrix cross_kernel_at_probes(const KernelForm& k, std::span<const Probe> probes,
                              const RowMatrix& X);

// r-way interaction kernel:
//   sum_m (lambda_m.x . lambda_m.y + 1)^r + sum_m nu_m prod_s x_{i_s} y_{i_s}
//   + sum_m k_{r-1}(nabla_m.x, nabla_m.y)
// with the degree-2 case given by a TwoWayKernelSpec. Constants enter only
// through the degree-2 base case.
struct RWaySpec {
  int degree = 2;
  std::size_t p = 0;
  std::vector<Vector> lambdas;
  std::vector<ProductTerm> products;  // each with `degree` indices
  std::vector<Vector> nablas;
  std::vector<RWaySpec> children;     // degree - 1, paired with nablas
  TwoWayKernelSpec base;              // used when degree == 2

  void validate() const;
};

double r_way_eval(const RWaySpec& spec, ConstSpan x, ConstSpan y);

}  // namespace kis
