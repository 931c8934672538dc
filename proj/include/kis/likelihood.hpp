#pragma once

// Marginal likelihood log p(Y | tau, sigma^2) with theta integrated out.
//
//   gp_log_marginal        N x N kernel route, O(N^2 p + N^3)
//   woodbury_log_marginal  explicit features, N x N inner system
//   naive_log_marginal     explicit features, D x D posterior precision
//
// The explicit-feature routes do O(N D) work on Phi_2(X) (Woodbury streams it
// in column blocks, naive materializes it) and are guarded by a cap on the
// feature dimension D; they exist as oracles and baselines.

#include <Eigen/Cholesky>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kis/kernels.hpp"
#include "kis/types.hpp"

namespace kis {

struct Dataset {
  RowMatrix X;  // N x p
  Vector Y;     // N
  std::vector<bool> standardized;  // per column of X
  std::vector<std::string> names;  // column names of X, may be empty

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }

  // Throws std::invalid_argument unless N >= 1, p >= 1, shapes agree and
  // every entry is finite.
  void validate() const;
};

struct MarginalResult {
  double log_density = 0.0;
  bool cholesky_ok = false;
  double jitter_used = 0.0;
};

// Jitter ladder as multiples of mean(diag).
inline constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

// Cholesky factor of K + sigma^2 I, stabilized by the jitter ladder.
class KernelFactor {
 public:
  // Throws FactorizationError carrying the attempted jitters on failure.
  KernelFactor(const Matrix& K, double sigma2);

  std::size_t n() const { return static_cast<std::size_t>(llt_.rows()); }
  double sigma2() const { return sigma2_; }
  double jitter_used() const { return jitter_; }
  double log_det() const;
  // L^{-1} b
  Vector solve_lower(const Vector& b) const;
  Matrix solve_lower(const Matrix& B) const;
  // (K + sigma^2 I)^{-1} b
  Vector solve(const Vector& b) const;
  Matrix inverse() const;

  // Process-wide count of successful factorizations.
  static std::uint64_t count();

 private:
  Eigen::LLT<Matrix> llt_;
  double sigma2_;
  double jitter_ = 0.0;
};

MarginalResult gp_log_marginal(const Matrix& K, double sigma2, const Vector& Y);
MarginalResult gp_log_marginal(const KernelFactor& factor, const Vector& Y);

inline constexpr std::size_t kDefaultFeatureCap = 5000;

// Both explicit routes require every prior variance to be > 0.
MarginalResult naive_log_marginal(const PriorDiag& prior, const Dataset& data, double sigma2,
                                  std::size_t feature_cap = kDefaultFeatureCap);
MarginalResult woodbury_log_marginal(const PriorDiag& prior, const Dataset& data, double sigma2,
                                     std::size_t feature_cap = kDefaultFeatureCap);

MarginalResult naive_log_marginal(const TwoWayKernelSpec& spec, const Dataset& data, double sigma2,
                                  std::size_t feature_cap = kDefaultFeatureCap);
MarginalResult woodbury_log_marginal(const TwoWayKernelSpec& spec, const Dataset& data,
                                     double sigma2, std::size_t feature_cap = kDefaultFeatureCap);

}  // namespace kis
