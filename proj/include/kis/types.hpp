#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kis {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Design matrices are row-major so each observation is contiguous for the
// kernel inner loops.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ConstSpan = std::span<const double>;

inline ConstSpan as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline ConstSpan row_span(const RowMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Kernel weights that would make a component negative, or a target prior
// that no kernel of the requested family can induce.
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Symmetric factorization failed at every rung of the jitter ladder.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, std::vector<double> ladder)
      : std::runtime_error(what), ladder_(std::move(ladder)) {}
  const std::vector<double>& attempted_jitter() const { return ladder_; }

 private:
  std::vector<double> ladder_;
};

}  // namespace kis
