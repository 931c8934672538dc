#include "kis/likelihood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "kis/features.hpp"

namespace kis {
namespace {

std::atomic<std::uint64_t> g_factorizations{0};

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_sigma2(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("marginal likelihood: sigma2 must be finite and > 0");
  }
}

// Phi_2(X) with column k scaled by `scale[k]`, built row by row without the
// intermediate per-row vectors. Row-major, so the fill is sequential.
RowMatrix scaled_design(const RowMatrix& X, const Vector& scale) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  RowMatrix F(n, scale.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index k = 0;
    F(r, k) = scale[k];
    ++k;
    for (Eigen::Index i = 0; i < p; ++i, ++k) F(r, k) = X(r, i) * scale[k];
    for (Eigen::Index i = 0; i < p; ++i) {
      const double xi = X(r, i);
      for (Eigen::Index j = i + 1; j < p; ++j, ++k) F(r, k) = xi * X(r, j) * scale[k];
    }
    for (Eigen::Index i = 0; i < p; ++i, ++k) F(r, k) = X(r, i) * X(r, i) * scale[k];
  }
  return F;
}

// Factor pairs of every Phi_2 column over the augmented row (1, x_1..x_p):
// column k is xt[a[k]] * xt[b[k]].
struct FeaturePairs {
  std::vector<Eigen::Index> a;
  std::vector<Eigen::Index> b;
};

FeaturePairs feature_pairs(Eigen::Index p) {
  FeaturePairs f;
  const auto add = [&](Eigen::Index a, Eigen::Index b) {
    f.a.push_back(a);
    f.b.push_back(b);
  };
  add(0, 0);
  for (Eigen::Index i = 1; i <= p; ++i) add(0, i);
  for (Eigen::Index i = 1; i <= p; ++i) {
    for (Eigen::Index j = i + 1; j <= p; ++j) add(i, j);
  }
  for (Eigen::Index i = 1; i <= p; ++i) add(i, i);
  return f;
}

// Columns [k0, k0 + Z.cols()) of the scaled design.
void design_block(const RowMatrix& Xt, const FeaturePairs& f, const Vector& scale, Eigen::Index k0, RowMatrix& Z) {
  for (Eigen::Index r = 0; r < Z.rows(); ++r) {
    const double* xt = Xt.row(r).data();
    double* z = Z.row(r).data();
    for (Eigen::Index c = 0; c < Z.cols(); ++c) {
      const auto k = static_cast<std::size_t>(k0 + c);
      z[c] = xt[f.a[k]] * xt[f.b[k]] * scale[k0 + c];
    }
  }
}

void check_explicit(const PriorDiag& prior, const Dataset& data, double sigma2, std::size_t cap,
                    const char* who) {
  data.validate();
  check_sigma2(sigma2);
  if (prior.p() != data.p()) throw std::invalid_argument(std::string(who) + ": prior dimension does not match data");
  const std::size_t d = phi2_dim(data.p());
  if (d > cap) {
    std::ostringstream os;
    os << who << ": feature dimension " << d << " exceeds cap " << cap;
    throw std::length_error(os.str());
  }
  const Vector& v = prior.variances();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!(v[k] > 0.0)) {
      throw std::invalid_argument(std::string(who) + ": prior variance of " +
                                  effect_at(static_cast<std::size_t>(k), data.p()).label() +
                                  " is zero; prior covariance is singular");
    }
  }
}

double log_diag_sum(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("dataset: need N >= 1 and p >= 1");
  if (Y.size() != X.rows()) throw std::invalid_argument("dataset: Y length does not match rows of X");
  if (!X.allFinite()) throw std::invalid_argument("dataset: X contains non-finite entries");
  if (!Y.allFinite()) throw std::invalid_argument("dataset: Y contains non-finite entries");
  if (!standardized.empty() && standardized.size() != p()) {
    throw std::invalid_argument("dataset: standardized flags do not match columns");
  }
  if (!names.empty() && names.size() != p()) throw std::invalid_argument("dataset: names do not match columns");
}

KernelFactor::KernelFactor(const Matrix& K, double sigma2) : sigma2_(sigma2) {
  check_sigma2(sigma2);
  if (K.rows() != K.cols()) throw std::invalid_argument("kernel factor: K must be square");
  if (K.rows() == 0) throw std::invalid_argument("kernel factor: empty kernel matrix");
  if (!K.allFinite()) throw std::invalid_argument("kernel factor: K contains non-finite entries");
  const double mean_diag = K.diagonal().mean() + sigma2;
  std::vector<double> tried;
  for (double delta : kJitterLadder) {
    const double jitter = delta * mean_diag;
    tried.push_back(jitter);
    Matrix L = K;
    L.diagonal().array() += sigma2 + jitter;
    llt_.compute(L);
    if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().allFinite() &&
        (llt_.matrixLLT().diagonal().array() > 0.0).all()) {
      jitter_ = jitter;
      g_factorizations.fetch_add(1, std::memory_order_relaxed);
      return;
    }
  }
  throw FactorizationError("Cholesky of K + sigma2 I failed at every jitter level", std::move(tried));
}

double KernelFactor::log_det() const { return log_diag_sum(llt_); }

Vector KernelFactor::solve_lower(const Vector& b) const { return llt_.matrixL().solve(b); }

Matrix KernelFactor::solve_lower(const Matrix& B) const { return llt_.matrixL().solve(B); }

Vector KernelFactor::solve(const Vector& b) const { return llt_.solve(b); }

Matrix KernelFactor::inverse() const {
  return llt_.solve(Matrix::Identity(llt_.rows(), llt_.cols()));
}

std::uint64_t KernelFactor::count() { return g_factorizations.load(std::memory_order_relaxed); }

MarginalResult gp_log_marginal(const KernelFactor& factor, const Vector& Y) {
  if (static_cast<std::size_t>(Y.size()) != factor.n()) {
    throw std::invalid_argument("gp_log_marginal: Y length does not match kernel matrix");
  }
  const Vector w = factor.solve_lower(Y);
  const double n = static_cast<double>(Y.size());
  MarginalResult r;
  r.log_density = -0.5 * w.squaredNorm() - 0.5 * factor.log_det() - 0.5 * n * kLog2Pi;
  r.cholesky_ok = true;
  r.jitter_used = factor.jitter_used();
  return r;
}

MarginalResult gp_log_marginal(const Matrix& K, double sigma2, const Vector& Y) {
  if (K.rows() != Y.size()) throw std::invalid_argument("gp_log_marginal: Y length does not match kernel matrix");
  return gp_log_marginal(KernelFactor(K, sigma2), Y);
}

MarginalResult naive_log_marginal(const PriorDiag& prior, const Dataset& data, double sigma2,
                                  std::size_t feature_cap) {
  check_explicit(prior, data, sigma2, feature_cap, "naive_log_marginal");
  const Vector& s = prior.variances();
  const RowMatrix F = scaled_design(data.X, Vector::Ones(s.size()));
  // Posterior precision Sigma^{-1} + F^T F / sigma2
  Matrix P = Matrix::Zero(s.size(), s.size());
  P.selfadjointView<Eigen::Lower>().rankUpdate(F.transpose(), 1.0 / sigma2);
  P.diagonal() += s.cwiseInverse();
  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("naive_log_marginal: posterior precision is not positive definite", {0.0});
  }
  const Vector b = F.transpose() * data.Y / sigma2;
  const Vector u = llt.matrixL().solve(b);
  const double n = static_cast<double>(data.n());
  MarginalResult r;
  r.log_density = -0.5 * n * (kLog2Pi + std::log(sigma2)) - 0.5 * s.array().log().sum() -
                  0.5 * log_diag_sum(llt) - 0.5 * (data.Y.squaredNorm() / sigma2 - u.squaredNorm());
  r.cholesky_ok = true;
  return r;
}

MarginalResult woodbury_log_marginal(const PriorDiag& prior, const Dataset& data, double sigma2,
                                     std::size_t feature_cap) {
  check_explicit(prior, data, sigma2, feature_cap, "woodbury_log_marginal");
  const Vector& s = prior.variances();
  const Vector root = s.cwiseSqrt();
  // Z = Phi Sigma^{1/2}; B = I + Z Z^T / sigma2. Z is streamed in column
  // blocks that stay in cache; only B, Z^T Y and Z Z^T Y are accumulated.
  const Eigen::Index n = static_cast<Eigen::Index>(data.n());
  const Eigen::Index d = s.size();
  RowMatrix Xt(n, data.X.cols() + 1);
  Xt.col(0).setOnes();
  Xt.rightCols(data.X.cols()) = data.X;
  const FeaturePairs pairs = feature_pairs(data.X.cols());
  Matrix B = Matrix::Identity(n, n);
  double half_sq = 0.0;  // |Sigma^{1/2} v|^2 with v = Phi^T Y
  Vector w = Vector::Zero(n);  // Phi Sigma v
  constexpr Eigen::Index kBlock = 1024;
  RowMatrix Z;
  for (Eigen::Index k0 = 0; k0 < d; k0 += kBlock) {
    Z.resize(n, std::min(kBlock, d - k0));
    design_block(Xt, pairs, root, k0, Z);
    B.selfadjointView<Eigen::Lower>().rankUpdate(Z, 1.0 / sigma2);
    const Vector half = Z.transpose() * data.Y;
    half_sq += half.squaredNorm();
    w.noalias() += Z * half;
  }
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("woodbury_log_marginal: I + Phi Sigma Phi^T / sigma2 is not positive definite", {0.0});
  }
  // log|Sigma_N| = -log|B| + log|Sigma|
  const double log_det_sigma = s.array().log().sum();
  const double log_det_post = -log_diag_sum(llt) + log_det_sigma;
  // v^T Sigma_N v = v^T Sigma v - w^T B^{-1} w / sigma2
  const Vector lw = llt.matrixL().solve(w);
  const double quad_post = half_sq - lw.squaredNorm() / sigma2;
  const double nn = static_cast<double>(n);
  MarginalResult r;
  r.log_density = -0.5 * nn * (kLog2Pi + std::log(sigma2)) + 0.5 * log_det_post - 0.5 * log_det_sigma -
                  0.5 * (data.Y.squaredNorm() / sigma2 - quad_post / (sigma2 * sigma2));
  r.cholesky_ok = true;
  return r;
}

MarginalResult naive_log_marginal(const TwoWayKernelSpec& spec, const Dataset& data, double sigma2,
                                  std::size_t feature_cap) {
  return naive_log_marginal(induced_prior_diag(spec), data, sigma2, feature_cap);
}

MarginalResult woodbury_log_marginal(const TwoWayKernelSpec& spec, const Dataset& data, double sigma2,
                                     std::size_t feature_cap) {
  return woodbury_log_marginal(induced_prior_diag(spec), data, sigma2, feature_cap);
}

}  // namespace kis
