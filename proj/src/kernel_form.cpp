#include "kis/kernel_form.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kis/features.hpp"
#include "kis/kernels.hpp"
#include "kis/simd.hpp"

namespace kis {
namespace {

double ipow(double v, int d) {
  double r = 1.0;
  for (int k = 0; k < d; ++k) r *= v;
  return r;
}

double probe_coef(const Probe& a, int idx) {
  double c = 0.0;
  if (a.i == idx) c += a.ci;
  if (a.j == idx) c += a.cj;
  return c;
}

// Rows of X raised to `power` and scaled by sqrt(weights).
RowMatrix scaled_rows(const RowMatrix& X, const Channel& ch) {
  const auto& ops = simd::active_ops();
  const auto p = static_cast<std::size_t>(X.cols());
  Vector root = ch.weights.array().sqrt();
  RowMatrix Z(X.rows(), X.cols());
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    const double* x = X.data() + n * X.cols();
    double* z = Z.data() + n * Z.cols();
    if (ch.power == 1) {
      ops.scale(x, root.data(), z, p);
    } else {
      ops.scale(x, x, z, p);
      ops.scale(z, root.data(), z, p);
    }
  }
  return Z;
}

}  // namespace

Vector Probe::dense(std::size_t p) const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(p));
  if (i > 0) v[i - 1] += ci;
  if (j > 0) v[j - 1] += cj;
  return v;
}

KernelForm::KernelForm(std::size_t dim, std::vector<Channel> channels, std::vector<PolyTerm> terms,
                       std::vector<ProductTerm> products, double constant)
    : dim_(dim),
      channels_(std::move(channels)),
      terms_(std::move(terms)),
      products_(std::move(products)),
      constant_(constant) {
  if (dim_ == 0) throw std::invalid_argument("kernel: dimension must be >= 1");
  if (!std::isfinite(constant_)) throw std::invalid_argument("kernel: non-finite constant");
  for (const auto& ch : channels_) {
    if (static_cast<std::size_t>(ch.weights.size()) != dim_) {
      throw std::invalid_argument("kernel: channel weight length does not match dimension");
    }
    if (ch.power != 1 && ch.power != 2) throw std::invalid_argument("kernel: channel power must be 1 or 2");
    for (Eigen::Index k = 0; k < ch.weights.size(); ++k) {
      if (!std::isfinite(ch.weights[k]) || ch.weights[k] < 0.0) {
        throw std::invalid_argument("kernel: channel weights must be finite and >= 0");
      }
    }
  }
  for (const auto& t : terms_) {
    if (t.channel >= channels_.size()) throw std::invalid_argument("kernel: term references missing channel");
    if (t.degree < 0) throw std::invalid_argument("kernel: negative term degree");
    if (!std::isfinite(t.coef) || !std::isfinite(t.offset)) {
      throw std::invalid_argument("kernel: non-finite term coefficient");
    }
  }
  for (std::size_t k = 0; k < products_.size(); ++k) {
    const auto& pr = products_[k];
    if (pr.indices.empty()) throw std::invalid_argument("kernel: empty product term");
    if (!std::isfinite(pr.nu)) throw std::invalid_argument("kernel: non-finite product weight");
    std::vector<int> uniq = pr.indices;
    for (int idx : uniq) {
      if (idx < 1 || static_cast<std::size_t>(idx) > dim_) {
        throw std::out_of_range("kernel: product index out of range");
      }
    }
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() == 1) sparse_products_[support_key(uniq[0], 0)].push_back(k);
    if (uniq.size() == 2) sparse_products_[support_key(uniq[0], uniq[1])].push_back(k);
  }
}

std::uint64_t KernelForm::support_key(int i, int j) {
  const auto lo = static_cast<std::uint64_t>(std::min(i, j));
  const auto hi = static_cast<std::uint64_t>(std::max(i, j));
  return (lo << 32) | hi;
}

double KernelForm::combine(std::span<const double> s) const {
  double k = constant_;
  for (const auto& t : terms_) k += t.coef * ipow(s[t.channel] + t.offset, t.degree);
  return k;
}

double KernelForm::operator()(ConstSpan x, ConstSpan y) const {
  if (x.size() != dim_ || y.size() != dim_) {
    throw std::invalid_argument("kernel: input dimension mismatch (expected " +
                                std::to_string(dim_) + ")");
  }
  const auto& ops = simd::active_ops();
  std::vector<double> s(channels_.size());
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto& ch = channels_[c];
    if (ch.power == 1 && c + 1 < channels_.size() && channels_[c + 1].power == 2) {
      // linear and squared channels share the u = x * y pass
      const auto r = ops.weighted_moments(ch.weights.data(), channels_[c + 1].weights.data(), x.data(),
                                          y.data(), dim_);
      s[c] = r.first;
      s[++c] = r.second;
    } else if (ch.power == 1) {
      s[c] = ops.weighted_dot(ch.weights.data(), x.data(), y.data(), dim_);
    } else {
      s[c] = ops.weighted_moments(ch.weights.data(), ch.weights.data(), x.data(), y.data(), dim_).second;
    }
  }
  double k = combine(s);
  for (const auto& pr : products_) {
    double v = pr.nu;
    for (int idx : pr.indices) v *= x[idx - 1] * y[idx - 1];
    k += v;
  }
  return k;
}

Matrix KernelForm::gram(const RowMatrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != dim_) throw std::invalid_argument("kernel_matrix: dimension mismatch");
  if (X.rows() < 1) throw std::invalid_argument("kernel_matrix: need at least one row");
  const auto& ops = simd::active_ops();
  const Eigen::Index n = X.rows();
  std::vector<RowMatrix> Z;
  Z.reserve(channels_.size());
  for (const auto& ch : channels_) Z.push_back(scaled_rows(X, ch));

  // Channel sums for the lower triangle, four columns at a time.
  const Eigen::Index p = X.cols();
  std::vector<Matrix> S(Z.size(), Matrix::Zero(n, n));
  double buf[4];
  for (std::size_t c = 0; c < Z.size(); ++c) {
    const double* z = Z[c].data();
    Matrix& Sc = S[c];
    for (Eigen::Index a = 0; a < n; ++a) {
      Eigen::Index b = 0;
      for (; b + 4 <= a + 1; b += 4) {
        ops.dot4(z + a * p, z + b * p, static_cast<std::size_t>(p), dim_, buf);
        for (int r = 0; r < 4; ++r) Sc(a, b + r) = buf[r];
      }
      for (; b <= a; ++b) Sc(a, b) = ops.dot(z + a * p, z + b * p, dim_);
    }
  }

  Matrix K = Matrix::Constant(n, n, constant_);
  for (const auto& t : terms_) {
    auto base = S[t.channel].array() + t.offset;
    switch (t.degree) {
      case 0: K.array() += t.coef; break;
      case 1: K.array() += t.coef * base; break;
      case 2: K.array() += t.coef * base.square(); break;
      default: K.array() += t.coef * base.pow(static_cast<double>(t.degree)); break;
    }
  }
  for (const auto& pr : products_) {
    Vector f = Vector::Constant(n, 1.0);
    for (int idx : pr.indices) f.array() *= X.col(idx - 1).array();
    K.noalias() += pr.nu * f * f.transpose();
  }
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  if (!K.allFinite()) throw std::domain_error("kernel_matrix: non-finite entries");
  return K;
}

Matrix KernelForm::cross(const RowMatrix& A, const RowMatrix& X) const {
  Matrix out(A.rows(), X.rows());
  for (Eigen::Index a = 0; a < A.rows(); ++a) {
    for (Eigen::Index b = 0; b < X.rows(); ++b) out(a, b) = (*this)(row_span(A, a), row_span(X, b));
  }
  return out;
}

double KernelForm::products_on_support(const Probe& a, ConstSpan x) const {
  if (sparse_products_.empty()) return 0.0;
  double total = 0.0;
  const auto add = [&](std::uint64_t key) {
    const auto it = sparse_products_.find(key);
    if (it == sparse_products_.end()) return;
    for (std::size_t k : it->second) {
      const auto& pr = products_[k];
      double v = pr.nu;
      for (int idx : pr.indices) v *= probe_coef(a, idx) * x[idx - 1];
      total += v;
    }
  };
  if (a.i > 0) add(support_key(a.i, 0));
  if (a.j > 0) add(support_key(a.j, 0));
  if (a.i > 0 && a.j > 0) add(support_key(a.i, a.j));
  return total;
}

double KernelForm::products_between(const Probe& a, const Probe& b) const {
  if (sparse_products_.empty()) return 0.0;
  double total = 0.0;
  const auto add = [&](std::uint64_t key) {
    const auto it = sparse_products_.find(key);
    if (it == sparse_products_.end()) return;
    for (std::size_t k : it->second) {
      const auto& pr = products_[k];
      double v = pr.nu;
      for (int idx : pr.indices) v *= probe_coef(a, idx) * probe_coef(b, idx);
      total += v;
    }
  };
  if (a.i > 0) add(support_key(a.i, 0));
  if (a.j > 0) add(support_key(a.j, 0));
  if (a.i > 0 && a.j > 0) add(support_key(a.i, a.j));
  return total;
}

double KernelForm::at_probe(const Probe& a, ConstSpan x) const {
  if (x.size() != dim_) throw std::invalid_argument("kernel: input dimension mismatch");
  if (a.i < 0 || a.j < 0 || static_cast<std::size_t>(std::max(a.i, a.j)) > dim_) {
    throw std::out_of_range("probe index out of range");
  }
  double s[8];
  std::vector<double> heap;
  double* sums = s;
  if (channels_.size() > 8) {
    heap.resize(channels_.size());
    sums = heap.data();
  }
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto& ch = channels_[c];
    double acc = 0.0;
    if (a.i > 0) {
      const double u = a.ci * x[a.i - 1];
      acc += ch.weights[a.i - 1] * (ch.power == 1 ? u : u * u);
    }
    if (a.j > 0) {
      const double u = a.cj * x[a.j - 1];
      acc += ch.weights[a.j - 1] * (ch.power == 1 ? u : u * u);
    }
    sums[c] = acc;
  }
  return combine({sums, channels_.size()}) + products_on_support(a, x);
}

double KernelForm::between_probes(const Probe& a, const Probe& b) const {
  std::vector<double> s(channels_.size(), 0.0);
  const int ai[2] = {a.i, a.j};
  const double ac[2] = {a.ci, a.cj};
  const int bi[2] = {b.i, b.j};
  const double bc[2] = {b.ci, b.cj};
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto& ch = channels_[c];
    for (int u = 0; u < 2; ++u) {
      if (ai[u] <= 0) continue;
      for (int v = 0; v < 2; ++v) {
        if (bi[v] != ai[u]) continue;
        const double prod = ac[u] * bc[v];
        s[c] += ch.weights[ai[u] - 1] * (ch.power == 1 ? prod : prod * prod);
      }
    }
  }
  return combine(s) + products_between(a, b);
}

PriorDiag KernelForm::induced_prior() const {
  const std::size_t p = dim_;
  Vector v = Vector::Zero(static_cast<Eigen::Index>(phi2_dim(p)));
  Vector scale = Vector::Zero(v.size());
  const auto add = [&](const EffectId& e, double value) {
    const auto k = static_cast<Eigen::Index>(effect_index(e, p));
    v[k] += value;
    scale[k] += std::abs(value);
  };
  add(EffectId::intercept(), constant_);
  for (const auto& t : terms_) {
    const auto& w = channels_[t.channel].weights;
    const int power = channels_[t.channel].power;
    if (t.degree == 0) {
      add(EffectId::intercept(), t.coef);
    } else if (t.degree == 1) {
      for (std::size_t i = 1; i <= p; ++i) {
        const double wi = w[static_cast<Eigen::Index>(i - 1)];
        add(power == 1 ? EffectId::main(static_cast<int>(i)) : EffectId::quad(static_cast<int>(i)),
            t.coef * wi);
      }
      add(EffectId::intercept(), t.coef * t.offset);
    } else if (t.degree == 2 && power == 1) {
      for (std::size_t i = 1; i <= p; ++i) {
        const double wi = w[static_cast<Eigen::Index>(i - 1)];
        add(EffectId::quad(static_cast<int>(i)), t.coef * wi * wi);
        add(EffectId::main(static_cast<int>(i)), 2.0 * t.coef * t.offset * wi);
        for (std::size_t j = i + 1; j <= p; ++j) {
          add(EffectId::pair(static_cast<int>(i), static_cast<int>(j)),
              2.0 * t.coef * wi * w[static_cast<Eigen::Index>(j - 1)]);
        }
      }
      add(EffectId::intercept(), t.coef * t.offset * t.offset);
    } else {
      throw std::domain_error("induced_prior: term produces monomials beyond degree two");
    }
  }
  for (const auto& pr : products_) {
    if (pr.indices.size() == 1) {
      add(EffectId::main(pr.indices[0]), pr.nu);
    } else if (pr.indices.size() == 2 && pr.indices[0] == pr.indices[1]) {
      add(EffectId::quad(pr.indices[0]), pr.nu);
    } else if (pr.indices.size() == 2) {
      add(EffectId::pair(std::min(pr.indices[0], pr.indices[1]), std::max(pr.indices[0], pr.indices[1])),
          pr.nu);
    } else {
      throw std::domain_error("induced_prior: product term beyond degree two");
    }
  }
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (v[k] < 0.0 && v[k] > -1e-12 * scale[k]) v[k] = 0.0;
  }
  return PriorDiag(p, std::move(v));
}

}  // namespace kis
