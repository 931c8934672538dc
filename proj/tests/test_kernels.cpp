#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kis/kernels.hpp"
#include "kis/skim.hpp"
#include "oracles.hpp"

namespace {

using kis::EffectId;
using kis::Matrix;
using kis::Probe;
using kis::RowMatrix;
using kis::TwoWayKernelSpec;
using kis::Vector;

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), x.data());
  return x;
}

double eval(const TwoWayKernelSpec& s, const Vector& x, const Vector& y) {
  return kis::two_way_eval(s, kis::as_span(x), kis::as_span(y));
}

TEST(PolyKernel, Values) {
  EXPECT_DOUBLE_EQ(kis::poly_kernel(kis::as_span(vec({1, 2})), kis::as_span(vec({1, 0})), 1.0, 2), 4.0);
  EXPECT_DOUBLE_EQ(kis::poly_kernel(kis::as_span(vec({0, 0})), kis::as_span(vec({5, -3})), 1.0, 2), 1.0);
  EXPECT_DOUBLE_EQ(kis::poly_kernel(kis::as_span(vec({1, 1, 1})), kis::as_span(vec({2, 2, 2})), 0.0, 3), 216.0);
  EXPECT_THROW(kis::poly_kernel(kis::as_span(vec({1})), kis::as_span(vec({1, 2})), 1.0, 2), std::invalid_argument);
}

TEST(PolyKernel, InducedPrior) {
  const auto a = kis::poly_induced_prior(1.0, 2);
  EXPECT_EQ(a.variances(), vec({1, 2, 2, 2, 1, 1}));
  const auto b = kis::poly_induced_prior(0.0, 3);
  EXPECT_EQ(b[EffectId::intercept()], 0.0);
  EXPECT_EQ(b[EffectId::main(2)], 0.0);
  std::mt19937_64 rng(5);
  const auto c = kis::poly_induced_prior(3.0, 4);
  for (int t = 0; t < 10; ++t) {
    const Vector x = oracle::random_vec(4, rng);
    const Vector y = oracle::random_vec(4, rng);
    const double k = kis::poly_kernel(kis::as_span(x), kis::as_span(y), 3.0, 2);
    EXPECT_NEAR(oracle::feature_form(c.variances(), x, y), k, 1e-10 * (1 + std::abs(k)));
  }
}

TEST(TwoWay, ZeroSpecIsZero) {
  const auto s = TwoWayKernelSpec::zero(3);
  EXPECT_EQ(eval(s, vec({1, 2, 3}), vec({-1, 0.5, 2})), 0.0);
}

TEST(TwoWay, OriginGivesConstants) {
  std::mt19937_64 rng(1);
  const auto s = oracle::random_spec(4, 2, 1, rng);
  EXPECT_NEAR(eval(s, Vector::Zero(4), Vector::Zero(4)), 2.0 + s.a_const, 1e-15);
}

TEST(TwoWay, FeatureMapOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto s = oracle::random_spec(4, 2, 1, rng);
    const Vector S = oracle::spec_prior(s);
    const Vector x = oracle::random_vec(4, rng);
    const Vector y = oracle::random_vec(4, rng);
    const double k = eval(s, x, y);
    EXPECT_NEAR(k, oracle::feature_form(S, x, y), 1e-10 * (1 + std::abs(k)));
  }
}

TEST(TwoWay, ValidateRejectsBadSpecs) {
  auto s = TwoWayKernelSpec::zero(3);
  s.pair_terms.push_back({2, 2, 1.0});
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = TwoWayKernelSpec::zero(3);
  s.alpha[0] = std::nan("");
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = TwoWayKernelSpec::zero(3);
  s.a_const = -0.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.lambdas.push_back(Vector::Zero(3));
  EXPECT_NO_THROW(s.validate());
}

TEST(TwoWay, JsonRoundTrip) {
  std::mt19937_64 rng(9);
  const auto s = oracle::random_spec(3, 2, 2, rng);
  const nlohmann::json j = s;
  const auto back = j.get<TwoWayKernelSpec>();
  const Vector x = vec({0.3, -1, 2});
  EXPECT_EQ(eval(back, x, x), eval(s, x, x));
}

TEST(InducedPrior, ClosedFormExample) {
  auto s = TwoWayKernelSpec::zero(2);
  s.lambdas.push_back(vec({1, 1}));
  const auto d = kis::induced_prior_diag(s);
  EXPECT_EQ(d[EffectId::main(1)], 2.0);
  EXPECT_EQ(d[EffectId::main(2)], 2.0);
  EXPECT_EQ(d[EffectId::pair(1, 2)], 2.0);
  EXPECT_EQ(d[EffectId::quad(1)], 1.0);
  EXPECT_EQ(d[EffectId::intercept()], 1.0);
  EXPECT_EQ(kis::induced_prior_diag(TwoWayKernelSpec::zero(3)).variances(), Vector::Zero(10));
}

TEST(InducedPrior, MatchesOracleAndProbeReconstruction) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    const auto s = oracle::random_spec(5, 2, 3, rng);
    const Vector got = kis::induced_prior_diag(s).variances();
    const Vector want = oracle::spec_prior(s);
    const Vector rec = oracle::probe_reconstruction(
        [&](const Vector& x, const Vector& y) { return eval(s, x, y); }, s.p);
    for (Eigen::Index k = 0; k < got.size(); ++k) {
      EXPECT_NEAR(got[k], want[k], 1e-12 * (1 + want[k]));
      EXPECT_NEAR(got[k], rec[k], 1e-10 * (1 + want[k]));
    }
  }
}

TEST(SolveSpec, BlockTarget) {
  // eta = (2, 1, 1), c^2 = 1: main 4, pair 1, quad 1, intercept 1.
  const kis::BlockEta eta{2.0, 1.0, 1.0};
  const auto target = kis::skim_prior_diag({eta, 1.0, Vector::Ones(3)});
  const auto s = kis::solve_spec_from_diag(target, kis::SpecFamily::block);
  ASSERT_EQ(s.m1(), 1u);
  EXPECT_EQ(s.m2(), 0u);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(s.lambdas[0][i], std::pow(2.0, -0.25), 1e-14);
    EXPECT_NEAR(s.alpha[i] * s.alpha[i], 4.0 - std::sqrt(2.0), 1e-13);
    EXPECT_NEAR(s.psi[i] * s.psi[i], 0.5, 1e-13);
  }
  EXPECT_NEAR(s.a_const, 0.0, 1e-15);
  const Vector back = kis::induced_prior_diag(s).variances();
  for (Eigen::Index k = 0; k < back.size(); ++k) EXPECT_NEAR(back[k], target.variances()[k], 1e-12);
}

TEST(SolveSpec, ZeroTarget) {
  const auto s = kis::solve_spec_from_diag(kis::PriorDiag::zeros(3), kis::SpecFamily::block);
  EXPECT_EQ(s.m1(), 0u);
  EXPECT_EQ(s.a_const, 0.0);
  EXPECT_EQ(kis::induced_prior_diag(s).variances(), Vector::Zero(10));
}

TEST(SolveSpec, GeneralTargetRoundTrips) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  Vector v(10);
  for (Eigen::Index k = 0; k < 10; ++k) v[k] = u(rng);
  const kis::PriorDiag target(3, v);
  const auto s = kis::solve_spec_from_diag(target, kis::SpecFamily::general);
  EXPECT_EQ(s.m1(), 0u);
  EXPECT_EQ(s.m2(), 3u);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(s.alpha[i] * s.alpha[i], target[EffectId::main(static_cast<int>(i + 1))], 1e-14);
    EXPECT_NEAR(s.psi[i] * s.psi[i], target[EffectId::quad(static_cast<int>(i + 1))], 1e-14);
  }
  EXPECT_NEAR(s.a_const, target[EffectId::intercept()], 1e-15);
  const Vector back = kis::induced_prior_diag(s).variances();
  for (Eigen::Index k = 0; k < 10; ++k) EXPECT_NEAR(back[k], v[k], 1e-13);
}

TEST(SolveSpec, SkimLikeRoundTripsAndInfeasibleIsNamed) {
  kis::SkimKernelParams ok{{3.0, 1.0, 1.5}, 2.0, vec({0.5, 1.0, 0.8, 0.2})};
  const auto target = kis::skim_prior_diag(ok);
  const auto s = kis::solve_spec_from_diag(target, kis::SpecFamily::skim_like);
  const Vector back = kis::induced_prior_diag(s).variances();
  for (Eigen::Index k = 0; k < back.size(); ++k) EXPECT_NEAR(back[k], target.variances()[k], 1e-12);

  // pair variance forces 2 lambda^2 above the main variance
  kis::SkimKernelParams bad{{1.0, 1.0, 1.0}, 1.0, Vector::Ones(3)};
  try {
    kis::solve_spec_from_diag(kis::skim_prior_diag(bad), kis::SpecFamily::skim_like);
    FAIL() << "expected InfeasibleError";
  } catch (const kis::InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("main("), std::string::npos);
  }
  Vector v = kis::skim_prior_diag(ok).variances();
  v[1] *= 2.0;  // main(1) differs from main(2) in a block target
  EXPECT_THROW(kis::solve_spec_from_diag(kis::PriorDiag(4, v), kis::SpecFamily::block), kis::InfeasibleError);
}

TEST(BlockKernel, Examples) {
  const Vector x = vec({0.7, -1.2});
  const Vector y = vec({2.0, 0.4});
  EXPECT_DOUBLE_EQ(kis::block_kernel_eval({0, 0, 0}, 1.7, kis::as_span(x), kis::as_span(y)), 1.7);
  const Vector e1 = vec({1, 0, 0});
  EXPECT_DOUBLE_EQ(kis::block_kernel_eval({1, 1, 1}, 1.0, kis::as_span(e1), kis::as_span(e1)), 3.0);
  std::mt19937_64 rng(8);
  const kis::BlockEta eta{2.0, 1.0, 1.0};
  const Vector S = kis::skim_prior_diag({eta, 1.0, Vector::Ones(2)}).variances();
  EXPECT_EQ(S, vec({1, 4, 4, 1, 1, 1}));
  for (int t = 0; t < 10; ++t) {
    const Vector a = oracle::random_vec(2, rng);
    const Vector b = oracle::random_vec(2, rng);
    const double k = kis::block_kernel_eval(eta, 1.0, kis::as_span(a), kis::as_span(b));
    EXPECT_NEAR(k, oracle::feature_form(S, a, b), 1e-12 * (1 + std::abs(k)));
  }
  EXPECT_THROW(kis::check_block_weights({1.0, 2.0, 2.0}, 3.0), kis::InfeasibleError);
  EXPECT_THROW(kis::check_block_weights({2.0, 2.0, 1.0}, 3.0), kis::InfeasibleError);
  EXPECT_THROW(kis::check_block_weights({2.0, 2.0, 2.0}, 1.0), kis::InfeasibleError);
  EXPECT_FALSE(kis::block_weights_feasible({1.0, 2.0, 2.0}, 3.0));
  EXPECT_TRUE(kis::block_weights_feasible({2.0, 2.0, 2.0}, 2.0));
}

TEST(SkimKernel, Examples) {
  const Vector x = vec({0.7, -1.2, 3.0});
  const Vector y = vec({2.0, 0.4, -1.0});
  const kis::SkimKernelParams zero{{2.0, 1.0, 1.0}, 1.3, Vector::Zero(3)};
  EXPECT_DOUBLE_EQ(kis::skim_kernel_eval(zero, kis::as_span(x), kis::as_span(y)), 1.3);
  const kis::SkimKernelParams some{{2.0, 1.0, 1.0}, 1.3, vec({0.2, 1.0, 0.5})};
  EXPECT_DOUBLE_EQ(kis::skim_kernel_eval(some, kis::as_span(Vector::Zero(3)), kis::as_span(Vector::Zero(3))), 1.3);
  // eta2 = 0: no pair variance
  const auto nop = kis::skim_prior_diag({{2.0, 0.0, 1.0}, 1.0, vec({0.2, 1.0, 0.5})});
  EXPECT_EQ(nop[EffectId::pair(1, 2)], 0.0);
  EXPECT_EQ(nop[EffectId::pair(2, 3)], 0.0);
}

TEST(SkimKernel, FeatureMapOracle) {
  std::mt19937_64 rng(12);
  kis::SkimConfig cfg;
  cfg.p = 4;
  cfg.n = 10;
  cfg.s = 2;
  for (int t = 0; t < 20; ++t) {
    const auto st = oracle::random_state(cfg, rng);
    const Vector S = oracle::skim_prior(st);
    const auto k = kis::to_kernel(st);
    const Vector x = oracle::random_vec(4, rng);
    const Vector y = oracle::random_vec(4, rng);
    const double v = k(kis::as_span(x), kis::as_span(y));
    EXPECT_NEAR(v, oracle::feature_form(S, x, y), 1e-10 * (1 + std::abs(v)));
    const Vector d = kis::induced_prior(st).variances();
    for (Eigen::Index j = 0; j < d.size(); ++j) EXPECT_NEAR(d[j], S[j], 1e-12 * (1 + S[j]));
  }
}

TEST(KernelMatrix, SmallCases) {
  RowMatrix X(1, 2);
  X << 0.5, -1.0;
  const auto k = kis::poly_kernel_form(1.0, 2, 2);
  const Matrix K = kis::kernel_matrix(k, X);
  ASSERT_EQ(K.rows(), 1);
  EXPECT_DOUBLE_EQ(K(0, 0), std::pow(1.25 + 1.0, 2));
  const kis::KernelForm c(2, {}, {}, {}, 0.75);
  std::mt19937_64 rng(1);
  const RowMatrix X3 = oracle::random_X(3, 2, rng);
  EXPECT_EQ(kis::kernel_matrix(c, X3), Matrix::Constant(3, 3, 0.75));
}

TEST(KernelMatrix, SkimMatchesFeatureMap) {
  std::mt19937_64 rng(21);
  kis::SkimConfig cfg;
  cfg.p = 4;
  cfg.n = 6;
  cfg.s = 2;
  const auto st = oracle::random_state(cfg, rng);
  const RowMatrix X = oracle::random_X(6, 4, rng);
  const Matrix P = oracle::phi2_rows(X);
  const Matrix want = P * oracle::skim_prior(st).asDiagonal() * P.transpose();
  const Matrix got = kis::kernel_matrix(kis::to_kernel(st), X);
  EXPECT_LT(oracle::max_rel_err(got, want), 1e-10);
  EXPECT_EQ(got, got.transpose());
}

TEST(KernelMatrix, GramMatchesPointwiseForEveryFamily) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    const std::size_t p = 1 + t % 7;
    const auto spec = oracle::random_spec(p, 1 + t % 3, t % 4, rng);
    const auto k = spec.compile();
    const RowMatrix X = oracle::random_X(3 + t, static_cast<Eigen::Index>(p), rng);
    const Matrix fast = k.gram(X);
    const Matrix slow = kis::kernel_matrix_of(k, X);
    EXPECT_LT(oracle::max_rel_err(fast, slow), 1e-12);
  }
}

TEST(ProbeKernel, MatchesDirectEvaluation) {
  std::mt19937_64 rng(17);
  const std::size_t p = 5;
  const auto spec = oracle::random_spec(p, 2, 4, rng);
  const auto k = spec.compile();
  const RowMatrix X = oracle::random_X(7, 5, rng);
  const std::vector<Probe> probes{Probe::origin(), Probe::unit(2), Probe::unit(3, -1.0), Probe::sum(1, 4),
                                  Probe::sum(2, 5)};
  const Matrix C = kis::cross_kernel_at_probes(k, probes, X);
  for (std::size_t a = 0; a < probes.size(); ++a) {
    const Vector pa = probes[a].dense(p);
    for (Eigen::Index n = 0; n < X.rows(); ++n) {
      const Vector xn = X.row(n).transpose();
      const double want = eval(spec, pa, xn);
      EXPECT_NEAR(C(static_cast<Eigen::Index>(a), n), want, 1e-12 * (1 + std::abs(want)));
    }
  }
  for (Eigen::Index n = 0; n < X.rows(); ++n) EXPECT_NEAR(C(0, n), 2.0 + spec.a_const, 1e-14);
}

TEST(RWay, DegreeTwoIsTwoWay) {
  std::mt19937_64 rng(6);
  kis::RWaySpec r;
  r.degree = 2;
  r.p = 3;
  r.base = oracle::random_spec(3, 1, 1, rng);
  const Vector x = oracle::random_vec(3, rng);
  const Vector y = oracle::random_vec(3, rng);
  EXPECT_DOUBLE_EQ(kis::r_way_eval(r, kis::as_span(x), kis::as_span(y)), eval(r.base, x, y));
}

TEST(RWay, ZeroWeightsLeaveBaseConstants) {
  kis::RWaySpec child;
  child.degree = 2;
  child.p = 2;
  child.base = TwoWayKernelSpec::zero(2);
  child.base.a_const = 0.4;
  kis::RWaySpec r;
  r.degree = 3;
  r.p = 2;
  r.lambdas = {};
  r.nablas = {Vector::Zero(2)};
  r.children = {child};
  EXPECT_DOUBLE_EQ(kis::r_way_eval(r, kis::as_span(vec({1, 2})), kis::as_span(vec({3, -1}))), 0.4);
}

TEST(RWay, MultinomialOracleDegreeThree) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const std::size_t p = 3;
  for (int t = 0; t < 10; ++t) {
    kis::RWaySpec child;
    child.degree = 2;
    child.p = p;
    child.base = oracle::random_spec(p, 1, 1, rng);
    kis::RWaySpec r;
    r.degree = 3;
    r.p = p;
    r.lambdas = {Vector::NullaryExpr(3, [&] { return u(rng); })};
    r.products = {{{1, 2, 2}, u(rng)}, {{1, 2, 3}, u(rng)}};
    r.nablas = {Vector::NullaryExpr(3, [&] { return u(rng); })};
    r.children = {child};
    const auto prior = oracle::r_way_prior(r);
    const Vector x = oracle::random_vec(3, rng);
    const Vector y = oracle::random_vec(3, rng);
    double want = 0.0;
    for (const auto& [k, v] : prior) want += v * oracle::monomial(k, x) * oracle::monomial(k, y);
    const double got = kis::r_way_eval(r, kis::as_span(x), kis::as_span(y));
    EXPECT_NEAR(got, want, 1e-10 * (1 + std::abs(want)));
  }
}

TEST(RWay, ValidateRejectsWrongArity) {
  kis::RWaySpec r;
  r.degree = 3;
  r.p = 2;
  r.products = {{{1, 2}, 1.0}};
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

}  // namespace
