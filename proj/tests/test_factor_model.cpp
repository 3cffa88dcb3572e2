#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "robustcov/errors.hpp"
#include "robustcov/factor_model.hpp"
#include "robustcov/rng.hpp"

using namespace robustcov;

namespace {

Matrix random_gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

/// Random joint blocks whose residual is strictly positive definite.
JointBlocks random_pd_blocks(Index p, Index r, Rng& rng) {
  JointBlocks b;
  b.p = p;
  b.r = r;
  Matrix g = random_gaussian(r, r, rng);
  b.s22 = g * g.transpose() + Matrix::Identity(r, r);
  b.s12 = random_gaussian(p, r, rng);
  Matrix h = random_gaussian(p, p, rng);
  Matrix resid = h * h.transpose() / static_cast<double>(p) +
                 Matrix::Identity(p, p);
  Matrix low = b.s12 *
               b.s22.ldlt().solve(b.s12.transpose());
  b.s11 = low + resid;
  b.s11 = ((b.s11 + b.s11.transpose()) / 2.0).eval();
  return b;
}

}  // namespace

TEST_SUITE("factor_model") {

TEST_CASE("shrinkage rule names round-trip") {
  for (ShrinkageRule rule : {ShrinkageRule::Hard, ShrinkageRule::Soft,
                             ShrinkageRule::Scad, ShrinkageRule::AdaptiveLasso})
    CHECK(shrinkage_rule_from_string(to_string(rule)) == rule);
  CHECK_THROWS_AS(shrinkage_rule_from_string("lasso"), InvalidInputError);

  ThresholdSpec bad;
  bad.rule = ShrinkageRule::Scad;
  bad.scad_a = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  ThresholdSpec neg;
  neg.c_tau = -1.0;
  CHECK_THROWS_AS(neg.validate(), InvalidInputError);
  ThresholdSpec off;
  off.c_tau = 0.0;
  CHECK_NOTHROW(off.validate());
}

TEST_CASE("block split is lossless") {
  Matrix m(3, 3);
  m << 1.0, 0.2, 0.3,
       0.2, 2.0, 0.4,
       0.3, 0.4, 3.0;
  JointBlocks b = split_blocks(m, 2, 1);
  CHECK(b.s11(0, 0) == 1.0);
  CHECK(b.s11(1, 1) == 2.0);
  CHECK(b.s11(0, 1) == 0.2);
  CHECK(b.s12(0, 0) == 0.3);
  CHECK(b.s12(1, 0) == 0.4);
  CHECK(b.s22(0, 0) == 3.0);

  CHECK_THROWS_AS(split_blocks(m, 2, 2), InvalidInputError);
  Matrix asym = m;
  asym(0, 1) = 0.9;
  CHECK_THROWS_AS(split_blocks(asym, 2, 1), InvalidInputError);
}

TEST_CASE("scalar decomposition frozen example") {
  // s11 = 3, s12 = 1, s22 = 2: lowrank = 1/2, residual = 5/2.
  JointBlocks b;
  b.p = 1;
  b.r = 1;
  b.s11 = Matrix::Constant(1, 1, 3.0);
  b.s12 = Matrix::Constant(1, 1, 1.0);
  b.s22 = Matrix::Constant(1, 1, 2.0);
  CHECK(lowrank_part(b)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(residual_cov(b)(0, 0) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("the low-rank part equals the regression fit") {
  // For the uncentered sample pilot, s12 s22^{-1} s21 must equal
  // Bhat Sff Bhat' with Bhat the least-squares loadings Y'F (F'F)^{-1}.
  Rng rng = make_rng(515);
  Matrix y = random_gaussian(60, 8, rng);
  Matrix f = random_gaussian(60, 2, rng);
  Matrix z(60, 10);
  z << y, f;
  Matrix s = (z.transpose() * z / 60.0).eval();
  JointBlocks b = split_blocks(((s + s.transpose()) / 2.0).eval(), 8, 2);

  Matrix bhat = (y.transpose() * f) * (f.transpose() * f).inverse();
  Matrix sff = f.transpose() * f / 60.0;
  Matrix ref = bhat * sff * bhat.transpose();
  CHECK((lowrank_part(b) - ref).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("singular factor block is rejected with a typed error") {
  JointBlocks b;
  b.p = 2;
  b.r = 2;
  b.s11 = Matrix::Identity(2, 2);
  b.s12 = Matrix::Zero(2, 2);
  b.s22 = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(lowrank_part(b), SingularFactorCovarianceError);
  b.s22 = Matrix::Identity(2, 2);
  b.s22(1, 1) = 1e-15;  // condition number 1e15 exceeds the cap
  CHECK_THROWS_AS(lowrank_part(b), SingularFactorCovarianceError);
}

TEST_CASE("threshold rules on a two-by-two residual") {
  const std::int64_t n = 100;
  const double t = 0.2;
  // Pick c_tau so tau * sqrt(d_i d_j) = t with unit diagonal.
  ThresholdSpec spec;
  spec.c_tau = t / std::sqrt(std::log(2.0) / static_cast<double>(n));

  auto with_offdiag = [&](double x) {
    Matrix m(2, 2);
    m << 1.0, x, x, 1.0;
    return m;
  };

  spec.rule = ShrinkageRule::Soft;
  CHECK(adaptive_threshold(with_offdiag(0.5), spec, n)(0, 1) ==
        doctest::Approx(0.3).epsilon(1e-12));
  CHECK(adaptive_threshold(with_offdiag(-0.5), spec, n)(0, 1) ==
        doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(adaptive_threshold(with_offdiag(0.15), spec, n)(0, 1) == 0.0);

  spec.rule = ShrinkageRule::Hard;
  CHECK(adaptive_threshold(with_offdiag(0.5), spec, n)(0, 1) == 0.5);
  CHECK(adaptive_threshold(with_offdiag(0.15), spec, n)(0, 1) == 0.0);

  spec.rule = ShrinkageRule::Scad;
  spec.scad_a = 3.7;
  // |x| <= 2t: soft behaviour.
  CHECK(adaptive_threshold(with_offdiag(0.3), spec, n)(0, 1) ==
        doctest::Approx(0.1).epsilon(1e-10));
  // 2t < |x| <= a t: the interpolating piece ((a-1)x - sign a t)/(a - 2).
  CHECK(adaptive_threshold(with_offdiag(0.5), spec, n)(0, 1) ==
        doctest::Approx((2.7 * 0.5 - 3.7 * 0.2) / 1.7).epsilon(1e-10));
  // |x| > a t: untouched.
  CHECK(adaptive_threshold(with_offdiag(0.8), spec, n)(0, 1) == 0.8);

  spec.rule = ShrinkageRule::AdaptiveLasso;
  spec.eta = 1.0;
  CHECK(adaptive_threshold(with_offdiag(0.5), spec, n)(0, 1) ==
        doctest::Approx(0.5 - 0.04 / 0.5).epsilon(1e-10));
  spec.eta = 0.0;  // degenerates to soft thresholding
  CHECK(adaptive_threshold(with_offdiag(0.5), spec, n)(0, 1) ==
        doctest::Approx(0.3).epsilon(1e-10));

  // Diagonal passes through verbatim in all cases.
  spec.rule = ShrinkageRule::Soft;
  Matrix m = with_offdiag(0.5);
  m(0, 0) = 0.001;
  Matrix out = adaptive_threshold(m, spec, n);
  CHECK(out(0, 0) == 0.001);
  CHECK(out(1, 1) == 1.0);
}

TEST_CASE("threshold level scales with the entry variances") {
  // With diagonal (4, 1), the (0,1) threshold is tau * sqrt(4) = 2 tau.
  const std::int64_t n = 400;
  ThresholdSpec spec;
  spec.rule = ShrinkageRule::Hard;
  spec.c_tau = 2.0;
  double tau = spec.c_tau * std::sqrt(std::log(2.0) / static_cast<double>(n));
  double cut = tau * 2.0;

  Matrix m(2, 2);
  m << 4.0, cut * 0.999, cut * 0.999, 1.0;
  CHECK(adaptive_threshold(m, spec, n)(0, 1) == 0.0);
  m(0, 1) = m(1, 0) = cut * 1.001;
  CHECK(adaptive_threshold(m, spec, n)(0, 1) == cut * 1.001);
}

TEST_CASE("nonpositive diagonal entries get a floored scale") {
  const std::int64_t n = 100;
  ThresholdSpec spec;
  spec.rule = ShrinkageRule::Hard;
  spec.c_tau = 1.0;
  Matrix m(2, 2);
  m << -0.25, 0.2, 0.2, 1.0;
  Matrix out = adaptive_threshold(m, spec, n);
  CHECK(out(0, 0) == -0.25);  // diagonal survives unmodified
  // Threshold uses |d| + 1e-12 = 0.25: tau_01 = c sqrt(log2/n) * sqrt(0.25).
  double t01 = std::sqrt(std::log(2.0) / 100.0) * 0.5;
  CHECK(out(0, 1) == (0.2 < t01 ? 0.0 : 0.2));
}

TEST_CASE("zero threshold multiplier leaves the input untouched") {
  Rng rng = make_rng(2);
  Matrix h = random_gaussian(5, 5, rng);
  Matrix u = ((h + h.transpose()) / 2.0).eval();
  ThresholdSpec spec;
  spec.c_tau = 0.0;
  Matrix out = adaptive_threshold(u, spec, 50);
  CHECK((out - u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("woodbury precision matches a dense inverse") {
  Rng rng = make_rng(909);
  for (int inst = 0; inst < 30; ++inst) {
    Index p = 2 + static_cast<Index>(rng() % 39);
    Index r = 1 + static_cast<Index>(rng() % std::min<Index>(4, p));
    JointBlocks b = random_pd_blocks(p, r, rng);
    Matrix resid = residual_cov(b);
    Matrix prec = precision_woodbury(b, resid);
    Matrix total = assemble(b, resid);
    CHECK((prec * total - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-8);
    Matrix dense = oracles::precision_dense(b.s12, b.s22, resid);
    CHECK((prec - dense).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("rank-one precision frozen example") {
  // Residual I_2, loaded column e1, unit factor block: the total is
  // I + e1 e1', whose inverse is I - e1 e1'/2.
  JointBlocks b;
  b.p = 2;
  b.r = 1;
  b.s12 = Matrix::Zero(2, 1);
  b.s12(0, 0) = 1.0;
  b.s22 = Matrix::Identity(1, 1);
  b.s11 = Matrix::Identity(2, 2) + b.s12 * b.s12.transpose();
  Matrix prec = precision_woodbury(b, Matrix::Identity(2, 2));
  CHECK(prec(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(prec(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(prec(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("indefinite residual triggers the repair error") {
  JointBlocks b;
  b.p = 2;
  b.r = 1;
  b.s12 = Matrix::Constant(2, 1, 0.1);
  b.s22 = Matrix::Identity(1, 1);
  b.s11 = Matrix::Identity(2, 2);
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(precision_woodbury(b, bad), NeedsPsdRepairError);
}

TEST_CASE("norms agree with hand values") {
  Matrix a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  CHECK(norm_op(a) == doctest::Approx(1.0).epsilon(1e-12));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = -3.0;
  CHECK(norm_op(d) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(norm_max(d) == 3.0);

  Matrix sigma = Matrix::Identity(3, 3) * 4.0;
  Matrix x = Matrix::Ones(3, 3);
  // sigma^{-1/2} X sigma^{-1/2} = X/4; Frobenius norm 3/4; relative 3/(4 sqrt 3).
  CHECK(norm_rel_frobenius(x, sigma) ==
        doctest::Approx(3.0 / (4.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(norm_rel_frobenius(sigma, sigma) ==
        doctest::Approx(1.0).epsilon(1e-12));
  Matrix semi = Matrix::Zero(2, 2);
  semi(0, 0) = 1.0;
  CHECK_THROWS_AS(norm_rel_frobenius(x.topLeftCorner(2, 2), semi),
                  InvalidInputError);
}

TEST_CASE("full three-step estimate wiring") {
  Rng rng = make_rng(31337);
  const Index n = 80, p = 6, r = 2;
  Matrix b = random_gaussian(p, r, rng);
  Matrix f = random_gaussian(n, r, rng);
  Matrix u = random_gaussian(n, p, rng);
  Matrix y = f * b.transpose() + u;

  ThresholdSpec spec;
  spec.c_tau = 2.0;
  FactorCovariance est = estimate_factor_cov(y, f, PilotKind::Sample, spec);

  CHECK(est.pilot_kind == PilotKind::Sample);
  CHECK(est.tau_used ==
        doctest::Approx(2.0 * std::sqrt(std::log(6.0) / 80.0)).epsilon(1e-14));
  CHECK((est.total - (est.lowrank + est.residual_thresholded))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((est.residual_raw - (est.blocks.s11 - est.lowrank))
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  std::int64_t nonzero = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (est.residual_thresholded(i, j) != 0.0) ++nonzero;
  CHECK(est.surviving_offdiag == nonzero);

  // Thresholding can only zero or shrink off-diagonals.
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      CHECK(std::abs(est.residual_thresholded(i, j)) <=
            std::abs(est.residual_raw(i, j)) + 1e-15);
}

TEST_CASE("disabled thresholding reduces to the pilot data block") {
  Rng rng = make_rng(8);
  const Index n = 50, p = 4, r = 1;
  Matrix f = random_gaussian(n, r, rng);
  Matrix y = random_gaussian(n, p, rng);
  ThresholdSpec spec;
  spec.c_tau = 0.0;
  FactorCovariance est = estimate_factor_cov(y, f, PilotKind::Robust, spec);
  CHECK((est.total - est.blocks.s11).cwiseAbs().maxCoeff() == 0.0);
  CHECK(est.tau_used == 0.0);
  // The assembled route agrees with the shortcut to rounding error.
  double scale = est.blocks.s11.cwiseAbs().maxCoeff();
  CHECK((est.lowrank + est.residual_thresholded - est.blocks.s11)
            .cwiseAbs()
            .maxCoeff() < 1e-13 * std::max(1.0, scale));
}

TEST_CASE("estimator input validation") {
  Matrix y = Matrix::Zero(10, 3);
  Matrix f = Matrix::Zero(9, 1);
  CHECK_THROWS_AS(estimate_factor_cov(y, f, PilotKind::Sample, {}),
                  InvalidInputError);
  Matrix f4 = Matrix::Zero(10, 4);
  CHECK_THROWS_AS(estimate_factor_cov(y, f4, PilotKind::Sample, {}),
                  InvalidInputError);
}

}  // TEST_SUITE
