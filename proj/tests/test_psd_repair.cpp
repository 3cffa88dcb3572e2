#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "robustcov/errors.hpp"
#include "robustcov/psd_repair.hpp"
#include "robustcov/rng.hpp"

using namespace robustcov;

namespace {

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  return eig.eigenvalues().minCoeff();
}

Matrix random_symmetric(Index p, Rng& rng, double offdiag_scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(p, p);
  for (Index i = 0; i < p; ++i) {
    m(i, i) = 1.0 + 0.2 * normal(rng);
    for (Index j = i + 1; j < p; ++j) {
      double v = offdiag_scale * normal(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("psd_repair") {

TEST_CASE("a matrix that is already psd comes back verbatim") {
  Matrix id = Matrix::Identity(3, 3);
  RepairResult r = nearest_psd_maxnorm(id);
  CHECK((r.repaired - id).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.t_star == 0.0);
  CHECK(r.iterations == 0);
  CHECK(r.certified);
  CHECK(r.certificate_min_eig == doctest::Approx(1.0).epsilon(1e-12));

  // Slightly indefinite within the tolerance also passes through.
  Matrix near = id;
  near(2, 2) = -5e-9;
  RepairResult r2 = nearest_psd_maxnorm(near);
  CHECK(r2.t_star == 0.0);
}

TEST_CASE("diagonal deficit is lifted exactly to zero") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -0.4;
  RepairResult r = nearest_psd_maxnorm(m);
  CHECK(r.certified);
  CHECK(r.t_star == doctest::Approx(0.4).epsilon(1e-5));
  CHECK(std::abs(r.repaired(0, 0) - 1.0) <= r.t_star + 1e-12);
  CHECK(std::abs(r.repaired(1, 1)) <= 1e-5);
  CHECK(r.certificate_min_eig >= -1e-8);
}

TEST_CASE("two-by-two frozen instance hits the analytic optimum") {
  // For [[1, .9], [.9, .5]] the optimal perturbation lifts the diagonal by t
  // and shrinks the off-diagonal by t; the determinant root gives
  // t = 0.31 / 3.3.
  Matrix m(2, 2);
  m << 1.0, 0.9, 0.9, 0.5;
  REQUIRE(min_eig(m) < 0.0);
  RepairResult r = nearest_psd_maxnorm(m);
  CHECK(r.certified);
  CHECK(r.t_star == doctest::Approx(0.31 / 3.3).epsilon(2e-3));
  CHECK(r.certificate_min_eig >= -1e-8);
  CHECK((r.repaired - m).cwiseAbs().maxCoeff() ==
        doctest::Approx(r.t_star).epsilon(1e-12));
}

TEST_CASE("random small instances match the grid-search oracle") {
  Rng rng = make_rng(4242);
  int tested = 0;
  while (tested < 8) {
    Index p = tested % 2 == 0 ? 2 : 3;
    Matrix m = random_symmetric(p, rng, 1.2);
    if (min_eig(m) >= 0.0) continue;
    ++tested;
    RepairResult r = nearest_psd_maxnorm(m);
    double ref = oracles::nearest_psd_maxnorm_grid(m, 1e-5);
    CAPTURE(tested);
    CHECK(std::abs(r.t_star - ref) < 1e-3);
    CHECK(r.certificate_min_eig >= -1e-8);
  }
}

TEST_CASE("repaired output is always numerically psd") {
  Rng rng = make_rng(777);
  for (int inst = 0; inst < 20; ++inst) {
    Index p = 4 + static_cast<Index>(rng() % 7);
    Matrix m = random_symmetric(p, rng, 0.9);
    RepairResult r = nearest_psd_maxnorm(m);
    CHECK(min_eig(r.repaired) >= -1e-8);
    CHECK(r.certificate_min_eig >= -1e-8);
    CHECK(r.t_star <= (r.repaired - m).cwiseAbs().maxCoeff() + 1e-15);
    // The repair never does worse than plain eigenvalue clipping.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    Matrix clip = eig.eigenvectors() *
                  eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                  eig.eigenvectors().transpose();
    CHECK(r.t_star <= (clip - m).cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST_CASE("repairing twice is a fixed point") {
  Matrix m(2, 2);
  m << 1.0, 0.9, 0.9, 0.5;
  RepairResult first = nearest_psd_maxnorm(m);
  RepairResult second = nearest_psd_maxnorm(first.repaired);
  CHECK(second.t_star == 0.0);
  CHECK((second.repaired - first.repaired).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturbation lower bound from eigenvalue sensitivity") {
  // Any entrywise-t perturbation moves eigenvalues by at most p t, so
  // t_star >= |lambda_min| / p on indefinite input.
  Rng rng = make_rng(31);
  for (int inst = 0; inst < 10; ++inst) {
    Matrix m = random_symmetric(5, rng, 1.0);
    double lam = min_eig(m);
    if (lam >= 0.0) continue;
    RepairResult r = nearest_psd_maxnorm(m);
    CHECK(r.t_star >= -lam / 5.0 - 1e-9);
  }
}

TEST_CASE("doubling bound holds for solver output") {
  Rng rng = make_rng(9001);
  std::normal_distribution<double> normal(0.0, 1.0);
  int held = 0, total = 0;
  for (int inst = 0; inst < 50; ++inst) {
    Index p = 3 + static_cast<Index>(rng() % 5);
    // True covariance: diagonal-dominant PSD.
    Matrix g(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) g(i, j) = normal(rng);
    Matrix truth = g * g.transpose() / static_cast<double>(p);
    // Noisy estimate: symmetric perturbation, often indefinite.
    Matrix noise(p, p);
    for (Index i = 0; i < p; ++i) {
      noise(i, i) = 0.6 * normal(rng);
      for (Index j = i + 1; j < p; ++j) {
        double v = 0.6 * normal(rng);
        noise(i, j) = v;
        noise(j, i) = v;
      }
    }
    Matrix hat = truth + noise;
    RepairResult r = nearest_psd_maxnorm(hat);
    ++total;
    if (doubling_bound_check(hat, truth, r.repaired)) ++held;
  }
  CHECK(held == total);
}

TEST_CASE("input validation") {
  Matrix rect = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(nearest_psd_maxnorm(rect), InvalidInputError);
  Matrix asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(nearest_psd_maxnorm(asym), InvalidInputError);
  Matrix ok = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(nearest_psd_maxnorm(ok, 0.0), InvalidInputError);
  CHECK_THROWS_AS(nearest_psd_maxnorm(ok, 1e-8, -1.0, 0), InvalidInputError);
  Matrix a = Matrix::Identity(2, 2);
  Matrix b = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(doubling_bound_check(a, b, a), InvalidInputError);
}

}  // TEST_SUITE
