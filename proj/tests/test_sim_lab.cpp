#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "robustcov/errors.hpp"
#include "robustcov/parallel.hpp"
#include "robustcov/psd_repair.hpp"
#include "robustcov/sim_lab.hpp"

using namespace robustcov;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Equal entrywise, treating NaN == NaN (failed replications stay NaN).
void check_same_values(const std::vector<double>& a,
                       const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool same = (std::isnan(a[i]) && std::isnan(b[i])) || a[i] == b[i];
    CHECK(same);
  }
}

}  // namespace

TEST_SUITE("sim_lab") {

TEST_CASE("scenario json round-trip and strictness") {
  SimScenario sc;
  sc.p = 12;
  sc.n = 24;
  sc.r = 2;
  sc.design = DesignKind::ElementwiseT;
  sc.df = 3.5;
  sc.noise_var = 2.0;
  sc.reps = 7;
  sc.seed = 99;
  SimScenario back = scenario_from_json(scenario_to_json(sc));
  CHECK(back.p == sc.p);
  CHECK(back.n == sc.n);
  CHECK(back.r == sc.r);
  CHECK(back.design == sc.design);
  CHECK(back.df == sc.df);
  CHECK(back.noise_var == sc.noise_var);
  CHECK(back.reps == sc.reps);
  CHECK(back.seed == sc.seed);

  sc.df = kInf;
  json j = scenario_to_json(sc);
  CHECK(j.at("df") == "inf");
  CHECK(std::isinf(scenario_from_json(j).df));

  CHECK_THROWS_AS(scenario_from_json(json{{"pp", 3}}), IngestionError);
  CHECK_THROWS_AS(scenario_from_json(json{{"df", "huge"}}), IngestionError);
  CHECK_THROWS_AS(scenario_from_json(json{{"p", "ten"}}), IngestionError);
  CHECK_THROWS_AS(scenario_from_json(json{{"sparsity", {{"mm", 1}}}}),
                  IngestionError);
  CHECK_THROWS_AS(scenario_from_json(json::array()), IngestionError);
  // Validation failures surface as invalid input, not ingestion.
  CHECK_THROWS_AS(scenario_from_json(json{{"df", 1.5}}), InvalidInputError);
}

TEST_CASE("joint t draws have the requested covariance") {
  Matrix cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  Rng rng = make_rng(55);
  Matrix z = gen_joint_t(60000, 2, cov, 5.0, rng);
  Matrix hat = z.transpose() * z / 60000.0;
  CHECK(hat(0, 0) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(hat(0, 1) == doctest::Approx(0.5).epsilon(0.2));
  CHECK(hat(1, 1) == doctest::Approx(1.0).epsilon(0.1));

  Rng rng2 = make_rng(56);
  Matrix g = gen_joint_t(60000, 2, cov, kInf, rng2);
  Matrix ghat = g.transpose() * g / 60000.0;
  CHECK(ghat(0, 0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(ghat(0, 1) == doctest::Approx(0.5).epsilon(0.1));

  // Heavy tails: the t draw exceeds the Gaussian 6-sigma rate.
  double tails_t = 0.0, tails_g = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    if (std::abs(z(i, 1)) > 6.0) tails_t += 1.0;
    if (std::abs(g(i, 1)) > 6.0) tails_g += 1.0;
  }
  CHECK(tails_t > tails_g + 10.0);

  CHECK_THROWS_AS(gen_joint_t(10, 2, cov, 1.5, rng), InvalidInputError);
  Matrix notpd = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(gen_joint_t(10, 2, notpd, 5.0, rng), InvalidInputError);
}

TEST_CASE("elementwise t draws have the requested variances") {
  Vector variances(3);
  variances << 1.0, 4.0, 0.25;
  Rng rng = make_rng(77);
  Matrix z = gen_elementwise_t(80000, 3, variances, 4.5, rng);
  for (Index j = 0; j < 3; ++j) {
    double v = z.col(j).squaredNorm() / 80000.0;
    CHECK(v == doctest::Approx(variances[j]).epsilon(0.15));
  }
  Vector bad(3);
  bad << 1.0, -1.0, 1.0;
  CHECK_THROWS_AS(gen_elementwise_t(10, 3, bad, 4.0, rng), InvalidInputError);
}

TEST_CASE("scenario runs are deterministic and schedule independent") {
  SimScenario sc;
  sc.p = 6;
  sc.n = 40;
  sc.r = 2;
  sc.design = DesignKind::JointT;
  sc.df = 4.0;
  sc.noise_var = 1.0;
  sc.reps = 4;
  sc.seed = 11;
  std::vector<PilotKind> kinds = {PilotKind::Robust, PilotKind::Sample};

  set_max_threads(1);
  ErrorReport a = run_scenario(sc, kinds);
  set_max_threads(4);
  ErrorReport b = run_scenario(sc, kinds);
  set_max_threads(0);

  for (PilotKind kind : kinds)
    for (std::size_t norm = 0; norm < 4; ++norm)
      check_same_values(a.values.at(kind)[norm], b.values.at(kind)[norm]);
}

TEST_CASE("the gaussian design equals joint t at infinite df") {
  SimScenario sc;
  sc.p = 5;
  sc.n = 30;
  sc.r = 1;
  sc.noise_var = 2.0;
  sc.reps = 3;
  sc.seed = 21;
  sc.design = DesignKind::JointT;
  sc.df = kInf;
  ErrorReport t_run = run_scenario(sc, {PilotKind::Sample});
  sc.design = DesignKind::Gaussian;
  sc.df = 3.0;  // ignored by the gaussian design
  ErrorReport g_run = run_scenario(sc, {PilotKind::Sample});
  for (std::size_t norm = 0; norm < 4; ++norm)
    check_same_values(t_run.values.at(PilotKind::Sample)[norm],
                      g_run.values.at(PilotKind::Sample)[norm]);
}

TEST_CASE("error report accounting is consistent") {
  SimScenario sc;
  sc.p = 8;
  sc.n = 50;
  sc.r = 2;
  sc.design = DesignKind::JointT;
  sc.df = 4.0;
  sc.noise_var = 1.0;
  sc.reps = 5;
  sc.seed = 3;
  std::vector<PilotKind> kinds = {PilotKind::Robust, PilotKind::Sample,
                                  PilotKind::Kendall};
  ErrorReport rep = run_scenario(sc, kinds);
  for (PilotKind kind : kinds) {
    CHECK(rep.failures.at(kind) >= 0);
    for (std::size_t norm = 0; norm < 4; ++norm) {
      const auto& vals = rep.values.at(kind)[norm];
      REQUIRE(vals.size() == 5);
      int good = 0;
      for (double v : vals)
        if (!std::isnan(v)) {
          CHECK(v >= 0.0);
          ++good;
        }
      CHECK(rep.summary.at(kind)[norm].count == good);
      if (good > 0) CHECK(std::isfinite(rep.summary.at(kind)[norm].median));
    }
  }

  std::vector<RatioRow> ratios = ratio_report(rep);
  REQUIRE(ratios.size() == 4);
  for (const auto& row : ratios) {
    CHECK(std::isfinite(row.robust_over_sample));
    CHECK(row.robust_over_sample > 0.0);
    CHECK(std::isfinite(row.kendall_over_sample));
  }

  ErrorReport no_sample = run_scenario(sc, {PilotKind::Robust});
  CHECK_THROWS_AS(ratio_report(no_sample), InvalidInputError);
}

TEST_CASE("precision with repair routes indefinite residuals") {
  JointBlocks b;
  b.p = 2;
  b.r = 1;
  b.s12 = Matrix::Constant(2, 1, 0.3);
  b.s22 = Matrix::Identity(1, 1);
  b.s11 = Matrix::Identity(2, 2) + b.s12 * b.s12.transpose();
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -0.2;
  CHECK_THROWS_AS(precision_woodbury(b, bad), NeedsPsdRepairError);
  Matrix prec = precision_with_repair(b, bad);
  CHECK(prec.allFinite());
  CHECK((prec - prec.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // The repaired residual is diag(1, 0) plus a hair of ridge; the implied
  // total is s12 s12' + repaired residual, and the output must invert it.
  RepairResult rep = nearest_psd_maxnorm(bad);
  Matrix resid = rep.repaired;
  double shift = 2e-8 - rep.certificate_min_eig;
  if (shift > 0.0) resid += shift * Matrix::Identity(2, 2);
  Matrix total = b.s12 * b.s12.transpose() + resid;
  CHECK((prec * total - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("truncation bias study reproduces the known shape") {
  std::vector<double> betas = {0.2, 5.0};
  BiasVarianceStudy study = bias_variance_study(5.0, betas, 100, 400, 17);
  CHECK(study.truth_variance == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK_FALSE(study.heavy_tailed_plugin);
  REQUIRE(study.variance_rows.size() == 3);  // grid plus the untruncated limit
  CHECK(std::isinf(study.variance_rows.back().beta));

  // Strong truncation biases variance estimates downward.
  CHECK(study.variance_rows[0].median < study.truth_variance);
  // Mild truncation tracks the truth.
  CHECK(study.variance_rows[1].median ==
        doctest::Approx(study.truth_variance).epsilon(0.15));
  // Products center on zero for every beta, tighter under truncation.
  for (const auto& row : study.covariance_rows)
    CHECK(std::abs(row.median) < 0.1);
  CHECK(study.covariance_rows[0].iqr <
        study.covariance_rows.back().iqr);

  BiasVarianceStudy heavy = bias_variance_study(3.0, betas, 50, 10, 1);
  CHECK(heavy.heavy_tailed_plugin);
  CHECK_THROWS_AS(bias_variance_study(2.0, betas, 50, 10, 1),
                  InvalidInputError);
}

TEST_CASE("standardized estimates look asymptotically normal") {
  DistSpec dist;
  dist.family = DistFamily::Gaussian;
  dist.mean = 1.0;
  dist.sd = 2.0;
  AlphaRule rule;  // alpha = sqrt(n)
  std::vector<Index> grid = {400};
  CltBiasDiagnostics diag = clt_bias_study(dist, rule, grid, 600, 5);
  REQUIRE(diag.symmetric);
  REQUIRE(diag.rows.size() == 1);
  const CltRow& row = diag.rows[0];
  CHECK(row.n == 400);
  CHECK(row.alpha == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(std::abs(row.mean_std) < 0.15);
  CHECK(row.sd_std == doctest::Approx(1.0).epsilon(0.12));
  CHECK(row.ks_stat < 0.08);
  CHECK(std::isnan(row.bias_ratio));
}

TEST_CASE("asymmetric bias ratio approaches one") {
  DistSpec dist;
  dist.family = DistFamily::CenteredExponential;
  AlphaRule rule;
  std::vector<Index> grid = {100, 2000};
  CltBiasDiagnostics diag = clt_bias_study(dist, rule, grid, 2, 5, 2000000);
  REQUIRE_FALSE(diag.symmetric);
  REQUIRE(diag.rows.size() == 2);
  // Target and score share the pool, so their Monte Carlo errors cancel in
  // the ratio: it equals one over the unclipped fraction, which is within a
  // hair of one at these truncation levels.
  for (const CltRow& row : diag.rows) {
    CHECK(std::isnan(row.mean_std));
    CHECK(std::isfinite(row.t_n_hat));
    CHECK(std::isfinite(row.epsi_hat));
    CHECK(row.bias_ratio == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("report serialization carries the full structure") {
  SimScenario sc;
  sc.p = 4;
  sc.n = 20;
  sc.r = 1;
  sc.design = DesignKind::Gaussian;
  sc.reps = 2;
  sc.seed = 9;
  ErrorReport rep = run_scenario(sc, {PilotKind::Robust, PilotKind::Sample});

  json j = report_to_json(rep);
  CHECK(j.contains("scenario"));
  CHECK(j.at("results").size() == 8);  // 2 estimators x 4 norms
  CHECK(j.at("values").at("robust").at("max").size() == 2);
  CHECK(j.at("failures").contains("sample"));

  std::string csv = report_to_csv(rep);
  CHECK(csv.rfind("p,n,estimator,norm,median,iqr,count,failures\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);  // header + 8 rows

  std::string ratios = ratio_csv({rep});
  CHECK(ratios.rfind("p,norm,robust_over_sample,kendall_over_sample\n", 0) ==
        0);
  CHECK(std::count(ratios.begin(), ratios.end(), '\n') == 5);
}

}  // TEST_SUITE
