#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustcov/factor_model.hpp"
#include "robustcov/pilot_cov.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/types.hpp"

namespace robustcov {

enum class DesignKind { JointT, ElementwiseT, Gaussian };

const char* to_string(DesignKind kind);
DesignKind design_kind_from_string(std::string_view name);

/// One simulation configuration. The data model is y_t = B f_t + u_t with
/// B drawn fresh per replication (iid standard normal rows), factor
/// covariance I_r and noise covariance noise_var * I_p, so the population
/// covariance is Sigma = B B' + noise_var * I_p.
struct SimScenario {
  Index p = 100;
  Index n = 50;
  Index r = 3;
  DesignKind design = DesignKind::JointT;
  /// Degrees of freedom for the t designs; must exceed 2 so the covariance
  /// exists. +infinity selects the Gaussian limit.
  double df = 3.0;
  double noise_var = 5.0;
  int reps = 50;
  std::uint64_t seed = 0;
  /// Descriptors of the generated residual sparsity (diagonal truth: 1, 0).
  double sparsity_m = 1.0;
  double sparsity_q = 0.0;

  void validate() const;
};

enum class NormKind { ResidualOp, PrecisionOp, RelFrob, MaxNorm };
inline constexpr std::array<NormKind, 4> kAllNorms = {
    NormKind::ResidualOp, NormKind::PrecisionOp, NormKind::RelFrob,
    NormKind::MaxNorm};

const char* to_string(NormKind kind);

struct ErrorSummary {
  double median = 0.0;
  double iqr = 0.0;
  /// Number of replications that produced a value for this norm.
  int count = 0;
};

/// Per-replication error norms and their aggregates. values[kind][norm_index]
/// has one entry per replication, NaN where that replication failed.
struct ErrorReport {
  SimScenario scenario;
  std::vector<PilotKind> kinds;
  std::map<PilotKind, std::array<std::vector<double>, 4>> values;
  std::map<PilotKind, std::array<ErrorSummary, 4>> summary;
  /// Replications for which any stage of the given estimator failed.
  std::map<PilotKind, int> failures;
};

/// p x r loading matrix with iid standard normal entries.
Matrix gen_loadings(Index p, Index r, Rng& rng);

/// n draws of a dim-variate t with population covariance exactly `cov`:
/// x = sqrt(df / W) * L g, W ~ chi-square(df), g standard normal, L the
/// Cholesky factor of cov * (df-2)/df. df = +infinity gives the exact
/// Gaussian limit (no W draw). Per row, g is drawn first, then W.
Matrix gen_joint_t(Index n, Index dim, const Matrix& cov, double df, Rng& rng);

/// n x dim panel of independent scaled t(df) entries; column j has variance
/// variances[j]. df = +infinity gives iid Gaussian columns.
Matrix gen_elementwise_t(Index n, Index dim, const Vector& variances,
                         double df, Rng& rng);

/// Woodbury precision with automatic rerouting through PSD repair (plus a
/// tiny diagonal ridge if the repaired matrix sits below the PD floor).
Matrix precision_with_repair(const JointBlocks& blocks,
                             const Matrix& residual_t);

/// Runs the scenario for each estimator kind on shared draws, computing per
/// replication the four error norms against the known truth:
/// residual_op = op-norm of (thresholded residual - noise_var I),
/// precision_op = op-norm of (estimated precision - true precision),
/// rel_frob and max on (total - Sigma). Replications run concurrently on
/// seeded substreams; results are identical for any worker count.
ErrorReport run_scenario(const SimScenario& sc,
                         const std::vector<PilotKind>& kinds,
                         const ThresholdSpec& spec = {},
                         const HuberConfig& config = {});

struct RatioRow {
  NormKind norm = NormKind::ResidualOp;
  double robust_over_sample = 0.0;
  double kendall_over_sample = 0.0;  // NaN when Kendall was not run
};

/// Median-error ratios against the Sample baseline, one row per norm.
std::vector<RatioRow> ratio_report(const ErrorReport& report);

/// One histogram-ready vector of estimates for a single truncation
/// multiplier. beta = +infinity denotes the plain sample mean.
struct BiasVarianceRow {
  double beta = 0.0;
  std::vector<double> estimates;
  double median = 0.0;
  double iqr = 0.0;
};

struct BiasVarianceStudy {
  /// Variance case: robust mean of x^2 for x ~ t(df).
  std::vector<BiasVarianceRow> variance_rows;
  /// Covariance case: robust mean of x*y for independent x, y ~ t(df).
  std::vector<BiasVarianceRow> covariance_rows;
  /// Analytic Var(X) = df / (df - 2).
  double truth_variance = 0.0;
  /// Set when df <= 4, where the variance of the squares does not exist and
  /// the data-driven truncation level is itself heavy-tailed.
  bool heavy_tailed_plugin = false;
};

/// Reproduces the marginal bias/variance experiments: per beta (grid plus
/// the untruncated limit), `reps` estimates of Var(X) from n squares and of
/// Cov(X, Y) = 0 from n products.
BiasVarianceStudy bias_variance_study(double df, std::span<const double> beta_grid,
                                      Index n, int reps, std::uint64_t seed);

enum class DistFamily { Gaussian, StudentT, CenteredExponential };

/// Sampling distribution for the asymptotics study. Gaussian uses mean/sd;
/// StudentT is standard with `df` degrees of freedom; CenteredExponential is
/// Exp(1) - 1 (mean 0, variance 1, asymmetric).
struct DistSpec {
  DistFamily family = DistFamily::Gaussian;
  double mean = 0.0;
  double sd = 1.0;
  double df = 5.0;

  bool symmetric() const { return family != DistFamily::CenteredExponential; }
  double true_mean() const;
  double true_sd() const;
  void validate() const;
};

/// Truncation-level sequence alpha_n = coeff * n^exponent.
struct AlphaRule {
  double coeff = 1.0;
  double exponent = 0.5;
  double level(Index n) const;
};

struct CltRow {
  Index n = 0;
  double alpha = 0.0;
  // Symmetric case: moments of sqrt(n) (T_n - mu) / sigma over replications
  // and the Kolmogorov-Smirnov distance to the standard normal.
  double mean_std = 0.0;
  double sd_std = 0.0;
  double ks_stat = 0.0;
  // Asymmetric case: population-level truncation target and score, both
  // approximated on a large common pool, and their ratio.
  double t_n_hat = 0.0;
  double epsi_hat = 0.0;
  double bias_ratio = 0.0;
};

struct CltBiasDiagnostics {
  bool symmetric = true;
  std::vector<CltRow> rows;
};

/// Empirical check of the estimator's asymptotic normality and bias: for a
/// symmetric distribution, standardizes T_n around the true mean; for an
/// asymmetric one, estimates the truncated-mean target t_n as the root of
/// the population score on a pool of `pool_size` draws and reports
/// (t_n - mu) / E psi(X - mu) with psi(x) = clamp(x, -alpha, alpha), the
/// convention under which the ratio tends to one.
CltBiasDiagnostics clt_bias_study(const DistSpec& dist, const AlphaRule& rule,
                                  std::span<const Index> n_grid, int reps,
                                  std::uint64_t seed,
                                  std::size_t pool_size = 10000000);

/// Strict JSON round-trip for scenario files: unknown keys are rejected,
/// "df" accepts a number or the string "inf".
SimScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const SimScenario& sc);

nlohmann::json report_to_json(const ErrorReport& report);
/// One CSV row per (p, estimator, norm): median, IQR, count, failures.
std::string report_to_csv(const ErrorReport& report);
/// Plot-ready ratio rows (x = p, y = ratio) for a collection of reports.
std::string ratio_csv(const std::vector<ErrorReport>& reports);

}  // namespace robustcov
