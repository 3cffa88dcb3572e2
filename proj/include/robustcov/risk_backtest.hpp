#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robustcov/factor_model.hpp"
#include "robustcov/pilot_cov.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/types.hpp"

namespace robustcov {

/// Daily excess returns: one row per date, one column per asset.
struct ReturnPanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  Matrix values;
};

/// Factor realizations aligned date-by-date with a ReturnPanel.
struct FactorPanel {
  std::vector<std::string> dates;
  std::vector<std::string> factors;
  Matrix values;
};

struct Panels {
  ReturnPanel returns;
  FactorPanel factors;
};

enum class CenterMode { None, Mean, Huber };

const char* to_string(CenterMode mode);
CenterMode center_mode_from_string(std::string_view name);

struct BacktestConfig {
  int window = 252;
  std::vector<double> exposures = {1.0, 1.4, 1.8, 2.2};
  int n_weights = 100;
  std::uint64_t seed = 0;
  std::vector<PilotKind> kinds = {PilotKind::Robust, PilotKind::Sample};
  CenterMode center = CenterMode::Huber;
  ThresholdSpec threshold;
  HuberConfig huber;

  void validate(Index r) const;
};

/// Reads the two aligned CSV panels (first column `date`, ISO-8601, strictly
/// increasing; remaining columns numeric returns in decimals). Alignment
/// failures name the offending dates.
Panels load_panels(const std::string& returns_path,
                   const std::string& factors_path);

/// Subtracts a per-column center from both panels: the robust Huber location
/// (tuned truncation at beta = 1), the arithmetic mean, or nothing.
Panels center_panels(const Panels& panels, CenterMode mode,
                     const HuberConfig& config = {});

/// Covariance estimates for one evaluation date: row index t into the panel,
/// estimated from the `window` rows strictly before t.
struct RollingEstimate {
  Index t = 0;
  std::string date;
  std::map<PilotKind, Matrix> sigma;
};

struct RollingResult {
  std::vector<RollingEstimate> estimates;
  std::vector<PilotKind> kinds;
  /// "date: reason" for evaluation dates dropped because an estimator failed.
  std::vector<std::string> skipped;
};

/// Runs estimate_factor_cov on every trailing window. Evaluation dates are
/// the row indices t in [window, n-2]: t needs a full window of rows
/// [t-window, t-1] behind it and a following-day return at t+1. Dates where
/// any configured estimator fails are skipped with a diagnostic, never
/// interpolated. Windows run concurrently; output order is fixed by date.
RollingResult rolling_estimates(const Panels& panels,
                                const BacktestConfig& config);

/// One random gross-exposure portfolio: eta_i = +1 with probability
/// (c+1)/2c, else -1; xi_i ~ Exp(1); longs share mass (c+1)/2 and shorts
/// mass -(c-1)/2 proportionally to xi. The eta vector is drawn first (and
/// redrawn whole while either side is empty when c > 1), then xi. Satisfies
/// sum w = 1 and sum |w| = c to 1e-12.
Vector gen_weights(double c, Index p, Rng& rng);

struct WeightRecord {
  double exposure = 1.0;
  /// Index of the random draw within its exposure, or -1 for the uniform
  /// benchmark w_i = 1/p.
  int weight_id = 0;
  Vector weights;
  /// Mean over evaluation dates of |w' Sigma_t w - (w' gamma_t)^2| per kind.
  std::map<PilotKind, double> risk_error;
};

struct RiskErrorResult {
  std::vector<WeightRecord> records;
  /// Per exposure: fraction of the random weights (benchmark excluded) where
  /// the robust estimator's risk error is strictly smaller than Sample's.
  /// Present only when both kinds were run.
  std::map<double, double> win_fraction;
  Index dates_used = 0;
};

/// Evaluates portfolio risk errors over the rolling estimates. gamma_t is
/// the day-(t+1) row of the return panel the estimates were built from. The
/// uniform benchmark is appended per exposure with weight_id -1 and excluded
/// from win fractions.
RiskErrorResult risk_errors(
    const RollingResult& rolling, const ReturnPanel& returns,
    const std::vector<std::pair<double, std::vector<Vector>>>& weights_by_exposure);

struct BacktestRun {
  Panels centered;
  RollingResult rolling;
  RiskErrorResult risk;
};

/// Full pipeline: center both panels, roll the estimators, draw n_weights
/// portfolios per exposure from a single stream (exposure-major order), and
/// score them.
BacktestRun run_backtest(const Panels& panels, const BacktestConfig& config);

enum class QqFamily { Gaussian, StudentT };

/// Quantile pairs at plotting positions (k - 0.5)/n: empirical quantiles are
/// the sorted sample; theoretical quantiles come from the reference family.
/// The reference line connects the first- and third-quartile points.
struct QqTable {
  std::vector<double> theoretical;
  std::vector<double> empirical;
  double slope = 0.0;
  double intercept = 0.0;
};

QqTable qq_data(std::span<const double> samples, QqFamily family,
                double df = 4.0);

/// Eigenvalue diagnostics of the uncentered sample covariance Z'Z/n:
/// descending eigenvalues (clamped at 0), a histogram of log10(eigenvalue)
/// over the strictly positive ones, and the residue proportion
/// sum_{i>K} lambda_i / sum lambda_i for K = 0..p-1.
struct SpectrumReport {
  Vector eigenvalues;
  std::vector<double> bin_edges;  // log10 scale, bins+1 edges
  std::vector<std::int64_t> bin_counts;
  std::vector<double> residue_proportion;
  Index nonpositive_count = 0;
};

SpectrumReport spectrum_report(const Matrix& panel_values, int bins = 30);

}  // namespace robustcov
