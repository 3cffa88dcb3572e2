#include "robustcov/risk_backtest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "robustcov/errors.hpp"
#include "robustcov/matrix_io.hpp"
#include "robustcov/parallel.hpp"
#include "robustcov/stats.hpp"

namespace robustcov {

const char* to_string(CenterMode mode) {
  switch (mode) {
    case CenterMode::None: return "none";
    case CenterMode::Mean: return "mean";
    case CenterMode::Huber: return "huber";
  }
  throw InvalidInputError("to_string: unknown CenterMode");
}

CenterMode center_mode_from_string(std::string_view name) {
  if (name == "none") return CenterMode::None;
  if (name == "mean") return CenterMode::Mean;
  if (name == "huber") return CenterMode::Huber;
  throw InvalidInputError("unknown center mode: " + std::string(name));
}

void BacktestConfig::validate(Index r) const {
  if (window < static_cast<int>(r) + 2)
    throw InvalidInputError("BacktestConfig: window must be at least r + 2");
  if (exposures.empty())
    throw InvalidInputError("BacktestConfig: need at least one exposure");
  for (double c : exposures)
    if (!(c >= 1.0) || !std::isfinite(c))
      throw InvalidInputError("BacktestConfig: every exposure must be >= 1");
  if (n_weights < 1)
    throw InvalidInputError("BacktestConfig: n_weights must be >= 1");
  if (kinds.empty())
    throw InvalidInputError("BacktestConfig: need at least one estimator kind");
  threshold.validate();
  huber.validate();
}

namespace {

bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  int month = (s[5] - '0') * 10 + (s[6] - '0');
  int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

struct RawPanel {
  std::vector<std::string> dates;
  std::vector<std::string> names;
  Matrix values;
};

RawPanel read_panel_csv(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f)
    throw IngestionError(std::string(what) + " panel: cannot open " + path);
  std::string line;
  if (!std::getline(f, line))
    throw IngestionError(std::string(what) + " panel: empty file " + path);
  auto header = split_csv_line(line);
  if (header.size() < 2)
    throw IngestionError(std::string(what) +
                         " panel: need a date column plus at least one series");
  if (header[0] != "date")
    throw IngestionError(std::string(what) +
                         " panel: first header field must be 'date', got '" +
                         header[0] + "'");
  RawPanel panel;
  panel.names.assign(header.begin() + 1, header.end());
  const std::size_t d = panel.names.size();

  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != d + 1)
      throw IngestionError(std::string(what) + " panel: row " +
                           std::to_string(rows + 2) + " has " +
                           std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(d + 1));
    if (!valid_iso_date(fields[0]))
      throw IngestionError(std::string(what) + " panel: bad date '" +
                           fields[0] + "' (expected ISO-8601 YYYY-MM-DD)");
    if (!panel.dates.empty()) {
      if (fields[0] == panel.dates.back())
        throw IngestionError(std::string(what) + " panel: duplicate date " +
                             fields[0]);
      if (fields[0] < panel.dates.back())
        throw IngestionError(std::string(what) +
                             " panel: dates not increasing at " + fields[0]);
    }
    for (std::size_t j = 1; j <= d; ++j) {
      const std::string& s = fields[j];
      if (s.empty())
        throw IngestionError(std::string(what) + " panel: missing value for " +
                             panel.names[j - 1] + " on " + fields[0]);
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != s.size() || !std::isfinite(v))
        throw IngestionError(std::string(what) + " panel: bad value '" + s +
                             "' for " + panel.names[j - 1] + " on " +
                             fields[0]);
      data.push_back(v);
    }
    panel.dates.push_back(fields[0]);
    ++rows;
  }
  if (rows == 0)
    throw IngestionError(std::string(what) + " panel: no data rows in " + path);
  panel.values.resize(static_cast<Index>(rows), static_cast<Index>(d));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j)
      panel.values(static_cast<Index>(i), static_cast<Index>(j)) =
          data[i * d + j];
  return panel;
}

}  // namespace

Panels load_panels(const std::string& returns_path,
                   const std::string& factors_path) {
  RawPanel ret = read_panel_csv(returns_path, "returns");
  RawPanel fac = read_panel_csv(factors_path, "factors");

  if (ret.dates != fac.dates) {
    std::string detail;
    int listed = 0;
    std::size_t upto = std::max(ret.dates.size(), fac.dates.size());
    for (std::size_t i = 0; i < upto && listed < 5; ++i) {
      std::string r = i < ret.dates.size() ? ret.dates[i] : "(none)";
      std::string f = i < fac.dates.size() ? fac.dates[i] : "(none)";
      if (r != f) {
        detail += " row " + std::to_string(i + 2) + ": returns " + r +
                  " vs factors " + f + ";";
        ++listed;
      }
    }
    throw IngestionError("panel dates are not aligned:" + detail);
  }

  Panels out;
  out.returns.dates = ret.dates;
  out.returns.assets = ret.names;
  out.returns.values = std::move(ret.values);
  out.factors.dates = fac.dates;
  out.factors.factors = fac.names;
  out.factors.values = std::move(fac.values);
  return out;
}

namespace {

Matrix center_matrix(const Matrix& values, CenterMode mode,
                     const HuberConfig& config) {
  switch (mode) {
    case CenterMode::None:
      return values;
    case CenterMode::Mean:
      return values.rowwise() - values.colwise().mean();
    case CenterMode::Huber: {
      const Index d = values.cols();
      const auto n = static_cast<std::size_t>(values.rows());
      Vector centers(d);
      parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
        std::span<const double> col(values.col(static_cast<Index>(j)).data(), n);
        double alpha = choose_alpha_tuned(col, 1.0);
        centers[static_cast<Index>(j)] =
            huber_location(col, alpha, config).value;
      });
      return values.rowwise() - centers.transpose();
    }
  }
  throw InvalidInputError("center_panels: unknown mode");
}

}  // namespace

Panels center_panels(const Panels& panels, CenterMode mode,
                     const HuberConfig& config) {
  validate_panel(panels.returns.values, "center_panels");
  validate_panel(panels.factors.values, "center_panels");
  config.validate();
  Panels out = panels;
  out.returns.values = center_matrix(panels.returns.values, mode, config);
  out.factors.values = center_matrix(panels.factors.values, mode, config);
  return out;
}

RollingResult rolling_estimates(const Panels& panels,
                                const BacktestConfig& config) {
  validate_panel(panels.returns.values, "rolling_estimates");
  validate_panel(panels.factors.values, "rolling_estimates");
  const Index n = panels.returns.values.rows();
  const Index r = panels.factors.values.cols();
  if (panels.factors.values.rows() != n)
    throw InvalidInputError("rolling_estimates: panel lengths differ");
  config.validate(r);
  const Index window = config.window;
  if (n < window + 2)
    throw InvalidInputError(
        "rolling_estimates: need more than window + 1 rows (no evaluation "
        "date has both a full window and a following-day return)");

  const Index first = window;
  const Index last = n - 2;
  const auto count = static_cast<std::size_t>(last - first + 1);

  std::vector<RollingEstimate> slots(count);
  std::vector<std::string> skip_reason(count);

  parallel_for(count, [&](std::size_t i) {
    const Index t = first + static_cast<Index>(i);
    Matrix y = panels.returns.values.middleRows(t - window, window);
    Matrix f = panels.factors.values.middleRows(t - window, window);
    RollingEstimate est;
    est.t = t;
    est.date = panels.returns.dates[static_cast<std::size_t>(t)];
    try {
      for (PilotKind kind : config.kinds) {
        FactorCovariance fc = estimate_factor_cov(y, f, kind, config.threshold,
                                                  config.huber);
        est.sigma[kind] = std::move(fc.total);
      }
      slots[i] = std::move(est);
    } catch (const Error& e) {
      skip_reason[i] = est.date + ": " + e.what();
    }
  });

  RollingResult out;
  out.kinds = config.kinds;
  for (std::size_t i = 0; i < count; ++i) {
    if (!skip_reason[i].empty())
      out.skipped.push_back(std::move(skip_reason[i]));
    else
      out.estimates.push_back(std::move(slots[i]));
  }
  return out;
}

Vector gen_weights(double c, Index p, Rng& rng) {
  if (p < 2) throw InvalidInputError("gen_weights: need at least 2 assets");
  if (!(c >= 1.0) || !std::isfinite(c))
    throw InvalidInputError("gen_weights: exposure must be >= 1");

  const double p_long = (c + 1.0) / (2.0 * c);
  std::bernoulli_distribution is_long(p_long);
  std::exponential_distribution<double> expo(1.0);

  std::vector<char> eta(static_cast<std::size_t>(p));
  for (;;) {
    Index longs = 0;
    for (auto& e : eta) {
      e = is_long(rng) ? 1 : 0;
      longs += e;
    }
    if (c == 1.0) break;  // short mass is zero; an empty short side is fine
    if (longs > 0 && longs < p) break;
  }

  Vector xi(p);
  for (Index i = 0; i < p; ++i) xi[i] = expo(rng);

  double long_sum = 0.0, short_sum = 0.0;
  for (Index i = 0; i < p; ++i)
    (eta[static_cast<std::size_t>(i)] ? long_sum : short_sum) += xi[i];

  const double long_mass = (c + 1.0) / 2.0;
  const double short_mass = (c - 1.0) / 2.0;
  Vector w(p);
  for (Index i = 0; i < p; ++i) {
    if (eta[static_cast<std::size_t>(i)])
      w[i] = long_mass * xi[i] / long_sum;
    else
      w[i] = short_mass == 0.0 ? 0.0 : -short_mass * xi[i] / short_sum;
  }
  return w;
}

RiskErrorResult risk_errors(
    const RollingResult& rolling, const ReturnPanel& returns,
    const std::vector<std::pair<double, std::vector<Vector>>>& weights_by_exposure) {
  if (rolling.estimates.empty())
    throw InvalidInputError("risk_errors: no rolling estimates");
  const Index n = returns.values.rows();
  const Index p = returns.values.cols();
  for (const auto& est : rolling.estimates) {
    if (est.t + 1 >= n)
      throw InvalidInputError("risk_errors: estimate at " + est.date +
                              " lacks a following-day return");
    for (const auto& [kind, sigma] : est.sigma)
      if (sigma.rows() != p || sigma.cols() != p)
        throw InvalidInputError("risk_errors: estimate dimension mismatch at " +
                                est.date);
  }

  RiskErrorResult out;
  out.dates_used = static_cast<Index>(rolling.estimates.size());

  std::vector<WeightRecord> records;
  for (const auto& [exposure, weights] : weights_by_exposure) {
    int id = 0;
    for (const Vector& w : weights) {
      if (w.size() != p)
        throw InvalidInputError("risk_errors: weight vector length mismatch");
      WeightRecord rec;
      rec.exposure = exposure;
      rec.weight_id = id++;
      rec.weights = w;
      records.push_back(std::move(rec));
    }
    WeightRecord uniform;
    uniform.exposure = exposure;
    uniform.weight_id = -1;
    uniform.weights = Vector::Constant(p, 1.0 / static_cast<double>(p));
    records.push_back(std::move(uniform));
  }

  parallel_for(records.size(), [&](std::size_t i) {
    WeightRecord& rec = records[i];
    for (PilotKind kind : rolling.kinds) {
      double acc = 0.0;
      for (const auto& est : rolling.estimates) {
        double predicted = rec.weights.dot(est.sigma.at(kind) * rec.weights);
        double realized = rec.weights.dot(returns.values.row(est.t + 1));
        acc += std::abs(predicted - realized * realized);
      }
      rec.risk_error[kind] =
          acc / static_cast<double>(rolling.estimates.size());
    }
  });

  const bool have_pair =
      std::find(rolling.kinds.begin(), rolling.kinds.end(),
                PilotKind::Robust) != rolling.kinds.end() &&
      std::find(rolling.kinds.begin(), rolling.kinds.end(),
                PilotKind::Sample) != rolling.kinds.end();
  if (have_pair) {
    for (const auto& [exposure, weights] : weights_by_exposure) {
      (void)weights;
      int wins = 0, total = 0;
      for (const WeightRecord& rec : records) {
        if (rec.exposure != exposure || rec.weight_id < 0) continue;
        ++total;
        if (rec.risk_error.at(PilotKind::Robust) <
            rec.risk_error.at(PilotKind::Sample))
          ++wins;
      }
      if (total > 0)
        out.win_fraction[exposure] =
            static_cast<double>(wins) / static_cast<double>(total);
    }
  }
  out.records = std::move(records);
  return out;
}

BacktestRun run_backtest(const Panels& panels, const BacktestConfig& config) {
  BacktestRun run;
  run.centered = center_panels(panels, config.center, config.huber);
  run.rolling = rolling_estimates(run.centered, config);

  const Index p = run.centered.returns.values.cols();
  Rng rng = make_rng(config.seed);
  std::vector<std::pair<double, std::vector<Vector>>> weights;
  for (double c : config.exposures) {
    std::vector<Vector> batch;
    batch.reserve(static_cast<std::size_t>(config.n_weights));
    for (int i = 0; i < config.n_weights; ++i)
      batch.push_back(gen_weights(c, p, rng));
    weights.emplace_back(c, std::move(batch));
  }
  run.risk = risk_errors(run.rolling, run.centered.returns, weights);
  return run;
}

QqTable qq_data(std::span<const double> samples, QqFamily family, double df) {
  if (samples.empty()) throw InvalidInputError("qq_data: empty sample");
  for (double x : samples)
    if (!std::isfinite(x))
      throw InvalidInputError("qq_data: non-finite sample value");
  if (family == QqFamily::StudentT && !(df > 0.0))
    throw InvalidInputError("qq_data: df must be positive");

  const std::size_t n = samples.size();
  QqTable out;
  out.empirical.assign(samples.begin(), samples.end());
  std::sort(out.empirical.begin(), out.empirical.end());
  out.theoretical.resize(n);

  boost::math::normal_distribution<double> normal(0.0, 1.0);
  boost::math::students_t_distribution<double> student(
      family == QqFamily::StudentT ? df : 1.0);
  auto theo_quantile = [&](double prob) {
    return family == QqFamily::Gaussian ? boost::math::quantile(normal, prob)
                                        : boost::math::quantile(student, prob);
  };
  for (std::size_t k = 0; k < n; ++k) {
    double prob = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    out.theoretical[k] = theo_quantile(prob);
  }

  double e25 = quantile_sorted(out.empirical, 0.25);
  double e75 = quantile_sorted(out.empirical, 0.75);
  double t25 = theo_quantile(0.25);
  double t75 = theo_quantile(0.75);
  out.slope = (e75 - e25) / (t75 - t25);
  out.intercept = e25 - out.slope * t25;
  return out;
}

SpectrumReport spectrum_report(const Matrix& panel_values, int bins) {
  validate_panel(panel_values, "spectrum_report");
  if (bins < 1) throw InvalidInputError("spectrum_report: bins must be >= 1");

  Matrix cov = sample_cov(panel_values, false);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericalError("spectrum_report: eigensolver failed");

  const Index p = cov.rows();
  SpectrumReport out;
  out.eigenvalues.resize(p);
  for (Index i = 0; i < p; ++i) {
    double v = eig.eigenvalues()[p - 1 - i];  // descending
    out.eigenvalues[i] = v > 0.0 ? v : 0.0;
    if (eig.eigenvalues()[p - 1 - i] <= 0.0) ++out.nonpositive_count;
  }

  double total = out.eigenvalues.sum();
  if (!(total > 0.0))
    throw InvalidInputError("spectrum_report: panel has zero covariance");

  out.residue_proportion.resize(static_cast<std::size_t>(p));
  double cum = 0.0;
  for (Index k = 0; k < p; ++k) {
    out.residue_proportion[static_cast<std::size_t>(k)] =
        std::max(0.0, 1.0 - cum / total);
    cum += out.eigenvalues[k];
  }

  std::vector<double> logs;
  for (Index i = 0; i < p; ++i)
    if (out.eigenvalues[i] > 0.0) logs.push_back(std::log10(out.eigenvalues[i]));
  if (!logs.empty()) {
    double lo = *std::min_element(logs.begin(), logs.end());
    double hi = *std::max_element(logs.begin(), logs.end());
    if (hi == lo) hi = lo + 1e-9;
    out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    out.bin_counts.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b <= bins; ++b)
      out.bin_edges[static_cast<std::size_t>(b)] =
          lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    for (double v : logs) {
      auto b = static_cast<std::size_t>((v - lo) / (hi - lo) *
                                        static_cast<double>(bins));
      if (b >= static_cast<std::size_t>(bins))
        b = static_cast<std::size_t>(bins) - 1;
      ++out.bin_counts[b];
    }
  }
  return out;
}

}  // namespace robustcov
