#include "robustcov/sim_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "robustcov/errors.hpp"
#include "robustcov/matrix_io.hpp"
#include "robustcov/parallel.hpp"
#include "robustcov/psd_repair.hpp"
#include "robustcov/stats.hpp"

namespace robustcov {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

const char* to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::JointT: return "joint_t";
    case DesignKind::ElementwiseT: return "elementwise_t";
    case DesignKind::Gaussian: return "gaussian";
  }
  throw InvalidInputError("to_string: unknown DesignKind");
}

DesignKind design_kind_from_string(std::string_view name) {
  if (name == "joint_t") return DesignKind::JointT;
  if (name == "elementwise_t") return DesignKind::ElementwiseT;
  if (name == "gaussian") return DesignKind::Gaussian;
  throw InvalidInputError("unknown design kind: " + std::string(name));
}

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::ResidualOp: return "residual_op";
    case NormKind::PrecisionOp: return "precision_op";
    case NormKind::RelFrob: return "rel_frob";
    case NormKind::MaxNorm: return "max";
  }
  throw InvalidInputError("to_string: unknown NormKind");
}

void SimScenario::validate() const {
  if (n < 2) throw InvalidInputError("SimScenario: n must be >= 2");
  if (r < 1 || p < r)
    throw InvalidInputError("SimScenario: need p >= r >= 1");
  if (design != DesignKind::Gaussian && !(df > 2.0))
    throw InvalidInputError("SimScenario: df must exceed 2");
  if (!(noise_var > 0.0) || !std::isfinite(noise_var))
    throw InvalidInputError("SimScenario: noise_var must be positive");
  if (reps < 1) throw InvalidInputError("SimScenario: reps must be >= 1");
  if (!(sparsity_m > 0.0) || !(sparsity_q >= 0.0) || sparsity_q > 1.0)
    throw InvalidInputError("SimScenario: invalid sparsity descriptor");
}

Matrix gen_loadings(Index p, Index r, Rng& rng) {
  if (p < 1 || r < 1)
    throw InvalidInputError("gen_loadings: p and r must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix b(p, r);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < r; ++j) b(i, j) = normal(rng);
  return b;
}

Matrix gen_joint_t(Index n, Index dim, const Matrix& cov, double df, Rng& rng) {
  if (n < 1 || dim < 1)
    throw InvalidInputError("gen_joint_t: n and dim must be positive");
  if (cov.rows() != dim || cov.cols() != dim)
    throw InvalidInputError("gen_joint_t: covariance dimension mismatch");
  const bool gaussian = std::isinf(df);
  if (!gaussian && !(df > 2.0))
    throw InvalidInputError("gen_joint_t: df must exceed 2");

  Matrix scale = gaussian ? cov : (cov * ((df - 2.0) / df)).eval();
  Eigen::LLT<Matrix> llt(scale);
  if (llt.info() != Eigen::Success)
    throw InvalidInputError("gen_joint_t: covariance must be positive definite");
  Matrix l = llt.matrixL();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chisq(gaussian ? 1.0 : df);
  Matrix out(n, dim);
  Vector g(dim);
  for (Index t = 0; t < n; ++t) {
    for (Index j = 0; j < dim; ++j) g[j] = normal(rng);
    Vector row = l * g;
    if (!gaussian) {
      double w = chisq(rng);
      row *= std::sqrt(df / w);
    }
    out.row(t) = row.transpose();
  }
  return out;
}

Matrix gen_elementwise_t(Index n, Index dim, const Vector& variances,
                         double df, Rng& rng) {
  if (n < 1 || dim < 1)
    throw InvalidInputError("gen_elementwise_t: n and dim must be positive");
  if (variances.size() != dim)
    throw InvalidInputError("gen_elementwise_t: variance vector length mismatch");
  if ((variances.array() <= 0.0).any() || !variances.allFinite())
    throw InvalidInputError("gen_elementwise_t: variances must be positive");
  const bool gaussian = std::isinf(df);
  if (!gaussian && !(df > 2.0))
    throw InvalidInputError("gen_elementwise_t: df must exceed 2");

  Vector sd(dim);
  for (Index j = 0; j < dim; ++j)
    sd[j] = gaussian ? std::sqrt(variances[j])
                     : std::sqrt(variances[j] * (df - 2.0) / df);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(gaussian ? 1.0 : df);
  Matrix out(n, dim);
  for (Index t = 0; t < n; ++t)
    for (Index j = 0; j < dim; ++j)
      out(t, j) = sd[j] * (gaussian ? normal(rng) : student(rng));
  return out;
}

Matrix precision_with_repair(const JointBlocks& blocks,
                             const Matrix& residual_t) {
  try {
    return precision_woodbury(blocks, residual_t);
  } catch (const NeedsPsdRepairError&) {
    RepairResult rep = nearest_psd_maxnorm(residual_t);
    Matrix r = rep.repaired;
    double shift = 2e-8 - rep.certificate_min_eig;
    if (shift > 0.0)
      r += shift * Matrix::Identity(r.rows(), r.cols());
    return precision_woodbury(blocks, r);
  }
}

namespace {

Matrix draw_joint_panel(const SimScenario& sc, Rng& rng) {
  const Index dim = sc.r + sc.p;
  switch (sc.design) {
    case DesignKind::JointT:
    case DesignKind::Gaussian: {
      Matrix cov = Matrix::Identity(dim, dim);
      cov.bottomRightCorner(sc.p, sc.p) *= sc.noise_var;
      double df = sc.design == DesignKind::Gaussian ? kInf : sc.df;
      return gen_joint_t(sc.n, dim, cov, df, rng);
    }
    case DesignKind::ElementwiseT: {
      Vector variances = Vector::Ones(dim);
      variances.tail(sc.p).setConstant(sc.noise_var);
      return gen_elementwise_t(sc.n, dim, variances, sc.df, rng);
    }
  }
  throw InvalidInputError("run_scenario: unknown design");
}

ErrorSummary summarize(const std::vector<double>& values) {
  std::vector<double> good;
  good.reserve(values.size());
  for (double v : values)
    if (!std::isnan(v)) good.push_back(v);
  ErrorSummary s;
  s.count = static_cast<int>(good.size());
  if (good.empty()) {
    s.median = kNan;
    s.iqr = kNan;
  } else {
    s.median = median(good);
    s.iqr = iqr(good);
  }
  return s;
}

}  // namespace

ErrorReport run_scenario(const SimScenario& sc,
                         const std::vector<PilotKind>& kinds,
                         const ThresholdSpec& spec, const HuberConfig& config) {
  sc.validate();
  spec.validate();
  config.validate();
  if (kinds.empty())
    throw InvalidInputError("run_scenario: need at least one estimator kind");

  ErrorReport report;
  report.scenario = sc;
  report.kinds = kinds;
  const auto reps = static_cast<std::size_t>(sc.reps);
  for (PilotKind kind : kinds) {
    for (auto& v : report.values[kind]) v.assign(reps, kNan);
    report.failures[kind] = 0;
  }
  std::map<PilotKind, std::vector<char>> failed;
  for (PilotKind kind : kinds) failed[kind].assign(reps, 0);

  parallel_for(reps, [&](std::size_t rep) {
    Rng rng = substream(sc.seed, rep);
    Matrix b = gen_loadings(sc.p, sc.r, rng);
    Matrix sigma = b * b.transpose();
    sigma.diagonal().array() += sc.noise_var;
    Matrix sigma_u = sc.noise_var * Matrix::Identity(sc.p, sc.p);

    JointBlocks truth;
    truth.p = sc.p;
    truth.r = sc.r;
    truth.s11 = sigma;
    truth.s12 = b;
    truth.s22 = Matrix::Identity(sc.r, sc.r);
    Matrix prec_true = precision_woodbury(truth, sigma_u);
    if (norm_max(sigma * prec_true - Matrix::Identity(sc.p, sc.p)) > 1e-10)
      throw NumericalError("run_scenario: truth precision failed round-trip");

    Matrix z = draw_joint_panel(sc, rng);
    Matrix f = z.leftCols(sc.r);
    Matrix y = (f * b.transpose() + z.rightCols(sc.p)).eval();

    for (PilotKind kind : kinds) {
      auto& vals = report.values.at(kind);
      auto& fail = failed.at(kind);
      try {
        FactorCovariance est = estimate_factor_cov(y, f, kind, spec, config);
        Matrix diff = est.total - sigma;
        vals[0][rep] = norm_op(est.residual_thresholded - sigma_u);
        vals[2][rep] = norm_rel_frobenius(diff, sigma);
        vals[3][rep] = norm_max(diff);
        try {
          Matrix prec = precision_with_repair(est.blocks, est.residual_thresholded);
          vals[1][rep] = norm_op(prec - prec_true);
        } catch (const Error&) {
          fail[rep] = 1;
        }
      } catch (const Error&) {
        fail[rep] = 1;
      }
    }
  });

  for (PilotKind kind : kinds) {
    for (std::size_t norm = 0; norm < 4; ++norm)
      report.summary[kind][norm] = summarize(report.values[kind][norm]);
    int f = 0;
    for (char c : failed[kind]) f += c;
    report.failures[kind] = f;
  }
  return report;
}

std::vector<RatioRow> ratio_report(const ErrorReport& report) {
  auto sample = report.summary.find(PilotKind::Sample);
  if (sample == report.summary.end())
    throw InvalidInputError("ratio_report: report lacks the Sample baseline");
  auto robust = report.summary.find(PilotKind::Robust);
  auto kendall = report.summary.find(PilotKind::Kendall);

  std::vector<RatioRow> rows;
  for (std::size_t i = 0; i < kAllNorms.size(); ++i) {
    RatioRow row;
    row.norm = kAllNorms[i];
    double base = sample->second[i].median;
    row.robust_over_sample =
        robust == report.summary.end() ? kNan : robust->second[i].median / base;
    row.kendall_over_sample =
        kendall == report.summary.end() ? kNan
                                        : kendall->second[i].median / base;
    rows.push_back(row);
  }
  return rows;
}

BiasVarianceStudy bias_variance_study(double df, std::span<const double> beta_grid,
                                      Index n, int reps, std::uint64_t seed) {
  if (!(df > 2.0))
    throw InvalidInputError("bias_variance_study: df must exceed 2");
  if (n < 2) throw InvalidInputError("bias_variance_study: n must be >= 2");
  if (reps < 1) throw InvalidInputError("bias_variance_study: reps must be >= 1");
  for (double b : beta_grid)
    if (!(b > 0.0) || !std::isfinite(b))
      throw InvalidInputError("bias_variance_study: betas must be finite and > 0");

  BiasVarianceStudy out;
  out.truth_variance = df / (df - 2.0);
  out.heavy_tailed_plugin = df <= 4.0;

  std::vector<double> betas(beta_grid.begin(), beta_grid.end());
  betas.push_back(kInf);
  const std::size_t nb = betas.size();
  const auto nreps = static_cast<std::size_t>(reps);

  std::vector<std::vector<double>> var_est(nb), cov_est(nb);
  for (auto& v : var_est) v.assign(nreps, 0.0);
  for (auto& v : cov_est) v.assign(nreps, 0.0);

  HuberConfig config;
  parallel_for(nreps, [&](std::size_t rep) {
    Rng rng = substream(seed, rep);
    std::student_t_distribution<double> student(df);
    const auto nn = static_cast<std::size_t>(n);
    std::vector<double> squares(nn), products(nn);
    for (std::size_t t = 0; t < nn; ++t) {
      double x = student(rng);
      squares[t] = x * x;
    }
    for (std::size_t t = 0; t < nn; ++t) {
      double x = student(rng);
      double y = student(rng);
      products[t] = x * y;
    }
    for (std::size_t bi = 0; bi < nb; ++bi) {
      if (std::isinf(betas[bi])) {
        var_est[bi][rep] = mean(squares);
        cov_est[bi][rep] = mean(products);
      } else {
        double a1 = choose_alpha_tuned(squares, betas[bi]);
        var_est[bi][rep] = huber_location(squares, a1, config).value;
        double a2 = choose_alpha_tuned(products, betas[bi]);
        cov_est[bi][rep] = huber_location(products, a2, config).value;
      }
    }
  });

  for (std::size_t bi = 0; bi < nb; ++bi) {
    BiasVarianceRow vr;
    vr.beta = betas[bi];
    vr.estimates = std::move(var_est[bi]);
    vr.median = median(vr.estimates);
    vr.iqr = iqr(vr.estimates);
    out.variance_rows.push_back(std::move(vr));

    BiasVarianceRow cr;
    cr.beta = betas[bi];
    cr.estimates = std::move(cov_est[bi]);
    cr.median = median(cr.estimates);
    cr.iqr = iqr(cr.estimates);
    out.covariance_rows.push_back(std::move(cr));
  }
  return out;
}

double DistSpec::true_mean() const {
  switch (family) {
    case DistFamily::Gaussian: return mean;
    case DistFamily::StudentT: return 0.0;
    case DistFamily::CenteredExponential: return 0.0;
  }
  throw InvalidInputError("DistSpec: unknown family");
}

double DistSpec::true_sd() const {
  switch (family) {
    case DistFamily::Gaussian: return sd;
    case DistFamily::StudentT: return std::sqrt(df / (df - 2.0));
    case DistFamily::CenteredExponential: return 1.0;
  }
  throw InvalidInputError("DistSpec: unknown family");
}

void DistSpec::validate() const {
  switch (family) {
    case DistFamily::Gaussian:
      if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean))
        throw InvalidInputError("DistSpec: invalid Gaussian parameters");
      return;
    case DistFamily::StudentT:
      if (!(df > 2.0))
        throw InvalidInputError("DistSpec: Student t needs df > 2");
      return;
    case DistFamily::CenteredExponential:
      return;
  }
  throw InvalidInputError("DistSpec: unknown family");
}

double AlphaRule::level(Index n) const {
  if (!(coeff > 0.0) || !std::isfinite(coeff) || !std::isfinite(exponent))
    throw InvalidInputError("AlphaRule: invalid parameters");
  if (n < 1) throw InvalidInputError("AlphaRule: n must be positive");
  return coeff * std::pow(static_cast<double>(n), exponent);
}

namespace {

double draw_dist(const DistSpec& dist, Rng& rng,
                 std::normal_distribution<double>& normal,
                 std::student_t_distribution<double>& student,
                 std::exponential_distribution<double>& expo) {
  switch (dist.family) {
    case DistFamily::Gaussian: return dist.mean + dist.sd * normal(rng);
    case DistFamily::StudentT: return student(rng);
    case DistFamily::CenteredExponential: return expo(rng) - 1.0;
  }
  throw InvalidInputError("DistSpec: unknown family");
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Mean of clamp(x - mu, -alpha, alpha) over the pool.
double pool_score(const std::vector<double>& pool, double mu, double alpha) {
  double s = 0.0;
  for (double x : pool) s += std::clamp(x - mu, -alpha, alpha);
  return s / static_cast<double>(pool.size());
}

}  // namespace

CltBiasDiagnostics clt_bias_study(const DistSpec& dist, const AlphaRule& rule,
                                  std::span<const Index> n_grid, int reps,
                                  std::uint64_t seed, std::size_t pool_size) {
  dist.validate();
  if (n_grid.empty())
    throw InvalidInputError("clt_bias_study: empty n grid");
  if (reps < 2) throw InvalidInputError("clt_bias_study: reps must be >= 2");
  if (pool_size < 1000)
    throw InvalidInputError("clt_bias_study: pool too small to be meaningful");

  CltBiasDiagnostics out;
  out.symmetric = dist.symmetric();
  out.rows.resize(n_grid.size());

  const double mu = dist.true_mean();
  const double sigma = dist.true_sd();
  const HuberConfig config;

  if (out.symmetric) {
    const auto nreps = static_cast<std::size_t>(reps);
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
      const Index n = n_grid[gi];
      const double alpha = rule.level(n);
      std::vector<double> stats(nreps);
      parallel_for(nreps, [&](std::size_t rep) {
        Rng rng = substream(seed, gi * nreps + rep);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::student_t_distribution<double> student(
            dist.family == DistFamily::StudentT ? dist.df : 3.0);
        std::exponential_distribution<double> expo(1.0);
        std::vector<double> sample(static_cast<std::size_t>(n));
        for (auto& x : sample)
          x = draw_dist(dist, rng, normal, student, expo);
        double t = huber_location(sample, alpha, config).value;
        stats[rep] = std::sqrt(static_cast<double>(n)) * (t - mu) / sigma;
      });
      CltRow row;
      row.n = n;
      row.alpha = alpha;
      row.mean_std = mean(stats);
      row.sd_std = stddev(stats);
      std::sort(stats.begin(), stats.end());
      double ks = 0.0;
      for (std::size_t i = 0; i < stats.size(); ++i) {
        double cdf = standard_normal_cdf(stats[i]);
        double hi = (static_cast<double>(i) + 1.0) / static_cast<double>(nreps);
        double lo = static_cast<double>(i) / static_cast<double>(nreps);
        ks = std::max({ks, std::abs(cdf - hi), std::abs(cdf - lo)});
      }
      row.ks_stat = ks;
      row.t_n_hat = kNan;
      row.epsi_hat = kNan;
      row.bias_ratio = kNan;
      out.rows[gi] = row;
    }
    return out;
  }

  // Asymmetric case: approximate the population truncated-mean target and
  // score on one large pool so their Monte-Carlo errors cancel in the ratio.
  std::vector<double> pool(pool_size);
  {
    Rng rng = substream(seed, 0x706f6f6c);  // distinct stream for the pool
    std::normal_distribution<double> normal(0.0, 1.0);
    std::student_t_distribution<double> student(3.0);
    std::exponential_distribution<double> expo(1.0);
    for (auto& x : pool) x = draw_dist(dist, rng, normal, student, expo);
  }
  double lo_all = *std::min_element(pool.begin(), pool.end());
  double hi_all = *std::max_element(pool.begin(), pool.end());

  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const Index n = n_grid[gi];
    const double alpha = rule.level(n);
    double lo = lo_all, hi = hi_all;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      double s = pool_score(pool, mid, alpha);
      if (s > 0.0)
        lo = mid;
      else
        hi = mid;
      double next = 0.5 * (lo + hi);
      if (next == mid) break;
      mid = next;
    }
    CltRow row;
    row.n = n;
    row.alpha = alpha;
    row.mean_std = kNan;
    row.sd_std = kNan;
    row.ks_stat = kNan;
    row.t_n_hat = mid;
    row.epsi_hat = pool_score(pool, mu, alpha);
    row.bias_ratio = (mid - mu) / row.epsi_hat;
    out.rows[gi] = row;
  }
  return out;
}

SimScenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw IngestionError("scenario: top level must be a JSON object");
  static const std::set<std::string> allowed = {
      "p", "n", "r", "design", "df", "noise_var", "reps", "seed", "sparsity"};
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw IngestionError("scenario: unknown key '" + item.key() + "'");

  SimScenario sc;
  try {
    if (j.contains("p")) sc.p = j.at("p").get<Index>();
    if (j.contains("n")) sc.n = j.at("n").get<Index>();
    if (j.contains("r")) sc.r = j.at("r").get<Index>();
    if (j.contains("design"))
      sc.design = design_kind_from_string(j.at("design").get<std::string>());
    if (j.contains("df")) {
      const auto& df = j.at("df");
      if (df.is_string()) {
        std::string s = df.get<std::string>();
        if (s != "inf")
          throw IngestionError("scenario: df string must be 'inf'");
        sc.df = kInf;
      } else {
        sc.df = df.get<double>();
      }
    }
    if (j.contains("noise_var")) sc.noise_var = j.at("noise_var").get<double>();
    if (j.contains("reps")) sc.reps = j.at("reps").get<int>();
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sparsity")) {
      const auto& sp = j.at("sparsity");
      if (!sp.is_object())
        throw IngestionError("scenario: sparsity must be an object");
      for (const auto& item : sp.items())
        if (item.key() != "m" && item.key() != "q")
          throw IngestionError("scenario: unknown sparsity key '" +
                               item.key() + "'");
      if (sp.contains("m")) sc.sparsity_m = sp.at("m").get<double>();
      if (sp.contains("q")) sc.sparsity_q = sp.at("q").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

nlohmann::json scenario_to_json(const SimScenario& sc) {
  nlohmann::json j;
  j["p"] = sc.p;
  j["n"] = sc.n;
  j["r"] = sc.r;
  j["design"] = to_string(sc.design);
  if (std::isinf(sc.df))
    j["df"] = "inf";
  else
    j["df"] = sc.df;
  j["noise_var"] = sc.noise_var;
  j["reps"] = sc.reps;
  j["seed"] = sc.seed;
  j["sparsity"] = {{"m", sc.sparsity_m}, {"q", sc.sparsity_q}};
  return j;
}

nlohmann::json report_to_json(const ErrorReport& report) {
  nlohmann::json j;
  j["scenario"] = scenario_to_json(report.scenario);
  nlohmann::json results = nlohmann::json::array();
  for (PilotKind kind : report.kinds) {
    const auto& summary = report.summary.at(kind);
    for (std::size_t i = 0; i < kAllNorms.size(); ++i) {
      results.push_back({{"estimator", to_string(kind)},
                         {"norm", to_string(kAllNorms[i])},
                         {"median", summary[i].median},
                         {"iqr", summary[i].iqr},
                         {"count", summary[i].count}});
    }
    j["failures"][to_string(kind)] = report.failures.at(kind);
    for (std::size_t i = 0; i < kAllNorms.size(); ++i)
      j["values"][to_string(kind)][to_string(kAllNorms[i])] =
          report.values.at(kind)[i];
  }
  j["results"] = results;
  return j;
}

std::string report_to_csv(const ErrorReport& report) {
  std::ostringstream out;
  out << "p,n,estimator,norm,median,iqr,count,failures\n";
  for (PilotKind kind : report.kinds) {
    const auto& summary = report.summary.at(kind);
    for (std::size_t i = 0; i < kAllNorms.size(); ++i) {
      out << report.scenario.p << ',' << report.scenario.n << ','
          << to_string(kind) << ',' << to_string(kAllNorms[i]) << ','
          << format_g17(summary[i].median) << ',' << format_g17(summary[i].iqr)
          << ',' << summary[i].count << ',' << report.failures.at(kind) << '\n';
    }
  }
  return out.str();
}

std::string ratio_csv(const std::vector<ErrorReport>& reports) {
  std::ostringstream out;
  out << "p,norm,robust_over_sample,kendall_over_sample\n";
  for (const auto& report : reports) {
    for (const RatioRow& row : ratio_report(report)) {
      out << report.scenario.p << ',' << to_string(row.norm) << ','
          << format_g17(row.robust_over_sample) << ','
          << format_g17(row.kendall_over_sample) << '\n';
    }
  }
  return out.str();
}

}  // namespace robustcov
