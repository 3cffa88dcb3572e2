// Command-line front end: estimate | simulate | backtest | diagnose |
// repair-psd. Thin bindings over the library; all numeric work happens in
// library calls and outputs are written at full precision.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustcov/errors.hpp"
#include "robustcov/factor_model.hpp"
#include "robustcov/matrix_io.hpp"
#include "robustcov/parallel.hpp"
#include "robustcov/pilot_cov.hpp"
#include "robustcov/psd_repair.hpp"
#include "robustcov/risk_backtest.hpp"
#include "robustcov/sim_lab.hpp"

namespace rc = robustcov;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartialFailure = 4;

void require_file(const std::string& path) {
  if (!fs::exists(path))
    throw rc::IngestionError("input file not found: " + path);
  if (fs::is_directory(path))
    throw rc::IngestionError("input path is a directory: " + path);
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw rc::IngestionError("cannot create output directory " + out + ": " +
                             ec.message());
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f)
    throw rc::IngestionError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

json huber_to_json(const rc::HuberConfig& c) {
  return {{"v", c.v},           {"delta", c.delta},
          {"beta_diag", c.beta_diag}, {"beta_offdiag", c.beta_offdiag},
          {"tol", c.tol},       {"max_iter", c.max_iter}};
}

json threshold_to_json(const rc::ThresholdSpec& s) {
  return {{"rule", rc::to_string(s.rule)},
          {"c_tau", s.c_tau},
          {"scad_a", s.scad_a},
          {"eta", s.eta}};
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const char* what) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw rc::IngestionError(std::string(what) + ": unknown key '" +
                               item.key() + "'");
}

rc::HuberConfig huber_from_json(const json& j) {
  reject_unknown(j, {"v", "delta", "beta_diag", "beta_offdiag", "tol",
                     "max_iter"},
                 "huber config");
  rc::HuberConfig c;
  if (j.contains("v")) c.v = j.at("v").get<double>();
  if (j.contains("delta")) c.delta = j.at("delta").get<double>();
  if (j.contains("beta_diag")) c.beta_diag = j.at("beta_diag").get<double>();
  if (j.contains("beta_offdiag"))
    c.beta_offdiag = j.at("beta_offdiag").get<double>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
  return c;
}

rc::ThresholdSpec threshold_from_json(const json& j) {
  reject_unknown(j, {"rule", "c_tau", "scad_a", "eta"}, "threshold config");
  rc::ThresholdSpec s;
  if (j.contains("rule"))
    s.rule = rc::shrinkage_rule_from_string(j.at("rule").get<std::string>());
  if (j.contains("c_tau")) s.c_tau = j.at("c_tau").get<double>();
  if (j.contains("scad_a")) s.scad_a = j.at("scad_a").get<double>();
  if (j.contains("eta")) s.eta = j.at("eta").get<double>();
  return s;
}

std::vector<rc::PilotKind> pilots_from_names(const std::vector<std::string>& names) {
  std::vector<rc::PilotKind> kinds;
  for (const auto& n : names) kinds.push_back(rc::pilot_kind_from_string(n));
  if (kinds.empty())
    throw rc::InvalidInputError("need at least one pilot kind");
  return kinds;
}

json load_json_file(const std::string& path, const char* what) {
  require_file(path);
  std::ifstream f(path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw rc::IngestionError(std::string(what) + ": cannot parse " + path +
                             ": " + e.what());
  }
  return j;
}

struct EstimateArgs {
  std::string returns_path;
  std::string factors_path;
  std::string out = "out";
  std::string pilot = "robust";
  std::string center = "huber";
  std::string rule = "soft";
  double c_tau = 2.0;
  double scad_a = 3.7;
  double eta = 1.0;
  double beta_diag = 5.0;
  double beta_offdiag = 0.5;
  bool repair = false;
  bool no_precision = false;
};

int cmd_estimate(const EstimateArgs& args) {
  require_file(args.returns_path);
  require_file(args.factors_path);
  fs::path dir = prepare_out_dir(args.out);

  rc::Panels panels = rc::load_panels(args.returns_path, args.factors_path);
  rc::PilotKind kind = rc::pilot_kind_from_string(args.pilot);
  rc::CenterMode center = rc::center_mode_from_string(args.center);

  rc::HuberConfig huber;
  huber.beta_diag = args.beta_diag;
  huber.beta_offdiag = args.beta_offdiag;
  rc::ThresholdSpec spec;
  spec.rule = rc::shrinkage_rule_from_string(args.rule);
  spec.c_tau = args.c_tau;
  spec.scad_a = args.scad_a;
  spec.eta = args.eta;

  rc::Panels centered = rc::center_panels(panels, center, huber);
  rc::FactorCovariance est = rc::estimate_factor_cov(
      centered.returns.values, centered.factors.values, kind, spec, huber);

  const auto& names = panels.returns.assets;
  rc::write_matrix_csv((dir / "sigma_hat.csv").string(), est.total, names);
  rc::write_matrix_csv((dir / "sigma_u.csv").string(),
                       est.residual_thresholded, names);
  rc::write_matrix_csv((dir / "lowrank.csv").string(), est.lowrank, names);

  json meta;
  meta["subcommand"] = "estimate";
  meta["inputs"] = {{"returns", args.returns_path},
                    {"factors", args.factors_path}};
  meta["pilot"] = rc::to_string(kind);
  meta["center"] = rc::to_string(center);
  meta["threshold"] = threshold_to_json(spec);
  meta["huber"] = huber_to_json(huber);
  meta["tau_used"] = est.tau_used;
  meta["surviving_offdiag"] = est.surviving_offdiag;
  meta["n"] = centered.returns.values.rows();
  meta["p"] = centered.returns.values.cols();
  meta["r"] = centered.factors.values.cols();
  meta["warnings"] = est.warnings;
  meta["alpha_policy"] =
      "tuned rule: alpha = beta * sqrt(n * Vhat / 2); beta_diag on squares, "
      "beta_offdiag on cross products, beta = 1 for centering";

  bool precision_written = false;
  std::string precision_note;
  if (!args.no_precision) {
    try {
      rc::Matrix prec =
          rc::precision_woodbury(est.blocks, est.residual_thresholded);
      rc::write_matrix_csv((dir / "precision.csv").string(), prec, names);
      precision_written = true;
    } catch (const rc::NeedsPsdRepairError& e) {
      if (args.repair) {
        rc::RepairResult rep = rc::nearest_psd_maxnorm(est.residual_thresholded);
        rc::Matrix prec = rc::precision_with_repair(est.blocks,
                                                    est.residual_thresholded);
        rc::write_matrix_csv((dir / "precision.csv").string(), prec, names);
        rc::write_matrix_csv((dir / "sigma_u_repaired.csv").string(),
                             rep.repaired, names);
        meta["repair"] = {{"t_star", rep.t_star},
                          {"iterations", rep.iterations},
                          {"certificate_min_eig", rep.certificate_min_eig},
                          {"certified", rep.certified}};
        precision_written = true;
      } else {
        precision_note = e.what();
      }
    }
  }
  meta["precision_written"] = precision_written;
  if (!precision_note.empty()) meta["precision_skipped_because"] = precision_note;
  write_json(dir / "metadata.json", meta);

  std::printf("estimate: wrote %s (p=%lld, pilot=%s, tau=%.6g)\n",
              dir.string().c_str(), static_cast<long long>(est.total.rows()),
              rc::to_string(kind), est.tau_used);
  return kExitOk;
}

struct SimulateArgs {
  std::string scenario_path;
  std::string out = "out";
  std::vector<std::string> pilots = {"robust", "sample"};
  int reps_override = -1;
  long long seed_override = -1;
  double max_failure_rate = 0.2;
  std::string rule = "soft";
  double c_tau = 2.0;
};

int cmd_simulate(const SimulateArgs& args) {
  json sj = load_json_file(args.scenario_path, "scenario");
  rc::SimScenario sc = rc::scenario_from_json(sj);
  if (args.reps_override > 0) sc.reps = args.reps_override;
  if (args.seed_override >= 0)
    sc.seed = static_cast<std::uint64_t>(args.seed_override);
  sc.validate();

  std::vector<rc::PilotKind> kinds = pilots_from_names(args.pilots);
  rc::ThresholdSpec spec;
  spec.rule = rc::shrinkage_rule_from_string(args.rule);
  spec.c_tau = args.c_tau;
  rc::HuberConfig huber;

  fs::path dir = prepare_out_dir(args.out);
  rc::ErrorReport report = rc::run_scenario(sc, kinds, spec, huber);

  rc::write_text_file((dir / "report.csv").string(),
                      rc::report_to_csv(report));
  write_json(dir / "report.json", rc::report_to_json(report));
  bool have_sample = report.summary.count(rc::PilotKind::Sample) > 0;
  if (have_sample)
    rc::write_text_file((dir / "ratios.csv").string(), rc::ratio_csv({report}));

  json meta;
  meta["subcommand"] = "simulate";
  meta["scenario"] = rc::scenario_to_json(sc);
  meta["pilots"] = args.pilots;
  meta["threshold"] = threshold_to_json(spec);
  meta["huber"] = huber_to_json(huber);
  meta["max_failure_rate"] = args.max_failure_rate;
  json failures;
  int worst_failures = 0;
  for (const auto& [kind, count] : report.failures) {
    failures[rc::to_string(kind)] = count;
    worst_failures = std::max(worst_failures, count);
  }
  meta["failures"] = failures;
  write_json(dir / "metadata.json", meta);

  double failure_rate =
      static_cast<double>(worst_failures) / static_cast<double>(sc.reps);
  std::printf("simulate: %d reps, worst failure rate %.3f, wrote %s\n",
              sc.reps, failure_rate, dir.string().c_str());
  if (failure_rate > args.max_failure_rate) {
    std::fprintf(stderr,
                 "simulate: failure rate %.3f exceeds threshold %.3f\n",
                 failure_rate, args.max_failure_rate);
    return kExitPartialFailure;
  }
  return kExitOk;
}

struct BacktestArgs {
  std::string returns_path;
  std::string factors_path;
  std::string config_path;
  std::string out = "out";
  int window_override = -1;
  int n_weights_override = -1;
  long long seed_override = -1;
  double max_skip_rate = 0.2;
};

rc::BacktestConfig backtest_config_from_json(const json& j) {
  reject_unknown(j,
                 {"window", "exposures", "n_weights", "seed", "pilots",
                  "center", "threshold", "huber"},
                 "backtest config");
  rc::BacktestConfig c;
  if (j.contains("window")) c.window = j.at("window").get<int>();
  if (j.contains("exposures"))
    c.exposures = j.at("exposures").get<std::vector<double>>();
  if (j.contains("n_weights")) c.n_weights = j.at("n_weights").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("pilots"))
    c.kinds = pilots_from_names(j.at("pilots").get<std::vector<std::string>>());
  if (j.contains("center"))
    c.center = rc::center_mode_from_string(j.at("center").get<std::string>());
  if (j.contains("threshold"))
    c.threshold = threshold_from_json(j.at("threshold"));
  if (j.contains("huber")) c.huber = huber_from_json(j.at("huber"));
  return c;
}

int cmd_backtest(const BacktestArgs& args) {
  require_file(args.returns_path);
  require_file(args.factors_path);

  rc::BacktestConfig config;
  if (!args.config_path.empty())
    config = backtest_config_from_json(
        load_json_file(args.config_path, "backtest config"));
  if (args.window_override > 0) config.window = args.window_override;
  if (args.n_weights_override > 0) config.n_weights = args.n_weights_override;
  if (args.seed_override >= 0)
    config.seed = static_cast<std::uint64_t>(args.seed_override);

  rc::Panels panels = rc::load_panels(args.returns_path, args.factors_path);
  fs::path dir = prepare_out_dir(args.out);

  rc::BacktestRun run = rc::run_backtest(panels, config);

  std::string csv = "exposure,weight_id";
  for (rc::PilotKind kind : run.rolling.kinds)
    csv += std::string(",r_") + rc::to_string(kind);
  csv += "\n";
  for (const auto& rec : run.risk.records) {
    csv += rc::format_g17(rec.exposure) + "," + std::to_string(rec.weight_id);
    for (rc::PilotKind kind : run.rolling.kinds)
      csv += "," + rc::format_g17(rec.risk_error.at(kind));
    csv += "\n";
  }
  rc::write_text_file((dir / "risk_errors.csv").string(), csv);

  json summary;
  summary["dates_used"] = run.risk.dates_used;
  summary["skipped_dates"] = run.rolling.skipped;
  for (const auto& [exposure, fraction] : run.risk.win_fraction)
    summary["win_fraction"][rc::format_g17(exposure)] = fraction;
  write_json(dir / "summary.json", summary);

  json meta;
  meta["subcommand"] = "backtest";
  meta["inputs"] = {{"returns", args.returns_path},
                    {"factors", args.factors_path},
                    {"config", args.config_path}};
  json pilots = json::array();
  for (rc::PilotKind kind : config.kinds) pilots.push_back(rc::to_string(kind));
  meta["config"] = {{"window", config.window},
                    {"exposures", config.exposures},
                    {"n_weights", config.n_weights},
                    {"seed", config.seed},
                    {"pilots", pilots},
                    {"center", rc::to_string(config.center)},
                    {"threshold", threshold_to_json(config.threshold)},
                    {"huber", huber_to_json(config.huber)}};
  meta["max_skip_rate"] = args.max_skip_rate;
  write_json(dir / "metadata.json", meta);

  std::size_t attempted = run.rolling.estimates.size() + run.rolling.skipped.size();
  double skip_rate = attempted == 0
                         ? 0.0
                         : static_cast<double>(run.rolling.skipped.size()) /
                               static_cast<double>(attempted);
  std::printf("backtest: %zu evaluation dates (%zu skipped), wrote %s\n",
              run.rolling.estimates.size(), run.rolling.skipped.size(),
              dir.string().c_str());
  if (skip_rate > args.max_skip_rate) {
    std::fprintf(stderr, "backtest: skip rate %.3f exceeds threshold %.3f\n",
                 skip_rate, args.max_skip_rate);
    return kExitPartialFailure;
  }
  return kExitOk;
}

struct DiagnoseArgs {
  std::string returns_path;
  std::string out = "out";
  std::string asset;  // empty = pool all columns
  std::vector<double> t_dfs = {2.0, 4.0, 6.0};
  int bins = 30;
};

std::string qq_csv(const rc::QqTable& table) {
  std::string s = "theoretical,empirical\n";
  for (std::size_t i = 0; i < table.theoretical.size(); ++i)
    s += rc::format_g17(table.theoretical[i]) + "," +
         rc::format_g17(table.empirical[i]) + "\n";
  return s;
}

int cmd_diagnose(const DiagnoseArgs& args) {
  require_file(args.returns_path);
  fs::path dir = prepare_out_dir(args.out);

  // Peek at the header: a leading `date` column selects the dated-panel
  // reader, anything else is a plain numeric matrix.
  bool dated = false;
  {
    std::ifstream f(args.returns_path);
    std::string header;
    if (f && std::getline(f, header)) {
      auto fields = rc::split_csv_line(header);
      dated = !fields.empty() && fields[0] == "date";
    }
  }
  std::vector<std::string> col_names;
  rc::Matrix values;
  if (dated) {
    rc::Panels panels = rc::load_panels(args.returns_path, args.returns_path);
    values = std::move(panels.returns.values);
    col_names = std::move(panels.returns.assets);
  } else {
    rc::NamedMatrix panel = rc::read_matrix_csv(args.returns_path);
    values = std::move(panel.values);
    col_names = std::move(panel.col_names);
  }

  std::vector<double> sample;
  if (args.asset.empty()) {
    sample.assign(values.data(), values.data() + values.size());
  } else {
    auto it = std::find(col_names.begin(), col_names.end(), args.asset);
    if (it == col_names.end())
      throw rc::InvalidInputError("diagnose: unknown asset '" + args.asset + "'");
    Eigen::Index col = it - col_names.begin();
    sample.assign(values.col(col).data(),
                  values.col(col).data() + values.rows());
  }

  rc::QqTable gauss = rc::qq_data(sample, rc::QqFamily::Gaussian);
  rc::write_text_file((dir / "qq_gaussian.csv").string(), qq_csv(gauss));
  json lines;
  lines["gaussian"] = {{"slope", gauss.slope}, {"intercept", gauss.intercept}};
  for (double df : args.t_dfs) {
    rc::QqTable t = rc::qq_data(sample, rc::QqFamily::StudentT, df);
    char name[64];
    std::snprintf(name, sizeof(name), "qq_t%g.csv", df);
    rc::write_text_file((dir / name).string(), qq_csv(t));
    char key[32];
    std::snprintf(key, sizeof(key), "t%g", df);
    lines[key] = {{"slope", t.slope}, {"intercept", t.intercept}};
  }

  rc::SpectrumReport spectrum = rc::spectrum_report(values, args.bins);
  std::string spec_csv = "k,eigenvalue\n";
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i)
    spec_csv += std::to_string(i + 1) + "," +
                rc::format_g17(spectrum.eigenvalues[i]) + "\n";
  rc::write_text_file((dir / "spectrum.csv").string(), spec_csv);

  std::string residue_csv = "K,residue_proportion\n";
  for (std::size_t k = 0; k < spectrum.residue_proportion.size(); ++k)
    residue_csv += std::to_string(k) + "," +
                   rc::format_g17(spectrum.residue_proportion[k]) + "\n";
  rc::write_text_file((dir / "residue.csv").string(), residue_csv);

  std::string hist_csv = "log10_lo,log10_hi,count\n";
  for (std::size_t b = 0; b < spectrum.bin_counts.size(); ++b)
    hist_csv += rc::format_g17(spectrum.bin_edges[b]) + "," +
                rc::format_g17(spectrum.bin_edges[b + 1]) + "," +
                std::to_string(spectrum.bin_counts[b]) + "\n";
  rc::write_text_file((dir / "spectrum_hist.csv").string(), hist_csv);

  json meta;
  meta["subcommand"] = "diagnose";
  meta["inputs"] = {{"returns", args.returns_path}};
  meta["asset"] = args.asset.empty() ? json("(pooled)") : json(args.asset);
  meta["t_dfs"] = args.t_dfs;
  meta["bins"] = args.bins;
  meta["sample_size"] = sample.size();
  meta["reference_lines"] = lines;
  write_json(dir / "metadata.json", meta);

  std::printf("diagnose: %zu observations, wrote %s\n", sample.size(),
              dir.string().c_str());
  return kExitOk;
}

struct RepairArgs {
  std::string matrix_path;
  std::string out = "out";
  double eig_tol = 1e-8;
  double gap_tol = -1.0;
};

int cmd_repair(const RepairArgs& args) {
  require_file(args.matrix_path);
  fs::path dir = prepare_out_dir(args.out);

  rc::NamedMatrix input = rc::read_matrix_csv(args.matrix_path);
  rc::RepairResult rep =
      rc::nearest_psd_maxnorm(input.values, args.eig_tol, args.gap_tol);
  rc::write_matrix_csv((dir / "repaired.csv").string(), rep.repaired,
                       input.col_names);

  json meta;
  meta["subcommand"] = "repair-psd";
  meta["inputs"] = {{"matrix", args.matrix_path}};
  meta["eig_tol"] = args.eig_tol;
  meta["gap_tol"] = args.gap_tol;
  meta["t_star"] = rep.t_star;
  meta["iterations"] = rep.iterations;
  meta["certificate_min_eig"] = rep.certificate_min_eig;
  meta["certified"] = rep.certified;
  write_json(dir / "metadata.json", meta);

  std::printf("repair-psd: t_star=%.6g, min eigenvalue %.3g, wrote %s\n",
              rep.t_star, rep.certificate_min_eig, dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust factor-model covariance estimation toolkit"};
  app.require_subcommand(1);

  EstimateArgs est;
  CLI::App* cest = app.add_subcommand(
      "estimate", "Estimate a factor-model covariance from return panels");
  cest->add_option("returns", est.returns_path, "Returns panel CSV")->required();
  cest->add_option("factors", est.factors_path, "Factors panel CSV")->required();
  cest->add_option("--out", est.out, "Output directory");
  cest->add_option("--pilot", est.pilot, "Pilot: robust|sample|kendall");
  cest->add_option("--center", est.center, "Centering: none|mean|huber");
  cest->add_option("--rule", est.rule,
                   "Shrinkage rule: hard|soft|scad|adaptive-lasso");
  cest->add_option("--c-tau", est.c_tau, "Threshold multiplier");
  cest->add_option("--scad-a", est.scad_a, "SCAD knee parameter");
  cest->add_option("--eta", est.eta, "Adaptive-lasso exponent");
  cest->add_option("--beta-diag", est.beta_diag,
                   "Truncation multiplier for squares");
  cest->add_option("--beta-offdiag", est.beta_offdiag,
                   "Truncation multiplier for cross products");
  cest->add_flag("--repair", est.repair,
                 "Repair a non-PSD residual before inverting");
  cest->add_flag("--no-precision", est.no_precision,
                 "Skip the precision matrix output");

  SimulateArgs sim;
  CLI::App* csim = app.add_subcommand("simulate", "Run a simulation scenario");
  csim->add_option("scenario", sim.scenario_path, "Scenario JSON")->required();
  csim->add_option("--out", sim.out, "Output directory");
  csim->add_option("--pilots", sim.pilots,
                   "Estimators to compare (robust sample kendall)");
  csim->add_option("--reps", sim.reps_override, "Override replication count");
  csim->add_option("--seed", sim.seed_override, "Override scenario seed");
  csim->add_option("--max-failure-rate", sim.max_failure_rate,
                   "Failure fraction above which the run exits nonzero");
  csim->add_option("--rule", sim.rule,
                   "Shrinkage rule: hard|soft|scad|adaptive-lasso");
  csim->add_option("--c-tau", sim.c_tau, "Threshold multiplier");

  BacktestArgs bt;
  CLI::App* cbt = app.add_subcommand(
      "backtest", "Rolling-window portfolio risk comparison");
  cbt->add_option("returns", bt.returns_path, "Returns panel CSV")->required();
  cbt->add_option("factors", bt.factors_path, "Factors panel CSV")->required();
  cbt->add_option("--config", bt.config_path, "Backtest config JSON");
  cbt->add_option("--out", bt.out, "Output directory");
  cbt->add_option("--window", bt.window_override, "Rolling window length");
  cbt->add_option("--n-weights", bt.n_weights_override,
                  "Random portfolios per exposure");
  cbt->add_option("--seed", bt.seed_override, "Weight-generation seed");
  cbt->add_option("--max-skip-rate", bt.max_skip_rate,
                  "Skipped-date fraction above which the run exits nonzero");

  DiagnoseArgs diag;
  CLI::App* cdiag = app.add_subcommand(
      "diagnose", "Heavy-tail Q-Q tables and covariance spectrum");
  cdiag->add_option("returns", diag.returns_path, "Returns panel CSV")->required();
  cdiag->add_option("--out", diag.out, "Output directory");
  cdiag->add_option("--asset", diag.asset,
                    "Asset column to inspect (default: pool all)");
  cdiag->add_option("--t-dfs", diag.t_dfs, "Student reference df values");
  cdiag->add_option("--bins", diag.bins, "Histogram bin count");

  RepairArgs rep;
  CLI::App* crep = app.add_subcommand(
      "repair-psd", "Nearest positive-semidefinite repair in max norm");
  crep->add_option("matrix", rep.matrix_path, "Symmetric matrix CSV")->required();
  crep->add_option("--out", rep.out, "Output directory");
  crep->add_option("--eig-tol", rep.eig_tol, "PSD feasibility tolerance");
  crep->add_option("--gap-tol", rep.gap_tol,
                   "Bisection gap tolerance (negative = automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (cest->parsed()) return cmd_estimate(est);
    if (csim->parsed()) return cmd_simulate(sim);
    if (cbt->parsed()) return cmd_backtest(bt);
    if (cdiag->parsed()) return cmd_diagnose(diag);
    if (crep->parsed()) return cmd_repair(rep);
    std::fprintf(stderr, "no subcommand selected\n");
    return kExitInput;
  } catch (const rc::InvalidInputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const rc::NeedsPsdRepairError& e) {
    std::fprintf(stderr, "numerical failure (try --repair): %s\n", e.what());
    return kExitNumerical;
  } catch (const rc::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}
