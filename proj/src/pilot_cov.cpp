#include "robustcov/pilot_cov.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "robustcov/errors.hpp"
#include "robustcov/parallel.hpp"

namespace robustcov {

const char* to_string(PilotKind kind) {
  switch (kind) {
    case PilotKind::Robust: return "robust";
    case PilotKind::Sample: return "sample";
    case PilotKind::Kendall: return "kendall";
  }
  throw InvalidInputError("to_string: unknown PilotKind");
}

PilotKind pilot_kind_from_string(std::string_view name) {
  if (name == "robust") return PilotKind::Robust;
  if (name == "sample") return PilotKind::Sample;
  if (name == "kendall") return PilotKind::Kendall;
  throw InvalidInputError("unknown pilot kind: " + std::string(name));
}

void validate_panel(const Matrix& Z, const char* who) {
  if (Z.rows() < 2)
    throw InvalidInputError(std::string(who) + ": need at least 2 observations");
  if (Z.cols() < 1)
    throw InvalidInputError(std::string(who) + ": need at least 1 column");
  if (!Z.allFinite())
    throw InvalidInputError(std::string(who) + ": non-finite entry in panel");
}

Matrix sample_cov(const Matrix& Z, bool center) {
  validate_panel(Z, "sample_cov");
  const double n = static_cast<double>(Z.rows());
  if (!center) {
    Matrix m = Z.transpose() * Z / n;
    return ((m + m.transpose()) / 2.0).eval();
  }
  Matrix centered = Z.rowwise() - Z.colwise().mean();
  Matrix m = centered.transpose() * centered / n;
  return ((m + m.transpose()) / 2.0).eval();
}

namespace {

/// Robust location of every column with the tuned rule at beta = 1.
Vector robust_column_centers(const Matrix& Z, const HuberConfig& config,
                             std::vector<std::string>* warnings) {
  const Index d = Z.cols();
  const auto n = static_cast<std::size_t>(Z.rows());
  Vector centers(d);
  std::vector<std::string> warn(static_cast<std::size_t>(d));
  parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
    std::span<const double> col(Z.col(static_cast<Index>(j)).data(), n);
    double alpha = choose_alpha_tuned(col, 1.0);
    LocationEstimate est = huber_location(col, alpha, config);
    centers[static_cast<Index>(j)] = est.value;
    if (!est.converged)
      warn[j] = "column " + std::to_string(j) +
                ": centering solver stopped at score " +
                std::to_string(est.final_score);
  });
  if (warnings)
    for (auto& w : warn)
      if (!w.empty()) warnings->push_back(std::move(w));
  return centers;
}

}  // namespace

PilotResult robust_cov(const Matrix& Z, const HuberConfig& config, bool center) {
  validate_panel(Z, "robust_cov");
  config.validate();
  const Index d = Z.cols();
  const auto n = static_cast<std::size_t>(Z.rows());

  PilotResult out;
  Matrix X = Z;
  if (center) {
    Vector centers = robust_column_centers(Z, config, &out.warnings);
    X.rowwise() -= centers.transpose();
  }

  std::vector<std::pair<Index, Index>> entries;
  entries.reserve(static_cast<std::size_t>(d * (d + 1) / 2));
  for (Index j = 0; j < d; ++j)
    for (Index k = j; k < d; ++k) entries.emplace_back(j, k);

  Matrix cov(d, d);
  std::vector<std::string> warn(entries.size());
  parallel_for(entries.size(), [&](std::size_t e) {
    const auto [j, k] = entries[e];
    std::vector<double> prod(n);
    for (std::size_t t = 0; t < n; ++t)
      prod[t] = X(static_cast<Index>(t), j) * X(static_cast<Index>(t), k);
    double beta = (j == k) ? config.beta_diag : config.beta_offdiag;
    double alpha = choose_alpha_tuned(prod, beta);
    LocationEstimate est = huber_location(prod, alpha, config);
    cov(j, k) = est.value;
    cov(k, j) = est.value;
    if (!est.converged)
      warn[e] = "entry (" + std::to_string(j) + "," + std::to_string(k) +
                "): solver stopped at score " + std::to_string(est.final_score);
  });
  for (auto& w : warn)
    if (!w.empty()) out.warnings.push_back(std::move(w));
  out.cov = std::move(cov);
  return out;
}

Matrix kendall_tau_matrix(const Matrix& Z) {
  validate_panel(Z, "kendall_tau_matrix");
  const Index d = Z.cols();
  const Index n = Z.rows();

  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(d * (d - 1) / 2));
  for (Index j = 0; j < d; ++j)
    for (Index k = j + 1; k < d; ++k) pairs.emplace_back(j, k);

  Matrix tau = Matrix::Identity(d, d);
  const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
  parallel_for(pairs.size(), [&](std::size_t e) {
    const auto [j, k] = pairs[e];
    std::int64_t s = 0;
    for (Index a = 0; a < n; ++a) {
      for (Index b = a + 1; b < n; ++b) {
        double dj = Z(a, j) - Z(b, j);
        double dk = Z(a, k) - Z(b, k);
        int sj = (dj > 0.0) - (dj < 0.0);
        int sk = (dk > 0.0) - (dk < 0.0);
        s += sj * sk;
      }
    }
    double t = 2.0 * static_cast<double>(s) / denom;
    tau(j, k) = t;
    tau(k, j) = t;
  });
  return tau;
}

Matrix kendall_corr(const Matrix& tau) {
  if (tau.rows() != tau.cols())
    throw InvalidInputError("kendall_corr: matrix must be square");
  if (!tau.allFinite())
    throw InvalidInputError("kendall_corr: non-finite entry");
  if ((tau.array().abs() > 1.0 + 1e-12).any())
    throw InvalidInputError("kendall_corr: entries must lie in [-1,1]");
  Matrix r = (std::numbers::pi / 2.0 * tau.array().min(1.0).max(-1.0))
                 .sin()
                 .matrix();
  r.diagonal().setOnes();
  return ((r + r.transpose()) / 2.0).eval();
}

ScaleDiag robust_scale_diag(const Matrix& Z, const HuberConfig& config) {
  validate_panel(Z, "robust_scale_diag");
  config.validate();
  const Index d = Z.cols();
  const auto n = static_cast<std::size_t>(Z.rows());

  ScaleDiag out;
  out.sigma.resize(d);
  std::vector<char> bad(static_cast<std::size_t>(d), 0);
  parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
    std::vector<double> sq(n);
    for (std::size_t t = 0; t < n; ++t) {
      double z = Z(static_cast<Index>(t), static_cast<Index>(j));
      sq[t] = z * z;
    }
    double alpha = choose_alpha_tuned(sq, config.beta_diag);
    LocationEstimate est = huber_location(sq, alpha, config);
    if (est.value > 0.0) {
      out.sigma[static_cast<Index>(j)] = std::sqrt(est.value);
    } else {
      out.sigma[static_cast<Index>(j)] = 0.0;
      bad[j] = 1;
    }
  });
  for (std::size_t j = 0; j < bad.size(); ++j)
    if (bad[j]) out.flagged.push_back(static_cast<Index>(j));
  return out;
}

PilotResult kendall_cov(const Matrix& Z, const HuberConfig& config) {
  ScaleDiag scales = robust_scale_diag(Z, config);
  Matrix corr = kendall_corr(kendall_tau_matrix(Z));
  PilotResult out;
  out.cov = scales.sigma.asDiagonal() * corr * scales.sigma.asDiagonal();
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  for (Index j : scales.flagged)
    out.warnings.push_back("column " + std::to_string(j) +
                           ": nonpositive robust second moment, scale set to 0");
  return out;
}

PilotResult pilot(const Matrix& Z, PilotKind kind, const HuberConfig& config,
                  bool center) {
  switch (kind) {
    case PilotKind::Robust:
      return robust_cov(Z, config, center);
    case PilotKind::Sample:
      return {sample_cov(Z, center), {}};
    case PilotKind::Kendall: {
      if (!center) return kendall_cov(Z, config);
      validate_panel(Z, "pilot");
      config.validate();
      PilotResult out;
      Vector centers = robust_column_centers(Z, config, &out.warnings);
      Matrix X = Z.rowwise() - centers.transpose();
      PilotResult k = kendall_cov(X, config);
      out.cov = std::move(k.cov);
      for (auto& w : k.warnings) out.warnings.push_back(std::move(w));
      return out;
    }
  }
  throw InvalidInputError("pilot: unknown PilotKind");
}

}  // namespace robustcov
