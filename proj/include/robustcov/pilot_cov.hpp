#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "robustcov/robust_location.hpp"
#include "robustcov/types.hpp"

namespace robustcov {

enum class PilotKind { Robust, Sample, Kendall };

const char* to_string(PilotKind kind);
PilotKind pilot_kind_from_string(std::string_view name);

/// A pilot covariance estimate plus any per-entry solver warnings. The matrix
/// is symmetric by construction; it is not necessarily positive semidefinite.
struct PilotResult {
  Matrix cov;
  std::vector<std::string> warnings;
};

/// Throws InvalidInputError unless Z is an n x d panel with n >= 2, d >= 1 and
/// all entries finite. Rows are observations.
void validate_panel(const Matrix& Z, const char* who);

/// Ordinary sample second-moment matrix Z'Z/n; subtracts column means first
/// when center is set (still dividing by n).
Matrix sample_cov(const Matrix& Z, bool center = false);

/// Entrywise robust second-moment matrix: entry (j,k) is the Huber location
/// estimate of the products z_tj * z_tk with the tuned truncation level
/// (beta_diag on the diagonal, beta_offdiag off it). When center is set, each
/// column is first shifted by its own robust location estimate (tuned rule at
/// beta = 1). Work is spread across worker threads per entry; output does not
/// depend on the schedule.
PilotResult robust_cov(const Matrix& Z, const HuberConfig& config = {},
                       bool center = false);

/// Exact Kendall rank correlation matrix, all O(n^2) pairs, ties contributing
/// zero, unit diagonal.
Matrix kendall_tau_matrix(const Matrix& Z);

/// Entrywise sin(pi/2 * tau) map from Kendall's tau to a correlation matrix.
Matrix kendall_corr(const Matrix& tau);

/// Robust marginal scales: sigma_j = sqrt(max(huber_loc(z_j^2), 0)) using the
/// tuned diagonal truncation level. Columns whose robust second moment came
/// out nonpositive are listed in `flagged` (their sigma is 0).
struct ScaleDiag {
  Vector sigma;
  std::vector<Index> flagged;
};
ScaleDiag robust_scale_diag(const Matrix& Z, const HuberConfig& config = {});

/// Rank-based pilot: D * kendall_corr(tau) * D with D the robust scale
/// diagonal. Flagged columns produce warnings.
PilotResult kendall_cov(const Matrix& Z, const HuberConfig& config = {});

/// Dispatch on PilotKind. With center set, Robust and Kendall shift each
/// column by its robust location first (ranks are shift-invariant, so for
/// Kendall only the scale diagonal is affected) and Sample subtracts column
/// means.
PilotResult pilot(const Matrix& Z, PilotKind kind,
                  const HuberConfig& config = {}, bool center = false);

}  // namespace robustcov
