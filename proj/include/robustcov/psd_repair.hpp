#pragma once

#include "robustcov/types.hpp"

namespace robustcov {

struct RepairResult {
  Matrix repaired;
  /// Achieved max-norm distance to the input.
  double t_star = 0.0;
  /// Total alternating-projection rounds across all feasibility probes.
  int iterations = 0;
  /// Smallest eigenvalue of `repaired`.
  double certificate_min_eig = 0.0;
  /// False when an iteration budget ran out before the bisection bracket
  /// closed to gap_tol; the result is then the best feasible point found.
  bool certified = true;
};

/// Nearest positive-semidefinite matrix in the entrywise max norm, computed
/// by bisection on the distance t with feasibility probed by alternating
/// projections between the PSD cone (eigenvalue clipping) and the box
/// {M : |M - sigma|_max <= t} (entrywise clamping). A probe declares t
/// feasible when the sequence reaches a point of the box whose minimum
/// eigenvalue is >= -eig_tol. The upper bracket starts at the distance of the
/// eigenvalue-clipped matrix, which is always feasible, and failed probes
/// still tighten it: an in-box iterate with minimum eigenvalue -d plus d on
/// the diagonal is a PSD point at distance at most t + d, so the least
/// deficient iterate of a failed probe is kept as a feasibility witness.
///
/// gap_tol < 0 selects the default 1e-6 * (1 + |sigma|_max).
RepairResult nearest_psd_maxnorm(const Matrix& sigma, double eig_tol = 1e-8,
                                 double gap_tol = -1.0,
                                 int max_proj_iters = 200,
                                 int max_bisect_steps = 60);

/// Test predicate: |repaired - sigma_true|_max <= 2 |sigma_hat -
/// sigma_true|_max + slack, with slack defaulting to
/// 1e-6 * (1 + |sigma_hat|_max). Holds exactly (slack 0) for the true
/// max-norm minimizer; the slack absorbs the approximate solver.
bool doubling_bound_check(const Matrix& sigma_hat, const Matrix& sigma_true,
                          const Matrix& repaired, double slack = -1.0);

}  // namespace robustcov
