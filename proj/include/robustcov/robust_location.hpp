#pragma once

#include <cstdint>
#include <span>

namespace robustcov {

/// Tuning constants shared by the robust estimators.
struct HuberConfig {
  /// Variance proxy for the theory-driven truncation rule (choose_alpha).
  double v = 0.0;
  /// Exception probability for the theory-driven rules.
  double delta = 0.05;
  /// Tuned-rule multiplier for second-moment (diagonal) entries.
  double beta_diag = 5.0;
  /// Tuned-rule multiplier for cross-product (off-diagonal) entries.
  double beta_offdiag = 0.5;
  /// Convergence tolerance for the location solvers.
  double tol = 1e-10;
  /// Iteration cap for the location solvers.
  int max_iter = 100;

  void validate() const;
};

struct LocationEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Estimating-equation value at the returned point.
  double final_score = 0.0;
};

/// Huber loss with truncation level alpha: x^2 on [-alpha, alpha], the
/// continuation 2*alpha*|x| - alpha^2 outside. Continuously differentiable.
double huber_loss(double x, double alpha);

/// Derivative of huber_loss: 2*clamp(x, -alpha, alpha).
double huber_psi(double x, double alpha);

/// Truncation level sqrt(n * v^2 / log(d^2 / delta)) for estimating one of
/// d^2 entries from n samples with variance proxy v at exception level delta.
double choose_alpha(std::int64_t n, double v, double delta, std::int64_t d);

/// Data-driven truncation level beta * sqrt(n * V / 2), with V the population
/// variance of `samples`. A zero-variance sample gets a floor of
/// 1e-6 * (1 + |mean|) so downstream solvers stay well defined.
double choose_alpha_tuned(std::span<const double> samples, double beta);

/// Minimizer of sum_t huber_loss(x_t - mu, alpha) by a safeguarded Newton
/// iteration on the score, started at the sample median and bracketed by the
/// sample range. Requires finite alpha > 0 and a nonempty sample. Convergence
/// means |score| <= tol * n * max(1, alpha).
LocationEstimate huber_location(std::span<const double> samples, double alpha,
                                const HuberConfig& config = {});

/// Catoni's soft-truncated mean: the root of
/// sum_t h((x_t - mu) / alpha), h(x) = sign(x) * log(1 + |x| + x^2/2),
/// found by bisection on the sample range.
LocationEstimate catoni_location(std::span<const double> samples, double alpha);

/// Median of k group means. Groups are contiguous, sized floor(n/k), with the
/// remainder distributed one element per group from the front.
double median_of_means(std::span<const double> samples, std::int64_t k);

/// Group count ceil(4.5 * log(d / delta)) for median-of-means, floored at 1.
/// Pass d^2 for d-dimensional covariance problems.
std::int64_t choose_k_mom(std::int64_t d, double delta);

}  // namespace robustcov
