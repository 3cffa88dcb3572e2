#include "robustcov/robust_location.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "robustcov/errors.hpp"
#include "robustcov/stats.hpp"

namespace robustcov {

void HuberConfig::validate() const {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw InvalidInputError("HuberConfig: v must be finite and >= 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("HuberConfig: delta must lie in (0,1)");
  if (!(beta_diag > 0.0) || !(beta_offdiag > 0.0))
    throw InvalidInputError("HuberConfig: beta multipliers must be positive");
  if (!(tol > 0.0)) throw InvalidInputError("HuberConfig: tol must be positive");
  if (max_iter < 1) throw InvalidInputError("HuberConfig: max_iter must be >= 1");
}

namespace {

void check_sample(std::span<const double> samples, const char* who) {
  if (samples.empty())
    throw InvalidInputError(std::string(who) + ": empty sample");
  for (double x : samples)
    if (!std::isfinite(x))
      throw InvalidInputError(std::string(who) + ": non-finite sample value");
}

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidInputError(std::string(who) + ": alpha must be finite and > 0");
}

}  // namespace

double huber_loss(double x, double alpha) {
  check_alpha(alpha, "huber_loss");
  if (!std::isfinite(x)) throw InvalidInputError("huber_loss: non-finite x");
  double a = std::abs(x);
  if (a <= alpha) return x * x;
  return 2.0 * alpha * a - alpha * alpha;
}

double huber_psi(double x, double alpha) {
  check_alpha(alpha, "huber_psi");
  if (!std::isfinite(x)) throw InvalidInputError("huber_psi: non-finite x");
  return 2.0 * std::clamp(x, -alpha, alpha);
}

double choose_alpha(std::int64_t n, double v, double delta, std::int64_t d) {
  if (n < 1) throw InvalidInputError("choose_alpha: n must be >= 1");
  if (d < 1) throw InvalidInputError("choose_alpha: d must be >= 1");
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidInputError("choose_alpha: v must be finite and > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("choose_alpha: delta must lie in (0,1)");
  double logterm =
      2.0 * std::log(static_cast<double>(d)) - std::log(delta);
  if (!(logterm > 0.0))
    throw InvalidInputError("choose_alpha: log(d^2/delta) must be positive");
  return std::sqrt(static_cast<double>(n) * v * v / logterm);
}

double choose_alpha_tuned(std::span<const double> samples, double beta) {
  check_sample(samples, "choose_alpha_tuned");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw InvalidInputError("choose_alpha_tuned: beta must be finite and > 0");
  double vhat = variance(samples);
  if (vhat <= 0.0) {
    return 1e-6 * (1.0 + std::abs(mean(samples)));
  }
  return beta * std::sqrt(static_cast<double>(samples.size()) * vhat / 2.0);
}

LocationEstimate huber_location(std::span<const double> samples, double alpha,
                                const HuberConfig& config) {
  check_sample(samples, "huber_location");
  check_alpha(alpha, "huber_location");
  config.validate();

  const std::size_t n = samples.size();
  const double nd = static_cast<double>(n);
  const double score_tol = config.tol * nd * std::max(1.0, alpha);

  // The score S(mu) = sum_t psi(x_t - mu) is continuous, piecewise linear and
  // nonincreasing in mu, with S(min x) >= 0 >= S(max x), so the root is
  // bracketed by the sample range throughout.
  auto score = [&](double mu, int* inside_count = nullptr) {
    double s = 0.0;
    int inside = 0;
    for (double x : samples) {
      double r = x - mu;
      if (r > alpha) {
        s += 2.0 * alpha;
      } else if (r < -alpha) {
        s -= 2.0 * alpha;
      } else {
        s += 2.0 * r;
        ++inside;
      }
    }
    if (inside_count) *inside_count = inside;
    return s;
  };

  double lo = *std::min_element(samples.begin(), samples.end());
  double hi = *std::max_element(samples.begin(), samples.end());
  double mu = median(samples);

  LocationEstimate out;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    int inside = 0;
    double s = score(mu, &inside);
    out.value = mu;
    out.iterations = iter;
    out.final_score = s;
    if (std::abs(s) <= score_tol) {
      out.converged = true;
      return out;
    }
    if (s > 0.0) {
      lo = mu;  // root lies to the right
    } else {
      hi = mu;
    }
    double next;
    if (inside > 0) {
      next = mu + s / (2.0 * static_cast<double>(inside));
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    } else {
      next = 0.5 * (lo + hi);
    }
    if (next == mu) {  // bracket exhausted at double precision
      break;
    }
    mu = next;
  }
  out.converged = std::abs(out.final_score) <= score_tol;
  return out;
}

LocationEstimate catoni_location(std::span<const double> samples, double alpha) {
  check_sample(samples, "catoni_location");
  check_alpha(alpha, "catoni_location");

  const std::size_t n = samples.size();
  const double nd = static_cast<double>(n);

  auto influence = [&](double mu) {
    double s = 0.0;
    for (double x : samples) {
      double z = (x - mu) / alpha;
      double a = std::abs(z);
      double h = std::log1p(a + 0.5 * a * a);
      s += z >= 0.0 ? h : -h;
    }
    return s;
  };

  double lo = *std::min_element(samples.begin(), samples.end());
  double hi = *std::max_element(samples.begin(), samples.end());

  LocationEstimate out;
  if (lo == hi) {
    out.value = lo;
    out.iterations = 0;
    out.converged = true;
    out.final_score = 0.0;
    return out;
  }

  // The influence sum is continuous and strictly decreasing in mu, so plain
  // bisection on the sample range converges unconditionally.
  int iter = 0;
  double mid = 0.5 * (lo + hi);
  double s = influence(mid);
  const int max_steps = 300;
  while (iter < max_steps) {
    ++iter;
    if (std::abs(s) <= 1e-12 * nd) break;
    if (s > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    double next = 0.5 * (lo + hi);
    if (next == mid || next <= lo || next >= hi) break;
    mid = next;
    s = influence(mid);
  }
  out.value = mid;
  out.iterations = iter;
  out.final_score = s;
  out.converged = std::abs(s) <= 1e-10 * nd;
  return out;
}

double median_of_means(std::span<const double> samples, std::int64_t k) {
  check_sample(samples, "median_of_means");
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  if (k < 1 || k > n)
    throw InvalidInputError("median_of_means: k must lie in [1, n]");

  const std::int64_t base = n / k;
  const std::int64_t rem = n % k;
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(k));
  std::size_t pos = 0;
  for (std::int64_t g = 0; g < k; ++g) {
    const std::int64_t size = base + (g < rem ? 1 : 0);
    double acc = 0.0;
    for (std::int64_t j = 0; j < size; ++j) acc += samples[pos++];
    means.push_back(acc / static_cast<double>(size));
  }
  return median(means);
}

std::int64_t choose_k_mom(std::int64_t d, double delta) {
  if (d < 1) throw InvalidInputError("choose_k_mom: d must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("choose_k_mom: delta must lie in (0,1)");
  double k = std::ceil(4.5 * std::log(static_cast<double>(d) / delta));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(k));
}

}  // namespace robustcov
