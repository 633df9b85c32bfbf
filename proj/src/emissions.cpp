#include "mixhmm/emissions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixhmm/special_functions.hpp"

namespace mixhmm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void validate(const ZigParams& p) {
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0))
    throw InputError("ZigParams: epsilon must lie in [0, 1]");
  if (!(p.shape > 0.0) || !std::isfinite(p.shape))
    throw InputError("ZigParams: shape must be positive and finite");
  if (!(p.rate > 0.0) || !std::isfinite(p.rate))
    throw InputError("ZigParams: rate must be positive and finite");
}

double zig_log_density(double y, const ZigParams& p) {
  if (!std::isfinite(y) || y < 0.0)
    throw InputError("zig_log_density: y must be finite and nonnegative");
  // y = 0 is the atom; the continuous part carries no mass there.
  if (y == 0.0) return p.epsilon > 0.0 ? std::log(p.epsilon) : kNegInf;
  if (p.epsilon >= 1.0) return kNegInf;
  return std::log1p(-p.epsilon) + gamma_log_density(y, p.shape, p.rate);
}

double zig_mean(const ZigParams& p) {
  return (1.0 - p.epsilon) * p.shape / p.rate;
}

double zig_sample(const ZigParams& p, Rng& rng) {
  if (rng.uniform() < p.epsilon) return 0.0;
  return rng.gamma(p.shape, p.rate);
}

GammaEstimate weighted_gamma_mle_from_stats(
    double total_weight, double weighted_sum, double weighted_log_sum,
    std::optional<std::pair<double, double>> init) {
  if (!(total_weight > 0.0))
    throw EstimationError("weighted_gamma_mle: total weight must be positive");
  if (!(weighted_sum > 0.0))
    throw EstimationError("weighted_gamma_mle: weighted sum must be positive");

  // s = log(weighted mean) - weighted mean of logs; zero iff all values equal.
  const double mean_log = weighted_log_sum / total_weight;
  const double log_mean = std::log(weighted_sum / total_weight);
  const double s = log_mean - mean_log;
  if (!(s > 1e-14)) {
    std::ostringstream msg;
    msg << "weighted_gamma_mle: degenerate sample (zero weighted variance, s="
        << s << ")";
    throw EstimationError(msg.str());
  }

  double shape;
  if (init && init->first > 0.0) {
    shape = std::clamp(init->first, kGammaParamFloor, kGammaParamCeil);
  } else {
    shape = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    shape = std::clamp(shape, kGammaParamFloor, kGammaParamCeil);
  }

  // Solve log(a) - digamma(a) = s by Newton on u = log(a); the left side is
  // strictly decreasing in a, so the root is unique.
  double u = std::log(shape);
  int iter = 0;
  for (; iter < 100; ++iter) {
    const double a = std::exp(u);
    const double f = std::log(a) - digamma(a) - s;
    const double fprime = 1.0 - a * trigamma(a);
    const double step = f / fprime;
    u -= step;
    u = std::clamp(u, std::log(kGammaParamFloor), std::log(kGammaParamCeil));
    if (std::abs(step) < 1e-10) break;
  }
  shape = std::clamp(std::exp(u), kGammaParamFloor, kGammaParamCeil);
  const double rate = std::clamp(shape * total_weight / weighted_sum,
                                 kGammaParamFloor, kGammaParamCeil);
  return {shape, rate, iter + 1};
}

GammaEstimate weighted_gamma_mle(
    std::span<const double> values, std::span<const double> weights,
    std::optional<std::pair<double, double>> init) {
  if (values.size() != weights.size())
    throw InputError("weighted_gamma_mle: values/weights size mismatch");
  double total_weight = 0.0;
  double weighted_sum = 0.0;
  double weighted_log_sum = 0.0;
  std::size_t carried = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = values[i];
    const double w = weights[i];
    if (!(y > 0.0) || !std::isfinite(y))
      throw InputError("weighted_gamma_mle: values must be strictly positive");
    if (w < 0.0 || !std::isfinite(w))
      throw InputError("weighted_gamma_mle: weights must be nonnegative");
    if (w == 0.0) continue;
    ++carried;
    total_weight += w;
    weighted_sum += w * y;
    weighted_log_sum += w * std::log(y);
  }
  if (carried < 2)
    throw EstimationError(
        "weighted_gamma_mle: need at least two positively weighted values");
  return weighted_gamma_mle_from_stats(total_weight, weighted_sum,
                                       weighted_log_sum, init);
}

double weighted_zero_fraction(std::span<const double> values,
                              std::span<const double> weights) {
  if (values.size() != weights.size())
    throw InputError("weighted_zero_fraction: values/weights size mismatch");
  double total = 0.0;
  double zeros = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0 || !std::isfinite(values[i]))
      throw InputError("weighted_zero_fraction: values must be nonnegative");
    total += weights[i];
    if (values[i] == 0.0) zeros += weights[i];
  }
  if (!(total > 0.0))
    throw InputError("weighted_zero_fraction: total weight must be positive");
  return zeros / total;
}

}  // namespace mixhmm
