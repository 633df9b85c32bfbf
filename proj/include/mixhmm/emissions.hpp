#ifndef MIXHMM_EMISSIONS_HPP
#define MIXHMM_EMISSIONS_HPP

#include <optional>
#include <span>
#include <utility>

#include "mixhmm/types.hpp"
#include "mixhmm/rng.hpp"

namespace mixhmm {

// Numerical floors applied during estimation so that log densities stay
// finite; tests probe these boundaries.
inline constexpr double kEpsilonFloor = 1e-10;
inline constexpr double kGammaParamFloor = 1e-8;
inline constexpr double kGammaParamCeil = 1e8;

/// Zero-inflated gamma state distribution: point mass epsilon at zero mixed
/// with Gamma(shape, rate) on the positive axis.
struct ZigParams {
  double epsilon = 0.0;
  double shape = 1.0;
  double rate = 1.0;
};

void validate(const ZigParams& p);

/// Log density/mass at y >= 0; -inf where the mass is exactly zero.
double zig_log_density(double y, const ZigParams& p);

/// Mean (1 - epsilon) * shape / rate.
double zig_mean(const ZigParams& p);

double zig_sample(const ZigParams& p, Rng& rng);

struct GammaEstimate {
  double shape = 0.0;
  double rate = 0.0;
  int iterations = 0;
};

/// Maximizer of sum_t w_t * log gamma_density(y_t; shape, rate) over strictly
/// positive values. Newton iteration on log(shape) from the moment estimate;
/// rate is profiled out as shape * W / S1.
GammaEstimate weighted_gamma_mle(
    std::span<const double> values, std::span<const double> weights,
    std::optional<std::pair<double, double>> init = std::nullopt);

/// Same solver driven by the sufficient statistics W = sum w,
/// S1 = sum w*y, S2 = sum w*log(y) of the positive observations.
GammaEstimate weighted_gamma_mle_from_stats(
    double total_weight, double weighted_sum, double weighted_log_sum,
    std::optional<std::pair<double, double>> init = std::nullopt);

/// Weighted share of exact zeros: sum_t w_t * 1{y_t=0} / sum_t w_t.
double weighted_zero_fraction(std::span<const double> values,
                              std::span<const double> weights);

}  // namespace mixhmm

#endif
