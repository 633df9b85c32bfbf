#ifndef MIXHMM_SPECIAL_FUNCTIONS_HPP
#define MIXHMM_SPECIAL_FUNCTIONS_HPP

#include <cmath>

#include "mixhmm/types.hpp"

namespace mixhmm {

// Digamma and trigamma by upward recurrence to argument >= 10 followed by the
// Bernoulli asymptotic series; absolute error below 1e-13 on (0, inf).

template <class Scalar>
Scalar digamma(Scalar x) {
  if (!(x > Scalar(0))) throw InputError("digamma requires x > 0");
  Scalar acc = Scalar(0);
  while (x < Scalar(10)) {
    acc -= Scalar(1) / x;
    x += Scalar(1);
  }
  const Scalar w = Scalar(1) / (x * x);
  const Scalar series =
      w * (Scalar(1.0 / 12.0) -
           w * (Scalar(1.0 / 120.0) -
                w * (Scalar(1.0 / 252.0) -
                     w * (Scalar(1.0 / 240.0) -
                          w * (Scalar(1.0 / 132.0) -
                               w * Scalar(691.0 / 32760.0))))));
  return acc + std::log(x) - Scalar(0.5) / x - series;
}

template <class Scalar>
Scalar trigamma(Scalar x) {
  if (!(x > Scalar(0))) throw InputError("trigamma requires x > 0");
  Scalar acc = Scalar(0);
  while (x < Scalar(10)) {
    acc += Scalar(1) / (x * x);
    x += Scalar(1);
  }
  const Scalar w = Scalar(1) / (x * x);
  const Scalar series =
      (Scalar(1) +
       w * (Scalar(1.0 / 6.0) -
            w * (Scalar(1.0 / 30.0) -
                 w * (Scalar(1.0 / 42.0) -
                      w * (Scalar(1.0 / 30.0) -
                           w * (Scalar(5.0 / 66.0) -
                                w * Scalar(691.0 / 2730.0))))))) /
      x;
  return acc + Scalar(0.5) * w + series;
}

/// Log density of Gamma(shape a, rate b) at y > 0.
template <class Scalar>
Scalar gamma_log_density(Scalar y, Scalar shape, Scalar rate) {
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - Scalar(1)) * std::log(y) - rate * y;
}

}  // namespace mixhmm

#endif
