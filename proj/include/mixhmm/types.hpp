#ifndef MIXHMM_TYPES_HPP
#define MIXHMM_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mixhmm {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

/// Bad data or bad arguments supplied by the caller.
struct InputError : std::invalid_argument {
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A numerical procedure could not produce a valid estimate.
struct EstimationError : std::runtime_error {
  explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An EM run collapsed (empty state or component); carries diagnostics.
struct DegenerateFitError : EstimationError {
  explicit DegenerateFitError(const std::string& msg) : EstimationError(msg) {}
};

}  // namespace mixhmm

#endif
