#ifndef MIXHMM_MARKOV_HPP
#define MIXHMM_MARKOV_HPP

#include <vector>

#include "mixhmm/types.hpp"
#include "mixhmm/rng.hpp"

namespace mixhmm {

/// Throws unless A is square with entries in [0,1] and rows summing to 1
/// within 1e-12.
void validate_transition_matrix(const Matrix& A);

/// States not on the common strongly connected support component; empty iff
/// the chain is irreducible.
std::vector<int> unreachable_states(const Matrix& A);

bool is_irreducible(const Matrix& A);

/// Unique stationary law of an irreducible chain, solved from the stacked
/// linear system (A^T - I | normalization) by least squares.
Vector stationary_distribution(const Matrix& A);

struct SecondEigenvalue {
  double modulus = 0.0;        // nu*: second-largest |eigenvalue|
  double signed_value = 0.0;   // nu2: largest non-Perron real part
  double positive_part = 0.0;  // max(0, nu2)
};

SecondEigenvalue second_eigenvalue(const Matrix& A);

/// Steps D such that every row of A^D is within total variation eta of the
/// stationary law: (1/(1-nu*)) * log(1/(eta*min pi)), clamped at zero.
double mixing_time_bound(const Matrix& A, double eta);

/// max over start states of 0.5 * ||A^power[h,:] - pi||_1.
double tv_distance_to_stationary(const Matrix& A, long power);

/// State path of length T+1: x0 ~ pi, then one step of A per time index.
std::vector<int> sample_chain(const Vector& pi, const Matrix& A, int T,
                              Rng& rng);

}  // namespace mixhmm

#endif
