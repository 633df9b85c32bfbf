#ifndef MIXHMM_EM_HPP
#define MIXHMM_EM_HPP

#include <cstdint>
#include <vector>

#include "mixhmm/inference.hpp"
#include "mixhmm/model.hpp"
#include "mixhmm/rng.hpp"
#include "mixhmm/sequences.hpp"

namespace mixhmm {

struct EmConfig {
  int max_iter = 500;
  double rel_tol = 1e-8;       // on the relative log-likelihood change
  int restarts = 50;
  std::uint64_t seed = 0;
  bool stationary_init = true;  // tie pi_k to the stationary law of A_k
  double min_state_occupancy = 1e-6;
  int threads = 1;
};

/// Expected complete-data counts accumulated over subjects in id order.
struct SufficientStats {
  Vector n_k;                  // K
  Matrix n_kh;                 // K x M, occupancy over all times
  Matrix n_kh0;                // K x M, segment starts only
  std::vector<Matrix> n_khl;   // K matrices M x M, transition pairs
  Vector w_h;                  // M, eta mass on exact zeros
  Vector occ_h;                // M, total eta mass
  Vector pos_weight;           // M, eta mass on positive values
  Vector pos_sum;              // M, eta-weighted positive values
  Vector pos_logsum;           // M, eta-weighted log of positive values
  double loglik = 0.0;         // total log-likelihood at the stepped params
  int n_subjects = 0;
};

/// How a restart draws its starting transition matrices: fresh diagonally
/// dominant random matrices, or empirical transition frequencies of a random
/// subject partition (quantized through the emission to quantile bins). fit()
/// alternates between the two; the random-matrix family separates mirrored
/// classes well, the partition family stays numerically sane on very long
/// series where class posteriors are effectively hard.
enum class InitStrategy { random_matrices, random_partition };

MixtureHmmParams initialize(const std::vector<SegmentedSubject>& data, int K,
                            int M, Rng& rng,
                            InitStrategy strategy =
                                InitStrategy::random_matrices);

SufficientStats e_step(const std::vector<SegmentedSubject>& data,
                       const MixtureHmmParams& params, int threads = 1);

MixtureHmmParams m_step(const SufficientStats& stats, const EmConfig& config);

struct FitResult {
  MixtureHmmParams params;
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  Matrix tau;                  // n x K
  std::vector<int> partition;  // MAP class per subject, ties to lower index
  int n_iterations = 0;
  bool converged = false;
  int restart_index = 0;
};

/// Best result over `restarts` independent initializations; degenerate
/// restarts are discarded and the fit fails only if all of them collapse.
/// The returned parameters are in canonical label order.
FitResult fit(const std::vector<SegmentedSubject>& data, int K, int M,
              const EmConfig& config);

}  // namespace mixhmm

#endif
