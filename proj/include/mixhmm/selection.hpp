#ifndef MIXHMM_SELECTION_HPP
#define MIXHMM_SELECTION_HPP

#include <span>
#include <vector>

#include "mixhmm/em.hpp"
#include "mixhmm/model.hpp"
#include "mixhmm/sequences.hpp"
#include "mixhmm/types.hpp"

namespace mixhmm {

/// Free parameters of a K-component, M-state model:
/// (K-1) + K(M + M^2) + 3M.
int parameter_count(int K, int M);

long observation_count(const std::vector<SegmentedSubject>& data);

/// loglik - (nu_K / 2) * log(total observation count). Larger is better.
double bic(const FitResult& fit, const std::vector<SegmentedSubject>& data);

/// Classification entropy sum_i sum_k zhat_ik log tau_ik (nonpositive,
/// 0 log 0 = 0).
double map_entropy(const FitResult& fit);

/// bic + map_entropy; never exceeds bic.
double icl(const FitResult& fit, const std::vector<SegmentedSubject>& data);

struct SelectionRow {
  int K = 0;
  double loglik = 0.0;
  int nu_K = 0;
  double bic = 0.0;
  double icl = 0.0;
  double entropy = 0.0;
};

struct SelectionResult {
  std::vector<SelectionRow> rows;
  int best_bic_K = 0;
  int best_icl_K = 0;
};

/// Fits every K in k_range with fresh restarts and ranks by each criterion
/// (maximized as defined above).
SelectionResult select_components(const std::vector<SegmentedSubject>& data,
                                  const std::vector<int>& k_range, int M,
                                  const EmConfig& config);

/// Hubert-Arabie adjusted Rand index from the pair-counting contingency
/// table; 1 for identical partitions, ~0 for independent ones.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

struct MseBlocks {
  double trans = 0.0;    // per entry over K*M*M
  double epsilon = 0.0;  // per entry over M
  double shape = 0.0;
  double rate = 0.0;
  double delta = 0.0;    // per entry over K
};

/// Per-block mean squared errors after jointly relabeling states (globally)
/// and components of `estimate` to best match `truth`. The search is
/// exhaustive while K! * M! <= 1e5 and falls back to a decoupled
/// states-then-components assignment beyond that.
MseBlocks aligned_parameter_mse(const MixtureHmmParams& estimate,
                                const MixtureHmmParams& truth);

struct CutoffResult {
  std::vector<double> boundaries;    // M-1 crossings when adjacency holds
  std::vector<int> interval_states;  // argmax state on each (0,inf) interval
  int zero_state = 0;                // state owning the atom at zero
  bool adjacency_ok = true;          // false if extra crossings were found
};

/// Value thresholds where the marginally most probable state changes over
/// (0, inf), using marginal state weights sum_k delta_k pi_kh. States must be
/// in increasing emission-mean order.
CutoffResult marginal_cutoffs(const MixtureHmmParams& params);

/// Long-run occupancy per class: row k is the stationary law of trans[k].
Matrix mean_time_per_state(const MixtureHmmParams& params);

}  // namespace mixhmm

#endif
