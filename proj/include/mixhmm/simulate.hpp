#ifndef MIXHMM_SIMULATE_HPP
#define MIXHMM_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixhmm/em.hpp"
#include "mixhmm/model.hpp"
#include "mixhmm/rng.hpp"
#include "mixhmm/selection.hpp"
#include "mixhmm/sequences.hpp"

namespace mixhmm {

enum class ScenarioCase { hard, medium_hard, medium_easy, easy };
enum class Missingness { none, mcar1, mcar2, mnar };

ScenarioCase scenario_case_from_string(const std::string& name);
std::string to_string(ScenarioCase c);
Missingness missingness_from_string(const std::string& name);
std::string to_string(Missingness m);

/// The two-class, two-state benchmark family: equal proportions, shared
/// zero inflation 0.1, gamma(1,1) versus gamma(a2,1) emissions, and mirrored
/// transition matrices with persistence e.
MixtureHmmParams scenario_params(ScenarioCase c);

struct ScenarioSpec {
  MixtureHmmParams theta;
  int n = 1;
  int T = 0;  // observations at times 0..T
  Missingness missingness = Missingness::none;
  int replicates = 1;
  std::uint64_t seed = 0;
};

ScenarioSpec make_scenario(ScenarioCase c, int n, int T,
                           Missingness missingness, int replicates,
                           std::uint64_t seed);

struct Dataset {
  std::vector<RawSeries> series;
  std::vector<int> z;                   // true class per subject
  std::vector<std::vector<int>> x;      // true states, kept through masking
};

Dataset sample_dataset(const ScenarioSpec& spec, Rng& rng);

/// Masks, per subject, `count` non-overlapping runs of `length` missing
/// values at uniform positions for each (count, length) entry.
void apply_mcar(Dataset& data,
                const std::vector<std::pair<int, int>>& runs, Rng& rng);

/// Masks each value independently with observation probability
/// exp(y)/(1+exp(y)).
void apply_mnar(Dataset& data, Rng& rng);

void apply_missingness(Dataset& data, Missingness kind, Rng& rng);

std::vector<SegmentedSubject> segment_dataset(
    const Dataset& data, long min_gap = 1,
    ShortGapPolicy policy = ShortGapPolicy::split);

struct DecayPoint {
  int T = 0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double error_rate = 0.0;
};

/// Classification under the true parameters: per grid length, the quantiles
/// of the log posterior ratio of the best alternative class against the true
/// one, and the empirical MAP misclassification rate.
std::vector<DecayPoint> misclassification_experiment(
    const ScenarioSpec& spec, const std::vector<int>& T_grid, int threads = 1);

struct ConvergenceCellSpec {
  int n = 0;
  int T = 0;
  Missingness missingness = Missingness::none;
};

struct ConvergenceCell {
  int n = 0;
  int T = 0;
  Missingness missingness = Missingness::none;
  double ari_partition = 0.0;
  double ari_states = 0.0;
  MseBlocks mse;
  int replicates_used = 0;
  int degenerate = 0;
};

/// Fits every replicate of every cell and averages partition ARI, pooled
/// state ARI of the decoded paths, and aligned parameter MSE blocks.
std::vector<ConvergenceCell> convergence_experiment(
    const ScenarioSpec& spec, const std::vector<ConvergenceCellSpec>& cells,
    const EmConfig& em, int threads = 1);

}  // namespace mixhmm

#endif
