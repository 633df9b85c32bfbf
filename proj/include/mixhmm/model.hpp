#ifndef MIXHMM_MODEL_HPP
#define MIXHMM_MODEL_HPP

#include <utility>
#include <vector>

#include "mixhmm/emissions.hpp"
#include "mixhmm/types.hpp"

namespace mixhmm {

/// Full parameter vector of the mixture of hidden Markov chains: class
/// proportions, per-class initial laws and transition matrices, and one
/// shared zero-inflated gamma emission per state.
struct MixtureHmmParams {
  Vector delta;                       // K class proportions
  std::vector<Vector> pi;             // K initial laws, each length M
  std::vector<Matrix> trans;          // K transition matrices, M x M
  std::vector<ZigParams> emissions;   // M shared state emissions

  int num_components() const { return static_cast<int>(delta.size()); }
  int num_states() const { return static_cast<int>(emissions.size()); }
};

/// Throws on any violated invariant (simplex constraints, row sums,
/// emission parameter ranges, dimension mismatches).
void validate(const MixtureHmmParams& params);

/// Relabels components; perm[new_index] = old_index.
MixtureHmmParams permute_components(const MixtureHmmParams& params,
                                    const std::vector<int>& perm);

/// Relabels states globally (emissions, pi entries, transition rows/cols).
MixtureHmmParams permute_states(const MixtureHmmParams& params,
                                const std::vector<int>& perm);

/// Canonical labelling: states by increasing emission mean, components by
/// decreasing trans[k](0,0). Returns (state_perm, component_perm) with
/// perm[new_index] = old_index.
std::pair<std::vector<int>, std::vector<int>> canonicalize(
    MixtureHmmParams& params);

}  // namespace mixhmm

#endif
