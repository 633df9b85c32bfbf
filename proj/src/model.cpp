#include "mixhmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mixhmm/markov.hpp"

namespace mixhmm {

void validate(const MixtureHmmParams& params) {
  const int K = params.num_components();
  const int M = params.num_states();
  if (K < 1) throw InputError("model: need at least one component");
  if (M < 1) throw InputError("model: need at least one state");
  if (static_cast<int>(params.pi.size()) != K ||
      static_cast<int>(params.trans.size()) != K)
    throw InputError("model: pi/trans must hold one entry per component");

  double delta_sum = 0.0;
  for (Index k = 0; k < params.delta.size(); ++k) {
    if (!(params.delta[k] > 0.0))
      throw InputError("model: class proportions must be strictly positive");
    delta_sum += params.delta[k];
  }
  if (std::abs(delta_sum - 1.0) > 1e-12)
    throw InputError("model: class proportions must sum to 1");

  for (int k = 0; k < K; ++k) {
    if (params.pi[k].size() != M || params.trans[k].rows() != M)
      throw InputError("model: component dimensions disagree with M");
    validate_transition_matrix(params.trans[k]);
    double pi_sum = 0.0;
    for (Index h = 0; h < params.pi[k].size(); ++h) {
      if (params.pi[k][h] < 0.0)
        throw InputError("model: initial law entries must be nonnegative");
      pi_sum += params.pi[k][h];
    }
    if (std::abs(pi_sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "model: initial law of component " << k << " sums to " << pi_sum;
      throw InputError(msg.str());
    }
  }
  for (const auto& e : params.emissions) validate(e);
}

namespace {

std::vector<int> identity_perm(int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  return perm;
}

}  // namespace

MixtureHmmParams permute_components(const MixtureHmmParams& params,
                                    const std::vector<int>& perm) {
  const int K = params.num_components();
  if (static_cast<int>(perm.size()) != K)
    throw InputError("permute_components: permutation size mismatch");
  MixtureHmmParams out = params;
  for (int k = 0; k < K; ++k) {
    out.delta[k] = params.delta[perm[k]];
    out.pi[k] = params.pi[perm[k]];
    out.trans[k] = params.trans[perm[k]];
  }
  return out;
}

MixtureHmmParams permute_states(const MixtureHmmParams& params,
                                const std::vector<int>& perm) {
  const int K = params.num_components();
  const int M = params.num_states();
  if (static_cast<int>(perm.size()) != M)
    throw InputError("permute_states: permutation size mismatch");
  MixtureHmmParams out = params;
  for (int h = 0; h < M; ++h) out.emissions[h] = params.emissions[perm[h]];
  for (int k = 0; k < K; ++k) {
    for (int h = 0; h < M; ++h) {
      out.pi[k][h] = params.pi[k][perm[h]];
      for (int l = 0; l < M; ++l)
        out.trans[k](h, l) = params.trans[k](perm[h], perm[l]);
    }
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> canonicalize(
    MixtureHmmParams& params) {
  const int K = params.num_components();
  const int M = params.num_states();

  std::vector<int> state_perm = identity_perm(M);
  std::stable_sort(state_perm.begin(), state_perm.end(), [&](int a, int b) {
    return zig_mean(params.emissions[a]) < zig_mean(params.emissions[b]);
  });
  params = permute_states(params, state_perm);

  std::vector<int> comp_perm = identity_perm(K);
  std::stable_sort(comp_perm.begin(), comp_perm.end(), [&](int a, int b) {
    return params.trans[a](0, 0) > params.trans[b](0, 0);
  });
  params = permute_components(params, comp_perm);

  return {state_perm, comp_perm};
}

}  // namespace mixhmm
