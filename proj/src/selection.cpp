#include "mixhmm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mixhmm/markov.hpp"
#include "mixhmm/special_functions.hpp"

namespace mixhmm {

int parameter_count(int K, int M) {
  return (K - 1) + K * (M + M * M) + 3 * M;
}

long observation_count(const std::vector<SegmentedSubject>& data) {
  long total = 0;
  for (const auto& subject : data) total += subject.total_observations();
  return total;
}

double bic(const FitResult& fit, const std::vector<SegmentedSubject>& data) {
  const int K = fit.params.num_components();
  const int M = fit.params.num_states();
  return fit.loglik - 0.5 * parameter_count(K, M) *
                          std::log(static_cast<double>(observation_count(data)));
}

double map_entropy(const FitResult& fit) {
  double entropy = 0.0;
  for (Index i = 0; i < fit.tau.rows(); ++i) {
    const double t = fit.tau(i, fit.partition[i]);
    if (t > 0.0) entropy += std::log(t);
    // tau at the MAP class is zero only for empty rows, which fit never emits
  }
  return entropy;
}

double icl(const FitResult& fit, const std::vector<SegmentedSubject>& data) {
  return bic(fit, data) + map_entropy(fit);
}

SelectionResult select_components(const std::vector<SegmentedSubject>& data,
                                  const std::vector<int>& k_range, int M,
                                  const EmConfig& config) {
  if (k_range.empty()) throw InputError("select_components: empty K range");
  SelectionResult result;
  result.rows.resize(k_range.size());
  for (std::size_t i = 0; i < k_range.size(); ++i) {
    EmConfig local = config;
    local.seed = Rng(config.seed).fork(1000 + k_range[i]).seed();
    const FitResult fr = fit(data, k_range[i], M, local);
    SelectionRow row;
    row.K = k_range[i];
    row.loglik = fr.loglik;
    row.nu_K = parameter_count(k_range[i], M);
    row.bic = bic(fr, data);
    row.entropy = map_entropy(fr);
    row.icl = row.bic + row.entropy;
    result.rows[i] = row;
  }
  const auto best_by = [&](auto value) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.rows.size(); ++i)
      if (value(result.rows[i]) > value(result.rows[best])) best = i;
    return result.rows[best].K;
  };
  result.best_bic_K = best_by([](const SelectionRow& r) { return r.bic; });
  result.best_icl_K = best_by([](const SelectionRow& r) { return r.icl; });
  return result;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw InputError("adjusted_rand_index: partitions differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw InputError("adjusted_rand_index: need at least two items");

  auto relabel = [](std::span<const int> labels, std::vector<int>& out) {
    std::vector<int> uniq(labels.begin(), labels.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    out.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      out[i] = static_cast<int>(
          std::lower_bound(uniq.begin(), uniq.end(), labels[i]) - uniq.begin());
    return static_cast<int>(uniq.size());
  };

  std::vector<int> la, lb;
  const int ra = relabel(a, la);
  const int rb = relabel(b, lb);
  std::vector<long> table(static_cast<std::size_t>(ra) * rb, 0);
  std::vector<long> row(ra, 0), col(rb, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++table[static_cast<std::size_t>(la[i]) * rb + lb[i]];
    ++row[la[i]];
    ++col[lb[i]];
  }

  const auto choose2 = [](long m) {
    return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  };
  double sum_cells = 0.0;
  for (long c : table) sum_cells += choose2(c);
  double sum_rows = 0.0;
  for (long r : row) sum_rows += choose2(r);
  double sum_cols = 0.0;
  for (long c : col) sum_cols += choose2(c);
  const double total = choose2(static_cast<long>(n));
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both partitions fully degenerate
  return (sum_cells - expected) / (maximum - expected);
}

namespace {

double alignment_sse(const MixtureHmmParams& estimate,
                     const MixtureHmmParams& truth) {
  double sse = 0.0;
  const int K = truth.num_components();
  const int M = truth.num_states();
  for (int k = 0; k < K; ++k) {
    const double dd = estimate.delta[k] - truth.delta[k];
    sse += dd * dd;
    sse += (estimate.trans[k] - truth.trans[k]).squaredNorm();
  }
  for (int h = 0; h < M; ++h) {
    const double de = estimate.emissions[h].epsilon - truth.emissions[h].epsilon;
    const double da = estimate.emissions[h].shape - truth.emissions[h].shape;
    const double db = estimate.emissions[h].rate - truth.emissions[h].rate;
    sse += de * de + da * da + db * db;
  }
  return sse;
}

MseBlocks blocks_for(const MixtureHmmParams& estimate,
                     const MixtureHmmParams& truth) {
  MseBlocks out;
  const int K = truth.num_components();
  const int M = truth.num_states();
  for (int k = 0; k < K; ++k) {
    const double dd = estimate.delta[k] - truth.delta[k];
    out.delta += dd * dd;
    out.trans += (estimate.trans[k] - truth.trans[k]).squaredNorm();
  }
  for (int h = 0; h < M; ++h) {
    const double de = estimate.emissions[h].epsilon - truth.emissions[h].epsilon;
    const double da = estimate.emissions[h].shape - truth.emissions[h].shape;
    const double db = estimate.emissions[h].rate - truth.emissions[h].rate;
    out.epsilon += de * de;
    out.shape += da * da;
    out.rate += db * db;
  }
  out.trans /= static_cast<double>(K) * M * M;
  out.epsilon /= M;
  out.shape /= M;
  out.rate /= M;
  out.delta /= K;
  return out;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

MseBlocks aligned_parameter_mse(const MixtureHmmParams& estimate,
                                const MixtureHmmParams& truth) {
  const int K = truth.num_components();
  const int M = truth.num_states();
  if (estimate.num_components() != K || estimate.num_states() != M)
    throw InputError("aligned_parameter_mse: dimension mismatch");

  std::vector<int> state_ids(M), comp_ids(K);
  std::iota(state_ids.begin(), state_ids.end(), 0);
  std::iota(comp_ids.begin(), comp_ids.end(), 0);

  if (factorial(K) * factorial(M) <= 1e5) {
    double best = std::numeric_limits<double>::infinity();
    MseBlocks best_blocks;
    std::vector<int> sp = state_ids;
    do {
      const MixtureHmmParams by_state = permute_states(estimate, sp);
      std::vector<int> cp = comp_ids;
      do {
        const MixtureHmmParams candidate = permute_components(by_state, cp);
        const double sse = alignment_sse(candidate, truth);
        if (sse < best) {
          best = sse;
          best_blocks = blocks_for(candidate, truth);
        }
      } while (std::next_permutation(cp.begin(), cp.end()));
    } while (std::next_permutation(sp.begin(), sp.end()));
    return best_blocks;
  }

  // Joint search too large: assign states by emission distance first, then
  // components by (delta, A) distance, each side exhaustively on its own.
  auto best_perm = [](int n, auto cost) {
    std::vector<int> perm(n), best_perm_(n);
    std::iota(perm.begin(), perm.end(), 0);
    best_perm_ = perm;
    double best = std::numeric_limits<double>::infinity();
    do {
      const double c = cost(perm);
      if (c < best) {
        best = c;
        best_perm_ = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best_perm_;
  };

  const auto sp = best_perm(M, [&](const std::vector<int>& perm) {
    double c = 0.0;
    for (int h = 0; h < M; ++h) {
      const auto& e = estimate.emissions[perm[h]];
      const auto& t = truth.emissions[h];
      c += (e.epsilon - t.epsilon) * (e.epsilon - t.epsilon) +
           (e.shape - t.shape) * (e.shape - t.shape) +
           (e.rate - t.rate) * (e.rate - t.rate);
    }
    return c;
  });
  const MixtureHmmParams by_state = permute_states(estimate, sp);
  const auto cp = best_perm(K, [&](const std::vector<int>& perm) {
    double c = 0.0;
    for (int k = 0; k < K; ++k) {
      const double dd = by_state.delta[perm[k]] - truth.delta[k];
      c += dd * dd + (by_state.trans[perm[k]] - truth.trans[k]).squaredNorm();
    }
    return c;
  });
  return blocks_for(permute_components(by_state, cp), truth);
}

namespace {

// Log of the marginal score weight_h * (1-eps_h) * gamma density at y > 0.
double positive_score(double y, double log_weight, const ZigParams& p) {
  if (p.epsilon >= 1.0) return -std::numeric_limits<double>::infinity();
  return log_weight + std::log1p(-p.epsilon) +
         gamma_log_density(y, p.shape, p.rate);
}

}  // namespace

CutoffResult marginal_cutoffs(const MixtureHmmParams& params) {
  const int K = params.num_components();
  const int M = params.num_states();
  for (int h = 1; h < M; ++h)
    if (zig_mean(params.emissions[h]) < zig_mean(params.emissions[h - 1]))
      throw InputError(
          "marginal_cutoffs: states must be ordered by increasing mean");

  Vector weight = Vector::Zero(M);
  for (int k = 0; k < K; ++k)
    weight += params.delta[k] * params.pi[k];
  const Vector log_weight = weight.array().max(1e-300).log();

  CutoffResult out;
  {
    Index zero_best = 0;
    Vector zero_score(M);
    for (int h = 0; h < M; ++h)
      zero_score[h] = params.emissions[h].epsilon * weight[h];
    zero_score.maxCoeff(&zero_best);
    out.zero_state = static_cast<int>(zero_best);
  }
  if (M == 1) {
    out.interval_states = {0};
    return out;
  }

  const auto argmax_at = [&](double y) {
    int best = 0;
    double best_score = positive_score(y, log_weight[0], params.emissions[0]);
    for (int h = 1; h < M; ++h) {
      const double s = positive_score(y, log_weight[h], params.emissions[h]);
      if (s > best_score) {
        best_score = s;
        best = h;
      }
    }
    return best;
  };

  // Log-spaced sweep wide enough to cover every gamma component's bulk.
  double hi = 1.0;
  for (const auto& e : params.emissions)
    hi = std::max(hi, (e.shape + 40.0 * std::sqrt(e.shape) + 40.0) / e.rate);
  const double lo = 1e-10;
  const int grid_points = 4096;
  const double step = std::log(hi / lo) / (grid_points - 1);

  int prev_state = argmax_at(lo);
  double prev_y = lo;
  out.interval_states.push_back(prev_state);
  for (int i = 1; i < grid_points; ++i) {
    const double y = lo * std::exp(step * i);
    const int state = argmax_at(y);
    if (state != prev_state) {
      // Bisect the score difference of the two competing states.
      double a = prev_y;
      double b = y;
      while (b - a > 1e-6) {
        const double mid = 0.5 * (a + b);
        const double diff =
            positive_score(mid, log_weight[prev_state],
                           params.emissions[prev_state]) -
            positive_score(mid, log_weight[state], params.emissions[state]);
        if (diff >= 0.0) a = mid;
        else b = mid;
      }
      out.boundaries.push_back(0.5 * (a + b));
      out.interval_states.push_back(state);
      prev_state = state;
    }
    prev_y = y;
  }
  out.adjacency_ok =
      static_cast<int>(out.boundaries.size()) <= M - 1;
  return out;
}

Matrix mean_time_per_state(const MixtureHmmParams& params) {
  const int K = params.num_components();
  const int M = params.num_states();
  Matrix out(K, M);
  for (int k = 0; k < K; ++k)
    out.row(k) = stationary_distribution(params.trans[k]).transpose();
  return out;
}

}  // namespace mixhmm
