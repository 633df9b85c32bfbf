#include "mixhmm/em.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "mixhmm/markov.hpp"
#include "mixhmm/parallel.hpp"

namespace mixhmm {

namespace {
// Transition rows are floored at this value after each M-step so every chain
// stays irreducible and the stationary projection is well defined.
constexpr double kTransitionFloor = 1e-10;
}  // namespace

MixtureHmmParams initialize(const std::vector<SegmentedSubject>& data, int K,
                            int M, Rng& rng, InitStrategy strategy) {
  if (K < 1 || M < 1) throw InputError("initialize: K and M must be >= 1");
  if (static_cast<int>(data.size()) < K)
    throw InputError("initialize: need at least K subjects");

  std::vector<double> positives;
  long zeros = 0;
  for (const auto& subject : data)
    for (const auto& segment : subject.segments)
      for (Index t = 0; t < segment.size(); ++t) {
        if (std::isnan(segment[t])) continue;
        if (segment[t] > 0.0) positives.push_back(segment[t]);
        else ++zeros;
      }
  if (static_cast<int>(positives.size()) < 2 * M)
    throw InputError("initialize: need at least 2*M pooled positive values");
  std::sort(positives.begin(), positives.end());

  MixtureHmmParams params;
  params.emissions.resize(M);
  const std::size_t P = positives.size();
  for (int h = 0; h < M; ++h) {
    const std::size_t lo = P * h / M;
    const std::size_t hi = P * (h + 1) / M;
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += positives[i];
    mean /= static_cast<double>(hi - lo);
    double var = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      var += (positives[i] - mean) * (positives[i] - mean);
    var /= static_cast<double>(hi - lo);
    var = std::max(var, 1e-8 * mean * mean + 1e-12);

    ZigParams p;
    p.shape = std::clamp(mean * mean / var, kGammaParamFloor, kGammaParamCeil);
    p.rate = std::clamp(mean / var, kGammaParamFloor, kGammaParamCeil);
    // All zeros are attributed to the lowest quantile bin.
    p.epsilon = h == 0 ? static_cast<double>(zeros) /
                             static_cast<double>(zeros + (hi - lo))
                       : 0.0;
    p.epsilon = std::clamp(p.epsilon, kEpsilonFloor, 1.0 - kEpsilonFloor);
    params.emissions[h] = p;
  }

  params.delta = Vector::Constant(K, 1.0 / K);
  params.pi.resize(K);
  params.trans.resize(K);

  if (strategy == InitStrategy::random_matrices || M == 1) {
    for (int k = 0; k < K; ++k) {
      Matrix A(M, M);
      for (int h = 0; h < M; ++h) {
        if (M == 1) {
          A(h, 0) = 1.0;
          continue;
        }
        const double diag = rng.uniform(0.6, 0.95);
        const Vector off = rng.dirichlet(M - 1);
        int j = 0;
        for (int l = 0; l < M; ++l)
          A(h, l) = (l == h) ? diag : (1.0 - diag) * off[j++];
      }
      params.trans[k] = A;
      params.pi[k] = stationary_distribution(A);
    }
    return params;
  }

  // Random partition: deal shuffled subjects round-robin onto the
  // components and start each component at the smoothed empirical
  // transition frequencies of its subjects, quantized to the emission bins.
  const int n = static_cast<int>(data.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i >= 1; --i) {
    const int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::vector<double> edges(M - 1);
  for (int h = 0; h + 1 < M; ++h) edges[h] = positives[P * (h + 1) / M];
  const auto bin_of = [&](double y) {
    if (y == 0.0) return 0;
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), y) -
                            edges.begin());
  };

  std::vector<Matrix> counts(K, Matrix::Constant(M, M, 0.5));
  for (int pos = 0; pos < n; ++pos) {
    const int k = pos % K;
    const auto& subject = data[order[pos]];
    for (const auto& segment : subject.segments) {
      int prev = -1;
      for (Index t = 0; t < segment.size(); ++t) {
        if (std::isnan(segment[t])) {
          prev = -1;
          continue;
        }
        const int cur = bin_of(segment[t]);
        if (prev >= 0) counts[k](prev, cur) += 1.0;
        prev = cur;
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    Matrix A(M, M);
    for (int h = 0; h < M; ++h) A.row(h) = counts[k].row(h) / counts[k].row(h).sum();
    params.trans[k] = A;
    params.pi[k] = stationary_distribution(A);
  }
  return params;
}

SufficientStats e_step(const std::vector<SegmentedSubject>& data,
                       const MixtureHmmParams& params, int threads) {
  const int K = params.num_components();
  const int M = params.num_states();
  const int n = static_cast<int>(data.size());

  std::vector<SufficientStats> partial(n);
  parallel_for(n, threads, [&](int i) {
    const auto tables = posteriors(data[i], params);
    SufficientStats s;
    s.n_k = tables.tau;
    s.n_kh = Matrix::Zero(K, M);
    s.n_kh0 = Matrix::Zero(K, M);
    s.n_khl.assign(K, Matrix::Zero(M, M));
    s.w_h = Vector::Zero(M);
    s.occ_h = Vector::Zero(M);
    s.pos_weight = Vector::Zero(M);
    s.pos_sum = Vector::Zero(M);
    s.pos_logsum = Vector::Zero(M);

    const auto& subject = data[i];
    for (std::size_t seg = 0; seg < subject.segments.size(); ++seg) {
      for (int k = 0; k < K; ++k) {
        const Matrix& gamma = tables.gamma[k][seg];
        s.n_kh.row(k) += tables.tau[k] * gamma.colwise().sum();
        s.n_kh0.row(k) += tables.tau[k] * gamma.row(0);
        const Matrix& xi = tables.xi[k][seg];
        const Vector pair_sums = xi.colwise().sum().transpose();
        for (int h = 0; h < M; ++h)
          for (int l = 0; l < M; ++l)
            s.n_khl[k](h, l) += tables.tau[k] * pair_sums[h * M + l];
      }
      const Matrix& eta = tables.eta[seg];
      const Vector& y = subject.segments[seg];
      for (Index t = 0; t < y.size(); ++t) {
        if (std::isnan(y[t])) continue;  // bridged slot: no emission term
        for (int h = 0; h < M; ++h) {
          const double w = eta(t, h);
          s.occ_h[h] += w;
          if (y[t] == 0.0) {
            s.w_h[h] += w;
          } else {
            s.pos_weight[h] += w;
            s.pos_sum[h] += w * y[t];
            s.pos_logsum[h] += w * std::log(y[t]);
          }
        }
      }
    }
    const Vector log_terms = params.delta.array().log().matrix() +
                             tables.loglik_by_component;
    const double top = log_terms.maxCoeff();
    s.loglik = top + std::log((log_terms.array() - top).exp().sum());
    partial[i] = std::move(s);
  });

  SufficientStats total;
  total.n_k = Vector::Zero(K);
  total.n_kh = Matrix::Zero(K, M);
  total.n_kh0 = Matrix::Zero(K, M);
  total.n_khl.assign(K, Matrix::Zero(M, M));
  total.w_h = Vector::Zero(M);
  total.occ_h = Vector::Zero(M);
  total.pos_weight = Vector::Zero(M);
  total.pos_sum = Vector::Zero(M);
  total.pos_logsum = Vector::Zero(M);
  total.n_subjects = n;
  for (int i = 0; i < n; ++i) {  // fixed subject order keeps results bitwise stable
    const auto& s = partial[i];
    total.n_k += s.n_k;
    total.n_kh += s.n_kh;
    total.n_kh0 += s.n_kh0;
    for (int k = 0; k < K; ++k) total.n_khl[k] += s.n_khl[k];
    total.w_h += s.w_h;
    total.occ_h += s.occ_h;
    total.pos_weight += s.pos_weight;
    total.pos_sum += s.pos_sum;
    total.pos_logsum += s.pos_logsum;
    total.loglik += s.loglik;
  }
  return total;
}

MixtureHmmParams m_step(const SufficientStats& stats, const EmConfig& config) {
  const int K = static_cast<int>(stats.n_k.size());
  const int M = static_cast<int>(stats.w_h.size());

  for (int k = 0; k < K; ++k)
    for (int h = 0; h < M; ++h)
      if (stats.n_kh(k, h) < config.min_state_occupancy) {
        std::ostringstream msg;
        msg << "degenerate fit: expected occupancy of component " << k
            << ", state " << h << " is " << stats.n_kh(k, h)
            << " (< " << config.min_state_occupancy << ")";
        throw DegenerateFitError(msg.str());
      }

  MixtureHmmParams params;
  params.delta = stats.n_k / static_cast<double>(stats.n_subjects);
  params.pi.resize(K);
  params.trans.resize(K);
  for (int k = 0; k < K; ++k) {
    Matrix A(M, M);
    for (int h = 0; h < M; ++h) {
      const double row_total = stats.n_khl[k].row(h).sum();
      if (row_total < config.min_state_occupancy) {
        std::ostringstream msg;
        msg << "degenerate fit: no transitions out of component " << k
            << ", state " << h;
        throw DegenerateFitError(msg.str());
      }
      A.row(h) =
          (stats.n_khl[k].row(h) / row_total).cwiseMax(kTransitionFloor);
      A.row(h) /= A.row(h).sum();
    }
    params.trans[k] = A;
    if (config.stationary_init) {
      params.pi[k] = stationary_distribution(A);
    } else {
      Vector pi0 = stats.n_kh0.row(k).transpose().cwiseMax(kTransitionFloor);
      params.pi[k] = pi0 / pi0.sum();
    }
  }

  params.emissions.resize(M);
  for (int h = 0; h < M; ++h) {
    ZigParams p;
    p.epsilon = std::clamp(stats.w_h[h] / stats.occ_h[h], kEpsilonFloor,
                           1.0 - kEpsilonFloor);
    if (stats.pos_weight[h] < config.min_state_occupancy) {
      std::ostringstream msg;
      msg << "degenerate fit: state " << h
          << " carries no positive observations";
      throw DegenerateFitError(msg.str());
    }
    try {
      const auto est = weighted_gamma_mle_from_stats(
          stats.pos_weight[h], stats.pos_sum[h], stats.pos_logsum[h]);
      p.shape = est.shape;
      p.rate = est.rate;
    } catch (const EstimationError& e) {
      std::ostringstream msg;
      msg << "degenerate fit: gamma update for state " << h
          << " failed: " << e.what();
      throw DegenerateFitError(msg.str());
    }
    params.emissions[h] = p;
  }
  return params;
}

namespace {

struct RestartOutcome {
  bool degenerate = false;
  std::string reason;
  MixtureHmmParams params;
  double loglik = 0.0;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

RestartOutcome run_restart(const std::vector<SegmentedSubject>& data, int K,
                           int M, const EmConfig& config, Rng rng,
                           InitStrategy strategy) {
  RestartOutcome out;
  try {
    MixtureHmmParams params = initialize(data, K, M, rng, strategy);
    double prev = 0.0;
    for (int iter = 0; iter < config.max_iter; ++iter) {
      const auto stats = e_step(data, params);
      out.trace.push_back(stats.loglik);
      out.iterations = iter + 1;
      if (iter > 0 &&
          stats.loglik - prev <= config.rel_tol * std::abs(prev)) {
        out.converged = true;
        break;
      }
      prev = stats.loglik;
      if (iter + 1 < config.max_iter) params = m_step(stats, config);
    }
    out.params = std::move(params);
    out.loglik = out.trace.back();
  } catch (const EstimationError& e) {
    out.degenerate = true;
    out.reason = e.what();
  }
  return out;
}

}  // namespace

FitResult fit(const std::vector<SegmentedSubject>& data, int K, int M,
              const EmConfig& config) {
  if (config.restarts < 1) throw InputError("fit: restarts must be >= 1");
  if (config.max_iter < 1) throw InputError("fit: max_iter must be >= 1");
  if (!(config.rel_tol > 0.0)) throw InputError("fit: rel_tol must be > 0");

  const Rng root(config.seed);
  std::vector<RestartOutcome> outcomes(config.restarts);
  parallel_for(config.restarts, config.threads, [&](int r) {
    const InitStrategy strategy = r % 2 == 0 ? InitStrategy::random_matrices
                                             : InitStrategy::random_partition;
    outcomes[r] = run_restart(data, K, M, config, root.fork(r), strategy);
  });

  int best = -1;
  for (int r = 0; r < config.restarts; ++r) {
    if (outcomes[r].degenerate) continue;
    if (best < 0 || outcomes[r].loglik > outcomes[best].loglik) best = r;
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "all " << config.restarts << " restarts degenerate; last reason: "
        << outcomes[config.restarts - 1].reason;
    throw EstimationError(msg.str());
  }

  FitResult result;
  result.params = outcomes[best].params;
  result.loglik = outcomes[best].loglik;
  result.loglik_trace = outcomes[best].trace;
  result.n_iterations = outcomes[best].iterations;
  result.converged = outcomes[best].converged;
  result.restart_index = best;

  canonicalize(result.params);

  const int n = static_cast<int>(data.size());
  result.tau.resize(n, K);
  result.partition.resize(n);
  parallel_for(n, config.threads, [&](int i) {
    const auto tables = posteriors(data[i], result.params);
    result.tau.row(i) = tables.tau.transpose();
  });
  for (int i = 0; i < n; ++i) {
    Index arg = 0;
    result.tau.row(i).maxCoeff(&arg);
    result.partition[i] = static_cast<int>(arg);
  }
  return result;
}

}  // namespace mixhmm
