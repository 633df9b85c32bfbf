#include "mixhmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixhmm/special_functions.hpp"

namespace mixhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void zero_likelihood(Index t) {
  std::ostringstream msg;
  msg << "zero emission likelihood across all states at time index " << t
      << " (corrupted input or parameters outside the estimation floors)";
  throw EstimationError(msg.str());
}

Vector log_softmax_weights(const Vector& log_weights) {
  const double top = log_weights.maxCoeff();
  Vector out = (log_weights.array() - top).exp();
  return out / out.sum();
}

}  // namespace

EmissionTable emission_table(const Vector& segment,
                             const std::vector<ZigParams>& emissions) {
  const Index T1 = segment.size();
  const int M = static_cast<int>(emissions.size());
  if (T1 < 1) throw InputError("emission_table: empty segment");

  // Per-state constants of the log density, hoisted out of the time loop.
  Vector log_eps(M), log_one_minus_eps(M), log_norm(M), shape_m1(M), rate(M);
  for (int h = 0; h < M; ++h) {
    const auto& p = emissions[h];
    log_eps[h] = p.epsilon > 0.0 ? std::log(p.epsilon) : kNegInf;
    log_one_minus_eps[h] = p.epsilon < 1.0 ? std::log1p(-p.epsilon) : kNegInf;
    log_norm[h] = p.shape * std::log(p.rate) - std::lgamma(p.shape);
    shape_m1[h] = p.shape - 1.0;
    rate[h] = p.rate;
  }

  EmissionTable table;
  table.g.resize(T1, M);
  table.log_shift.resize(T1);
  Vector row(M);
  for (Index t = 0; t < T1; ++t) {
    const double y = segment[t];
    if (std::isnan(y)) {
      // bridged missing slot: no emission factor, transitions only
      table.g.row(t).setOnes();
      table.log_shift[t] = 0.0;
      continue;
    }
    if (!(y >= 0.0) || !std::isfinite(y))
      throw InputError("emission_table: observations must be finite and >= 0");
    if (y == 0.0) {
      row = log_eps;
    } else {
      const double log_y = std::log(y);
      for (int h = 0; h < M; ++h)
        row[h] = log_one_minus_eps[h] + log_norm[h] + shape_m1[h] * log_y -
                 rate[h] * y;
    }
    const double shift = row.maxCoeff();
    if (shift == kNegInf) zero_likelihood(t);
    table.log_shift[t] = shift;
    table.g.row(t) = (row.array() - shift).exp();
  }
  return table;
}

ForwardResult forward_scaled(const EmissionTable& table, const Vector& pi,
                             const Matrix& A) {
  const Index T1 = table.g.rows();
  const Index M = table.g.cols();
  ForwardResult out;
  out.alpha.resize(T1, M);
  out.log_scale.resize(T1);

  Vector cur = pi.cwiseProduct(table.g.row(0).transpose());
  double norm = cur.sum();
  if (!(norm > 0.0)) zero_likelihood(0);
  out.alpha.row(0) = cur.transpose() / norm;
  out.log_scale[0] = std::log(norm) + table.log_shift[0];

  for (Index t = 1; t < T1; ++t) {
    cur = (A.transpose() * out.alpha.row(t - 1).transpose())
              .cwiseProduct(table.g.row(t).transpose());
    norm = cur.sum();
    if (!(norm > 0.0)) zero_likelihood(t);
    out.alpha.row(t) = cur.transpose() / norm;
    out.log_scale[t] = std::log(norm) + table.log_shift[t];
  }
  out.loglik = out.log_scale.sum();
  return out;
}

Matrix backward_scaled(const EmissionTable& table, const Matrix& A,
                       const ForwardResult& fwd) {
  const Index T1 = table.g.rows();
  const Index M = table.g.cols();
  Matrix beta(T1, M);
  beta.row(T1 - 1).setOnes();
  for (Index t = T1 - 2; t >= 0; --t) {
    // Same normalizer as the forward pass at t+1, in the shifted scale.
    const double scale =
        std::exp(fwd.log_scale[t + 1] - table.log_shift[t + 1]);
    beta.row(t) =
        (A * beta.row(t + 1).transpose().cwiseProduct(
                 table.g.row(t + 1).transpose()))
            .transpose() /
        scale;
  }
  return beta;
}

ForwardResult forward(const Vector& segment, int component,
                      const MixtureHmmParams& params) {
  const auto table = emission_table(segment, params.emissions);
  return forward_scaled(table, params.pi[component], params.trans[component]);
}

Matrix backward(const Vector& segment, int component,
                const MixtureHmmParams& params) {
  const auto table = emission_table(segment, params.emissions);
  const auto fwd =
      forward_scaled(table, params.pi[component], params.trans[component]);
  return backward_scaled(table, params.trans[component], fwd);
}

PosteriorTables posteriors(const SegmentedSubject& subject,
                           const MixtureHmmParams& params) {
  const int K = params.num_components();
  const int M = params.num_states();
  const int S = static_cast<int>(subject.segments.size());

  PosteriorTables out;
  out.loglik_by_component = Vector::Zero(K);
  out.gamma.assign(K, std::vector<Matrix>(S));
  out.xi.assign(K, std::vector<Matrix>(S));
  out.eta.resize(S);

  std::vector<EmissionTable> tables(S);
  for (int s = 0; s < S; ++s)
    tables[s] = emission_table(subject.segments[s], params.emissions);

  for (int k = 0; k < K; ++k) {
    for (int s = 0; s < S; ++s) {
      const auto& table = tables[s];
      const Matrix& A = params.trans[k];
      const auto fwd = forward_scaled(table, params.pi[k], A);
      const Matrix beta = backward_scaled(table, A, fwd);
      out.loglik_by_component[k] += fwd.loglik;

      const Index T1 = table.g.rows();
      Matrix gamma = fwd.alpha.cwiseProduct(beta);
      for (Index t = 0; t < T1; ++t) gamma.row(t) /= gamma.row(t).sum();
      out.gamma[k][s] = std::move(gamma);

      Matrix xi(T1 - 1, M * M);
      for (Index t = 1; t < T1; ++t) {
        const double scale =
            std::exp(fwd.log_scale[t] - table.log_shift[t]);
        double total = 0.0;
        for (int h = 0; h < M; ++h)
          for (int l = 0; l < M; ++l) {
            const double v = fwd.alpha(t - 1, h) * A(h, l) * table.g(t, l) *
                             beta(t, l) / scale;
            xi(t - 1, h * M + l) = v;
            total += v;
          }
        xi.row(t - 1) /= total;
      }
      out.xi[k][s] = std::move(xi);
    }
  }

  out.tau = log_softmax_weights(params.delta.array().log().matrix() +
                                out.loglik_by_component);

  for (int s = 0; s < S; ++s) {
    Matrix eta = Matrix::Zero(subject.segments[s].size(), M);
    for (int k = 0; k < K; ++k) eta += out.tau[k] * out.gamma[k][s];
    out.eta[s] = std::move(eta);
  }
  return out;
}

double subject_loglik(const SegmentedSubject& subject,
                      const MixtureHmmParams& params) {
  const int K = params.num_components();
  Vector log_terms = params.delta.array().log().matrix();
  for (const auto& segment : subject.segments) {
    const auto table = emission_table(segment, params.emissions);
    for (int k = 0; k < K; ++k)
      log_terms[k] +=
          forward_scaled(table, params.pi[k], params.trans[k]).loglik;
  }
  const double top = log_terms.maxCoeff();
  return top + std::log((log_terms.array() - top).exp().sum());
}

double total_loglik(const std::vector<SegmentedSubject>& subjects,
                    const MixtureHmmParams& params) {
  double total = 0.0;
  for (const auto& subject : subjects) total += subject_loglik(subject, params);
  return total;
}

std::vector<int> viterbi(const Vector& segment, int component,
                         const MixtureHmmParams& params) {
  const Index T1 = segment.size();
  const int M = params.num_states();
  const Matrix& A = params.trans[component];

  Matrix log_a(M, M);
  for (int h = 0; h < M; ++h)
    for (int l = 0; l < M; ++l)
      log_a(h, l) = A(h, l) > 0.0 ? std::log(A(h, l)) : kNegInf;

  const auto log_emission = [&](Index t, int h) {
    if (std::isnan(segment[t])) return 0.0;  // bridged missing slot
    return zig_log_density(segment[t], params.emissions[h]);
  };

  Matrix score(T1, M);
  Eigen::MatrixXi arg(T1, M);
  for (int h = 0; h < M; ++h)
    score(0, h) = (params.pi[component][h] > 0.0
                       ? std::log(params.pi[component][h])
                       : kNegInf) +
                  log_emission(0, h);
  if (score.row(0).maxCoeff() == kNegInf) zero_likelihood(0);

  for (Index t = 1; t < T1; ++t) {
    for (int l = 0; l < M; ++l) {
      double best = kNegInf;
      int best_h = 0;
      for (int h = 0; h < M; ++h) {
        const double v = score(t - 1, h) + log_a(h, l);
        if (v > best) {  // strict: ties keep the lower state index
          best = v;
          best_h = h;
        }
      }
      score(t, l) = best + log_emission(t, l);
      arg(t, l) = best_h;
    }
    if (score.row(t).maxCoeff() == kNegInf) zero_likelihood(t);
  }

  std::vector<int> path(T1);
  int state = 0;
  double best = kNegInf;
  for (int h = 0; h < M; ++h)
    if (score(T1 - 1, h) > best) {
      best = score(T1 - 1, h);
      state = h;
    }
  path[T1 - 1] = state;
  for (Index t = T1 - 1; t >= 1; --t) {
    state = arg(t, state);
    path[t - 1] = state;
  }
  return path;
}

DecodeResult decode_subject(const SegmentedSubject& subject,
                            const MixtureHmmParams& params) {
  const auto tables = posteriors(subject, params);
  DecodeResult out;
  out.tau = tables.tau;
  out.eta = tables.eta;
  Index best = 0;
  tables.tau.maxCoeff(&best);
  // maxCoeff returns the first maximum, which is the lowest index on ties.
  out.map_class = static_cast<int>(best);
  out.paths.reserve(subject.segments.size());
  for (const auto& segment : subject.segments)
    out.paths.push_back(viterbi(segment, out.map_class, params));
  return out;
}

}  // namespace mixhmm
