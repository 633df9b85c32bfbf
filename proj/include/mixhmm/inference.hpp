#ifndef MIXHMM_INFERENCE_HPP
#define MIXHMM_INFERENCE_HPP

#include <vector>

#include "mixhmm/model.hpp"
#include "mixhmm/sequences.hpp"
#include "mixhmm/types.hpp"

namespace mixhmm {

/// Per-segment emission densities with one log shift per time step:
/// g(t, h) = exp(log zig-density(y_t; state h) - log_shift[t]). The shift is
/// the row maximum, so rows never underflow to all-zero for valid parameters.
struct EmissionTable {
  Matrix g;          // (T+1) x M
  Vector log_shift;  // T+1
};

EmissionTable emission_table(const Vector& segment,
                             const std::vector<ZigParams>& emissions);

struct ForwardResult {
  Matrix alpha;      // (T+1) x M, rows normalized to sum 1
  Vector log_scale;  // per-step true log normalizers; loglik = sum
  double loglik = 0.0;
};

ForwardResult forward_scaled(const EmissionTable& table, const Vector& pi,
                             const Matrix& A);

/// Scaled backward table sharing the forward scale factors, so that
/// sum_h alpha(t,h) * beta(t,h) = 1 at every t.
Matrix backward_scaled(const EmissionTable& table, const Matrix& A,
                       const ForwardResult& fwd);

ForwardResult forward(const Vector& segment, int component,
                      const MixtureHmmParams& params);
Matrix backward(const Vector& segment, int component,
                const MixtureHmmParams& params);

/// All smoothed quantities for one subject. xi[k][s] stores the pair
/// posterior at times 1..T_s as rows; row t-1, column h*M+l is the posterior
/// of (state h at t-1, state l at t).
struct PosteriorTables {
  Vector tau;                  // K class posteriors
  Vector loglik_by_component;  // K: log p(subject | component)
  std::vector<std::vector<Matrix>> gamma;  // [k][s]: (T_s+1) x M
  std::vector<std::vector<Matrix>> xi;     // [k][s]: T_s x (M*M)
  std::vector<Matrix> eta;                 // [s]: (T_s+1) x M
};

PosteriorTables posteriors(const SegmentedSubject& subject,
                           const MixtureHmmParams& params);

double subject_loglik(const SegmentedSubject& subject,
                      const MixtureHmmParams& params);

double total_loglik(const std::vector<SegmentedSubject>& subjects,
                    const MixtureHmmParams& params);

/// Most probable state path given the component; ties resolved toward the
/// lower state index at every backtrack step.
std::vector<int> viterbi(const Vector& segment, int component,
                         const MixtureHmmParams& params);

struct DecodeResult {
  int map_class = 0;                   // argmax_k tau, ties to lower index
  Vector tau;
  std::vector<std::vector<int>> paths;  // per segment, under map_class
  std::vector<Matrix> eta;              // per segment
};

DecodeResult decode_subject(const SegmentedSubject& subject,
                            const MixtureHmmParams& params);

}  // namespace mixhmm

#endif
