#include "mixhmm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mixhmm/markov.hpp"
#include "mixhmm/parallel.hpp"

namespace mixhmm {

namespace {
const double kMissing = std::numeric_limits<double>::quiet_NaN();
}

ScenarioCase scenario_case_from_string(const std::string& name) {
  if (name == "hard") return ScenarioCase::hard;
  if (name == "medium-hard" || name == "medium_hard")
    return ScenarioCase::medium_hard;
  if (name == "medium-easy" || name == "medium_easy")
    return ScenarioCase::medium_easy;
  if (name == "easy") return ScenarioCase::easy;
  throw InputError("unknown scenario case: " + name);
}

std::string to_string(ScenarioCase c) {
  switch (c) {
    case ScenarioCase::hard: return "hard";
    case ScenarioCase::medium_hard: return "medium-hard";
    case ScenarioCase::medium_easy: return "medium-easy";
    case ScenarioCase::easy: return "easy";
  }
  return "?";
}

Missingness missingness_from_string(const std::string& name) {
  if (name == "none") return Missingness::none;
  if (name == "mcar1") return Missingness::mcar1;
  if (name == "mcar2") return Missingness::mcar2;
  if (name == "mnar") return Missingness::mnar;
  throw InputError("unknown missingness mechanism: " + name);
}

std::string to_string(Missingness m) {
  switch (m) {
    case Missingness::none: return "none";
    case Missingness::mcar1: return "mcar1";
    case Missingness::mcar2: return "mcar2";
    case Missingness::mnar: return "mnar";
  }
  return "?";
}

MixtureHmmParams scenario_params(ScenarioCase c) {
  double e = 0.0;
  double a2 = 0.0;
  switch (c) {
    case ScenarioCase::hard: e = 0.75; a2 = 3.0; break;
    case ScenarioCase::medium_hard: e = 0.90; a2 = 3.0; break;
    case ScenarioCase::medium_easy: e = 0.75; a2 = 5.0; break;
    case ScenarioCase::easy: e = 0.90; a2 = 5.0; break;
  }
  MixtureHmmParams params;
  params.delta = Vector::Constant(2, 0.5);
  Matrix A1(2, 2), A2(2, 2);
  A1 << e, 1.0 - e, 1.0 - e, e;
  A2 << 1.0 - e, e, e, 1.0 - e;
  params.trans = {A1, A2};
  params.pi = {Vector::Constant(2, 0.5), Vector::Constant(2, 0.5)};
  params.emissions = {{0.1, 1.0, 1.0}, {0.1, a2, 1.0}};
  return params;
}

ScenarioSpec make_scenario(ScenarioCase c, int n, int T,
                           Missingness missingness, int replicates,
                           std::uint64_t seed) {
  ScenarioSpec spec;
  spec.theta = scenario_params(c);
  spec.n = n;
  spec.T = T;
  spec.missingness = missingness;
  spec.replicates = replicates;
  spec.seed = seed;
  return spec;
}

namespace {

std::string subject_id_for(int index, int n) {
  int width = 1;
  for (int v = n; v >= 10; v /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%0*d", width, index + 1);
  return buf;
}

}  // namespace

Dataset sample_dataset(const ScenarioSpec& spec, Rng& rng) {
  validate(spec.theta);
  if (spec.n < 1 || spec.T < 0)
    throw InputError("sample_dataset: need n >= 1 and T >= 0");
  Dataset data;
  data.series.resize(spec.n);
  data.z.resize(spec.n);
  data.x.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const int k = rng.categorical(spec.theta.delta);
    data.z[i] = k;
    data.x[i] = sample_chain(spec.theta.pi[k], spec.theta.trans[k], spec.T, rng);
    RawSeries& series = data.series[i];
    series.subject_id = subject_id_for(i, spec.n);
    series.times.resize(spec.T + 1);
    series.values.resize(spec.T + 1);
    for (int t = 0; t <= spec.T; ++t) {
      series.times[t] = t;
      series.values[t] = zig_sample(spec.theta.emissions[data.x[i][t]], rng);
    }
  }
  return data;
}

void apply_mcar(Dataset& data, const std::vector<std::pair<int, int>>& runs,
                Rng& rng) {
  for (auto& series : data.series) {
    const long len = static_cast<long>(series.values.size());
    std::vector<std::pair<long, long>> placed;  // [start, end)
    for (const auto& [count, run_len] : runs) {
      if (run_len < 1 || run_len > len)
        throw InputError("apply_mcar: run does not fit inside the series");
      for (int c = 0; c < count; ++c) {
        bool ok = false;
        for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
          const long start = std::min<long>(
              len - run_len,
              static_cast<long>(rng.uniform() * (len - run_len + 1)));
          const long end = start + run_len;
          ok = true;
          for (const auto& [ps, pe] : placed)
            if (start < pe && ps < end) {
              ok = false;
              break;
            }
          if (ok) placed.emplace_back(start, end);
        }
        if (!ok)
          throw InputError(
              "apply_mcar: could not place non-overlapping missing runs");
      }
    }
    for (const auto& [ps, pe] : placed)
      for (long t = ps; t < pe; ++t) series.values[t] = kMissing;
  }
}

void apply_mnar(Dataset& data, Rng& rng) {
  for (auto& series : data.series)
    for (double& v : series.values) {
      const double p_observe = 1.0 / (1.0 + std::exp(-v));
      if (rng.uniform() >= p_observe) v = kMissing;
    }
}

void apply_missingness(Dataset& data, Missingness kind, Rng& rng) {
  switch (kind) {
    case Missingness::none: return;
    case Missingness::mcar1: apply_mcar(data, {{1, 10}}, rng); return;
    case Missingness::mcar2: apply_mcar(data, {{2, 20}}, rng); return;
    case Missingness::mnar: apply_mnar(data, rng); return;
  }
}

std::vector<SegmentedSubject> segment_dataset(const Dataset& data,
                                              long min_gap,
                                              ShortGapPolicy policy) {
  std::vector<SegmentedSubject> out;
  out.reserve(data.series.size());
  for (const auto& series : data.series)
    out.push_back(segment_on_missing(series, min_gap, policy));
  return out;
}

namespace {

double interpolated_quantile(std::vector<double>& values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

}  // namespace

std::vector<DecayPoint> misclassification_experiment(
    const ScenarioSpec& spec, const std::vector<int>& T_grid, int threads) {
  validate(spec.theta);
  const int K = spec.theta.num_components();
  if (K < 2)
    throw InputError("misclassification_experiment: needs K >= 2");
  const Rng root(spec.seed);

  std::vector<DecayPoint> points(T_grid.size());
  parallel_for(static_cast<int>(T_grid.size()), threads, [&](int gi) {
    const int T = T_grid[gi];
    Rng cell_rng = root.fork(10000 + gi);
    std::vector<double> ratios(spec.replicates);
    long errors = 0;
    for (int rep = 0; rep < spec.replicates; ++rep) {
      Rng rng = cell_rng.fork(rep);
      const int k0 = rng.categorical(spec.theta.delta);
      const auto path =
          sample_chain(spec.theta.pi[k0], spec.theta.trans[k0], T, rng);
      SegmentedSubject subject;
      Vector y(T + 1);
      for (int t = 0; t <= T; ++t)
        y[t] = zig_sample(spec.theta.emissions[path[t]], rng);
      subject.segments.push_back(std::move(y));

      const auto tables = posteriors(subject, spec.theta);
      const Vector log_post = spec.theta.delta.array().log().matrix() +
                              tables.loglik_by_component;
      double best_alt = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k)
        if (k != k0) best_alt = std::max(best_alt, log_post[k]);
      ratios[rep] = best_alt - log_post[k0];

      Index map = 0;
      tables.tau.maxCoeff(&map);
      if (static_cast<int>(map) != k0) ++errors;
    }
    DecayPoint point;
    point.T = T;
    point.median = interpolated_quantile(ratios, 0.5);
    point.q05 = interpolated_quantile(ratios, 0.05);
    point.q95 = interpolated_quantile(ratios, 0.95);
    point.error_rate =
        static_cast<double>(errors) / static_cast<double>(spec.replicates);
    points[gi] = point;
  });
  return points;
}

namespace {

struct ReplicateMetrics {
  bool degenerate = false;
  double ari_partition = 0.0;
  double ari_states = 0.0;
  MseBlocks mse;
};

ReplicateMetrics run_replicate(const ScenarioSpec& spec,
                               const ConvergenceCellSpec& cell,
                               const EmConfig& em, Rng rng) {
  ScenarioSpec local = spec;
  local.n = cell.n;
  local.T = cell.T;
  Dataset data = sample_dataset(local, rng);
  apply_missingness(data, cell.missingness, rng);
  // Injected runs are short, so missing slots are marginalized exactly
  // rather than split into stationary restarts.
  const auto subjects =
      segment_dataset(data, cell.T + 2, ShortGapPolicy::bridge);

  EmConfig em_local = em;
  em_local.seed = rng.fork(777).seed();
  em_local.threads = 1;

  ReplicateMetrics out;
  FitResult fitted;
  try {
    fitted = fit(subjects, spec.theta.num_components(),
                 spec.theta.num_states(), em_local);
  } catch (const EstimationError&) {
    out.degenerate = true;
    return out;
  }

  out.ari_partition = adjusted_rand_index(fitted.partition, data.z);
  out.mse = aligned_parameter_mse(fitted.params, spec.theta);

  // Pooled state agreement over every observed slot.
  std::vector<int> true_states;
  std::vector<int> decoded_states;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto decode = decode_subject(subjects[i], fitted.params);
    for (std::size_t s = 0; s < subjects[i].segments.size(); ++s) {
      const long start = subjects[i].segment_start_times[s];
      for (std::size_t t = 0; t < decode.paths[s].size(); ++t) {
        if (std::isnan(subjects[i].segments[s][t])) continue;
        decoded_states.push_back(decode.paths[s][t]);
        true_states.push_back(data.x[i][start + static_cast<long>(t)]);
      }
    }
  }
  out.ari_states = adjusted_rand_index(decoded_states, true_states);
  return out;
}

}  // namespace

std::vector<ConvergenceCell> convergence_experiment(
    const ScenarioSpec& spec, const std::vector<ConvergenceCellSpec>& cells,
    const EmConfig& em, int threads) {
  validate(spec.theta);
  const Rng root(spec.seed);
  const int reps = spec.replicates;
  const int total = static_cast<int>(cells.size()) * reps;

  std::vector<ReplicateMetrics> metrics(total);
  parallel_for(total, threads, [&](int task) {
    const int ci = task / reps;
    const int rep = task % reps;
    metrics[task] = run_replicate(
        spec, cells[ci], em,
        root.fork(static_cast<std::uint64_t>(ci) * 1000003 + rep));
  });

  std::vector<ConvergenceCell> out(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    ConvergenceCell cell;
    cell.n = cells[ci].n;
    cell.T = cells[ci].T;
    cell.missingness = cells[ci].missingness;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& m = metrics[ci * reps + rep];
      if (m.degenerate) {
        ++cell.degenerate;
        continue;
      }
      ++cell.replicates_used;
      cell.ari_partition += m.ari_partition;
      cell.ari_states += m.ari_states;
      cell.mse.trans += m.mse.trans;
      cell.mse.epsilon += m.mse.epsilon;
      cell.mse.shape += m.mse.shape;
      cell.mse.rate += m.mse.rate;
      cell.mse.delta += m.mse.delta;
    }
    if (cell.replicates_used > 0) {
      const double d = cell.replicates_used;
      cell.ari_partition /= d;
      cell.ari_states /= d;
      cell.mse.trans /= d;
      cell.mse.epsilon /= d;
      cell.mse.shape /= d;
      cell.mse.rate /= d;
      cell.mse.delta /= d;
    }
    out[ci] = cell;
  }
  return out;
}

}  // namespace mixhmm
