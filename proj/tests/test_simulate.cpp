#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixhmm/simulate.hpp"
#include "oracles.hpp"

using namespace mixhmm;

TEST_CASE("benchmark scenario parameters") {
  const auto hard = scenario_params(ScenarioCase::hard);
  CHECK(hard.trans[0](0, 0) == 0.75);
  CHECK(hard.emissions[1].shape == 3.0);
  const auto easy = scenario_params(ScenarioCase::easy);
  CHECK(easy.trans[0](0, 0) == 0.90);
  CHECK(easy.emissions[1].shape == 5.0);
  const auto me = scenario_params(ScenarioCase::medium_easy);
  CHECK(me.trans[0](0, 0) == 0.75);
  CHECK(me.emissions[1].shape == 5.0);
  const auto mh = scenario_params(ScenarioCase::medium_hard);
  CHECK(mh.trans[0](0, 0) == 0.90);
  CHECK(mh.emissions[1].shape == 3.0);
  for (const auto& p : {hard, easy, me, mh}) {
    CHECK_NOTHROW(validate(p));
    CHECK(p.delta[0] == 0.5);
    CHECK(p.emissions[0].epsilon == 0.1);
    CHECK(p.emissions[0].shape == 1.0);
    CHECK(p.emissions[1].rate == 1.0);
    // mirrored design: the second chain swaps the roles of the states
    CHECK(p.trans[1](0, 0) == doctest::Approx(1.0 - p.trans[0](0, 0)));
  }
}

TEST_CASE("sample_dataset") {
  SUBCASE("deterministic given the seed") {
    const auto spec =
        make_scenario(ScenarioCase::easy, 5, 30, Missingness::none, 1, 99);
    Rng r1(spec.seed), r2(spec.seed);
    const Dataset a = sample_dataset(spec, r1);
    const Dataset b = sample_dataset(spec, r2);
    CHECK(a.z == b.z);
    CHECK(a.x == b.x);
    for (int i = 0; i < 5; ++i) CHECK(a.series[i].values == b.series[i].values);
    CHECK(a.series[0].subject_id == "s1");
  }

  SUBCASE("class shares, transitions and zero fraction at Monte Carlo scale") {
    const auto spec =
        make_scenario(ScenarioCase::easy, 10000, 0, Missingness::none, 1, 7);
    Rng rng(7);
    const Dataset data = sample_dataset(spec, rng);
    double share = 0.0;
    for (int z : data.z) share += z == 0 ? 1.0 : 0.0;
    share /= 10000.0;
    CHECK(std::abs(share - 0.5) < 3.0 * std::sqrt(0.25 / 10000.0));

    const auto long_spec =
        make_scenario(ScenarioCase::easy, 200, 500, Missingness::none, 1, 8);
    Rng rng2(8);
    const Dataset long_data = sample_dataset(long_spec, rng2);
    Matrix counts[2] = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
    double zeros = 0.0, total = 0.0;
    for (int i = 0; i < 200; ++i) {
      const int k = long_data.z[i];
      for (int t = 1; t <= 500; ++t)
        counts[k](long_data.x[i][t - 1], long_data.x[i][t]) += 1.0;
      for (int t = 0; t <= 500; ++t) {
        total += 1.0;
        if (long_data.series[i].values[t] == 0.0) zeros += 1.0;
      }
    }
    for (int k = 0; k < 2; ++k)
      for (int h = 0; h < 2; ++h) {
        const double row = counts[k].row(h).sum();
        const double freq = counts[k](h, h) / row;
        const double expected = long_spec.theta.trans[k](h, h);
        CHECK(std::abs(freq - expected) <
              3.0 * std::sqrt(expected * (1.0 - expected) / row));
      }
    const double se = std::sqrt(0.1 * 0.9 / total);
    CHECK(std::abs(zeros / total - 0.1) < 3.0 * se);
  }
}

TEST_CASE("mcar masking") {
  const auto spec =
      make_scenario(ScenarioCase::easy, 20, 99, Missingness::none, 1, 11);
  Rng rng(11);
  Dataset data = sample_dataset(spec, rng);
  const Dataset original = data;

  SUBCASE("mcar-1 masks exactly 10 slots per subject") {
    apply_mcar(data, {{1, 10}}, rng);
    for (int i = 0; i < 20; ++i) {
      int missing = 0;
      for (std::size_t t = 0; t < data.series[i].values.size(); ++t)
        if (data.series[i].missing_at(t)) ++missing;
      CHECK(missing == 10);
    }
  }
  SUBCASE("mcar-2 masks exactly 40 slots per subject, in two runs") {
    apply_mcar(data, {{2, 20}}, rng);
    for (int i = 0; i < 20; ++i) {
      int missing = 0;
      int runs = 0;
      bool in_run = false;
      for (std::size_t t = 0; t < data.series[i].values.size(); ++t) {
        const bool na = data.series[i].missing_at(t);
        if (na) ++missing;
        if (na && !in_run) ++runs;
        in_run = na;
      }
      CHECK(missing == 40);
      // adjacent runs may merge; never more than two
      CHECK(runs <= 2);
      CHECK(runs >= 1);
    }
  }
  SUBCASE("observed values are never altered") {
    apply_mcar(data, {{2, 20}}, rng);
    for (int i = 0; i < 20; ++i)
      for (std::size_t t = 0; t < data.series[i].values.size(); ++t)
        if (!data.series[i].missing_at(t))
          CHECK(data.series[i].values[t] == original.series[i].values[t]);
  }
  SUBCASE("no runs leaves the data untouched") {
    apply_mcar(data, {}, rng);
    for (int i = 0; i < 20; ++i)
      CHECK(data.series[i].values == original.series[i].values);
  }
  SUBCASE("oversized runs cannot fit") {
    CHECK_THROWS_AS(apply_mcar(data, {{1, 200}}, rng), InputError);
    CHECK_THROWS_AS(apply_mcar(data, {{11, 10}}, rng), InputError);
  }
}

TEST_CASE("mnar masking") {
  SUBCASE("zero values are observed with probability one half") {
    Dataset data;
    data.series.resize(1);
    data.series[0].subject_id = "s1";
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
      data.series[0].times.push_back(t);
      data.series[0].values.push_back(0.0);
    }
    Rng rng(13);
    apply_mnar(data, rng);
    int observed = 0;
    for (std::size_t t = 0; t < data.series[0].values.size(); ++t)
      if (!data.series[0].missing_at(t)) ++observed;
    const double se = std::sqrt(0.25 / n);
    CHECK(std::abs(observed / static_cast<double>(n) - 0.5) < 3.0 * se);
  }
  SUBCASE("large values survive, and missingness tracks the state") {
    const auto spec =
        make_scenario(ScenarioCase::easy, 300, 200, Missingness::none, 1, 17);
    Rng rng(17);
    Dataset data = sample_dataset(spec, rng);
    const Dataset original = data;
    apply_mnar(data, rng);
    double observed_by_state[2] = {0, 0};
    double count_by_state[2] = {0, 0};
    double expected_sigmoid[2] = {0, 0};
    for (int i = 0; i < 300; ++i)
      for (int t = 0; t <= 200; ++t) {
        const int h = data.x[i][t];
        count_by_state[h] += 1.0;
        expected_sigmoid[h] +=
            1.0 / (1.0 + std::exp(-original.series[i].values[t]));
        if (!data.series[i].missing_at(t)) {
          observed_by_state[h] += 1.0;
          CHECK(data.series[i].values[t] == original.series[i].values[t]);
          if (original.series[i].values[t] > 20.0)
            CHECK_FALSE(data.series[i].missing_at(t));
        }
      }
    for (int h = 0; h < 2; ++h) {
      const double rate = observed_by_state[h] / count_by_state[h];
      const double expected = expected_sigmoid[h] / count_by_state[h];
      CHECK(std::abs(rate - expected) <
            3.0 * std::sqrt(0.25 / count_by_state[h]));
    }
    // the high-mean state is observed more often, by a wide margin
    CHECK(observed_by_state[1] / count_by_state[1] >
          observed_by_state[0] / count_by_state[0] + 0.05);
  }
}

TEST_CASE("misclassification experiment") {
  SUBCASE("identical components carry no information") {
    ScenarioSpec spec;
    spec.theta = scenario_params(ScenarioCase::easy);
    spec.theta.trans[1] = spec.theta.trans[0];
    spec.theta.pi[1] = spec.theta.pi[0];
    spec.replicates = 50;
    spec.seed = 4;
    const auto points = misclassification_experiment(spec, {5, 10}, 1);
    for (const auto& p : points) {
      CHECK(p.median == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(p.q95 == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  SUBCASE("separation improves with sequence length") {
    ScenarioSpec spec = make_scenario(ScenarioCase::easy, 1, 0,
                                      Missingness::none, 400, 21);
    const auto points = misclassification_experiment(spec, {10, 60}, 2);
    CHECK(points[1].median < points[0].median);
    CHECK(points[1].error_rate <= points[0].error_rate);
    CHECK(points[0].q05 <= points[0].median);
    CHECK(points[0].median <= points[0].q95);
  }
  SUBCASE("deterministic in the spec seed") {
    ScenarioSpec spec = make_scenario(ScenarioCase::hard, 1, 0,
                                      Missingness::none, 100, 33);
    const auto a = misclassification_experiment(spec, {15, 25}, 1);
    const auto b = misclassification_experiment(spec, {15, 25}, 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].median == b[i].median);
      CHECK(a[i].error_rate == b[i].error_rate);
    }
  }
}

TEST_CASE("convergence experiment smoke run") {
  ScenarioSpec spec = make_scenario(ScenarioCase::easy, 8, 80,
                                    Missingness::none, 2, 101);
  EmConfig em;
  em.restarts = 2;
  em.max_iter = 80;
  em.rel_tol = 1e-6;
  const std::vector<ConvergenceCellSpec> cells{
      {8, 80, Missingness::none}, {8, 80, Missingness::mcar1}};
  const auto rows = convergence_experiment(spec, cells, em, 2);
  REQUIRE(rows.size() == 2);
  for (const auto& cell : rows) {
    CHECK(cell.replicates_used + cell.degenerate == 2);
    if (cell.replicates_used > 0) {
      CHECK(cell.ari_partition >= -1.0);
      CHECK(cell.ari_partition <= 1.0);
      CHECK(cell.mse.trans >= 0.0);
    }
  }
  // reproducible end to end
  const auto again = convergence_experiment(spec, cells, em, 1);
  CHECK(again[0].ari_partition == rows[0].ari_partition);
  CHECK(again[1].mse.shape == rows[1].mse.shape);
}
