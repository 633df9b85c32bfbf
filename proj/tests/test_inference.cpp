#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixhmm/inference.hpp"
#include "mixhmm/model.hpp"
#include "oracles.hpp"

using namespace mixhmm;

namespace {

Vector sample_segment(const MixtureHmmParams& params, int component, int T,
                      Rng& rng) {
  const auto path =
      sample_chain(params.pi[component], params.trans[component], T, rng);
  Vector y(T + 1);
  for (int t = 0; t <= T; ++t)
    y[t] = zig_sample(params.emissions[path[t]], rng);
  return y;
}

SegmentedSubject wrap(std::vector<Vector> segments) {
  SegmentedSubject subject;
  subject.subject_id = "s";
  for (std::size_t s = 0; s < segments.size(); ++s) {
    subject.segment_start_times.push_back(100 * s);
    if (s > 0) subject.gaps.push_back(10);
  }
  subject.segments = std::move(segments);
  return subject;
}

}  // namespace

TEST_CASE("forward collapses correctly for a single state") {
  MixtureHmmParams params;
  params.delta = Vector::Ones(1);
  params.pi = {Vector::Ones(1)};
  params.trans = {Matrix::Ones(1, 1)};
  params.emissions = {{0.0, 2.0, 1.5}};
  Vector y(1);
  y << 0.7;
  const auto fwd = forward(y, 0, params);
  CHECK(fwd.loglik ==
        doctest::Approx(zig_log_density(0.7, params.emissions[0]))
            .epsilon(1e-14));
}

TEST_CASE("forward equals the exhaustive path sum") {
  Rng rng(101);
  const MixtureHmmParams params = oracle::random_params(1, 2, rng);
  Vector y = sample_segment(params, 0, 3, rng);
  const auto fwd = forward(y, 0, params);
  const auto oracle_result = oracle::enumerate_segment(y, 0, params);
  CHECK(fwd.loglik ==
        doctest::Approx(std::log(oracle_result.likelihood)).epsilon(1e-10));
}

TEST_CASE("all-zero segments stay finite when a state holds the atom") {
  MixtureHmmParams params;
  params.delta = Vector::Ones(1);
  Matrix A(2, 2);
  A << 0.7, 0.3, 0.4, 0.6;
  params.trans = {A};
  params.pi = {stationary_distribution(A)};
  params.emissions = {{1.0, 1.0, 1.0}, {0.3, 2.0, 1.0}};
  Vector zeros = Vector::Zero(50);
  const auto fwd = forward(zeros, 0, params);
  CHECK(std::isfinite(fwd.loglik));
}

TEST_CASE("zero-likelihood time steps are reported as errors") {
  MixtureHmmParams params;
  params.delta = Vector::Ones(1);
  params.pi = {Vector::Ones(1)};
  params.trans = {Matrix::Ones(1, 1)};
  params.emissions = {{0.0, 2.0, 1.0}};  // no atom at zero
  Vector y(3);
  y << 1.0, 0.0, 2.0;
  CHECK_THROWS_WITH_AS(forward(y, 0, params), doctest::Contains("time index"),
                       EstimationError);
}

TEST_CASE("backward recursion properties") {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const MixtureHmmParams params = oracle::random_params(1, 3, rng);
    const int T = 1 + static_cast<int>(rng.uniform() * 5);
    const Vector y = sample_segment(params, 0, T, rng);
    const auto table = emission_table(y, params.emissions);
    const auto fwd = forward_scaled(table, params.pi[0], params.trans[0]);
    const Matrix beta = backward_scaled(table, params.trans[0], fwd);

    // terminal condition
    for (int h = 0; h < 3; ++h) CHECK(beta(T, h) == 1.0);

    // scaled alpha-beta product is the constant 1 at every t
    for (int t = 0; t <= T; ++t)
      CHECK(fwd.alpha.row(t).dot(beta.row(t)) ==
            doctest::Approx(1.0).epsilon(1e-10));

    // backward route reproduces the forward log-likelihood
    const double head = params.pi[0]
                            .cwiseProduct(table.g.row(0).transpose())
                            .cwiseProduct(beta.row(0).transpose())
                            .sum();
    double backward_loglik = std::log(head) + table.log_shift[0];
    for (int t = 1; t <= T; ++t) backward_loglik += fwd.log_scale[t];
    CHECK(backward_loglik == doctest::Approx(fwd.loglik).epsilon(1e-10));
  }
}

TEST_CASE("single-observation segment has unit beta") {
  Rng rng(104);
  const MixtureHmmParams params = oracle::random_params(1, 2, rng);
  Vector y(1);
  y << 1.3;
  const Matrix beta = backward(y, 0, params);
  CHECK(beta.rows() == 1);
  CHECK(beta(0, 0) == 1.0);
  CHECK(beta(0, 1) == 1.0);
}

TEST_CASE("posteriors match the exhaustive joint enumeration") {
  Rng rng(105);
  for (int trial = 0; trial < 30; ++trial) {
    const int K = 1 + static_cast<int>(rng.uniform() * 2);
    const int M = 1 + static_cast<int>(rng.uniform() * 3);
    const int T = 1 + static_cast<int>(rng.uniform() * 5);
    const MixtureHmmParams params = oracle::random_params(K, M, rng);
    std::vector<Vector> segments{sample_segment(params, 0, T, rng)};
    if (rng.uniform() < 0.4)
      segments.push_back(sample_segment(params, K - 1, 2, rng));
    const auto subject = wrap(segments);

    const auto tables = posteriors(subject, params);
    const auto truth = oracle::enumerate_subject(segments, params);

    for (int k = 0; k < K; ++k) {
      CHECK(tables.tau[k] == doctest::Approx(truth.tau[k]).epsilon(1e-10));
      CHECK(tables.loglik_by_component[k] ==
            doctest::Approx(std::log(truth.likelihood_by_component[k]))
                .epsilon(1e-10));
      for (std::size_t s = 0; s < segments.size(); ++s) {
        CHECK((tables.gamma[k][s] - truth.gamma[k][s]).cwiseAbs().maxCoeff() <
              1e-10);
        CHECK((tables.xi[k][s] - truth.xi[k][s]).cwiseAbs().maxCoeff() <
              1e-10);
      }
    }
    for (std::size_t s = 0; s < segments.size(); ++s)
      CHECK((tables.eta[s] - truth.eta[s]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("posterior normalization properties on random instances") {
  Rng rng(106);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 1 + static_cast<int>(rng.uniform() * 3);
    const int M = 1 + static_cast<int>(rng.uniform() * 3);
    const int T = 2 + static_cast<int>(rng.uniform() * 20);
    const MixtureHmmParams params = oracle::random_params(K, M, rng);
    const auto subject = wrap({sample_segment(params, 0, T, rng)});
    const auto tables = posteriors(subject, params);

    CHECK(tables.tau.sum() == doctest::Approx(1.0).epsilon(1e-10));
    for (int k = 0; k < K; ++k) {
      for (Index t = 0; t <= T; ++t)
        CHECK(tables.gamma[k][0].row(t).sum() ==
              doctest::Approx(1.0).epsilon(1e-10));
      for (Index t = 0; t < T; ++t)
        CHECK(tables.xi[k][0].row(t).sum() ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
    for (Index t = 0; t <= T; ++t) {
      CHECK(tables.eta[0].row(t).sum() ==
            doctest::Approx(1.0).epsilon(1e-10));
      // eta is the tau-mixture of gamma
      Vector mixed = Vector::Zero(M);
      for (int k = 0; k < K; ++k)
        mixed += tables.tau[k] * tables.gamma[k][0].row(t).transpose();
      CHECK((tables.eta[0].row(t).transpose() - mixed).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("class posterior reduces to proportions for identical components") {
  Rng rng(107);
  MixtureHmmParams params = oracle::random_params(1, 2, rng);
  params.delta = Vector(2);
  params.delta << 0.3, 0.7;
  params.pi = {params.pi[0], params.pi[0]};
  params.trans = {params.trans[0], params.trans[0]};
  const auto subject = wrap({sample_segment(params, 0, 30, rng)});
  const auto tables = posteriors(subject, params);
  CHECK(tables.tau[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(tables.tau[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("total log-likelihood") {
  Rng rng(108);
  const MixtureHmmParams params = oracle::random_params(1, 2, rng);
  const Vector seg1 = sample_segment(params, 0, 4, rng);
  const Vector seg2 = sample_segment(params, 0, 6, rng);

  SUBCASE("K=1 subject value is the sum of segment logliks") {
    const auto subject = wrap({seg1, seg2});
    const double expected =
        forward(seg1, 0, params).loglik + forward(seg2, 0, params).loglik;
    CHECK(total_loglik({subject}, params) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("additive over subjects") {
    const auto a = wrap({seg1});
    const auto b = wrap({seg2});
    CHECK(total_loglik({a, b}, params) ==
          doctest::Approx(total_loglik({a}, params) +
                          total_loglik({b}, params))
              .epsilon(1e-12));
  }

  SUBCASE("matches the exhaustive oracle on a tiny mixture") {
    const MixtureHmmParams mix = oracle::random_params(2, 2, rng);
    const auto subject = wrap({seg1});
    const auto truth = oracle::enumerate_subject({seg1}, mix);
    const double expected =
        std::log(mix.delta.cwiseProduct(truth.likelihood_by_component).sum());
    CHECK(total_loglik({subject}, mix) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("viterbi") {
  Rng rng(109);
  SUBCASE("single state gives a constant path") {
    const MixtureHmmParams params = oracle::random_params(1, 1, rng);
    const Vector y = sample_segment(params, 0, 10, rng);
    const auto path = viterbi(y, 0, params);
    for (int s : path) CHECK(s == 0);
  }
  SUBCASE("matches the exhaustive argmax") {
    for (int trial = 0; trial < 30; ++trial) {
      const int M = 2 + static_cast<int>(rng.uniform() * 2);
      const MixtureHmmParams params = oracle::random_params(1, M, rng);
      const Vector y = sample_segment(params, 0, 4, rng);
      CHECK(viterbi(y, 0, params) == oracle::enumerate_viterbi(y, 0, params));
    }
  }
  SUBCASE("deterministic transition rows force the path") {
    MixtureHmmParams params = oracle::random_params(1, 2, rng);
    Matrix A(2, 2);
    A << 0.0, 1.0, 1.0, 0.0;  // strict alternation
    params.trans = {A};
    Vector pi(2);
    pi << 1.0, 0.0;
    params.pi = {pi};
    Vector y = Vector::Constant(6, 0.5);
    const auto path = viterbi(y, 0, params);
    for (int t = 0; t < 6; ++t) CHECK(path[t] == t % 2);
  }
}

TEST_CASE("decode_subject") {
  Rng rng(110);
  SUBCASE("K=1 picks the only class") {
    const MixtureHmmParams params = oracle::random_params(1, 2, rng);
    const auto subject = wrap({sample_segment(params, 0, 10, rng)});
    CHECK(decode_subject(subject, params).map_class == 0);
  }
  SUBCASE("exact posterior tie goes to the lower class index") {
    MixtureHmmParams params = oracle::random_params(1, 2, rng);
    params.delta = Vector::Constant(2, 0.5);
    params.pi = {params.pi[0], params.pi[0]};
    params.trans = {params.trans[0], params.trans[0]};
    const auto subject = wrap({sample_segment(params, 0, 8, rng)});
    CHECK(decode_subject(subject, params).map_class == 0);
  }
}

TEST_CASE("label permutations leave the likelihood invariant") {
  Rng rng(111);
  for (int trial = 0; trial < 10; ++trial) {
    const MixtureHmmParams params = oracle::random_params(2, 3, rng);
    const auto subject = wrap({sample_segment(params, 0, 15, rng)});
    const double base = total_loglik({subject}, params);
    const auto base_tables = posteriors(subject, params);

    const std::vector<int> comp_perm{1, 0};
    const MixtureHmmParams swapped = permute_components(params, comp_perm);
    CHECK(total_loglik({subject}, swapped) ==
          doctest::Approx(base).epsilon(1e-12));
    const auto swapped_tables = posteriors(subject, swapped);
    CHECK(swapped_tables.tau[0] ==
          doctest::Approx(base_tables.tau[1]).epsilon(1e-12));

    const std::vector<int> state_perm{2, 0, 1};
    const MixtureHmmParams relabeled = permute_states(params, state_perm);
    CHECK(total_loglik({subject}, relabeled) ==
          doctest::Approx(base).epsilon(1e-12));
    const auto relabeled_tables = posteriors(subject, relabeled);
    for (int h = 0; h < 3; ++h)
      CHECK(relabeled_tables.eta[0](3, h) ==
            doctest::Approx(base_tables.eta[0](3, state_perm[h]))
                .epsilon(1e-12));
  }
}

TEST_CASE("scaling keeps very long well-separated sequences finite") {
  MixtureHmmParams params;
  params.delta = Vector::Ones(1);
  Matrix A(2, 2);
  A << 0.95, 0.05, 0.05, 0.95;
  params.trans = {A};
  params.pi = {stationary_distribution(A)};
  params.emissions = {{0.1, 1.0, 1.0}, {0.01, 50.0, 0.5}};
  Rng rng(112);
  const Vector y = sample_segment(params, 0, 100000, rng);
  const auto fwd = forward(y, 0, params);
  CHECK(std::isfinite(fwd.loglik));
  const auto subject = wrap({y});
  CHECK(std::isfinite(total_loglik({subject}, params)));
}
