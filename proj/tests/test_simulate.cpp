#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "smcstab/errors.hpp"
#include "smcstab/simulate.hpp"
#include "smcstab/stats.hpp"
#include "support/oracles.hpp"

using namespace smcstab;

TEST_CASE("identity transition from a point mass stays put") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd g(3, 2);
  g << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd chi(3);
  chi << 1.0, 0.0, 0.0;
  DiscreteHmm model(q, g, chi);
  DiscreteTrajectory traj = simulate_hmm(model, 50, 123);
  for (int x : traj.states) CHECK(x == 0);
}

TEST_CASE("noise-free degenerate linear model emits the mean then zero") {
  Eigen::MatrixXd a(1, 1), r(1, 1), b(1, 1), s(1, 1), cov(1, 1);
  a << 0.0;
  r << 0.0;
  b << 1.0;
  s << 0.0;
  cov << 0.0;
  Eigen::VectorXd mean(1);
  mean << 4.25;
  LinearGaussianModel model(a, r, b, s, mean, cov);
  VectorTrajectory traj = simulate_hmm(model, 5, 9);
  CHECK(traj.observations(0, 0) == doctest::Approx(4.25));
  for (int k = 1; k < 5; ++k)
    CHECK(traj.observations(0, k) == doctest::Approx(0.0));
}

TEST_CASE("empirical state frequencies approach the stationary law") {
  DiscreteHmm model = oracles::two_state_fixture();
  const std::int64_t n = 100000;
  DiscreteTrajectory traj = simulate_hmm(model, n, 2024);
  Eigen::VectorXd pi = oracles::stationary_distribution(model.transition());
  double freq0 = 0.0;
  for (int x : traj.states) freq0 += (x == 0) ? 1.0 : 0.0;
  freq0 /= static_cast<double>(n);
  // 3 standard errors, inflated for the chain's autocorrelation.
  double se = std::sqrt(pi[0] * (1.0 - pi[0]) / static_cast<double>(n));
  CHECK(std::fabs(freq0 - pi[0]) < 3.0 * 4.0 * se);
}

TEST_CASE("long-run transition frequencies pass a chi-square test") {
  DiscreteHmm model = oracles::two_state_fixture();
  const std::int64_t n = 100000;
  DiscreteTrajectory traj = simulate_hmm(model, n, 77);
  // Counts per (from, to) cell conditioned on the source state.
  double stat = 0.0;
  for (int from = 0; from < 2; ++from) {
    std::vector<long long> counts(2, 0);
    for (std::size_t k = 1; k < traj.states.size(); ++k)
      if (traj.states[k - 1] == from) ++counts[static_cast<std::size_t>(traj.states[k])];
    std::vector<double> probs = {model.transition()(from, 0),
                                 model.transition()(from, 1)};
    stat += oracles::chi_square_stat(counts, probs);
  }
  CHECK(stat < chi_square_quantile(2, 0.99));
}

TEST_CASE("simulation is a pure function of (model, n, seed)") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteTrajectory a = simulate_hmm(model, 500, 31);
  DiscreteTrajectory b = simulate_hmm(model, 500, 31);
  CHECK(a.states == b.states);
  CHECK(a.observations == b.observations);
  DiscreteTrajectory c = simulate_hmm(model, 500, 32);
  CHECK(a.observations != c.observations);
}

TEST_CASE("hmm observation source equals simulate_hmm observations") {
  DiscreteHmm model = oracles::two_state_fixture();
  HmmObservationSource src{ModelVariant(model), 55};
  ObservationSequence obs = stationary_observation_stream(src, 200);
  DiscreteTrajectory traj = simulate_hmm(model, 200, 55);
  REQUIRE(obs.discrete);
  CHECK(obs.symbols == traj.observations);
}

TEST_CASE("ar1 with phi=0 has negligible lag-1 autocorrelation") {
  Ar1ObservationSource src{0.0, 1.0, {}, 404};
  const std::int64_t n = 100000;
  ObservationSequence obs = stationary_observation_stream(src, n);
  REQUIRE_FALSE(obs.discrete);
  double mean = obs.vectors.row(0).mean();
  double num = 0.0, den = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    double d = obs.vectors(0, k) - mean;
    den += d * d;
    if (k > 0) num += d * (obs.vectors(0, k - 1) - mean);
  }
  CHECK(std::fabs(num / den) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("ar1 stationary variance matches the closed form") {
  Ar1ObservationSource src{0.8, 1.0, {}, 17};
  const std::int64_t n = 100000;
  ObservationSequence obs = stationary_observation_stream(src, n);
  double mean = obs.vectors.row(0).mean();
  double var = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    double d = obs.vectors(0, k) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  CHECK(std::fabs(var - 1.0 / (1.0 - 0.64)) < 0.05 * (1.0 / (1.0 - 0.64)));
}

TEST_CASE("ar1 thresholds quantize into alphabet symbols") {
  Ar1ObservationSource src{0.5, 1.0, {0.0}, 3};
  ObservationSequence obs = stationary_observation_stream(src, 1000);
  REQUIRE(obs.discrete);
  for (int s : obs.symbols) CHECK((s == 0 || s == 1));
  Ar1ObservationSource raw{0.5, 1.0, {}, 3};
  ObservationSequence cont = stationary_observation_stream(raw, 1000);
  for (std::int64_t k = 0; k < 1000; ++k)
    CHECK(obs.symbols[static_cast<std::size_t>(k)] ==
          (cont.vectors(0, k) > 0.0 ? 1 : 0));
}

TEST_CASE("ar1 requires |phi| < 1") {
  Ar1ObservationSource src{1.0, 1.0, {}, 3};
  CHECK_THROWS_AS(stationary_observation_stream(src, 10), Error);
}

TEST_CASE("replay sources reproduce files and reject truncation") {
  std::string path = "replay_test_tmp.csv";
  {
    std::ofstream out(path);
    out << "1\n0\n1\n1\n0\n";
  }
  ReplayObservationSource src{path};
  ObservationSequence obs = stationary_observation_stream(src, 5);
  REQUIRE(obs.discrete);
  CHECK(obs.symbols == std::vector<int>{1, 0, 1, 1, 0});
  CHECK_THROWS_AS(stationary_observation_stream(src, 6), Error);
  CHECK_THROWS_AS(
      stationary_observation_stream(ReplayObservationSource{"missing_file.csv"}, 1),
      Error);
  std::remove(path.c_str());
}

TEST_CASE("arch trajectories are reproducible and have matching dimensions") {
  GenericHmm arch = make_arch_hmm(0.5, 0.3, 1.0);
  VectorTrajectory a = simulate_hmm(arch, 300, 12);
  VectorTrajectory b = simulate_hmm(arch, 300, 12);
  CHECK(a.states == b.states);
  CHECK(a.observations == b.observations);
  CHECK(a.states.cols() == 300);
}
