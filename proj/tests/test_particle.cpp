#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smcstab/exact_discrete.hpp"
#include "smcstab/particle_filter.hpp"
#include "smcstab/simulate.hpp"
#include "smcstab/stats.hpp"
#include "support/oracles.hpp"

using namespace smcstab;

namespace {

struct ConstantOne {
  double operator()(int) const { return 1.0; }
};

}  // namespace

TEST_CASE("point-mass initial law puts every particle in state 0") {
  Eigen::MatrixXd q(2, 2), g(2, 2);
  q << 0.5, 0.5, 0.5, 0.5;
  g << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd chi(2);
  chi << 1.0, 0.0;
  DiscreteParticleModel pm(DiscreteHmm{q, g, chi});
  auto ps = init_particles(pm, 1000, std::uint64_t{7});
  for (int x : ps.particles) CHECK(x == 0);
  CHECK(ps.time == -1);
}

TEST_CASE("initial fractions match the law at binomial accuracy") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  const std::int64_t n = 100000;
  auto ps = init_particles(pm, n, std::uint64_t{11});
  double frac0 = 0.0;
  for (int x : ps.particles) frac0 += (x == 0) ? 1.0 : 0.0;
  frac0 /= static_cast<double>(n);
  CHECK(std::fabs(frac0 - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("same seed reproduces the particle array bit for bit") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  auto a = init_particles(pm, 5000, std::uint64_t{13});
  auto b = init_particles(pm, 5000, std::uint64_t{13});
  CHECK(a.particles == b.particles);
}

TEST_CASE("equal weights resample uniformly (pooled chi-square)") {
  Eigen::MatrixXd q(2, 2), g(2, 2);
  q << 0.5, 0.5, 0.5, 0.5;
  g << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd chi(2);
  chi << 0.5, 0.5;
  DiscreteHmm model(q, g, chi);
  DiscreteParticleModel pm(model);
  const std::int64_t n = 10000;
  auto ps = init_particles(pm, n, std::uint64_t{3});
  ps.weights.setOnes();
  ps.weight_sum = static_cast<double>(n);
  ps.weighted = true;
  std::vector<long long> counts(static_cast<std::size_t>(n), 0);
  Rng rng(SeedStream(21).derive({8}));
  const int rounds = 10;
  for (int rep = 0; rep < rounds; ++rep) {
    sample_ancestors(ps, rng);
    for (auto idx : ps.ancestors) ++counts[static_cast<std::size_t>(idx)];
  }
  std::vector<double> probs(static_cast<std::size_t>(n),
                            1.0 / static_cast<double>(n));
  double stat = oracles::chi_square_stat(counts, probs);
  CHECK(stat < chi_square_quantile(static_cast<double>(n - 1), 0.99));
}

TEST_CASE("a unit-weight particle captures every ancestor index") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 64, std::uint64_t{5});
  ps.weights.setZero();
  ps.weights[17] = 1.0;
  ps.weight_sum = 1.0;
  ps.weighted = true;
  Rng rng(SeedStream(1).derive({2}));
  sample_ancestors(ps, rng);
  for (auto idx : ps.ancestors) CHECK(idx == 17);
}

TEST_CASE("ancestor counts follow the multinomial law (1e5 draws)") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  const std::int64_t n = 5;
  auto ps = init_particles(pm, n, std::uint64_t{30});
  ps.weights.resize(n);
  ps.weights << 0.05, 0.3, 0.15, 0.4, 0.1;
  ps.weight_sum = ps.weights.sum();
  ps.weighted = true;
  std::vector<long long> counts(5, 0);
  Rng rng(SeedStream(6).derive({10}));
  for (int rep = 0; rep < 20000; ++rep) {
    sample_ancestors(ps, rng);
    for (auto idx : ps.ancestors) ++counts[static_cast<std::size_t>(idx)];
  }
  std::vector<double> probs = {0.05, 0.3, 0.15, 0.4, 0.1};
  double stat = oracles::chi_square_stat(counts, probs);
  CHECK(stat < chi_square_quantile(4, 0.99));
}

TEST_CASE("normalization is exact in both estimator modes") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 997, std::uint64_t{8});
  CHECK(estimate(ps, ConstantOne{}, EstimatorMode::predictor) == 1.0);
  compute_weights(ps, pm, 1);
  CHECK(estimate(ps, ConstantOne{}, EstimatorMode::filter) == 1.0);
}

TEST_CASE("filter mode requires weights") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 10, std::uint64_t{8});
  CHECK_THROWS_AS(estimate(ps, ConstantOne{}, EstimatorMode::filter), Error);
}

TEST_CASE("equal weights make filter and predictor estimates coincide") {
  Eigen::MatrixXd q(2, 2), g(2, 2);
  q << 0.7, 0.3, 0.4, 0.6;
  g << 0.5, 0.5, 0.5, 0.5;  // flat emissions: weights equal by construction
  Eigen::VectorXd chi(2);
  chi << 0.5, 0.5;
  DiscreteHmm model(q, g, chi);
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 4096, std::uint64_t{19});
  TestFunction h = TestFunction::indicator(0);
  double pred = estimate(ps, h, EstimatorMode::predictor);
  compute_weights(ps, pm, 0);
  CHECK(estimate(ps, h, EstimatorMode::filter) == doctest::Approx(pred).epsilon(1e-15));
}

TEST_CASE("weight scale invariance: scaled emissions leave estimates unchanged") {
  DiscreteHmm model = oracles::two_state_fixture();
  Eigen::MatrixXd g2 = model.emission();
  g2.col(0) *= 250.0;
  g2.col(1) *= 1e-6;
  DiscreteHmm scaled(model.transition(), g2, model.initial());
  DiscreteParticleModel pm(model), pm2(scaled);
  auto a = init_particles(pm, 2000, std::uint64_t{23});
  auto b = init_particles(pm2, 2000, std::uint64_t{23});
  REQUIRE(a.particles == b.particles);
  TestFunction h = TestFunction::indicator(0);
  std::vector<int> y = {0, 1, 0};
  Rng ra(SeedStream(77).derive({1}));
  Rng rb(SeedStream(77).derive({1}));
  for (int t = 0; t < 3; ++t) {
    compute_weights(a, pm, y[static_cast<std::size_t>(t)]);
    compute_weights(b, pm2, y[static_cast<std::size_t>(t)]);
    double fa = estimate(a, h, EstimatorMode::filter);
    double fb = estimate(b, h, EstimatorMode::filter);
    CHECK(fb == doctest::Approx(fa).epsilon(1e-12));
    resample_mutate(a, pm, ra);
    resample_mutate(b, pm2, rb);
    CHECK(a.particles == b.particles);
  }
}

TEST_CASE("weight collapse aborts with the failing time index") {
  Eigen::MatrixXd q(2, 2), g(2, 2);
  q << 1.0, 0.0, 0.0, 1.0;
  g << 1.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd chi(2);
  chi << 1.0, 0.0;
  DiscreteHmm model(q, g, chi);
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 100, std::uint64_t{2});
  try {
    compute_weights(ps, pm, 1);  // impossible symbol from state 0
    FAIL("expected degeneracy");
  } catch (const DegeneracyError& e) {
    CHECK(e.time_index() == 0);
  }
}

TEST_CASE("predictor estimates sit close to the exact predictor") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = {0, 1, 0};
  const std::int64_t n = 100000;
  RngKey key = SeedStream(91).derive({seed_tags::replicate, 0});
  auto rec = run_filter(pm, y, n, key, {TestFunction::indicator(0)});
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  Eigen::VectorXd h(2);
  h << 1.0, 0.0;
  double exact = trace.predictors[3].dot(h);
  CHECK(std::fabs(rec.predictor_estimates(3, 0) - exact) <
        5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("constant emissions make the likelihood estimate deterministic") {
  Eigen::MatrixXd q(3, 3);
  q.setConstant(1.0 / 3.0);
  Eigen::MatrixXd g(3, 2);
  g << 0.25, 0.75, 0.25, 0.75, 0.25, 0.75;
  Eigen::VectorXd chi(3);
  chi << 0.2, 0.3, 0.5;
  DiscreteHmm model(q, g, chi);
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 500, std::uint64_t{44});
  Rng rng(SeedStream(3).derive({4}));
  std::vector<int> y = {0, 0, 1, 0};
  for (int sym : y) bootstrap_step(ps, pm, sym, rng);
  double expect = 3.0 * std::log(0.25) + std::log(0.75);
  CHECK(log_likelihood_estimate(ps) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single-state models have a deterministic likelihood estimate") {
  Eigen::MatrixXd q(1, 1), g(1, 2);
  q << 1.0;
  g << 0.3, 0.7;
  Eigen::VectorXd chi(1);
  chi << 1.0;
  DiscreteHmm model(q, g, chi);
  DiscreteParticleModel pm(model);
  auto ps = init_particles(pm, 64, std::uint64_t{1});
  Rng rng(SeedStream(2).derive({2}));
  std::vector<int> y = {1, 0, 1, 1};
  for (int sym : y) bootstrap_step(ps, pm, sym, rng);
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  CHECK(log_likelihood_estimate(ps) ==
        doctest::Approx(trace.log_likelihood).epsilon(1e-12));
}

TEST_CASE("normalizing-constant estimator is unbiased (Monte Carlo CI)") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = {0, 1, 1, 0};
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  double exact = std::exp(trace.log_likelihood);
  const std::int64_t m = 20000;
  auto records = replicate_ensemble(pm, y, 50, m,
                                    SeedStream(555).derive({seed_tags::experiment}),
                                    {TestFunction::indicator(0)}, 2);
  double mean = 0.0, m2 = 0.0;
  for (const auto& rec : records) {
    double v = std::exp(rec.log_likelihood[3]);
    mean += v;
    m2 += v * v;
  }
  mean /= static_cast<double>(m);
  double var = (m2 - static_cast<double>(m) * mean * mean) /
               static_cast<double>(m - 1);
  double half = 2.576 * std::sqrt(var / static_cast<double>(m));
  CHECK(std::fabs(mean - exact) < half);
}

TEST_CASE("horizon zero records only the initial predictor estimates") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> empty;
  auto rec = run_filter(pm, empty, 1000, SeedStream(4).derive({1}),
                        {TestFunction::indicator(0)});
  CHECK(rec.predictor_estimates.rows() == 1);
  CHECK(rec.filter_estimates.rows() == 0);
  CHECK(rec.log_likelihood.size() == 0);
}

TEST_CASE("run_filter is bitwise deterministic") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = simulate_hmm(model, 40, 7).observations;
  RngKey key = SeedStream(12).derive({seed_tags::replicate, 0});
  auto a = run_filter(pm, y, 512, key, {TestFunction::indicator(0)});
  auto b = run_filter(pm, y, 512, key, {TestFunction::indicator(0)});
  CHECK(a.predictor_estimates == b.predictor_estimates);
  CHECK(a.filter_estimates == b.filter_estimates);
  CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("records replay from particle snapshots step by step") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = simulate_hmm(model, 15, 70).observations;
  RngKey key = SeedStream(9).derive({seed_tags::replicate, 3});
  TestFunction h = TestFunction::indicator(0);
  auto rec = run_filter(pm, y, 256, key, {h});

  auto ps = init_particles(pm, 256, key);
  RngKey step_root = derive_key(key, seed_tags::particle_step);
  for (std::size_t t = 0; t < y.size(); ++t) {
    CHECK(estimate(ps, h, EstimatorMode::predictor) ==
          rec.predictor_estimates(static_cast<Eigen::Index>(t), 0));
    compute_weights(ps, pm, y[t]);
    ParticleSystem<DiscreteParticleModel> snapshot = ps;  // stored copy
    CHECK(estimate(snapshot, h, EstimatorMode::filter) ==
          rec.filter_estimates(static_cast<Eigen::Index>(t), 0));
    CHECK(log_likelihood_estimate(snapshot) == rec.log_likelihood[static_cast<Eigen::Index>(t)]);
    Rng rng(derive_key(step_root, t));
    resample_mutate(ps, pm, rng);
  }
}

TEST_CASE("a singleton ensemble equals run_filter") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = {0, 1, 0, 0};
  RngKey base = SeedStream(64).derive({seed_tags::experiment});
  auto ensemble = replicate_ensemble(pm, y, 300, 1, base,
                                     {TestFunction::indicator(0)}, 1);
  RngKey rep0 = derive_key(derive_key(base, seed_tags::replicate), 0);
  auto solo = run_filter(pm, y, 300, rep0, {TestFunction::indicator(0)});
  CHECK(ensemble[0].predictor_estimates == solo.predictor_estimates);
  CHECK(ensemble[0].filter_estimates == solo.filter_estimates);
}

TEST_CASE("thread count never changes ensemble results") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = simulate_hmm(model, 25, 3).observations;
  RngKey base = SeedStream(31).derive({seed_tags::experiment});
  auto serial = replicate_ensemble(pm, y, 200, 24, base,
                                   {TestFunction::indicator(0)}, 1);
  auto parallel = replicate_ensemble(pm, y, 200, 24, base,
                                     {TestFunction::indicator(0)}, 3);
  for (std::size_t r = 0; r < serial.size(); ++r) {
    CHECK(serial[r].predictor_estimates == parallel[r].predictor_estimates);
    CHECK(serial[r].filter_estimates == parallel[r].filter_estimates);
    CHECK(serial[r].log_likelihood == parallel[r].log_likelihood);
  }
}

TEST_CASE("ensemble means agree with the exact predictor within 5 SE") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = {0, 1, 0};
  const std::int64_t m = 400, n = 500;
  auto records = replicate_ensemble(pm, y, n, m,
                                    SeedStream(10).derive({seed_tags::experiment}),
                                    {TestFunction::indicator(0)}, 2);
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  Eigen::VectorXd h(2);
  h << 1.0, 0.0;
  for (int t = 1; t <= 3; ++t) {
    double exact = trace.predictors[static_cast<std::size_t>(t)].dot(h);
    double mean = 0.0, ss = 0.0;
    for (const auto& rec : records) mean += rec.predictor_estimates(t, 0);
    mean /= static_cast<double>(m);
    for (const auto& rec : records) {
      double d = rec.predictor_estimates(t, 0) - mean;
      ss += d * d;
    }
    double se = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
    CHECK(std::fabs(mean - exact) < 5.0 * se);
  }
}

TEST_CASE("studentized predictor errors are asymptotically standard normal") {
  DiscreteHmm model = oracles::two_state_fixture();
  DiscreteParticleModel pm(model);
  std::vector<int> y = simulate_hmm(model, 20, 1234).observations;
  Eigen::VectorXd h(2);
  h << 1.0, 0.0;
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  const std::int64_t m = 2000, n = 10000;
  auto records = replicate_ensemble(pm, y, n, m,
                                    SeedStream(2025).derive({seed_tags::experiment}),
                                    {TestFunction::indicator(0)}, 2);
  for (int t : {1, 5, 20}) {
    std::vector<int> prefix(y.begin(), y.begin() + t);
    double sigma =
        std::sqrt(exact_asymptotic_variance_discrete(model, prefix, h));
    double exact = trace.predictors[static_cast<std::size_t>(t)].dot(h);
    std::vector<double> z;
    z.reserve(static_cast<std::size_t>(m));
    for (const auto& rec : records)
      z.push_back(std::sqrt(static_cast<double>(n)) *
                  (rec.predictor_estimates(t, 0) - exact) / sigma);
    double a2 = oracles::anderson_darling_normal(z);
    CHECK_MESSAGE(a2 < 3.857, "AD stat ", a2, " at time ", t);
  }
}
