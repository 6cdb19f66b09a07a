#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smcstab/errors.hpp"
#include "smcstab/kalman.hpp"
#include "smcstab/simulate.hpp"
#include "support/oracles.hpp"

using namespace smcstab;

namespace {

LinearGaussianModel scalar_model(double a, double r, double b, double s) {
  Eigen::MatrixXd am(1, 1), rm(1, 1), bm(1, 1), sm(1, 1), cov(1, 1);
  am << a;
  rm << r;
  bm << b;
  sm << s;
  cov << 1.0;
  Eigen::VectorXd mean(1);
  mean << 0.0;
  return LinearGaussianModel(am, rm, bm, sm, mean, cov);
}

}  // namespace

TEST_CASE("zero observation matrix gives zero gain") {
  Eigen::MatrixXd a(1, 1), r(1, 1), b(1, 1), s(1, 1), cov(1, 1);
  a << 0.9;
  r << 0.5;
  b << 0.0;
  s << 1.0;
  cov << 2.0;
  Eigen::VectorXd mean(1);
  mean << 1.5;
  LinearGaussianModel model(a, r, b, s, mean, cov);
  Eigen::MatrixXd y(1, 4);
  y << 0.3, -0.7, 2.0, 0.1;
  KalmanTrace trace = kalman_filter(model, y);
  for (int k = 0; k < 4; ++k) {
    CHECK(trace.filt_means[static_cast<std::size_t>(k)](0) ==
          doctest::Approx(trace.pred_means[static_cast<std::size_t>(k)](0)));
    CHECK(trace.filt_covs[static_cast<std::size_t>(k)](0, 0) ==
          doctest::Approx(trace.pred_covs[static_cast<std::size_t>(k)](0, 0)));
  }
}

TEST_CASE("degenerate state pins the filtered mean and the step density") {
  Eigen::MatrixXd a(1, 1), r(1, 1), b(1, 1), s(1, 1), cov(1, 1);
  a << 0.0;
  r << 0.0;
  b << 1.0;
  s << 1.0;
  cov << 0.0;
  Eigen::VectorXd mean(1);
  mean << 2.0;
  LinearGaussianModel model(a, r, b, s, mean, cov);
  Eigen::MatrixXd y(1, 1);
  y << 3.1;
  KalmanTrace trace = kalman_filter(model, y);
  CHECK(trace.filt_means[0](0) == doctest::Approx(2.0));
  double innovation = 3.1 - 2.0;
  double expect = -0.5 * innovation * innovation - 0.5 * std::log(2.0 * M_PI);
  CHECK(trace.step_log_densities[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("scalar model matches joint-Gaussian conditioning") {
  LinearGaussianModel model = scalar_model(0.9, 1.0, 1.0, 1.0);
  VectorTrajectory traj = simulate_hmm(model, 5, 404);
  KalmanTrace trace = kalman_filter(model, traj.observations);
  for (int k = 0; k < 5; ++k) {
    GaussianPosterior filt = gaussian_brute_force_posterior(
        model, traj.observations.leftCols(k + 1), k);
    CHECK(std::fabs(trace.filt_means[static_cast<std::size_t>(k)](0) -
                    filt.mean(0)) < 1e-8);
    CHECK(std::fabs(trace.filt_covs[static_cast<std::size_t>(k)](0, 0) -
                    filt.cov(0, 0)) < 1e-8);
    GaussianPosterior pred = gaussian_brute_force_posterior(
        model, traj.observations.leftCols(k), k);
    CHECK(std::fabs(trace.pred_means[static_cast<std::size_t>(k)](0) -
                    pred.mean(0)) < 1e-8);
    CHECK(std::fabs(trace.pred_covs[static_cast<std::size_t>(k)](0, 0) -
                    pred.cov(0, 0)) < 1e-8);
  }
}

TEST_CASE("brute force with no observations returns the prior marginal") {
  LinearGaussianModel model = scalar_model(0.9, 1.0, 1.0, 1.0);
  Eigen::MatrixXd empty(1, 0);
  GaussianPosterior p0 = gaussian_brute_force_posterior(model, empty, 0);
  CHECK(p0.mean(0) == doctest::Approx(0.0));
  CHECK(p0.cov(0, 0) == doctest::Approx(1.0));
  GaussianPosterior p2 = gaussian_brute_force_posterior(model, empty, 2);
  // Var(X_2) = a^4 var0 + a^2 r^2 + r^2
  CHECK(p2.cov(0, 0) ==
        doctest::Approx(std::pow(0.9, 4) + std::pow(0.9, 2) + 1.0).epsilon(1e-12));
}

TEST_CASE("one observation is conjugate Gaussian updating") {
  LinearGaussianModel model = scalar_model(0.9, 1.0, 1.0, 1.0);
  Eigen::MatrixXd y(1, 1);
  y << 0.8;
  GaussianPosterior post = gaussian_brute_force_posterior(model, y, 0);
  // Precision addition: posterior precision = 1/var0 + b^2 / s^2.
  double prec = 1.0 / 1.0 + 1.0;
  CHECK(post.cov(0, 0) == doctest::Approx(1.0 / prec).epsilon(1e-12));
  CHECK(post.mean(0) == doctest::Approx(0.8 / prec * 1.0).epsilon(1e-12));
}

TEST_CASE("independence under b = 0") {
  LinearGaussianModel model = scalar_model(0.7, 0.4, 0.0, 1.0);
  Eigen::MatrixXd y(1, 3);
  y << 1.0, -2.0, 0.5;
  GaussianPosterior post = gaussian_brute_force_posterior(model, y, 1);
  GaussianPosterior prior =
      gaussian_brute_force_posterior(model, Eigen::MatrixXd(1, 0), 1);
  CHECK(post.mean(0) == doctest::Approx(prior.mean(0)).epsilon(1e-12));
  CHECK(post.cov(0, 0) == doctest::Approx(prior.cov(0, 0)).epsilon(1e-12));
}

TEST_CASE("kalman and brute force agree on random seeded models") {
  Rng rng(SeedStream(2718).derive({1}));
  for (int trial = 0; trial < 3; ++trial) {
    int dx = 1 + static_cast<int>(rng.uniform_below(2));
    LinearGaussianModel model = oracles::random_lgss(rng, dx, dx, 1);
    VectorTrajectory traj = simulate_hmm(model, 6, 1000 + trial);
    KalmanTrace trace = kalman_filter(model, traj.observations);
    for (int k = 0; k < 6; ++k) {
      GaussianPosterior filt = gaussian_brute_force_posterior(
          model, traj.observations.leftCols(k + 1), k);
      CHECK((trace.filt_means[static_cast<std::size_t>(k)] - filt.mean)
                .cwiseAbs()
                .maxCoeff() < 1e-8);
      CHECK((trace.filt_covs[static_cast<std::size_t>(k)] - filt.cov)
                .cwiseAbs()
                .maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("filtered covariance never exceeds predicted in the Loewner order") {
  Rng rng(SeedStream(31).derive({2}));
  for (int trial = 0; trial < 5; ++trial) {
    LinearGaussianModel model = oracles::random_lgss(rng, 2, 2, 2);
    VectorTrajectory traj = simulate_hmm(model, 10, 50 + trial);
    KalmanTrace trace = kalman_filter(model, traj.observations);
    for (std::size_t k = 0; k < 10; ++k) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(trace.pred_covs[k] -
                                                        trace.filt_covs[k]);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("singular innovation covariance raises a numeric error") {
  Eigen::MatrixXd a(1, 1), r(1, 1), b(1, 1), s(1, 1), cov(1, 1);
  a << 0.5;
  r << 0.0;
  b << 1.0;
  s << 0.0;  // no measurement noise, no state noise, deterministic start
  cov << 0.0;
  Eigen::VectorXd mean(1);
  mean << 0.0;
  LinearGaussianModel model(a, r, b, s, mean, cov);
  Eigen::MatrixXd y(1, 1);
  y << 0.0;
  CHECK_THROWS_AS(kalman_filter(model, y), Error);
}

TEST_CASE("brute force refuses oversized joint dimensions") {
  LinearGaussianModel model = scalar_model(0.9, 1.0, 1.0, 1.0);
  Eigen::MatrixXd y(1, 150);
  y.setZero();
  CHECK_THROWS_AS(gaussian_brute_force_posterior(model, y, 149), Error);
}
