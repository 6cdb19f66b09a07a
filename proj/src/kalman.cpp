#include "smcstab/kalman.hpp"

#include <cmath>

#include "smcstab/errors.hpp"

namespace smcstab {

KalmanTrace kalman_filter(const LinearGaussianModel& model,
                          const Eigen::MatrixXd& y) {
  const int dx = model.state_dim();
  const int dy = model.obs_dim();
  if (y.rows() != dy)
    throw Error(ErrorCode::dimension, "observation rows must match obs dim");

  const Eigen::MatrixXd state_noise = model.r() * model.r().transpose();
  const Eigen::MatrixXd obs_noise = model.s() * model.s().transpose();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dx, dx);

  KalmanTrace trace;
  const Eigen::Index n = y.cols();
  trace.pred_means.reserve(n);
  trace.pred_covs.reserve(n);
  trace.filt_means.reserve(n);
  trace.filt_covs.reserve(n);
  trace.step_log_densities.reserve(n);

  Eigen::VectorXd mean = model.init_mean();
  Eigen::MatrixXd cov = model.init_cov();
  for (Eigen::Index k = 0; k < n; ++k) {
    trace.pred_means.push_back(mean);
    trace.pred_covs.push_back(cov);

    Eigen::MatrixXd innov_cov =
        model.b() * cov * model.b().transpose() + obs_noise;
    innov_cov = 0.5 * (innov_cov + innov_cov.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(innov_cov);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::numeric,
                  "singular innovation covariance at time " + std::to_string(k));

    Eigen::VectorXd innovation = y.col(k) - model.b() * mean;
    double log_density = gaussian_log_density(y.col(k), model.b() * mean, llt);
    Eigen::MatrixXd gain =
        llt.solve(model.b() * cov.transpose()).transpose();

    Eigen::VectorXd filt_mean = mean + gain * innovation;
    // Joseph form keeps the covariance symmetric PSD.
    Eigen::MatrixXd ikb = identity - gain * model.b();
    Eigen::MatrixXd filt_cov =
        ikb * cov * ikb.transpose() + gain * obs_noise * gain.transpose();
    filt_cov = 0.5 * (filt_cov + filt_cov.transpose());

    trace.filt_means.push_back(filt_mean);
    trace.filt_covs.push_back(filt_cov);
    trace.step_log_densities.push_back(log_density);
    trace.log_likelihood += log_density;

    mean = model.a() * filt_mean;
    cov = model.a() * filt_cov * model.a().transpose() + state_noise;
    cov = 0.5 * (cov + cov.transpose());
  }
  return trace;
}

GaussianPosterior gaussian_brute_force_posterior(const LinearGaussianModel& model,
                                                 const Eigen::MatrixXd& y,
                                                 int k) {
  const int dx = model.state_dim();
  const int dy = model.obs_dim();
  const int n = static_cast<int>(y.cols());
  if (k < 0) throw Error(ErrorCode::invalid_argument, "negative time index");
  if (y.rows() != dy)
    throw Error(ErrorCode::dimension, "observation rows must match obs dim");
  const int steps = std::max(k, n - 1);
  const int joint_dim = (steps + 1) * dx + n * dy;
  if (joint_dim > 200)
    throw Error(ErrorCode::invalid_argument,
                "joint dimension " + std::to_string(joint_dim) +
                    " exceeds the brute-force cap of 200");

  const Eigen::MatrixXd state_noise = model.r() * model.r().transpose();
  const Eigen::MatrixXd obs_noise = model.s() * model.s().transpose();

  // Moments of the stacked state vector (X_0, ..., X_steps).
  std::vector<Eigen::VectorXd> x_mean(steps + 1);
  std::vector<std::vector<Eigen::MatrixXd>> x_cov(
      steps + 1, std::vector<Eigen::MatrixXd>(steps + 1));
  x_mean[0] = model.init_mean();
  x_cov[0][0] = model.init_cov();
  for (int i = 0; i < steps; ++i) {
    x_mean[i + 1] = model.a() * x_mean[i];
    for (int j = 0; j <= i; ++j) {
      x_cov[i + 1][j] = model.a() * x_cov[i][j];
      x_cov[j][i + 1] = x_cov[i + 1][j].transpose();
    }
    x_cov[i + 1][i + 1] =
        model.a() * x_cov[i][i] * model.a().transpose() + state_noise;
  }

  // Joint of (X_k, Y_0, ..., Y_{n-1}).
  Eigen::VectorXd mu(dx + n * dy);
  Eigen::MatrixXd sigma(dx + n * dy, dx + n * dy);
  mu.head(dx) = x_mean[k];
  sigma.topLeftCorner(dx, dx) = x_cov[k][k];
  for (int j = 0; j < n; ++j) {
    mu.segment(dx + j * dy, dy) = model.b() * x_mean[j];
    Eigen::MatrixXd cross = x_cov[k][j] * model.b().transpose();
    sigma.block(0, dx + j * dy, dx, dy) = cross;
    sigma.block(dx + j * dy, 0, dy, dx) = cross.transpose();
    for (int i = 0; i < n; ++i) {
      Eigen::MatrixXd yy = model.b() * x_cov[i][j] * model.b().transpose();
      if (i == j) yy += obs_noise;
      sigma.block(dx + i * dy, dx + j * dy, dy, dy) = yy;
    }
  }

  Eigen::VectorXd y_stack(n * dy);
  for (int j = 0; j < n; ++j) y_stack.segment(j * dy, dy) = y.col(j);

  const auto sxx = sigma.topLeftCorner(dx, dx);
  const auto sxy = sigma.topRightCorner(dx, n * dy);
  const auto syy = sigma.bottomRightCorner(n * dy, n * dy);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(syy);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::numeric, "singular stacked observation covariance");

  GaussianPosterior post;
  post.mean = mu.head(dx) + sxy * ldlt.solve(y_stack - mu.tail(n * dy));
  post.cov = sxx - sxy * ldlt.solve(sxy.transpose());
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  return post;
}

}  // namespace smcstab
