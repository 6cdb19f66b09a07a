#ifndef SMCSTAB_KALMAN_HPP
#define SMCSTAB_KALMAN_HPP

#include <Eigen/Dense>
#include <vector>

#include "smcstab/models.hpp"

namespace smcstab {

// Predicted/filtered Gaussian moments per step plus the exact log one-step
// observation densities. pred entries condition on y_{0:k-1}, filt entries
// on y_{0:k}.
struct KalmanTrace {
  std::vector<Eigen::VectorXd> pred_means;
  std::vector<Eigen::MatrixXd> pred_covs;
  std::vector<Eigen::VectorXd> filt_means;
  std::vector<Eigen::MatrixXd> filt_covs;
  std::vector<double> step_log_densities;
  double log_likelihood = 0.0;
};

// y holds one observation per column. Requires S S^T invertible.
KalmanTrace kalman_filter(const LinearGaussianModel& model,
                          const Eigen::MatrixXd& y);

// Test oracle: builds the joint Gaussian of (X_k, Y_0, ..., Y_n) explicitly
// from the model matrices and conditions on the stacked observations.
// Refuses when the joint dimension exceeds 200.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GaussianPosterior gaussian_brute_force_posterior(const LinearGaussianModel& model,
                                                 const Eigen::MatrixXd& y,
                                                 int k);

}  // namespace smcstab

#endif
