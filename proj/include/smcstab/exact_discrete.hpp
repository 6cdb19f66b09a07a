#ifndef SMCSTAB_EXACT_DISCRETE_HPP
#define SMCSTAB_EXACT_DISCRETE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "smcstab/models.hpp"

namespace smcstab {

// Exact filtering output for a finite-state model. predictors[k] is the law
// of X_k given y_{0:k-1} (predictors[0] is the initial distribution),
// filters[k] the law of X_k given y_{0:k}, step_densities[k] the one-step
// observation predictor density of y_k given y_{0:k-1}. Vectors are
// renormalized every step; the likelihood is accumulated in log space.
struct DiscreteFilterTrace {
  std::vector<Eigen::VectorXd> predictors;  // size n+1
  std::vector<Eigen::VectorXd> filters;     // size n
  std::vector<double> step_densities;       // size n
  std::vector<double> step_log_densities;   // size n
  double log_likelihood = 0.0;
};

DiscreteFilterTrace forward_filter_discrete(const DiscreteHmm& model,
                                            const std::vector<int>& y);

// Applies the unnormalized observation-weighted kernel of the segment
// y_{k:m} to a function h on states: each step multiplies pointwise by the
// emission column and then integrates the transition. An empty segment is
// the identity.
Eigen::VectorXd unnormalized_kernel_apply_discrete(const DiscreteHmm& model,
                                                   const std::vector<int>& segment,
                                                   const Eigen::VectorXd& h);

// Asymptotic variance of the scaled predictor Monte Carlo error at time n
// (the predictor conditioned on the n observations y_{0:n-1}), for the test
// function h given as a vector of per-state values.
double exact_asymptotic_variance_discrete(const DiscreteHmm& model,
                                          const std::vector<int>& y,
                                          const Eigen::VectorXd& h);

// Asymptotic variance of the scaled filter Monte Carlo error at time n given
// y_{0:n} (y must contain n+1 observations).
double exact_filter_variance_discrete(const DiscreteHmm& model,
                                      const std::vector<int>& y,
                                      const Eigen::VectorXd& h);

// Predictor/filter variance series for all prefixes of y. Entry t of the
// predictor series conditions on y_{0:t-1}; entry t of the filter series on
// y_{0:t}. Both have size y.size() + 1 and y.size() respectively.
struct VarianceSeries {
  std::vector<double> sigma2;         // predictor, size n+1 for n observations
  std::vector<double> sigma2_filter;  // filter, size n
  std::string h_label;
};

VarianceSeries exact_variance_series_discrete(const DiscreteHmm& model,
                                              const std::vector<int>& y,
                                              const Eigen::VectorXd& h,
                                              const std::string& h_label = "");

}  // namespace smcstab

#endif
