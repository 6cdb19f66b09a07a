#ifndef SMCSTAB_STABILITY_HPP
#define SMCSTAB_STABILITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "smcstab/exact_discrete.hpp"
#include "smcstab/models.hpp"
#include "smcstab/simulate.hpp"
#include "smcstab/test_functions.hpp"

namespace smcstab {

// Two-part surrogate for "no growth over time": a least-squares slope with a
// heteroskedasticity-robust confidence interval, plus the ratio of the
// second-half maximum to the first-half median. The slope check passes when
// the interval does not lie entirely above zero.
struct TrendTest {
  double slope = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double half_ratio = 1.0;
  bool slope_pass = true;
  bool ratio_pass = true;
  bool pass = true;
};

TrendTest trend_test(const std::vector<double>& series,
                     double significance = 0.95, double ratio_max = 3.0);

struct StabilityReport {
  std::int64_t horizon = 0;
  std::int64_t num_particles = 0;
  std::int64_t num_replicates = 0;
  std::string h_label;
  std::string ref_kind;  // "exact-discrete", "kalman" or "replicate-mean"
  std::vector<double> empirical_variance;  // per predictor time 0..n_max
  std::vector<double> exact_sigma2;        // filled for discrete models
  double envelope_coverage = -1.0;  // fraction of times with exact sigma2
                                    // inside the 99% chi-square envelope
  TrendTest trend;
  bool pass = false;
};

// Long-horizon experiment: one observation stream, M independent bootstrap
// filters, per-time mean square of the sqrt(N)-scaled predictor error around
// the reference. The reference is the exact predictor mean where one exists
// (discrete models; Kalman for linear-Gaussian with coordinate functions)
// and the cross-replicate mean otherwise.
StabilityReport variance_sequence_experiment(const ModelVariant& model,
                                             const ObservationSource& source,
                                             std::int64_t num_particles,
                                             std::int64_t num_replicates,
                                             std::int64_t n_max,
                                             const TestFunction& h,
                                             std::uint64_t seed, int threads = 1);

// Fixed short horizon, exact-oracle comparison of both asymptotic variances
// at every time index (discrete models only).
struct VarianceExperimentReport {
  std::int64_t num_particles = 0;
  std::int64_t num_replicates = 0;
  std::string h_label;
  std::vector<double> sigma2_exact;         // predictor times 0..T
  std::vector<double> sigma2_emp;           // mean square of scaled errors
  std::vector<double> sigma2_filter_exact;  // filter times 0..T-1
  std::vector<double> sigma2_filter_emp;
  double envelope_low = 0.0;   // chi-square multipliers on the exact value
  double envelope_high = 0.0;  // (99% interval, M degrees of freedom)
};

VarianceExperimentReport clt_variance_experiment(const DiscreteHmm& model,
                                                 const std::vector<int>& y,
                                                 std::int64_t num_particles,
                                                 std::int64_t num_replicates,
                                                 const TestFunction& h,
                                                 std::uint64_t seed,
                                                 int threads = 1);

struct LpReport {
  double p = 2.0;
  std::int64_t time_index = 0;
  std::vector<std::int64_t> n_grid;
  std::vector<double> estimates;  // sqrt(N) * (E|error|^p)^{1/p} per N
  double sigma = 0.0;             // exact asymptotic deviation at time_index
  double gaussian_moment = 0.0;   // E|Z|^p from quadrature
  double reference = 0.0;         // sigma * (E|Z|^p)^{1/p}
  double printed_constant = 0.0;  // sqrt(2)*sigma*(Gamma((p+1)/2)/sqrt(2*pi))^{1/p},
                                  // logged for comparison against the reference
  double final_relative_gap = 0.0;
};

LpReport lp_error_experiment(const DiscreteHmm& model,
                             const std::vector<int>& observations,
                             std::int64_t time_index, double p,
                             const std::vector<std::int64_t>& n_grid,
                             std::int64_t num_replicates, const TestFunction& h,
                             std::uint64_t seed, int threads = 1);

// Exact filter traces from two initial distributions; per-step gap of the
// log one-step predictor densities and total-variation distance between the
// predictors, with a log-linear decay fit over the positive part of the gap.
struct ForgettingReport {
  std::vector<double> loglik_gap;    // k = 0..n-1
  std::vector<double> tv_distance;   // predictor TV after k+1 observations
  double slope = 0.0;                // of ln(tv) against k
  double slope_ci_low = 0.0;         // 99% interval
  double slope_ci_high = 0.0;
  double rate = 1.0;                 // exp(slope)
  int fit_points = 0;
  bool decay_pass = false;
};

ForgettingReport forgetting_experiment(const DiscreteHmm& model,
                                       const std::vector<int>& y,
                                       const Eigen::VectorXd& chi_a,
                                       const Eigen::VectorXd& chi_b);

// Normalized log-likelihood n^{-1} ln L(y_{0:n-1}) for n = 1..n_max; the
// last-quartile standard deviation diagnoses convergence to the limit.
struct RateReport {
  std::vector<double> normalized_loglik;  // index n-1 holds the value at n
  double last_quartile_std = 0.0;
  double final_value = 0.0;
};

RateReport loglik_rate_experiment(const ModelVariant& model,
                                  const ObservationSource& source,
                                  std::int64_t n_max);

}  // namespace smcstab

#endif
