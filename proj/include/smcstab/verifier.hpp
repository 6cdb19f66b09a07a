#ifndef SMCSTAB_VERIFIER_HPP
#define SMCSTAB_VERIFIER_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "smcstab/models.hpp"
#include "smcstab/simulate.hpp"

namespace smcstab {

// Stacked observability/controllability structure of a linear-Gaussian
// model, the block observation covariance F_n and the joint covariance G_r
// of (stacked observations, final state) for a deterministic start.
// Numerical ranks use the threshold max(dim) * machine epsilon * largest
// singular value; the threshold actually applied is recorded.
struct LgssStructure {
  int r_max = 0;
  std::vector<int> obs_rank;         // rank of O_n, n = 1..r_max
  std::vector<int> ctrl_rank;        // rank of C_n
  std::vector<double> f_min_eigval;  // smallest eigenvalue of F_n
  std::optional<int> r_star;         // smallest n with both ranks full
  bool f_positive_definite = false;  // F_n PD for all n >= r_star
  Eigen::MatrixXd obs_matrix;        // O_{r_max}
  Eigen::MatrixXd ctrl_matrix;       // C_{r_max}
  Eigen::MatrixXd f_matrix;          // F_{r_max}
  Eigen::MatrixXd g_matrix;          // G at r_star (or r_max if absent)
};

LgssStructure lgss_structure(const LinearGaussianModel& model, int r_max);

// Helpers for the stacked representation; exposed for tests.
Eigen::MatrixXd lgss_observability(const LinearGaussianModel& model, int n);
Eigen::MatrixXd lgss_controllability(const LinearGaussianModel& model, int n);
Eigen::MatrixXd lgss_f_matrix(const LinearGaussianModel& model, int n);
Eigen::MatrixXd lgss_g_matrix(const LinearGaussianModel& model, int r);

// Density of the observation block y_{0:n-1} (one observation per column)
// when the state starts deterministically at x0. Consistent with the
// product of the Kalman one-step densities started from a point mass.
double lgss_block_log_likelihood(const LinearGaussianModel& model,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::MatrixXd& y);
double lgss_block_likelihood(const LinearGaussianModel& model,
                             const Eigen::VectorXd& x0,
                             const Eigen::MatrixXd& y);

struct HyperRectangle {
  Eigen::VectorXd low;
  Eigen::VectorXd high;
};

// Grid extremes of the transition density over C x C. The grid includes the
// rectangle corners; min over a grid upper-bounds the true infimum and max
// lower-bounds the true supremum, so the certificate is one-sided.
struct DoeblinCertificate {
  HyperRectangle set;
  double eps_minus = 0.0;
  double eps_plus = 0.0;
  double ratio = 0.0;  // eps_minus / eps_plus
  int grid_points = 0;
};

DoeblinCertificate local_doeblin_constants(const GenericHmm& model,
                                           const HyperRectangle& set,
                                           int grid_points);

struct CheckResult {
  std::string name;
  std::string status;  // "pass", "fail" or "not-checkable"
  std::string evidence;
};

struct AssumptionReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (c.status == "fail") return false;
    return true;
  }
};

struct VerifierConfig {
  int r = 1;
  int r_max = 6;
  int grid_points = 41;
  double eta = 0.05;
  double delta = 0.05;
  double shell_radius = 10.0;
  std::optional<HyperRectangle> obs_set;    // K, per-observation box
  std::vector<int> obs_symbols;             // K for discrete alphabets
  std::optional<HyperRectangle> doeblin_set;  // C
  std::optional<HyperRectangle> drift_set;    // D (used for every block step)
};

// Numerical certification of the stationarity/local-Doeblin/drift
// assumptions on a concrete model against an observation sample. Checks that
// cannot be evaluated for the given model report "not-checkable" rather
// than silently passing.
AssumptionReport check_assumptions(const ModelVariant& model,
                                   const ObservationSequence& obs_sample,
                                   const VerifierConfig& config);

}  // namespace smcstab

#endif
