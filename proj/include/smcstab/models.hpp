#ifndef SMCSTAB_MODELS_HPP
#define SMCSTAB_MODELS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "smcstab/rng.hpp"

namespace smcstab {

// Finite-state hidden Markov chain with a finite observation alphabet.
// transition is row-stochastic (row x = law of the next state given x),
// emission rows are the per-state observation distributions, initial is the
// law of the first state. Immutable after construction; construction
// validates normalization and positivity.
class DiscreteHmm {
 public:
  DiscreteHmm(Eigen::MatrixXd transition, Eigen::MatrixXd emission,
              Eigen::VectorXd initial);

  int num_states() const { return static_cast<int>(transition_.rows()); }
  int num_symbols() const { return static_cast<int>(emission_.cols()); }
  const Eigen::MatrixXd& transition() const { return transition_; }
  const Eigen::MatrixXd& emission() const { return emission_; }
  const Eigen::VectorXd& initial() const { return initial_; }

  // Copy with a different initial distribution (validated).
  DiscreteHmm with_initial(Eigen::VectorXd initial) const;

 private:
  Eigen::MatrixXd transition_;
  Eigen::MatrixXd emission_;
  Eigen::VectorXd initial_;
};

// X_{k+1} = A X_k + R U_k, Y_k = B X_k + S V_k with U, V independent
// standard Gaussian vectors; X_0 ~ N(init_mean, init_cov).
class LinearGaussianModel {
 public:
  LinearGaussianModel(Eigen::MatrixXd a, Eigen::MatrixXd r, Eigen::MatrixXd b,
                      Eigen::MatrixXd s, Eigen::VectorXd init_mean,
                      Eigen::MatrixXd init_cov);

  int state_dim() const { return static_cast<int>(a_.rows()); }
  int noise_dim() const { return static_cast<int>(r_.cols()); }
  int obs_dim() const { return static_cast<int>(b_.rows()); }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& r() const { return r_; }
  const Eigen::MatrixXd& b() const { return b_; }
  const Eigen::MatrixXd& s() const { return s_; }
  const Eigen::VectorXd& init_mean() const { return init_mean_; }
  const Eigen::MatrixXd& init_cov() const { return init_cov_; }

  // Symmetric PSD square roots used by samplers; precomputed once.
  const Eigen::MatrixXd& init_cov_sqrt() const { return init_cov_sqrt_; }

 private:
  Eigen::MatrixXd a_, r_, b_, s_;
  Eigen::VectorXd init_mean_;
  Eigen::MatrixXd init_cov_;
  Eigen::MatrixXd init_cov_sqrt_;
};

// Sampler/density contract for arbitrary vector state spaces. Densities are
// black-box callables; transition_density and initial_density may be empty
// when the model only supports sampling.
struct GenericHmm {
  int state_dim = 1;
  int obs_dim = 1;
  std::string name = "generic";
  std::function<Eigen::VectorXd(Rng&)> initial_sampler;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)> transition_sampler;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      transition_density;  // q(x, x'); empty when unavailable
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      obs_density;  // g(x, y); must be strictly positive
  std::function<double(const Eigen::VectorXd&)> initial_density;  // optional
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)>
      obs_sampler;  // optional; required only for trajectory simulation
};

// Scalar ARCH(1)-type state recursion with Gaussian observation noise:
//   X_k = sqrt(alpha0 + alpha1 X_{k-1}^2) * Z_k,   Y_k ~ N(X_k, obs_sd^2).
GenericHmm make_arch_hmm(double alpha0, double alpha1, double obs_sd);

using ModelVariant = std::variant<DiscreteHmm, LinearGaussianModel, GenericHmm>;

// Local likelihood g(x, y). Throws a model-violation error when the value is
// nonpositive or non-finite.
double local_likelihood(const DiscreteHmm& model, int x, int y);
double local_likelihood(const LinearGaussianModel& model,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double local_likelihood(const GenericHmm& model, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y);

// Log Gaussian density of y under N(mean, cov_chol * cov_chol^T) given the
// lower Cholesky factor of the covariance.
double gaussian_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                            const Eigen::LLT<Eigen::MatrixXd>& cov_llt);

struct DiscreteTrajectory {
  std::vector<int> states;
  std::vector<int> observations;
  std::uint64_t seed = 0;
};

struct VectorTrajectory {
  Eigen::MatrixXd states;        // state_dim x length
  Eigen::MatrixXd observations;  // obs_dim x length
  std::uint64_t seed = 0;
};

}  // namespace smcstab

#endif
