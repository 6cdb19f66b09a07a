#include "smcstab/particle_filter.hpp"

#include <cmath>

namespace smcstab {

DiscreteParticleModel::DiscreteParticleModel(const DiscreteHmm& hmm)
    : hmm_(&hmm) {
  const int m = hmm.num_states();
  cum_transition_.resize(m, m);
  for (int x = 0; x < m; ++x) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += hmm.transition()(x, j);
      cum_transition_(x, j) = acc;
    }
  }
  cum_initial_.resize(m);
  double acc = 0.0;
  for (int x = 0; x < m; ++x) {
    acc += hmm.initial()[x];
    cum_initial_[x] = acc;
  }
  // Plain std::log so zero entries map to -inf (vectorized log clamps).
  log_emission_.resize(m, hmm.num_symbols());
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < hmm.num_symbols(); ++y)
      log_emission_(x, y) = std::log(hmm.emission()(x, y));
}

DiscreteParticleModel::WeightTable DiscreteParticleModel::weight_table(
    Obs y) const {
  if (y < 0 || y >= hmm_->num_symbols())
    throw Error(ErrorCode::dimension,
                "observation symbol " + std::to_string(y) +
                    " is outside the alphabet");
  WeightTable t;
  t.max_log = log_emission_.col(y).maxCoeff();
  t.shifted.resize(log_emission_.rows());
  // Plain std::exp so -inf maps to an exact zero weight.
  for (Eigen::Index x = 0; x < log_emission_.rows(); ++x)
    t.shifted[x] = std::exp(log_emission_(x, y) - t.max_log);
  return t;
}

LgssParticleModel::LgssParticleModel(const LinearGaussianModel& model)
    : model_(&model) {
  Eigen::MatrixXd obs_cov = model.s() * model.s().transpose();
  obs_llt_.compute(obs_cov);
  if (obs_llt_.info() != Eigen::Success)
    throw Error(ErrorCode::numeric,
                "observation noise covariance S S^T is not positive definite");
}

void LgssParticleModel::sample_initial(Rng& rng, State& x) const {
  const int dx = model_->state_dim();
  Eigen::VectorXd z(dx);
  for (int i = 0; i < dx; ++i) z[i] = rng.gaussian();
  x = model_->init_mean() + model_->init_cov_sqrt() * z;
}

void LgssParticleModel::sample_transition(const State& from, Rng& rng,
                                          State& to) const {
  const int du = model_->noise_dim();
  Eigen::VectorXd u(du);
  for (int i = 0; i < du; ++i) u[i] = rng.gaussian();
  to = model_->a() * from + model_->r() * u;
}

double LgssParticleModel::log_obs_density(const State& x, const Obs& y) const {
  return gaussian_log_density(y, model_->b() * x, obs_llt_);
}

GenericParticleModel::GenericParticleModel(const GenericHmm& hmm) : hmm_(&hmm) {
  if (!hmm.initial_sampler || !hmm.transition_sampler || !hmm.obs_density)
    throw Error(ErrorCode::model_violation,
                "generic model needs initial_sampler, transition_sampler and "
                "obs_density");
}

double GenericParticleModel::log_obs_density(const State& x, const Obs& y) const {
  double g = hmm_->obs_density(x, y);
  if (std::isnan(g) || g < 0.0)
    throw Error(ErrorCode::model_violation,
                "obs_density returned a negative or NaN value");
  return g == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(g);
}

}  // namespace smcstab
