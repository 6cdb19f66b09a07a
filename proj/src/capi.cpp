#include "smcstab/smcstab.h"

#include <cstring>
#include <memory>
#include <string>
#include <variant>

#include "smcstab/commands.hpp"
#include "smcstab/config.hpp"
#include "smcstab/errors.hpp"
#include "smcstab/exact_discrete.hpp"
#include "smcstab/particle_filter.hpp"
#include "smcstab/simulate.hpp"

namespace {

thread_local std::string g_last_error;

smc_status status_from(const smcstab::Error& e) {
  using smcstab::ErrorCode;
  switch (e.code()) {
    case ErrorCode::invalid_argument: return SMC_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return SMC_ERR_IO;
    case ErrorCode::parse: return SMC_ERR_PARSE;
    case ErrorCode::config: return SMC_ERR_CONFIG;
    case ErrorCode::dimension: return SMC_ERR_DIMENSION;
    case ErrorCode::model_violation: return SMC_ERR_MODEL;
    case ErrorCode::degeneracy: return SMC_ERR_DEGENERACY;
    case ErrorCode::numeric: return SMC_ERR_NUMERIC;
    case ErrorCode::unsupported: return SMC_ERR_UNSUPPORTED;
  }
  return SMC_ERR_INTERNAL;
}

template <class Fn>
smc_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const smcstab::Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SMC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SMC_ERR_INTERNAL;
  }
}

smc_status invalid(const char* msg) {
  g_last_error = msg;
  return SMC_ERR_INVALID_ARGUMENT;
}

smc_status copy_matrix(const Eigen::MatrixXd& m, double* buf, size_t buf_len) {
  size_t need = static_cast<size_t>(m.size());
  if (buf_len < need) return invalid("buffer too small");
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      buf[static_cast<size_t>(c) * static_cast<size_t>(m.rows()) +
          static_cast<size_t>(r)] = m(r, c);
  return SMC_OK;
}

}  // namespace

struct smc_model {
  smcstab::ModelVariant variant;
  explicit smc_model(smcstab::ModelVariant v) : variant(std::move(v)) {}
};

struct smc_trajectory {
  bool discrete = false;
  smcstab::DiscreteTrajectory d;
  smcstab::VectorTrajectory v;
};

namespace {

// Type-erased bootstrap filter driven through the C interface.
struct FilterBase {
  virtual ~FilterBase() = default;
  virtual void step(const double* obs, int obs_dim) = 0;
  virtual double predictor_estimate(const smcstab::TestFunction& h) const = 0;
  virtual double log_likelihood() const = 0;
  virtual std::int64_t time() const = 0;
};

template <class PM>
struct FilterImpl final : FilterBase {
  PM pm;
  smcstab::ParticleSystem<PM> ps;
  smcstab::RngKey step_root;

  FilterImpl(PM pm_in, std::int64_t n, std::uint64_t seed)
      : pm(std::move(pm_in)),
        ps(smcstab::init_particles(pm, n, smcstab::key_from_seed(seed))),
        step_root(smcstab::derive_key(smcstab::key_from_seed(seed),
                                      smcstab::seed_tags::particle_step)) {}

  void step(const double* obs, int obs_dim) override {
    typename PM::Obs y{};
    if constexpr (std::is_same_v<typename PM::Obs, int>) {
      if (obs_dim != 1)
        throw smcstab::Error(smcstab::ErrorCode::dimension,
                             "discrete models take a single symbol");
      y = static_cast<int>(obs[0]);
    } else {
      y = Eigen::Map<const Eigen::VectorXd>(obs, obs_dim);
    }
    smcstab::Rng rng(smcstab::derive_key(
        step_root, static_cast<std::uint64_t>(ps.time + 1)));
    smcstab::bootstrap_step(ps, pm, y, rng);
  }

  double predictor_estimate(const smcstab::TestFunction& h) const override {
    return smcstab::estimate(ps, h, smcstab::EstimatorMode::predictor);
  }
  double log_likelihood() const override {
    return smcstab::log_likelihood_estimate(ps);
  }
  std::int64_t time() const override { return ps.time; }
};

}  // namespace

struct smc_filter {
  std::unique_ptr<FilterBase> impl;
};

extern "C" {

const char* smc_last_error(void) { return g_last_error.c_str(); }

const char* smc_status_name(smc_status status) {
  switch (status) {
    case SMC_OK: return "ok";
    case SMC_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case SMC_ERR_IO: return "io";
    case SMC_ERR_PARSE: return "parse";
    case SMC_ERR_CONFIG: return "config";
    case SMC_ERR_DIMENSION: return "dimension";
    case SMC_ERR_MODEL: return "model-violation";
    case SMC_ERR_DEGENERACY: return "degeneracy";
    case SMC_ERR_NUMERIC: return "numeric";
    case SMC_ERR_UNSUPPORTED: return "unsupported";
    case SMC_ERR_EXPERIMENT: return "experiment-failed";
    case SMC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

smc_status smc_model_load(const char* path, smc_model** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    auto model = std::make_unique<smc_model>(smcstab::load_model(path));
    *out = model.release();
    return SMC_OK;
  });
}

smc_status smc_model_kind(const smc_model* model, char* buf, size_t buf_len) {
  if (!model || !buf || buf_len == 0) return invalid("null argument");
  const char* kind = std::holds_alternative<smcstab::DiscreteHmm>(model->variant)
                         ? "discrete"
                     : std::holds_alternative<smcstab::LinearGaussianModel>(
                           model->variant)
                         ? "lgss"
                         : "generic";
  std::strncpy(buf, kind, buf_len - 1);
  buf[buf_len - 1] = '\0';
  return SMC_OK;
}

void smc_model_free(smc_model* model) { delete model; }

smc_status smc_simulate(const smc_model* model, int64_t length, uint64_t seed,
                        smc_trajectory** out) {
  if (!model || !out) return invalid("null argument");
  return guarded([&] {
    auto traj = std::make_unique<smc_trajectory>();
    if (const auto* d = std::get_if<smcstab::DiscreteHmm>(&model->variant)) {
      traj->discrete = true;
      traj->d = smcstab::simulate_hmm(*d, length, seed);
    } else if (const auto* l = std::get_if<smcstab::LinearGaussianModel>(
                   &model->variant)) {
      traj->v = smcstab::simulate_hmm(*l, length, seed);
    } else {
      traj->v = smcstab::simulate_hmm(
          std::get<smcstab::GenericHmm>(model->variant), length, seed);
    }
    *out = traj.release();
    return SMC_OK;
  });
}

int64_t smc_trajectory_length(const smc_trajectory* traj) {
  if (!traj) return 0;
  return traj->discrete ? static_cast<int64_t>(traj->d.states.size())
                        : static_cast<int64_t>(traj->v.states.cols());
}

int smc_trajectory_state_dim(const smc_trajectory* traj) {
  if (!traj) return 0;
  return traj->discrete ? 1 : static_cast<int>(traj->v.states.rows());
}

int smc_trajectory_obs_dim(const smc_trajectory* traj) {
  if (!traj) return 0;
  return traj->discrete ? 1 : static_cast<int>(traj->v.observations.rows());
}

smc_status smc_trajectory_states(const smc_trajectory* traj, double* buf,
                                 size_t buf_len) {
  if (!traj || !buf) return invalid("null argument");
  if (traj->discrete) {
    if (buf_len < traj->d.states.size()) return invalid("buffer too small");
    for (size_t i = 0; i < traj->d.states.size(); ++i)
      buf[i] = static_cast<double>(traj->d.states[i]);
    return SMC_OK;
  }
  return copy_matrix(traj->v.states, buf, buf_len);
}

smc_status smc_trajectory_observations(const smc_trajectory* traj, double* buf,
                                       size_t buf_len) {
  if (!traj || !buf) return invalid("null argument");
  if (traj->discrete) {
    if (buf_len < traj->d.observations.size()) return invalid("buffer too small");
    for (size_t i = 0; i < traj->d.observations.size(); ++i)
      buf[i] = static_cast<double>(traj->d.observations[i]);
    return SMC_OK;
  }
  return copy_matrix(traj->v.observations, buf, buf_len);
}

void smc_trajectory_free(smc_trajectory* traj) { delete traj; }

smc_status smc_filter_create(const smc_model* model, int64_t num_particles,
                             uint64_t seed, smc_filter** out) {
  if (!model || !out) return invalid("null argument");
  return guarded([&] {
    auto f = std::make_unique<smc_filter>();
    if (const auto* d = std::get_if<smcstab::DiscreteHmm>(&model->variant)) {
      f->impl = std::make_unique<FilterImpl<smcstab::DiscreteParticleModel>>(
          smcstab::DiscreteParticleModel(*d), num_particles, seed);
    } else if (const auto* l = std::get_if<smcstab::LinearGaussianModel>(
                   &model->variant)) {
      f->impl = std::make_unique<FilterImpl<smcstab::LgssParticleModel>>(
          smcstab::LgssParticleModel(*l), num_particles, seed);
    } else {
      f->impl = std::make_unique<FilterImpl<smcstab::GenericParticleModel>>(
          smcstab::GenericParticleModel(
              std::get<smcstab::GenericHmm>(model->variant)),
          num_particles, seed);
    }
    *out = f.release();
    return SMC_OK;
  });
}

smc_status smc_filter_step(smc_filter* filter, const double* obs, int obs_dim) {
  if (!filter || !obs || obs_dim < 1) return invalid("null argument");
  return guarded([&] {
    filter->impl->step(obs, obs_dim);
    return SMC_OK;
  });
}

smc_status smc_filter_estimate(const smc_filter* filter, const char* h,
                               double* out) {
  if (!filter || !h || !out) return invalid("null argument");
  return guarded([&] {
    smcstab::TestFunction fn = smcstab::TestFunction::parse(h);
    *out = filter->impl->predictor_estimate(fn);
    return SMC_OK;
  });
}

smc_status smc_filter_log_likelihood(const smc_filter* filter, double* out) {
  if (!filter || !out) return invalid("null argument");
  return guarded([&] {
    *out = filter->impl->log_likelihood();
    return SMC_OK;
  });
}

int64_t smc_filter_time(const smc_filter* filter) {
  return filter ? filter->impl->time() : -1;
}

void smc_filter_free(smc_filter* filter) { delete filter; }

smc_status smc_exact_filter_discrete(const smc_model* model, const int32_t* obs,
                                     int64_t n, double* predictors,
                                     double* filters,
                                     double* step_log_densities,
                                     double* log_likelihood) {
  if (!model || (!obs && n > 0)) return invalid("null argument");
  return guarded([&] {
    const auto* d = std::get_if<smcstab::DiscreteHmm>(&model->variant);
    if (!d)
      throw smcstab::Error(smcstab::ErrorCode::unsupported,
                           "exact filtering needs a discrete model");
    std::vector<int> y(obs, obs + n);
    smcstab::DiscreteFilterTrace trace = smcstab::forward_filter_discrete(*d, y);
    const int m = d->num_states();
    if (predictors)
      for (std::size_t t = 0; t < trace.predictors.size(); ++t)
        for (int i = 0; i < m; ++i)
          predictors[t * static_cast<std::size_t>(m) +
                     static_cast<std::size_t>(i)] = trace.predictors[t][i];
    if (filters)
      for (std::size_t t = 0; t < trace.filters.size(); ++t)
        for (int i = 0; i < m; ++i)
          filters[t * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)] =
              trace.filters[t][i];
    if (step_log_densities)
      for (std::size_t t = 0; t < trace.step_log_densities.size(); ++t)
        step_log_densities[t] = trace.step_log_densities[t];
    if (log_likelihood) *log_likelihood = trace.log_likelihood;
    return SMC_OK;
  });
}

smc_status smc_exact_variance_discrete(const smc_model* model,
                                       const int32_t* obs, int64_t n,
                                       const char* h, double* sigma2,
                                       double* sigma2_filter) {
  if (!model || (!obs && n > 0) || !h) return invalid("null argument");
  return guarded([&] {
    const auto* d = std::get_if<smcstab::DiscreteHmm>(&model->variant);
    if (!d)
      throw smcstab::Error(smcstab::ErrorCode::unsupported,
                           "exact variances need a discrete model");
    smcstab::TestFunction fn = smcstab::TestFunction::parse(h);
    Eigen::VectorXd hv = fn.values_on(*d);
    std::vector<int> y(obs, obs + n);
    if (sigma2)
      *sigma2 = smcstab::exact_asymptotic_variance_discrete(*d, y, hv);
    if (sigma2_filter)
      *sigma2_filter = smcstab::exact_filter_variance_discrete(*d, y, hv);
    return SMC_OK;
  });
}

smc_status smc_run_command(const char* config_path, const char* command,
                           const char* out_dir, const uint64_t* seed,
                           int threads) {
  if (!config_path) return invalid("null config path");
  return guarded([&] {
    smcstab::ExperimentConfig cfg = smcstab::load_config(config_path);
    if (command && std::string(command) != smcstab::command_name(cfg.command))
      throw smcstab::Error(smcstab::ErrorCode::config,
                           std::string("config declares command '") +
                               smcstab::command_name(cfg.command) +
                               "' but '" + command + "' was requested");
    if (out_dir) cfg.out_dir = out_dir;
    if (seed) cfg.base_seed = *seed;
    if (threads > 0) cfg.threads = threads;
    smcstab::CommandResult result = smcstab::run_command(cfg);
    if (!result.experiment_pass) {
      g_last_error = "experiment failed: " + result.summary;
      return SMC_ERR_EXPERIMENT;
    }
    g_last_error = result.summary;
    return SMC_OK;
  });
}

}  // extern "C"
