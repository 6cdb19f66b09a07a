#ifndef SMCSTAB_PARTICLE_FILTER_HPP
#define SMCSTAB_PARTICLE_FILTER_HPP

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "smcstab/errors.hpp"
#include "smcstab/models.hpp"
#include "smcstab/rng.hpp"
#include "smcstab/test_functions.hpp"

namespace smcstab {

// Particle-facing adapters. Each adapter exposes the state type, initial and
// transition samplers, and the log local likelihood. The discrete adapter
// additionally exposes a per-state weight table so the hot loop never calls
// exp per particle.

class DiscreteParticleModel {
 public:
  using State = int;
  using Obs = int;

  explicit DiscreteParticleModel(const DiscreteHmm& hmm);

  const DiscreteHmm& hmm() const { return *hmm_; }

  void sample_initial(Rng& rng, State& x) const {
    x = sample_cumulative(cum_initial_, rng);
  }
  void sample_transition(const State& from, Rng& rng, State& to) const {
    to = sample_cumulative(cum_transition_.row(from), rng);
  }
  double log_obs_density(const State& x, Obs y) const {
    return log_emission_(x, y);
  }

  struct WeightTable {
    Eigen::VectorXd shifted;  // exp(log g - max_log) per state
    double max_log = 0.0;
  };
  WeightTable weight_table(Obs y) const;

 private:
  template <class Row>
  static int sample_cumulative(const Row& cum, Rng& rng) {
    double u = rng.uniform();
    const Eigen::Index m = cum.size();
    for (Eigen::Index i = 0; i < m - 1; ++i)
      if (u < cum[i]) return static_cast<int>(i);
    return static_cast<int>(m - 1);
  }

  const DiscreteHmm* hmm_;
  Eigen::MatrixXd cum_transition_;  // per-row running sums
  Eigen::VectorXd cum_initial_;
  Eigen::MatrixXd log_emission_;
};

class LgssParticleModel {
 public:
  using State = Eigen::VectorXd;
  using Obs = Eigen::VectorXd;

  explicit LgssParticleModel(const LinearGaussianModel& model);

  const LinearGaussianModel& model() const { return *model_; }

  void sample_initial(Rng& rng, State& x) const;
  void sample_transition(const State& from, Rng& rng, State& to) const;
  double log_obs_density(const State& x, const Obs& y) const;

 private:
  const LinearGaussianModel* model_;
  Eigen::LLT<Eigen::MatrixXd> obs_llt_;
};

class GenericParticleModel {
 public:
  using State = Eigen::VectorXd;
  using Obs = Eigen::VectorXd;

  explicit GenericParticleModel(const GenericHmm& hmm);

  const GenericHmm& hmm() const { return *hmm_; }

  void sample_initial(Rng& rng, State& x) const { x = hmm_->initial_sampler(rng); }
  void sample_transition(const State& from, Rng& rng, State& to) const {
    to = hmm_->transition_sampler(from, rng);
  }
  double log_obs_density(const State& x, const Obs& y) const;

 private:
  const GenericHmm* hmm_;
};

enum class EstimatorMode { predictor, filter };

// Weighted particle population. particles approximate the predictor at time
// `time + 1` (time = index of the last processed observation, -1 right
// after initialization). Weights live in linear space after a per-step
// max-shift; weight_sum is the sum of the shifted weights.
template <class M>
struct ParticleSystem {
  std::vector<typename M::State> particles;
  Eigen::VectorXd weights;
  double weight_sum = 0.0;
  double max_log_weight = 0.0;
  std::int64_t time = -1;
  double log_norm_const = 0.0;
  bool weighted = false;

  std::int64_t size() const { return static_cast<std::int64_t>(particles.size()); }

  // scratch, reused across steps
  std::vector<typename M::State> next_particles;
  std::vector<double> spacings;
  std::vector<std::int32_t> ancestors;
};

template <class M>
ParticleSystem<M> init_particles(const M& model, std::int64_t n, RngKey key) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "need at least 1 particle");
  ParticleSystem<M> ps;
  ps.particles.resize(static_cast<std::size_t>(n));
  ps.next_particles.resize(static_cast<std::size_t>(n));
  ps.weights = Eigen::VectorXd::Zero(n);
  Rng rng(derive_key(key, seed_tags::particle_init));
  for (auto& x : ps.particles) model.sample_initial(rng, x);
  return ps;
}

template <class M>
ParticleSystem<M> init_particles(const M& model, std::int64_t n,
                                 std::uint64_t seed) {
  return init_particles(model, n, key_from_seed(seed));
}

namespace detail {

template <class M>
concept HasWeightTable = requires(const M& m, typename M::Obs y) {
  m.weight_table(y);
};

}  // namespace detail

// Correction: computes the importance weights for observation y (max-shift
// in log space, stored linearly) and accrues ln(weight mean) into the
// normalizing-constant estimate. Aborts on total weight collapse.
template <class M>
void compute_weights(ParticleSystem<M>& ps, const M& model,
                     const typename M::Obs& y) {
  const std::int64_t n = ps.size();
  double max_log = -std::numeric_limits<double>::infinity();
  if constexpr (detail::HasWeightTable<M>) {
    auto table = model.weight_table(y);
    max_log = table.max_log;
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double w = table.shifted[ps.particles[static_cast<std::size_t>(i)]];
      ps.weights[i] = w;
      sum += w;
    }
    ps.weight_sum = sum;
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      double lw =
          model.log_obs_density(ps.particles[static_cast<std::size_t>(i)], y);
      ps.weights[i] = lw;
      if (lw > max_log) max_log = lw;
    }
    if (std::isfinite(max_log)) {
      double sum = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        double w = std::exp(ps.weights[i] - max_log);
        ps.weights[i] = w;
        sum += w;
      }
      ps.weight_sum = sum;
    } else {
      ps.weight_sum = 0.0;
    }
  }
  ps.max_log_weight = max_log;
  ps.time += 1;
  ps.weighted = true;
  if (!(ps.weight_sum > 0.0) || !std::isfinite(max_log))
    throw DegeneracyError("all particle weights vanished at time " +
                              std::to_string(ps.time),
                          ps.time);
  ps.log_norm_const +=
      max_log + std::log(ps.weight_sum / static_cast<double>(n));
}

// Multinomial ancestor draw by walking the weight CDF with sorted uniform
// order statistics (exponential spacings). Ties on a CDF knot resolve to the
// lower index. O(n) and a pure function of the stream.
template <class M>
void sample_ancestors(ParticleSystem<M>& ps, Rng& rng) {
  const std::int64_t n = ps.size();
  ps.spacings.resize(static_cast<std::size_t>(n) + 1);
  double total = 0.0;
  for (auto& s : ps.spacings) {
    total += rng.exponential();
    s = total;
  }
  ps.ancestors.resize(static_cast<std::size_t>(n));
  double scale = ps.weight_sum / total;
  double cum = ps.weights[0];
  std::int64_t j = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double u = ps.spacings[static_cast<std::size_t>(i)] * scale;
    while (cum < u && j < n - 1) {
      ++j;
      cum += ps.weights[j];
    }
    ps.ancestors[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(j);
  }
}

// Selection + mutation. Requires weights for the current observation.
template <class M>
void resample_mutate(ParticleSystem<M>& ps, const M& model, Rng& rng) {
  if (!ps.weighted)
    throw Error(ErrorCode::invalid_argument,
                "resample requires weights for the current observation");
  sample_ancestors(ps, rng);
  const std::int64_t n = ps.size();
  for (std::int64_t i = 0; i < n; ++i) {
    model.sample_transition(
        ps.particles[static_cast<std::size_t>(ps.ancestors[static_cast<std::size_t>(i)])],
        rng, ps.next_particles[static_cast<std::size_t>(i)]);
  }
  ps.particles.swap(ps.next_particles);
  ps.weighted = false;
}

template <class M>
void bootstrap_step(ParticleSystem<M>& ps, const M& model,
                    const typename M::Obs& y, Rng& rng) {
  compute_weights(ps, model, y);
  resample_mutate(ps, model, rng);
}

template <class M, class H>
double estimate(const ParticleSystem<M>& ps, const H& h, EstimatorMode mode) {
  const std::int64_t n = ps.size();
  if (mode == EstimatorMode::predictor) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      acc += h(ps.particles[static_cast<std::size_t>(i)]);
    return acc / static_cast<double>(n);
  }
  if (!ps.weighted)
    throw Error(ErrorCode::invalid_argument,
                "filter estimate requires weights for the current observation");
  if (!(ps.weight_sum > 0.0))
    throw DegeneracyError("filter estimate with zero total weight", ps.time);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    acc += ps.weights[i] * h(ps.particles[static_cast<std::size_t>(i)]);
  return acc / ps.weight_sum;
}

template <class M>
double log_likelihood_estimate(const ParticleSystem<M>& ps) {
  if (ps.time < 0)
    throw Error(ErrorCode::invalid_argument,
                "log-likelihood estimate requires at least one step");
  return ps.log_norm_const;
}

// Per-replicate output: predictor estimates at times 0..T (row t conditions
// on the first t observations), filter estimates and cumulative
// log-likelihood at times 0..T-1.
struct ReplicateRecord {
  std::int64_t replicate_id = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::string> function_labels;
  Eigen::MatrixXd predictor_estimates;  // (T+1) x #functions
  Eigen::MatrixXd filter_estimates;     // T x #functions
  Eigen::VectorXd log_likelihood;       // T
};

template <class M, class ObsRange>
ReplicateRecord run_filter(const M& model, const ObsRange& observations,
                           std::int64_t num_particles, RngKey run_key,
                           const std::vector<TestFunction>& test_functions) {
  const std::int64_t horizon = static_cast<std::int64_t>(observations.size());
  const std::int64_t nf = static_cast<std::int64_t>(test_functions.size());
  ReplicateRecord rec;
  rec.predictor_estimates.resize(horizon + 1, nf);
  rec.filter_estimates.resize(horizon, nf);
  rec.log_likelihood.resize(horizon);
  for (const auto& f : test_functions) rec.function_labels.push_back(f.label());

  ParticleSystem<M> ps = init_particles(model, num_particles, run_key);
  RngKey step_root = derive_key(run_key, seed_tags::particle_step);
  for (std::int64_t t = 0; t <= horizon; ++t) {
    for (std::int64_t f = 0; f < nf; ++f)
      rec.predictor_estimates(t, f) =
          estimate(ps, test_functions[static_cast<std::size_t>(f)],
                   EstimatorMode::predictor);
    if (t == horizon) break;
    compute_weights(ps, model, observations[static_cast<std::size_t>(t)]);
    for (std::int64_t f = 0; f < nf; ++f)
      rec.filter_estimates(t, f) =
          estimate(ps, test_functions[static_cast<std::size_t>(f)],
                   EstimatorMode::filter);
    rec.log_likelihood[t] = ps.log_norm_const;
    Rng step_rng(derive_key(step_root, static_cast<std::uint64_t>(t)));
    resample_mutate(ps, model, step_rng);
  }
  return rec;
}

// Runs M independent replicates; replicate r draws from the stream derived
// from (base_key, replicate, r), so results are identical no matter how the
// replicates are scheduled. Aggregation over records must stay commutative.
template <class M, class ObsRange>
std::vector<ReplicateRecord> replicate_ensemble(
    const M& model, const ObsRange& observations, std::int64_t num_particles,
    std::int64_t num_replicates, RngKey base_key,
    const std::vector<TestFunction>& test_functions, int threads = 1) {
  if (num_replicates < 1)
    throw Error(ErrorCode::invalid_argument, "need at least 1 replicate");
  std::vector<ReplicateRecord> records(
      static_cast<std::size_t>(num_replicates));
  RngKey rep_root = derive_key(base_key, seed_tags::replicate);

  auto run_one = [&](std::int64_t r) {
    RngKey key = derive_key(rep_root, static_cast<std::uint64_t>(r));
    try {
      records[static_cast<std::size_t>(r)] =
          run_filter(model, observations, num_particles, key, test_functions);
    } catch (const DegeneracyError& e) {
      throw DegeneracyError("replicate " + std::to_string(r) + ": " + e.what(),
                            e.time_index());
    }
    records[static_cast<std::size_t>(r)].replicate_id = r;
  };

  if (threads <= 1) {
    for (std::int64_t r = 0; r < num_replicates; ++r) run_one(r);
    return records;
  }

  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      std::int64_t r = next.fetch_add(1);
      if (r >= num_replicates) return;
      try {
        run_one(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int k = std::min<int>(threads, static_cast<int>(num_replicates));
  pool.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

}  // namespace smcstab

#endif
