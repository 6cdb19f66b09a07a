#ifndef SMCSTAB_SIMULATE_HPP
#define SMCSTAB_SIMULATE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smcstab/models.hpp"

namespace smcstab {

DiscreteTrajectory simulate_hmm(const DiscreteHmm& model, std::int64_t n,
                                std::uint64_t seed);
VectorTrajectory simulate_hmm(const LinearGaussianModel& model, std::int64_t n,
                              std::uint64_t seed);
// Requires an observation sampler on the generic model.
VectorTrajectory simulate_hmm(const GenericHmm& model, std::int64_t n,
                              std::uint64_t seed);

// A simulated or replayed observation sequence. Discrete sequences carry
// alphabet symbols; continuous ones carry column vectors. Replayed files
// with a single column of integral values populate both views.
struct ObservationSequence {
  bool discrete = false;
  std::vector<int> symbols;
  Eigen::MatrixXd vectors;  // obs_dim x length

  std::int64_t size() const {
    return discrete ? static_cast<std::int64_t>(symbols.size())
                    : static_cast<std::int64_t>(vectors.cols());
  }
};

// Strictly stationary ergodic observation generators. The ar1 source starts
// from the stationary law N(0, noise_sd^2 / (1 - phi^2)); with thresholds it
// is quantized into the alphabet (symbol = number of thresholds below the
// value), otherwise it emits scalar observations.
struct HmmObservationSource {
  ModelVariant model;
  std::uint64_t seed = 0;
};

struct Ar1ObservationSource {
  double phi = 0.0;
  double noise_sd = 1.0;
  std::vector<double> thresholds;  // empty = continuous output
  std::uint64_t seed = 0;
};

struct ReplayObservationSource {
  std::string path;
};

using ObservationSource =
    std::variant<HmmObservationSource, Ar1ObservationSource, ReplayObservationSource>;

ObservationSequence stationary_observation_stream(const ObservationSource& source,
                                                  std::int64_t n);

ObservationSequence load_observation_file(const std::string& path,
                                          std::int64_t min_length = 0);

}  // namespace smcstab

#endif
