#include "smcstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "smcstab/errors.hpp"

namespace smcstab {

namespace {

int sample_row(const Eigen::VectorXd& probs, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  const Eigen::Index m = probs.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(m - 1);
}

}  // namespace

DiscreteTrajectory simulate_hmm(const DiscreteHmm& model, std::int64_t n,
                                std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative length");
  Rng rng = SeedStream(seed).rng({seed_tags::simulate});
  DiscreteTrajectory traj;
  traj.seed = seed;
  traj.states.reserve(static_cast<std::size_t>(n));
  traj.observations.reserve(static_cast<std::size_t>(n));
  int x = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    x = k == 0 ? sample_row(model.initial(), rng)
               : sample_row(model.transition().row(x), rng);
    int y = sample_row(model.emission().row(x), rng);
    traj.states.push_back(x);
    traj.observations.push_back(y);
  }
  return traj;
}

VectorTrajectory simulate_hmm(const LinearGaussianModel& model, std::int64_t n,
                              std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative length");
  Rng rng = SeedStream(seed).rng({seed_tags::simulate});
  const int dx = model.state_dim();
  const int du = model.noise_dim();
  const int dy = model.obs_dim();
  VectorTrajectory traj;
  traj.seed = seed;
  traj.states.resize(dx, n);
  traj.observations.resize(dy, n);
  Eigen::VectorXd x(dx), z(dx), u(du), v(dy);
  for (std::int64_t k = 0; k < n; ++k) {
    if (k == 0) {
      for (int i = 0; i < dx; ++i) z[i] = rng.gaussian();
      x = model.init_mean() + model.init_cov_sqrt() * z;
    } else {
      for (int i = 0; i < du; ++i) u[i] = rng.gaussian();
      x = model.a() * x + model.r() * u;
    }
    for (int i = 0; i < dy; ++i) v[i] = rng.gaussian();
    traj.states.col(k) = x;
    traj.observations.col(k) = model.b() * x + model.s() * v;
  }
  return traj;
}

VectorTrajectory simulate_hmm(const GenericHmm& model, std::int64_t n,
                              std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative length");
  if (!model.initial_sampler || !model.transition_sampler)
    throw Error(ErrorCode::model_violation,
                "generic model is missing its samplers");
  if (!model.obs_sampler)
    throw Error(ErrorCode::unsupported,
                "generic model has no observation sampler; cannot simulate");
  Rng rng = SeedStream(seed).rng({seed_tags::simulate});
  VectorTrajectory traj;
  traj.seed = seed;
  traj.states.resize(model.state_dim, n);
  traj.observations.resize(model.obs_dim, n);
  Eigen::VectorXd x;
  for (std::int64_t k = 0; k < n; ++k) {
    x = k == 0 ? model.initial_sampler(rng) : model.transition_sampler(x, rng);
    if (x.size() != model.state_dim)
      throw Error(ErrorCode::dimension, "sampler produced wrong state dimension");
    traj.states.col(k) = x;
    traj.observations.col(k) = model.obs_sampler(x, rng);
  }
  return traj;
}

namespace {

ObservationSequence stream_from_hmm(const HmmObservationSource& src,
                                    std::int64_t n) {
  ObservationSequence out;
  if (const auto* d = std::get_if<DiscreteHmm>(&src.model)) {
    out.discrete = true;
    out.symbols = simulate_hmm(*d, n, src.seed).observations;
  } else if (const auto* l = std::get_if<LinearGaussianModel>(&src.model)) {
    out.vectors = simulate_hmm(*l, n, src.seed).observations;
  } else {
    out.vectors = simulate_hmm(std::get<GenericHmm>(src.model), n, src.seed)
                      .observations;
  }
  return out;
}

ObservationSequence stream_from_ar1(const Ar1ObservationSource& src,
                                    std::int64_t n) {
  if (!(std::fabs(src.phi) < 1.0))
    throw Error(ErrorCode::invalid_argument,
                "ar1 source requires |phi| < 1 for stationarity");
  if (!(src.noise_sd > 0.0))
    throw Error(ErrorCode::invalid_argument, "ar1 source requires noise_sd > 0");
  Rng rng = SeedStream(src.seed).rng({seed_tags::observation_stream});
  double stat_sd = src.noise_sd / std::sqrt(1.0 - src.phi * src.phi);
  ObservationSequence out;
  std::vector<double> thresholds = src.thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  out.discrete = !thresholds.empty();
  if (out.discrete)
    out.symbols.reserve(static_cast<std::size_t>(n));
  else
    out.vectors.resize(1, n);
  double x = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    x = k == 0 ? stat_sd * rng.gaussian()
               : src.phi * x + src.noise_sd * rng.gaussian();
    if (out.discrete) {
      int sym = 0;
      for (double t : thresholds)
        if (x > t) ++sym;
      out.symbols.push_back(sym);
    } else {
      out.vectors(0, k) = x;
    }
  }
  return out;
}

}  // namespace

ObservationSequence load_observation_file(const std::string& path,
                                          std::int64_t min_length) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io, "cannot open observation file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool integral = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::parse,
                    "bad numeric value '" + cell + "' in " + path);
      }
      if (row.back() != std::floor(row.back())) integral = false;
    }
    if (row.empty()) continue;
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw Error(ErrorCode::parse, "ragged observation rows in " + path);
    rows.push_back(std::move(row));
  }
  if (static_cast<std::int64_t>(rows.size()) < min_length)
    throw Error(ErrorCode::io, "observation file " + path + " is truncated: has " +
                                   std::to_string(rows.size()) + " rows, need " +
                                   std::to_string(min_length));
  ObservationSequence out;
  out.vectors.resize(width == 0 ? 1 : static_cast<Eigen::Index>(width),
                     static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          rows[i][j];
  if (width == 1 && integral) {
    out.discrete = true;
    out.symbols.reserve(rows.size());
    for (const auto& r : rows) out.symbols.push_back(static_cast<int>(r[0]));
  }
  return out;
}

ObservationSequence stationary_observation_stream(const ObservationSource& source,
                                                  std::int64_t n) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative length");
  if (const auto* h = std::get_if<HmmObservationSource>(&source))
    return stream_from_hmm(*h, n);
  if (const auto* a = std::get_if<Ar1ObservationSource>(&source))
    return stream_from_ar1(*a, n);
  const auto& r = std::get<ReplayObservationSource>(source);
  ObservationSequence all = load_observation_file(r.path, n);
  if (all.size() == n) return all;
  ObservationSequence out;
  out.discrete = all.discrete;
  if (out.discrete)
    out.symbols.assign(all.symbols.begin(), all.symbols.begin() + n);
  out.vectors = all.vectors.leftCols(n);
  return out;
}

}  // namespace smcstab
