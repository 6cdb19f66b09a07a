#ifndef SMCSTAB_CONFIG_HPP
#define SMCSTAB_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smcstab/models.hpp"

namespace smcstab {

enum class Command {
  simulate,
  filter,
  variance,
  stability,
  lp,
  forgetting,
  loglik_rate,
  verify,
};

const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& name);

// Model files are structured text (see docs/models.md): a `kind` plus
// row-major matrices with explicit dimensions.
ModelVariant load_model(const std::string& path);

struct ExperimentConfig {
  Command command = Command::simulate;
  std::string config_dir;  // directory of the config file, for relative paths
  std::string model_path;

  // observation source
  std::string obs_kind = "hmm";  // hmm | ar1 | replay
  double obs_phi = 0.0;
  double obs_noise_sd = 1.0;
  std::vector<double> obs_thresholds;
  std::optional<std::uint64_t> obs_seed;
  std::string obs_file;

  std::int64_t num_particles = 0;    // N
  std::int64_t num_replicates = 500; // M
  std::int64_t n_max = 0;
  double p = 2.0;
  std::string h = "indicator(0)";
  std::uint64_t base_seed = 0;
  std::string out_dir = "out";
  int threads = 1;

  double half_ratio_max = 3.0;
  double slope_significance = 0.95;

  std::vector<std::int64_t> n_grid = {100, 1000, 10000};
  std::int64_t time_index = 5;

  std::vector<double> chi_a, chi_b;

  // verify
  int r = 1;
  int r_max = 6;
  int grid_points = 41;
  double eta = 0.05;
  double delta = 0.05;
  double shell_radius = 10.0;
  std::int64_t n_obs = 2000;
  std::vector<double> k_low, k_high;
  std::vector<double> c_low, c_high;
  std::vector<double> d_low, d_high;
  std::vector<int> k_symbols;
};

// Parses and validates a config file. Validation is total: every violation
// is collected and reported together, with nearest-key suggestions for
// unknown keys.
ExperimentConfig load_config(const std::string& path);

}  // namespace smcstab

#endif
