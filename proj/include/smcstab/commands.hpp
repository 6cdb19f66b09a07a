#ifndef SMCSTAB_COMMANDS_HPP
#define SMCSTAB_COMMANDS_HPP

#include <string>
#include <vector>

#include "smcstab/config.hpp"

namespace smcstab {

struct CommandResult {
  bool experiment_pass = true;
  std::vector<std::string> output_files;
  std::string summary;
};

// Executes a loaded configuration: runs the experiment and writes the CSV
// series and the plain-text report into cfg.out_dir. Deterministic for a
// fixed config (thread count only changes scheduling, never results).
CommandResult run_command(const ExperimentConfig& cfg);

}  // namespace smcstab

#endif
