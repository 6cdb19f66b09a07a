// Command-line front end. Links only the C interface of the shared library.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "smcstab/smcstab.h"

int main(int argc, char** argv) {
  CLI::App app{"Sequential Monte Carlo filtering and stability harness"};
  app.require_subcommand(1);

  const char* command_names[] = {"simulate",   "filter", "variance",
                                 "stability",  "lp",     "forgetting",
                                 "loglik-rate", "verify"};

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  for (const char* name : command_names) {
    CLI::App* sub = app.add_subcommand(
        name, std::string("run the ") + name + " command from a config file");
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "base seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", threads, "worker threads for replicates");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string chosen = app.get_subcommands().front()->get_name();
  smc_status status = smc_run_command(config_path.c_str(), chosen.c_str(),
                                      out_dir.empty() ? nullptr : out_dir.c_str(),
                                      seed_set ? &seed : nullptr, threads);
  if (status == SMC_OK) {
    std::printf("%s: %s\n", chosen.c_str(), smc_last_error());
    return 0;
  }
  std::fprintf(stderr, "%s: error (%s): %s\n", chosen.c_str(),
               smc_status_name(status), smc_last_error());
  if (status == SMC_ERR_CONFIG || status == SMC_ERR_PARSE ||
      status == SMC_ERR_IO)
    return 2;
  return 1;
}
