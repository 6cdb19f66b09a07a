#include "smcstab/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "smcstab/errors.hpp"
#include "smcstab/kvfile.hpp"
#include "smcstab/test_functions.hpp"

namespace smcstab {

const char* command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::filter: return "filter";
    case Command::variance: return "variance";
    case Command::stability: return "stability";
    case Command::lp: return "lp";
    case Command::forgetting: return "forgetting";
    case Command::loglik_rate: return "loglik-rate";
    case Command::verify: return "verify";
  }
  return "unknown";
}

std::optional<Command> parse_command(const std::string& name) {
  static const std::pair<const char*, Command> table[] = {
      {"simulate", Command::simulate},   {"filter", Command::filter},
      {"variance", Command::variance},   {"stability", Command::stability},
      {"lp", Command::lp},               {"forgetting", Command::forgetting},
      {"loglik-rate", Command::loglik_rate}, {"verify", Command::verify},
  };
  for (const auto& [n, c] : table)
    if (name == n) return c;
  return std::nullopt;
}

ModelVariant load_model(const std::string& path) {
  KvFile f = KvFile::parse_file(path);
  const std::string& kind = f.require("kind").as_string("kind");
  if (kind == "discrete") {
    auto m = f.require("num_states").as_integer("num_states");
    auto k = f.require("num_symbols").as_integer("num_symbols");
    Eigen::MatrixXd q = f.require("transition").as_matrix("transition");
    Eigen::MatrixXd g = f.require("emission").as_matrix("emission");
    Eigen::VectorXd chi = f.require("initial").as_vector("initial");
    if (q.rows() != m || q.cols() != m)
      throw Error(ErrorCode::dimension,
                  path + ": transition must be num_states x num_states");
    if (g.rows() != m || g.cols() != k)
      throw Error(ErrorCode::dimension,
                  path + ": emission must be num_states x num_symbols");
    if (chi.size() != m)
      throw Error(ErrorCode::dimension, path + ": initial must have num_states entries");
    return DiscreteHmm(q, g, chi);
  }
  if (kind == "lgss") {
    auto dx = f.require("state_dim").as_integer("state_dim");
    auto du = f.require("noise_dim").as_integer("noise_dim");
    auto dy = f.require("obs_dim").as_integer("obs_dim");
    Eigen::MatrixXd a = f.require("a").as_matrix("a");
    Eigen::MatrixXd r = f.require("r").as_matrix("r");
    Eigen::MatrixXd b = f.require("b").as_matrix("b");
    Eigen::MatrixXd s = f.require("s").as_matrix("s");
    Eigen::VectorXd mean = f.require("init_mean").as_vector("init_mean");
    Eigen::MatrixXd cov = f.require("init_cov").as_matrix("init_cov");
    if (a.rows() != dx || a.cols() != dx || r.rows() != dx || r.cols() != du ||
        b.rows() != dy || b.cols() != dx || s.rows() != dy || s.cols() != dy)
      throw Error(ErrorCode::dimension,
                  path + ": matrix shapes disagree with the declared dimensions");
    return LinearGaussianModel(a, r, b, s, mean, cov);
  }
  if (kind == "arch") {
    double a0 = f.require("alpha0").as_number("alpha0");
    double a1 = f.require("alpha1").as_number("alpha1");
    double sd = f.require("obs_sd").as_number("obs_sd");
    return make_arch_hmm(a0, a1, sd);
  }
  throw Error(ErrorCode::parse,
              path + ": unknown model kind '" + kind +
                  "' (expected discrete, lgss or arch)");
}

namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

const std::set<std::string>& valid_keys() {
  static const std::set<std::string> keys = {
      "command",     "model",          "obs_kind",     "obs_phi",
      "obs_noise_sd", "obs_thresholds", "obs_seed",     "obs_file",
      "N",           "M",              "n_max",        "p",
      "h",           "base_seed",      "out_dir",      "threads",
      "half_ratio_max", "slope_significance", "n_grid", "time_index",
      "chi_a",       "chi_b",          "r",            "r_max",
      "grid_points", "eta",            "delta",        "shell_radius",
      "n_obs",       "k_low",          "k_high",       "c_low",
      "c_high",      "d_low",          "d_high",       "k_symbols",
  };
  return keys;
}

std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& k : valid_keys()) {
    std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

class Validator {
 public:
  explicit Validator(const KvFile& f) : f_(f) {}

  void error(const std::string& msg) { problems_.push_back(msg); }

  template <class Fn>
  void with(const std::string& key, Fn&& fn) {
    const KvValue* v = f_.find(key);
    if (!v) return;
    try {
      fn(*v);
    } catch (const Error& e) {
      problems_.push_back(e.what());
    }
  }

  void require_present(const std::string& key) {
    if (!f_.find(key)) problems_.push_back("missing required key '" + key + "'");
  }

  void finish(const std::string& name) {
    if (problems_.empty()) return;
    std::ostringstream os;
    os << "invalid config " << name << " (" << problems_.size()
       << " problem(s)):";
    for (const auto& p : problems_) os << "\n  - " << p;
    throw Error(ErrorCode::config, os.str());
  }

  bool ok() const { return problems_.empty(); }

 private:
  const KvFile& f_;
  std::vector<std::string> problems_;
};

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  KvFile f = KvFile::parse_file(path);
  ExperimentConfig cfg;
  cfg.config_dir = std::filesystem::path(path).parent_path().string();
  Validator v(f);

  for (const auto& key : f.keys()) {
    if (!valid_keys().count(key))
      v.error("unknown key '" + key + "'; nearest valid key is '" +
              nearest_key(key) + "'");
  }

  bool command_ok = false;
  v.require_present("command");
  v.with("command", [&](const KvValue& val) {
    auto c = parse_command(val.as_string("command"));
    if (!c)
      throw Error(ErrorCode::config,
                  "unknown command '" + val.as_string("command") +
                      "'; expected one of simulate, filter, variance, "
                      "stability, lp, forgetting, loglik-rate, verify");
    cfg.command = *c;
    command_ok = true;
  });
  v.require_present("model");
  v.with("model", [&](const KvValue& val) { cfg.model_path = val.as_string("model"); });

  v.with("obs_kind", [&](const KvValue& val) {
    const std::string& k = val.as_string("obs_kind");
    if (k != "hmm" && k != "ar1" && k != "replay")
      throw Error(ErrorCode::config,
                  "obs_kind must be one of hmm, ar1, replay (got '" + k + "')");
    cfg.obs_kind = k;
  });
  v.with("obs_phi", [&](const KvValue& val) {
    cfg.obs_phi = val.as_number("obs_phi");
    if (!(std::fabs(cfg.obs_phi) < 1.0))
      throw Error(ErrorCode::config, "obs_phi must satisfy |phi| < 1");
  });
  v.with("obs_noise_sd", [&](const KvValue& val) {
    cfg.obs_noise_sd = val.as_number("obs_noise_sd");
    if (!(cfg.obs_noise_sd > 0.0))
      throw Error(ErrorCode::config, "obs_noise_sd must be positive");
  });
  v.with("obs_thresholds", [&](const KvValue& val) {
    cfg.obs_thresholds = val.as_number_list("obs_thresholds");
  });
  v.with("obs_seed", [&](const KvValue& val) {
    cfg.obs_seed = static_cast<std::uint64_t>(val.as_integer("obs_seed"));
  });
  v.with("obs_file", [&](const KvValue& val) { cfg.obs_file = val.as_string("obs_file"); });

  v.with("N", [&](const KvValue& val) {
    cfg.num_particles = val.as_integer("N");
    if (cfg.num_particles < 1)
      throw Error(ErrorCode::config, "field N must be >= 1");
  });
  v.with("M", [&](const KvValue& val) {
    cfg.num_replicates = val.as_integer("M");
    if (cfg.num_replicates < 1)
      throw Error(ErrorCode::config, "field M must be >= 1");
  });
  v.with("n_max", [&](const KvValue& val) {
    cfg.n_max = val.as_integer("n_max");
    if (cfg.n_max < 1) throw Error(ErrorCode::config, "field n_max must be >= 1");
  });
  v.with("p", [&](const KvValue& val) {
    cfg.p = val.as_number("p");
    if (cfg.p < 1.0) throw Error(ErrorCode::config, "field p must be >= 1");
  });
  v.with("h", [&](const KvValue& val) { cfg.h = val.as_string("h"); });
  v.with("base_seed", [&](const KvValue& val) {
    cfg.base_seed = static_cast<std::uint64_t>(val.as_integer("base_seed"));
  });
  v.with("out_dir", [&](const KvValue& val) { cfg.out_dir = val.as_string("out_dir"); });
  v.with("threads", [&](const KvValue& val) {
    cfg.threads = static_cast<int>(val.as_integer("threads"));
    if (cfg.threads < 0) throw Error(ErrorCode::config, "threads must be >= 0");
  });
  v.with("half_ratio_max", [&](const KvValue& val) {
    cfg.half_ratio_max = val.as_number("half_ratio_max");
  });
  v.with("slope_significance", [&](const KvValue& val) {
    cfg.slope_significance = val.as_number("slope_significance");
    if (!(cfg.slope_significance > 0.0 && cfg.slope_significance < 1.0))
      throw Error(ErrorCode::config, "slope_significance must be in (0,1)");
  });
  v.with("n_grid", [&](const KvValue& val) {
    auto list = val.as_integer_list("n_grid");
    cfg.n_grid.assign(list.begin(), list.end());
    for (auto n : cfg.n_grid)
      if (n < 1) throw Error(ErrorCode::config, "n_grid entries must be >= 1");
  });
  v.with("time_index", [&](const KvValue& val) {
    cfg.time_index = val.as_integer("time_index");
    if (cfg.time_index < 0)
      throw Error(ErrorCode::config, "time_index must be >= 0");
  });
  v.with("chi_a", [&](const KvValue& val) { cfg.chi_a = val.as_number_list("chi_a"); });
  v.with("chi_b", [&](const KvValue& val) { cfg.chi_b = val.as_number_list("chi_b"); });

  v.with("r", [&](const KvValue& val) {
    cfg.r = static_cast<int>(val.as_integer("r"));
    if (cfg.r < 1) throw Error(ErrorCode::config, "r must be >= 1");
  });
  v.with("r_max", [&](const KvValue& val) {
    cfg.r_max = static_cast<int>(val.as_integer("r_max"));
    if (cfg.r_max < 1) throw Error(ErrorCode::config, "r_max must be >= 1");
  });
  v.with("grid_points", [&](const KvValue& val) {
    cfg.grid_points = static_cast<int>(val.as_integer("grid_points"));
    if (cfg.grid_points < 2)
      throw Error(ErrorCode::config, "grid_points must be >= 2");
  });
  v.with("eta", [&](const KvValue& val) { cfg.eta = val.as_number("eta"); });
  v.with("delta", [&](const KvValue& val) { cfg.delta = val.as_number("delta"); });
  v.with("shell_radius", [&](const KvValue& val) {
    cfg.shell_radius = val.as_number("shell_radius");
  });
  v.with("n_obs", [&](const KvValue& val) {
    cfg.n_obs = val.as_integer("n_obs");
    if (cfg.n_obs < 1) throw Error(ErrorCode::config, "n_obs must be >= 1");
  });
  v.with("k_low", [&](const KvValue& val) { cfg.k_low = val.as_number_list("k_low"); });
  v.with("k_high", [&](const KvValue& val) { cfg.k_high = val.as_number_list("k_high"); });
  v.with("c_low", [&](const KvValue& val) { cfg.c_low = val.as_number_list("c_low"); });
  v.with("c_high", [&](const KvValue& val) { cfg.c_high = val.as_number_list("c_high"); });
  v.with("d_low", [&](const KvValue& val) { cfg.d_low = val.as_number_list("d_low"); });
  v.with("d_high", [&](const KvValue& val) { cfg.d_high = val.as_number_list("d_high"); });
  v.with("k_symbols", [&](const KvValue& val) {
    auto list = val.as_integer_list("k_symbols");
    cfg.k_symbols.assign(list.begin(), list.end());
  });

  // Per-command required fields.
  if (command_ok) {
    switch (cfg.command) {
      case Command::simulate:
        v.require_present("n_max");
        break;
      case Command::filter:
        v.require_present("N");
        if (cfg.obs_kind != "replay") v.require_present("n_max");
        break;
      case Command::variance:
        v.require_present("N");
        v.require_present("M");
        v.require_present("n_max");
        break;
      case Command::stability:
        v.require_present("N");
        v.require_present("n_max");
        break;
      case Command::lp:
        v.require_present("M");
        v.require_present("time_index");
        break;
      case Command::forgetting:
        v.require_present("n_max");
        v.require_present("chi_a");
        v.require_present("chi_b");
        break;
      case Command::loglik_rate:
        v.require_present("n_max");
        break;
      case Command::verify:
        break;
    }
    if (cfg.obs_kind == "replay") v.require_present("obs_file");
  }

  v.with("h", [&](const KvValue&) { TestFunction::parse(cfg.h); });

  v.finish(path);
  return cfg;
}

}  // namespace smcstab
