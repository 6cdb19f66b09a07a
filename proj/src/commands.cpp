#include "smcstab/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "smcstab/csv.hpp"
#include "smcstab/errors.hpp"
#include "smcstab/kalman.hpp"
#include "smcstab/particle_filter.hpp"
#include "smcstab/simulate.hpp"
#include "smcstab/stability.hpp"
#include "smcstab/verifier.hpp"

namespace smcstab {

namespace {

namespace fs = std::filesystem;

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty())
    return path;
  fs::path joined = fs::path(base_dir) / path;
  return fs::exists(joined) ? joined.string() : path;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / file).string();
}

void write_report(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& fields) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot open for writing: " + path);
  for (const auto& [k, v] : fields) out << k << " = " << v << "\n";
  out.flush();
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

std::string fmt(double v) { return format_double_17(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(std::int64_t v) { return std::to_string(v); }

ObservationSource make_source(const ExperimentConfig& cfg,
                              const ModelVariant& model) {
  std::uint64_t seed = cfg.obs_seed.value_or(cfg.base_seed);
  if (cfg.obs_kind == "hmm") return HmmObservationSource{model, seed};
  if (cfg.obs_kind == "ar1")
    return Ar1ObservationSource{cfg.obs_phi, cfg.obs_noise_sd,
                                cfg.obs_thresholds, seed};
  return ReplayObservationSource{resolve_path(cfg.config_dir, cfg.obs_file)};
}

TestFunction make_test_function(const ExperimentConfig& cfg,
                                const ModelVariant& model) {
  TestFunction h = TestFunction::parse(cfg.h);
  if (!std::holds_alternative<DiscreteHmm>(model) &&
      h.kind() == TestFunction::Kind::indicator)
    throw Error(ErrorCode::config,
                "indicator test functions apply to discrete models only");
  return h;
}

const DiscreteHmm& require_discrete(const ModelVariant& model,
                                    const std::string& command) {
  const auto* d = std::get_if<DiscreteHmm>(&model);
  if (!d)
    throw Error(ErrorCode::config,
                command + " needs a discrete model (exact oracles)");
  return *d;
}

CommandResult cmd_simulate(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  std::string path = out_path(cfg, "trajectory.csv");
  if (const auto* d = std::get_if<DiscreteHmm>(&model)) {
    DiscreteTrajectory traj = simulate_hmm(*d, cfg.n_max, cfg.base_seed);
    CsvWriter w(path, {"time", "state", "obs"});
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      w.begin_row();
      w.field(static_cast<long long>(k));
      w.field(static_cast<long long>(traj.states[k]));
      w.field(static_cast<long long>(traj.observations[k]));
      w.end_row();
    }
    w.close();
  } else {
    VectorTrajectory traj =
        std::holds_alternative<LinearGaussianModel>(model)
            ? simulate_hmm(std::get<LinearGaussianModel>(model), cfg.n_max,
                           cfg.base_seed)
            : simulate_hmm(std::get<GenericHmm>(model), cfg.n_max, cfg.base_seed);
    std::vector<std::string> header = {"time"};
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i)
      header.push_back("state_" + std::to_string(i));
    for (Eigen::Index i = 0; i < traj.observations.rows(); ++i)
      header.push_back("obs_" + std::to_string(i));
    CsvWriter w(path, header);
    for (Eigen::Index k = 0; k < traj.states.cols(); ++k) {
      w.begin_row();
      w.field(static_cast<long long>(k));
      for (Eigen::Index i = 0; i < traj.states.rows(); ++i)
        w.field(traj.states(i, k));
      for (Eigen::Index i = 0; i < traj.observations.rows(); ++i)
        w.field(traj.observations(i, k));
      w.end_row();
    }
    w.close();
  }
  result.output_files.push_back(path);
  result.summary = "trajectory of length " + std::to_string(cfg.n_max);
  return result;
}

void write_records_csv(const std::string& path,
                       const std::vector<ReplicateRecord>& records) {
  CsvWriter w(path, {"replicate", "time", "estimator", "function", "value"});
  for (const auto& rec : records) {
    const std::int64_t horizon = rec.log_likelihood.size();
    for (std::int64_t t = 0; t <= horizon; ++t) {
      for (std::size_t f = 0; f < rec.function_labels.size(); ++f) {
        w.begin_row();
        w.field(static_cast<long long>(rec.replicate_id));
        w.field(static_cast<long long>(t));
        w.field(std::string("pred"));
        w.field(rec.function_labels[f]);
        w.field(rec.predictor_estimates(t, static_cast<Eigen::Index>(f)));
        w.end_row();
      }
      if (t == horizon) break;
      for (std::size_t f = 0; f < rec.function_labels.size(); ++f) {
        w.begin_row();
        w.field(static_cast<long long>(rec.replicate_id));
        w.field(static_cast<long long>(t));
        w.field(std::string("filt"));
        w.field(rec.function_labels[f]);
        w.field(rec.filter_estimates(t, static_cast<Eigen::Index>(f)));
        w.end_row();
      }
      w.begin_row();
      w.field(static_cast<long long>(rec.replicate_id));
      w.field(static_cast<long long>(t));
      w.field(std::string("loglik"));
      w.field(std::string("-"));
      w.field(rec.log_likelihood[t]);
      w.end_row();
    }
  }
  w.close();
}

CommandResult cmd_filter(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  ObservationSource source = make_source(cfg, model);
  TestFunction h = make_test_function(cfg, model);
  std::int64_t length = cfg.obs_kind == "replay" && cfg.n_max == 0
                            ? load_observation_file(
                                  resolve_path(cfg.config_dir, cfg.obs_file))
                                  .size()
                            : cfg.n_max;
  ObservationSequence obs = stationary_observation_stream(source, length);
  RngKey base = SeedStream(cfg.base_seed).derive({seed_tags::experiment});
  RngKey rep0 = derive_key(derive_key(base, seed_tags::replicate), 0);

  std::vector<ReplicateRecord> records;
  if (const auto* d = std::get_if<DiscreteHmm>(&model)) {
    if (!obs.discrete)
      throw Error(ErrorCode::dimension,
                  "discrete particle model needs alphabet observations");
    DiscreteParticleModel pm(*d);
    records.push_back(run_filter(pm, obs.symbols, cfg.num_particles, rep0, {h}));
  } else {
    if (obs.discrete)
      throw Error(ErrorCode::dimension,
                  "continuous particle model needs vector observations");
    std::vector<Eigen::VectorXd> ys(static_cast<std::size_t>(obs.size()));
    for (std::int64_t t = 0; t < obs.size(); ++t)
      ys[static_cast<std::size_t>(t)] = obs.vectors.col(t);
    if (const auto* l = std::get_if<LinearGaussianModel>(&model)) {
      LgssParticleModel pm(*l);
      records.push_back(run_filter(pm, ys, cfg.num_particles, rep0, {h}));
    } else {
      GenericParticleModel pm(std::get<GenericHmm>(model));
      records.push_back(run_filter(pm, ys, cfg.num_particles, rep0, {h}));
    }
  }
  records[0].base_seed = cfg.base_seed;

  std::string path = out_path(cfg, "records.csv");
  write_records_csv(path, records);
  result.output_files.push_back(path);
  std::ostringstream os;
  os << "filter run over " << length << " observations, loglik = "
     << (records[0].log_likelihood.size() > 0
             ? records[0].log_likelihood[records[0].log_likelihood.size() - 1]
             : 0.0);
  result.summary = os.str();
  return result;
}

CommandResult cmd_variance(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  const DiscreteHmm& d = require_discrete(model, "variance");
  ObservationSource source = make_source(cfg, model);
  ObservationSequence obs = stationary_observation_stream(source, cfg.n_max + 1);
  if (!obs.discrete)
    throw Error(ErrorCode::dimension,
                "variance needs alphabet observations for the exact oracle");
  TestFunction h = make_test_function(cfg, model);
  VarianceExperimentReport rep = clt_variance_experiment(
      d, obs.symbols, cfg.num_particles, cfg.num_replicates, h, cfg.base_seed,
      cfg.threads);

  const std::size_t times = rep.sigma2_exact.size();
  std::vector<std::vector<double>> cols(5);
  for (std::size_t t = 0; t < times; ++t) {
    cols[0].push_back(static_cast<double>(t));
    cols[1].push_back(rep.sigma2_exact[t]);
    cols[2].push_back(rep.sigma2_emp[t]);
    bool has_filter = t < rep.sigma2_filter_exact.size();
    cols[3].push_back(has_filter ? rep.sigma2_filter_exact[t]
                                 : std::numeric_limits<double>::quiet_NaN());
    cols[4].push_back(has_filter ? rep.sigma2_filter_emp[t]
                                 : std::numeric_limits<double>::quiet_NaN());
  }
  std::string series_path = out_path(cfg, "variance_series.csv");
  write_series_csv(series_path,
                   {"time", "sigma2_exact", "sigma2_emp", "sigma2_filter_exact",
                    "sigma2_filter_emp"},
                   cols);
  std::string report_path = out_path(cfg, "variance_report.txt");
  write_report(report_path, {
                                {"command", "variance"},
                                {"h", rep.h_label},
                                {"N", fmt(rep.num_particles)},
                                {"M", fmt(rep.num_replicates)},
                                {"envelope_low", fmt(rep.envelope_low)},
                                {"envelope_high", fmt(rep.envelope_high)},
                            });
  result.output_files = {series_path, report_path};
  result.summary = "variance comparison over " + std::to_string(times) + " times";
  return result;
}

CommandResult cmd_stability(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  ObservationSource source = make_source(cfg, model);
  TestFunction h = make_test_function(cfg, model);
  StabilityReport rep = variance_sequence_experiment(
      model, source, cfg.num_particles, cfg.num_replicates, cfg.n_max, h,
      cfg.base_seed, cfg.threads);

  const std::size_t times = rep.empirical_variance.size();
  std::vector<std::vector<double>> cols(3);
  for (std::size_t t = 0; t < times; ++t) {
    cols[0].push_back(static_cast<double>(t));
    cols[1].push_back(rep.empirical_variance[t]);
    cols[2].push_back(t < rep.exact_sigma2.size()
                          ? rep.exact_sigma2[t]
                          : std::numeric_limits<double>::quiet_NaN());
  }
  std::string series_path = out_path(cfg, "stability_series.csv");
  write_series_csv(series_path, {"time", "empirical_variance", "sigma2_exact"},
                   cols);
  std::string report_path = out_path(cfg, "stability_report.txt");
  write_report(
      report_path,
      {
          {"command", "stability"},
          {"pass", fmt(rep.pass)},
          {"slope", fmt(rep.trend.slope)},
          {"slope_ci_low", fmt(rep.trend.slope_ci_low)},
          {"slope_ci_high", fmt(rep.trend.slope_ci_high)},
          {"slope_pass", fmt(rep.trend.slope_pass)},
          {"half_ratio", fmt(rep.trend.half_ratio)},
          {"half_ratio_max", fmt(cfg.half_ratio_max)},
          {"ratio_pass", fmt(rep.trend.ratio_pass)},
          {"ref_kind", rep.ref_kind},
          {"envelope_coverage", fmt(rep.envelope_coverage)},
          {"n_max", fmt(rep.horizon)},
          {"N", fmt(rep.num_particles)},
          {"M", fmt(rep.num_replicates)},
          {"h", rep.h_label},
      });
  result.output_files = {series_path, report_path};
  result.experiment_pass = rep.pass;
  std::ostringstream os;
  os << "stability " << (rep.pass ? "pass" : "FAIL") << " (slope " << rep.trend.slope
     << ", half ratio " << rep.trend.half_ratio << ")";
  result.summary = os.str();
  return result;
}

CommandResult cmd_lp(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  const DiscreteHmm& d = require_discrete(model, "lp");
  ObservationSource source = make_source(cfg, model);
  std::int64_t length = std::max(cfg.time_index, cfg.n_max);
  ObservationSequence obs = stationary_observation_stream(source, length);
  if (!obs.discrete)
    throw Error(ErrorCode::dimension,
                "lp needs alphabet observations for the exact oracle");
  TestFunction h = make_test_function(cfg, model);
  LpReport rep =
      lp_error_experiment(d, obs.symbols, cfg.time_index, cfg.p, cfg.n_grid,
                          cfg.num_replicates, h, cfg.base_seed, cfg.threads);

  std::vector<std::vector<double>> cols(3);
  for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
    cols[0].push_back(static_cast<double>(rep.n_grid[i]));
    cols[1].push_back(rep.estimates[i]);
    cols[2].push_back(rep.reference);
  }
  std::string series_path = out_path(cfg, "lp_series.csv");
  write_series_csv(series_path, {"N", "estimate", "reference"}, cols);
  std::string report_path = out_path(cfg, "lp_report.txt");
  write_report(report_path,
               {
                   {"command", "lp"},
                   {"p", fmt(rep.p)},
                   {"time_index", fmt(rep.time_index)},
                   {"sigma", fmt(rep.sigma)},
                   {"gaussian_moment_quadrature", fmt(rep.gaussian_moment)},
                   {"reference", fmt(rep.reference)},
                   {"printed_constant", fmt(rep.printed_constant)},
                   {"printed_vs_reference_gap",
                    fmt(std::fabs(rep.printed_constant - rep.reference))},
                   {"final_relative_gap", fmt(rep.final_relative_gap)},
                   {"M", fmt(cfg.num_replicates)},
               });
  result.output_files = {series_path, report_path};
  result.experiment_pass = rep.final_relative_gap <= 0.10;
  result.summary = "lp final relative gap " + fmt(rep.final_relative_gap);
  return result;
}

CommandResult cmd_forgetting(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  const DiscreteHmm& d = require_discrete(model, "forgetting");
  ObservationSource source = make_source(cfg, model);
  ObservationSequence obs = stationary_observation_stream(source, cfg.n_max);
  if (!obs.discrete)
    throw Error(ErrorCode::dimension, "forgetting needs alphabet observations");
  Eigen::VectorXd chi_a = Eigen::Map<const Eigen::VectorXd>(
      cfg.chi_a.data(), static_cast<Eigen::Index>(cfg.chi_a.size()));
  Eigen::VectorXd chi_b = Eigen::Map<const Eigen::VectorXd>(
      cfg.chi_b.data(), static_cast<Eigen::Index>(cfg.chi_b.size()));
  ForgettingReport rep = forgetting_experiment(d, obs.symbols, chi_a, chi_b);

  std::vector<std::vector<double>> cols(3);
  for (std::size_t k = 0; k < rep.tv_distance.size(); ++k) {
    cols[0].push_back(static_cast<double>(k));
    cols[1].push_back(rep.loglik_gap[k]);
    cols[2].push_back(rep.tv_distance[k]);
  }
  std::string series_path = out_path(cfg, "forgetting_series.csv");
  write_series_csv(series_path, {"k", "loglik_gap", "tv_distance"}, cols);
  std::string report_path = out_path(cfg, "forgetting_report.txt");
  write_report(report_path, {
                                {"command", "forgetting"},
                                {"slope", fmt(rep.slope)},
                                {"slope_ci_low", fmt(rep.slope_ci_low)},
                                {"slope_ci_high", fmt(rep.slope_ci_high)},
                                {"rate", fmt(rep.rate)},
                                {"fit_points", fmt(static_cast<std::int64_t>(
                                                   rep.fit_points))},
                                {"decay_pass", fmt(rep.decay_pass)},
                            });
  result.output_files = {series_path, report_path};
  result.experiment_pass = rep.decay_pass;
  result.summary = "forgetting rate " + fmt(rep.rate);
  return result;
}

CommandResult cmd_loglik_rate(const ExperimentConfig& cfg,
                              const ModelVariant& model) {
  CommandResult result;
  ObservationSource source = make_source(cfg, model);
  RateReport rep = loglik_rate_experiment(model, source, cfg.n_max);

  std::vector<std::vector<double>> cols(2);
  for (std::size_t i = 0; i < rep.normalized_loglik.size(); ++i) {
    cols[0].push_back(static_cast<double>(i + 1));
    cols[1].push_back(rep.normalized_loglik[i]);
  }
  std::string series_path = out_path(cfg, "loglik_rate_series.csv");
  write_series_csv(series_path, {"n", "normalized_loglik"}, cols);
  std::string report_path = out_path(cfg, "loglik_rate_report.txt");
  write_report(report_path,
               {
                   {"command", "loglik-rate"},
                   {"last_quartile_std", fmt(rep.last_quartile_std)},
                   {"final_value", fmt(rep.final_value)},
               });
  result.output_files = {series_path, report_path};
  result.summary = "normalized loglik settles at " + fmt(rep.final_value);
  return result;
}

CommandResult cmd_verify(const ExperimentConfig& cfg, const ModelVariant& model) {
  CommandResult result;
  ObservationSource source = make_source(cfg, model);
  ObservationSequence obs = stationary_observation_stream(source, cfg.n_obs);

  VerifierConfig vc;
  vc.r = cfg.r;
  vc.r_max = cfg.r_max;
  vc.grid_points = cfg.grid_points;
  vc.eta = cfg.eta;
  vc.delta = cfg.delta;
  vc.shell_radius = cfg.shell_radius;
  vc.obs_symbols = cfg.k_symbols;
  auto to_rect = [](const std::vector<double>& lo, const std::vector<double>& hi)
      -> std::optional<HyperRectangle> {
    if (lo.empty() || lo.size() != hi.size()) return std::nullopt;
    HyperRectangle rect;
    rect.low = Eigen::Map<const Eigen::VectorXd>(
        lo.data(), static_cast<Eigen::Index>(lo.size()));
    rect.high = Eigen::Map<const Eigen::VectorXd>(
        hi.data(), static_cast<Eigen::Index>(hi.size()));
    return rect;
  };
  vc.obs_set = to_rect(cfg.k_low, cfg.k_high);
  vc.doeblin_set = to_rect(cfg.c_low, cfg.c_high);
  vc.drift_set = to_rect(cfg.d_low, cfg.d_high);

  AssumptionReport rep = check_assumptions(model, obs, vc);

  std::string report_path = out_path(cfg, "assumption_report.txt");
  {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open for writing: " + report_path);
    for (const auto& c : rep.checks)
      out << "[" << c.name << "] status=" << c.status << " " << c.evidence
          << "\n";
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write failed: " + report_path);
  }
  result.output_files.push_back(report_path);

  if (const auto* l = std::get_if<LinearGaussianModel>(&model)) {
    LgssStructure s = lgss_structure(*l, cfg.r_max);
    std::vector<std::vector<double>> cols(4);
    for (int n = 1; n <= s.r_max; ++n) {
      cols[0].push_back(n);
      cols[1].push_back(s.obs_rank[static_cast<std::size_t>(n - 1)]);
      cols[2].push_back(s.ctrl_rank[static_cast<std::size_t>(n - 1)]);
      cols[3].push_back(s.f_min_eigval[static_cast<std::size_t>(n - 1)]);
    }
    std::string path = out_path(cfg, "lgss_structure.csv");
    write_series_csv(path, {"n", "obs_rank", "ctrl_rank", "f_min_eigval"}, cols);
    result.output_files.push_back(path);
  }

  result.experiment_pass = rep.all_pass();
  std::ostringstream os;
  os << "verify " << (result.experiment_pass ? "pass" : "FAIL") << " over "
     << rep.checks.size() << " checks";
  result.summary = os.str();
  return result;
}

}  // namespace

CommandResult run_command(const ExperimentConfig& cfg) {
  ModelVariant model = load_model(resolve_path(cfg.config_dir, cfg.model_path));
  switch (cfg.command) {
    case Command::simulate: return cmd_simulate(cfg, model);
    case Command::filter: return cmd_filter(cfg, model);
    case Command::variance: return cmd_variance(cfg, model);
    case Command::stability: return cmd_stability(cfg, model);
    case Command::lp: return cmd_lp(cfg, model);
    case Command::forgetting: return cmd_forgetting(cfg, model);
    case Command::loglik_rate: return cmd_loglik_rate(cfg, model);
    case Command::verify: return cmd_verify(cfg, model);
  }
  throw Error(ErrorCode::invalid_argument, "unhandled command");
}

}  // namespace smcstab
