#include "smcstab/stability.hpp"

#include <algorithm>
#include <cmath>

#include "smcstab/errors.hpp"
#include "smcstab/kalman.hpp"
#include "smcstab/particle_filter.hpp"
#include "smcstab/stats.hpp"

namespace smcstab {

namespace {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double robust_se = 0.0;
};

// Least squares of y against 0..n-1 with an HC0 sandwich standard error for
// the slope.
OlsFit ols_robust(const std::vector<double>& y) {
  const std::size_t n = y.size();
  OlsFit fit;
  if (n < 2) return fit;
  double xbar = 0.5 * static_cast<double>(n - 1);
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = static_cast<double>(i) - xbar;
    sxx += dx * dx;
    sxy += dx * (y[i] - ybar);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double meat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = static_cast<double>(i) - xbar;
    double resid = y[i] - fit.intercept - fit.slope * static_cast<double>(i);
    meat += dx * dx * resid * resid;
  }
  fit.robust_se = std::sqrt(meat) / sxx;
  return fit;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

TrendTest trend_test(const std::vector<double>& series, double significance,
                     double ratio_max) {
  if (series.size() < 20)
    throw Error(ErrorCode::invalid_argument,
                "trend test needs a series of length >= 20");
  TrendTest out;
  OlsFit fit = ols_robust(series);
  double z = normal_quantile(0.5 + 0.5 * significance);
  out.slope = fit.slope;
  out.slope_ci_low = fit.slope - z * fit.robust_se;
  out.slope_ci_high = fit.slope + z * fit.robust_se;
  out.slope_pass = out.slope_ci_low <= 0.0;

  std::size_t half = series.size() / 2;
  std::vector<double> first(series.begin(), series.begin() + half);
  double med = median_of(first);
  double mx = *std::max_element(series.begin() + half, series.end());
  if (mx == med)
    out.half_ratio = 1.0;
  else if (med <= 0.0)
    out.half_ratio = std::numeric_limits<double>::infinity();
  else
    out.half_ratio = mx / med;
  out.ratio_pass = out.half_ratio <= ratio_max;
  out.pass = out.slope_pass && out.ratio_pass;
  return out;
}

namespace {

struct EnsembleResult {
  std::vector<ReplicateRecord> records;
  std::vector<double> ref;  // exact predictor reference per time, may be empty
  std::string ref_kind;
};

// Runs the ensemble for any model kind, resolving observation/alphabet
// compatibility and the exact reference series.
EnsembleResult run_ensemble(const ModelVariant& model,
                            const ObservationSequence& obs,
                            std::int64_t num_particles,
                            std::int64_t num_replicates, const TestFunction& h,
                            std::uint64_t seed, int threads) {
  EnsembleResult out;
  RngKey base = SeedStream(seed).derive({seed_tags::experiment});
  const std::int64_t n = obs.size();
  if (const auto* d = std::get_if<DiscreteHmm>(&model)) {
    if (!obs.discrete)
      throw Error(ErrorCode::dimension,
                  "discrete particle model needs alphabet observations");
    DiscreteParticleModel pm(*d);
    out.records = replicate_ensemble(pm, obs.symbols, num_particles,
                                     num_replicates, base, {h}, threads);
    DiscreteFilterTrace trace = forward_filter_discrete(*d, obs.symbols);
    Eigen::VectorXd hv = h.values_on(*d);
    out.ref.resize(static_cast<std::size_t>(n) + 1);
    for (std::int64_t t = 0; t <= n; ++t)
      out.ref[static_cast<std::size_t>(t)] =
          trace.predictors[static_cast<std::size_t>(t)].dot(hv);
    out.ref_kind = "exact-discrete";
    return out;
  }

  if (obs.discrete)
    throw Error(ErrorCode::dimension,
                "continuous particle model needs vector observations");
  std::vector<Eigen::VectorXd> ys(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t)
    ys[static_cast<std::size_t>(t)] = obs.vectors.col(t);

  if (const auto* l = std::get_if<LinearGaussianModel>(&model)) {
    LgssParticleModel pm(*l);
    out.records = replicate_ensemble(pm, ys, num_particles, num_replicates,
                                     base, {h}, threads);
    if (h.kind() == TestFunction::Kind::coordinate) {
      KalmanTrace trace = kalman_filter(*l, obs.vectors);
      out.ref.resize(static_cast<std::size_t>(n) + 1);
      for (std::int64_t t = 0; t < n; ++t)
        out.ref[static_cast<std::size_t>(t)] =
            h(trace.pred_means[static_cast<std::size_t>(t)]);
      // one-step-ahead mean past the last observation
      Eigen::VectorXd last = l->a() * trace.filt_means.back();
      out.ref[static_cast<std::size_t>(n)] = h(last);
      out.ref_kind = "kalman";
    } else {
      out.ref_kind = "replicate-mean";
    }
    return out;
  }

  const auto& g = std::get<GenericHmm>(model);
  GenericParticleModel pm(g);
  out.records = replicate_ensemble(pm, ys, num_particles, num_replicates, base,
                                   {h}, threads);
  out.ref_kind = "replicate-mean";
  return out;
}

}  // namespace

StabilityReport variance_sequence_experiment(const ModelVariant& model,
                                             const ObservationSource& source,
                                             std::int64_t num_particles,
                                             std::int64_t num_replicates,
                                             std::int64_t n_max,
                                             const TestFunction& h,
                                             std::uint64_t seed, int threads) {
  if (n_max < 1 || num_particles < 1 || num_replicates < 2)
    throw Error(ErrorCode::invalid_argument,
                "stability experiment needs n_max, N >= 1 and M >= 2");
  ObservationSequence obs = stationary_observation_stream(source, n_max);
  EnsembleResult ens = run_ensemble(model, obs, num_particles, num_replicates,
                                    h, seed, threads);

  StabilityReport report;
  report.horizon = n_max;
  report.num_particles = num_particles;
  report.num_replicates = num_replicates;
  report.h_label = h.label();
  report.ref_kind = ens.ref_kind;

  const std::int64_t times = n_max + 1;
  const double scale = static_cast<double>(num_particles);
  report.empirical_variance.resize(static_cast<std::size_t>(times));
  const bool exact_ref = !ens.ref.empty();
  for (std::int64_t t = 0; t < times; ++t) {
    double acc = 0.0;
    if (exact_ref) {
      double ref = ens.ref[static_cast<std::size_t>(t)];
      for (const auto& rec : ens.records) {
        double e = rec.predictor_estimates(t, 0) - ref;
        acc += e * e;
      }
      acc /= static_cast<double>(num_replicates);
    } else {
      double mean = 0.0;
      for (const auto& rec : ens.records) mean += rec.predictor_estimates(t, 0);
      mean /= static_cast<double>(num_replicates);
      for (const auto& rec : ens.records) {
        double e = rec.predictor_estimates(t, 0) - mean;
        acc += e * e;
      }
      acc /= static_cast<double>(num_replicates - 1);
    }
    report.empirical_variance[static_cast<std::size_t>(t)] = scale * acc;
  }

  if (const auto* d = std::get_if<DiscreteHmm>(&model)) {
    VarianceSeries vs =
        exact_variance_series_discrete(*d, obs.symbols, h.values_on(*d), h.label());
    report.exact_sigma2 = std::move(vs.sigma2);
    double m = static_cast<double>(num_replicates);
    double lo = chi_square_quantile(m, 0.005) / m;
    double hi = chi_square_quantile(m, 0.995) / m;
    std::int64_t covered = 0;
    for (std::int64_t t = 0; t < times; ++t) {
      double ex = report.exact_sigma2[static_cast<std::size_t>(t)];
      double emp = report.empirical_variance[static_cast<std::size_t>(t)];
      if (ex == 0.0 ? emp == 0.0 : (emp >= lo * ex && emp <= hi * ex)) ++covered;
    }
    report.envelope_coverage =
        static_cast<double>(covered) / static_cast<double>(times);
  }

  report.trend = trend_test(report.empirical_variance);
  report.pass = report.trend.pass;
  return report;
}

VarianceExperimentReport clt_variance_experiment(const DiscreteHmm& model,
                                                 const std::vector<int>& y,
                                                 std::int64_t num_particles,
                                                 std::int64_t num_replicates,
                                                 const TestFunction& h,
                                                 std::uint64_t seed,
                                                 int threads) {
  if (y.empty())
    throw Error(ErrorCode::invalid_argument, "needs at least one observation");
  VarianceExperimentReport report;
  report.num_particles = num_particles;
  report.num_replicates = num_replicates;
  report.h_label = h.label();

  Eigen::VectorXd hv = h.values_on(model);
  VarianceSeries vs = exact_variance_series_discrete(model, y, hv, h.label());
  report.sigma2_exact = vs.sigma2;
  report.sigma2_filter_exact = vs.sigma2_filter;

  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  DiscreteParticleModel pm(model);
  RngKey base = SeedStream(seed).derive({seed_tags::experiment});
  auto records = replicate_ensemble(pm, y, num_particles, num_replicates, base,
                                    {h}, threads);

  const std::int64_t T = static_cast<std::int64_t>(y.size());
  const double scale = static_cast<double>(num_particles);
  const double m = static_cast<double>(num_replicates);
  report.sigma2_emp.resize(static_cast<std::size_t>(T) + 1);
  report.sigma2_filter_emp.resize(static_cast<std::size_t>(T));
  for (std::int64_t t = 0; t <= T; ++t) {
    double ref = trace.predictors[static_cast<std::size_t>(t)].dot(hv);
    double acc = 0.0;
    for (const auto& rec : records) {
      double e = rec.predictor_estimates(t, 0) - ref;
      acc += e * e;
    }
    report.sigma2_emp[static_cast<std::size_t>(t)] = scale * acc / m;
  }
  for (std::int64_t t = 0; t < T; ++t) {
    double ref = trace.filters[static_cast<std::size_t>(t)].dot(hv);
    double acc = 0.0;
    for (const auto& rec : records) {
      double e = rec.filter_estimates(t, 0) - ref;
      acc += e * e;
    }
    report.sigma2_filter_emp[static_cast<std::size_t>(t)] = scale * acc / m;
  }
  report.envelope_low = chi_square_quantile(m, 0.005) / m;
  report.envelope_high = chi_square_quantile(m, 0.995) / m;
  return report;
}

LpReport lp_error_experiment(const DiscreteHmm& model,
                             const std::vector<int>& observations,
                             std::int64_t time_index, double p,
                             const std::vector<std::int64_t>& n_grid,
                             std::int64_t num_replicates, const TestFunction& h,
                             std::uint64_t seed, int threads) {
  if (p < 1.0)
    throw Error(ErrorCode::invalid_argument, "lp experiment needs p >= 1");
  if (time_index < 0 ||
      time_index > static_cast<std::int64_t>(observations.size()))
    throw Error(ErrorCode::invalid_argument, "time index outside the horizon");

  LpReport report;
  report.p = p;
  report.time_index = time_index;
  report.n_grid = n_grid;

  std::vector<int> y(observations.begin(),
                     observations.begin() + time_index);
  Eigen::VectorXd hv = h.values_on(model);
  report.sigma = std::sqrt(exact_asymptotic_variance_discrete(model, y, hv));
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  double target = trace.predictors[static_cast<std::size_t>(time_index)].dot(hv);

  report.gaussian_moment = gaussian_absolute_moment(p);
  report.reference = report.sigma * std::pow(report.gaussian_moment, 1.0 / p);
  report.printed_constant =
      std::sqrt(2.0) * report.sigma *
      std::pow(std::exp(std::lgamma((p + 1.0) / 2.0)) / std::sqrt(2.0 * M_PI),
               1.0 / p);

  DiscreteParticleModel pm(model);
  SeedStream stream(seed);
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    std::int64_t n_particles = n_grid[gi];
    RngKey base = stream.derive({seed_tags::experiment, gi});
    auto records = replicate_ensemble(pm, y, n_particles, num_replicates, base,
                                      {h}, threads);
    double acc = 0.0;
    for (const auto& rec : records) {
      double e = std::fabs(rec.predictor_estimates(time_index, 0) - target);
      acc += std::pow(e, p);
    }
    acc /= static_cast<double>(num_replicates);
    report.estimates.push_back(std::sqrt(static_cast<double>(n_particles)) *
                               std::pow(acc, 1.0 / p));
  }
  if (!report.estimates.empty() && report.reference > 0.0)
    report.final_relative_gap =
        std::fabs(report.estimates.back() - report.reference) / report.reference;
  return report;
}

ForgettingReport forgetting_experiment(const DiscreteHmm& model,
                                       const std::vector<int>& y,
                                       const Eigen::VectorXd& chi_a,
                                       const Eigen::VectorXd& chi_b) {
  DiscreteHmm model_a = model.with_initial(chi_a);
  DiscreteHmm model_b = model.with_initial(chi_b);
  DiscreteFilterTrace ta = forward_filter_discrete(model_a, y);
  DiscreteFilterTrace tb = forward_filter_discrete(model_b, y);

  ForgettingReport report;
  const std::size_t n = y.size();
  report.loglik_gap.resize(n);
  report.tv_distance.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    report.loglik_gap[k] =
        std::fabs(ta.step_log_densities[k] - tb.step_log_densities[k]);
    report.tv_distance[k] =
        0.5 * (ta.predictors[k + 1] - tb.predictors[k + 1]).lpNorm<1>();
  }

  // Fit ln(tv) over the prefix where the gap is numerically alive.
  std::vector<double> log_gap;
  for (double v : report.tv_distance) {
    if (v <= 1e-13) break;
    log_gap.push_back(std::log(v));
  }
  report.fit_points = static_cast<int>(log_gap.size());
  if (log_gap.size() >= 3) {
    OlsFit fit = ols_robust(log_gap);
    double z = normal_quantile(0.995);
    report.slope = fit.slope;
    report.slope_ci_low = fit.slope - z * fit.robust_se;
    report.slope_ci_high = fit.slope + z * fit.robust_se;
    report.rate = std::exp(fit.slope);
    report.decay_pass = report.slope_ci_high < 0.0;
  } else {
    // Gap at or below the numerical floor from the start: nothing left to
    // forget.
    report.slope = 0.0;
    report.slope_ci_low = 0.0;
    report.slope_ci_high = 0.0;
    report.rate = 0.0;
    report.decay_pass = true;
  }
  return report;
}

RateReport loglik_rate_experiment(const ModelVariant& model,
                                  const ObservationSource& source,
                                  std::int64_t n_max) {
  if (n_max < 4)
    throw Error(ErrorCode::invalid_argument, "rate experiment needs n_max >= 4");
  ObservationSequence obs = stationary_observation_stream(source, n_max);
  std::vector<double> step_logs;
  if (const auto* d = std::get_if<DiscreteHmm>(&model)) {
    if (!obs.discrete)
      throw Error(ErrorCode::dimension,
                  "discrete model needs alphabet observations");
    step_logs = forward_filter_discrete(*d, obs.symbols).step_log_densities;
  } else if (const auto* l = std::get_if<LinearGaussianModel>(&model)) {
    if (obs.discrete)
      throw Error(ErrorCode::dimension, "linear model needs vector observations");
    step_logs = kalman_filter(*l, obs.vectors).step_log_densities;
  } else {
    throw Error(ErrorCode::unsupported,
                "log-likelihood rate needs an exactly tractable model");
  }

  RateReport report;
  report.normalized_loglik.resize(static_cast<std::size_t>(n_max));
  double cum = 0.0;
  for (std::int64_t k = 0; k < n_max; ++k) {
    cum += step_logs[static_cast<std::size_t>(k)];
    report.normalized_loglik[static_cast<std::size_t>(k)] =
        cum / static_cast<double>(k + 1);
  }
  std::size_t start = static_cast<std::size_t>((3 * n_max) / 4);
  double mean = 0.0;
  std::size_t count = report.normalized_loglik.size() - start;
  for (std::size_t i = start; i < report.normalized_loglik.size(); ++i)
    mean += report.normalized_loglik[i];
  mean /= static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t i = start; i < report.normalized_loglik.size(); ++i) {
    double d = report.normalized_loglik[i] - mean;
    ss += d * d;
  }
  report.last_quartile_std =
      count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
  report.final_value = report.normalized_loglik.back();
  return report;
}

}  // namespace smcstab
