#include "smcstab/verifier.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "smcstab/errors.hpp"
#include "smcstab/stats.hpp"

namespace smcstab {

Eigen::MatrixXd lgss_observability(const LinearGaussianModel& model, int n) {
  const int dx = model.state_dim();
  const int dy = model.obs_dim();
  Eigen::MatrixXd obs(n * dy, dx);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(dx, dx);
  for (int i = 0; i < n; ++i) {
    obs.middleRows(i * dy, dy) = model.b() * power;
    power = power * model.a();
  }
  return obs;
}

Eigen::MatrixXd lgss_controllability(const LinearGaussianModel& model, int n) {
  const int dx = model.state_dim();
  const int du = model.noise_dim();
  Eigen::MatrixXd ctrl(dx, n * du);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(dx, dx);
  for (int j = n - 1; j >= 0; --j) {
    ctrl.middleCols(j * du, du) = power * model.r();
    power = power * model.a();
  }
  return ctrl;
}

namespace {

// Lower block-triangular map from stacked state noise (U_0..U_{n-1}) to the
// stacked observations; the last noise block never reaches an observation.
Eigen::MatrixXd lgss_d_matrix(const LinearGaussianModel& model, int n) {
  const int dy = model.obs_dim();
  const int du = model.noise_dim();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n * dy, n * du);
  std::vector<Eigen::MatrixXd> ba(static_cast<std::size_t>(n));
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(model.state_dim(),
                                                    model.state_dim());
  for (int k = 0; k < n; ++k) {
    ba[static_cast<std::size_t>(k)] = model.b() * power * model.r();
    power = power * model.a();
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      d.block(i * dy, j * du, dy, du) = ba[static_cast<std::size_t>(i - 1 - j)];
  return d;
}

int numerical_rank(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double threshold = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * sv[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > threshold) ++rank;
  return rank;
}

}  // namespace

Eigen::MatrixXd lgss_f_matrix(const LinearGaussianModel& model, int n) {
  const int dy = model.obs_dim();
  Eigen::MatrixXd d = lgss_d_matrix(model, n);
  Eigen::MatrixXd f = d * d.transpose();
  Eigen::MatrixXd ss = model.s() * model.s().transpose();
  for (int i = 0; i < n; ++i) f.block(i * dy, i * dy, dy, dy) += ss;
  return 0.5 * (f + f.transpose());
}

Eigen::MatrixXd lgss_g_matrix(const LinearGaussianModel& model, int r) {
  const int dx = model.state_dim();
  const int dy = model.obs_dim();
  Eigen::MatrixXd d = lgss_d_matrix(model, r);
  Eigen::MatrixXd c = lgss_controllability(model, r);
  Eigen::MatrixXd stacked(r * dy + dx, r * model.noise_dim());
  stacked.topRows(r * dy) = d;
  stacked.bottomRows(dx) = c;
  Eigen::MatrixXd g = stacked * stacked.transpose();
  Eigen::MatrixXd ss = model.s() * model.s().transpose();
  for (int i = 0; i < r; ++i) g.block(i * dy, i * dy, dy, dy) += ss;
  return 0.5 * (g + g.transpose());
}

LgssStructure lgss_structure(const LinearGaussianModel& model, int r_max) {
  if (r_max < 1)
    throw Error(ErrorCode::invalid_argument, "r_max must be at least 1");
  LgssStructure out;
  out.r_max = r_max;
  const int dx = model.state_dim();
  for (int n = 1; n <= r_max; ++n) {
    Eigen::MatrixXd obs = lgss_observability(model, n);
    Eigen::MatrixXd ctrl = lgss_controllability(model, n);
    Eigen::MatrixXd f = lgss_f_matrix(model, n);
    out.obs_rank.push_back(numerical_rank(obs));
    out.ctrl_rank.push_back(numerical_rank(ctrl));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
    out.f_min_eigval.push_back(es.eigenvalues().minCoeff());
    if (!out.r_star && out.obs_rank.back() == dx && out.ctrl_rank.back() == dx)
      out.r_star = n;
    if (n == r_max) {
      out.obs_matrix = obs;
      out.ctrl_matrix = ctrl;
      out.f_matrix = f;
    }
  }
  if (out.r_star) {
    out.f_positive_definite = true;
    for (int n = *out.r_star; n <= r_max; ++n) {
      if (out.f_min_eigval[static_cast<std::size_t>(n - 1)] <=
          1e-12 * std::max(1.0, out.f_matrix.norm()))
        out.f_positive_definite = false;
    }
    out.g_matrix = lgss_g_matrix(model, *out.r_star);
  } else {
    out.g_matrix = lgss_g_matrix(model, r_max);
  }
  return out;
}

double lgss_block_log_likelihood(const LinearGaussianModel& model,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::MatrixXd& y) {
  const int dy = model.obs_dim();
  const int n = static_cast<int>(y.cols());
  if (n < 1)
    throw Error(ErrorCode::invalid_argument, "needs at least one observation");
  if (x0.size() != model.state_dim() || y.rows() != dy)
    throw Error(ErrorCode::dimension, "state/observation dimension mismatch");
  Eigen::MatrixXd f = lgss_f_matrix(model, n);
  Eigen::LLT<Eigen::MatrixXd> llt(f);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::numeric,
                "block observation covariance F_n is singular");
  Eigen::VectorXd stacked(n * dy);
  for (int k = 0; k < n; ++k) stacked.segment(k * dy, dy) = y.col(k);
  Eigen::VectorXd mean = lgss_observability(model, n) * x0;
  return gaussian_log_density(stacked, mean, llt);
}

double lgss_block_likelihood(const LinearGaussianModel& model,
                             const Eigen::VectorXd& x0,
                             const Eigen::MatrixXd& y) {
  return std::exp(lgss_block_log_likelihood(model, x0, y));
}

namespace {

std::vector<Eigen::VectorXd> rectangle_grid(const HyperRectangle& rect,
                                            int points_per_dim) {
  const Eigen::Index d = rect.low.size();
  std::vector<Eigen::VectorXd> grid;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      double t = points_per_dim == 1
                     ? 0.5
                     : static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                           static_cast<double>(points_per_dim - 1);
      x[i] = rect.low[i] + t * (rect.high[i] - rect.low[i]);
    }
    grid.push_back(std::move(x));
    Eigen::Index carry = 0;
    while (carry < d) {
      if (++idx[static_cast<std::size_t>(carry)] < points_per_dim) break;
      idx[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == d) break;
  }
  return grid;
}

}  // namespace

DoeblinCertificate local_doeblin_constants(const GenericHmm& model,
                                           const HyperRectangle& set,
                                           int grid_points) {
  if (!model.transition_density)
    throw Error(ErrorCode::unsupported,
                "local Doeblin constants need a transition density");
  if (grid_points < 2)
    throw Error(ErrorCode::invalid_argument, "need at least 2 grid points");
  if (set.low.size() != set.high.size() ||
      set.low.size() != model.state_dim)
    throw Error(ErrorCode::dimension, "set dimension mismatch");
  auto grid = rectangle_grid(set, grid_points);
  DoeblinCertificate cert;
  cert.set = set;
  cert.grid_points = grid_points;
  cert.eps_minus = std::numeric_limits<double>::infinity();
  cert.eps_plus = 0.0;
  for (const auto& x : grid) {
    for (const auto& xn : grid) {
      double q = model.transition_density(x, xn);
      if (!(q > 0.0) || !std::isfinite(q))
        throw Error(ErrorCode::model_violation,
                    "transition density is nonpositive on the candidate set; "
                    "positivity fails");
      cert.eps_minus = std::min(cert.eps_minus, q);
      cert.eps_plus = std::max(cert.eps_plus, q);
    }
  }
  cert.ratio = cert.eps_minus / cert.eps_plus;
  return cert;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void frequency_check(AssumptionReport& report, const VerifierConfig& cfg,
                     const ObservationSequence& obs) {
  const std::int64_t n = obs.size();
  const int r = std::max(1, cfg.r);
  const std::int64_t blocks = n / r;
  if (blocks < 4) {
    report.checks.push_back({"A1i-block-frequency", "not-checkable",
                             "observation sample too short"});
    return;
  }
  auto obs_in_k = [&](std::int64_t t) {
    if (obs.discrete) {
      if (cfg.obs_symbols.empty()) return true;  // K = full alphabet
      int sym = obs.symbols[static_cast<std::size_t>(t)];
      for (int s : cfg.obs_symbols)
        if (s == sym) return true;
      return false;
    }
    if (!cfg.obs_set) return true;  // K = full space
    const auto& k = *cfg.obs_set;
    for (Eigen::Index i = 0; i < obs.vectors.rows(); ++i) {
      double v = obs.vectors(i, t);
      if (v < k.low[i] || v > k.high[i]) return false;
    }
    return true;
  };
  std::int64_t hits = 0;
  for (std::int64_t b = 0; b < blocks; ++b) {
    bool inside = true;
    for (int j = 0; j < r && inside; ++j) inside = obs_in_k(b * r + j);
    if (inside) ++hits;
  }
  double phat = static_cast<double>(hits) / static_cast<double>(blocks);
  double z = normal_quantile(0.95);
  double lower =
      phat - z * std::sqrt(std::max(0.0, phat * (1.0 - phat)) /
                           static_cast<double>(blocks));
  bool pass = lower > 2.0 / 3.0;
  report.checks.push_back(
      {"A1i-block-frequency", pass ? "pass" : "fail",
       "observed=" + fmt(phat) + " lower95=" + fmt(lower) +
           " threshold=" + fmt(2.0 / 3.0) + " blocks=" + std::to_string(blocks)});
}

void tail_check(AssumptionReport& report, const GenericHmm& model,
                const VerifierConfig& cfg) {
  if (!model.obs_density || !cfg.obs_set) {
    report.checks.push_back({"A1ii-tail-ratio", "not-checkable",
                             "needs an observation density and the set K"});
    return;
  }
  const int d = model.state_dim;
  HyperRectangle wide;
  wide.low = Eigen::VectorXd::Constant(d, -cfg.shell_radius);
  wide.high = Eigen::VectorXd::Constant(d, cfg.shell_radius);
  auto xs = rectangle_grid(wide, cfg.grid_points);
  auto ys = rectangle_grid(*cfg.obs_set, std::min(cfg.grid_points, 17));
  double worst = 0.0;
  for (const auto& y : ys) {
    double sup_all = 0.0, sup_shell = 0.0;
    for (const auto& x : xs) {
      double g = model.obs_density(x, y);
      sup_all = std::max(sup_all, g);
      if (x.cwiseAbs().maxCoeff() >= cfg.shell_radius * (1.0 - 1e-12))
        sup_shell = std::max(sup_shell, g);
    }
    if (sup_all > 0.0) worst = std::max(worst, sup_shell / sup_all);
  }
  bool pass = worst <= cfg.eta;
  report.checks.push_back({"A1ii-tail-ratio", pass ? "pass" : "fail",
                           "worst_ratio=" + fmt(worst) + " eta=" + fmt(cfg.eta) +
                               " shell_radius=" + fmt(cfg.shell_radius)});
}

void doeblin_check(AssumptionReport& report, const GenericHmm& model,
                   const VerifierConfig& cfg) {
  if (!model.transition_density || !cfg.doeblin_set) {
    report.checks.push_back({"A1ii-doeblin", "not-checkable",
                             "needs a transition density and the set C"});
    return;
  }
  try {
    DoeblinCertificate cert =
        local_doeblin_constants(model, *cfg.doeblin_set, cfg.grid_points);
    bool pass = cert.ratio > 0.0;
    report.checks.push_back(
        {"A1ii-doeblin", pass ? "pass" : "fail",
         "eps_minus=" + fmt(cert.eps_minus) + " eps_plus=" + fmt(cert.eps_plus) +
             " ratio=" + fmt(cert.ratio)});
  } catch (const Error& e) {
    report.checks.push_back({"A1ii-doeblin", "fail", e.what()});
  }
}

void drift_checks(AssumptionReport& report, const GenericHmm& model,
                  const ObservationSequence& obs, const VerifierConfig& cfg) {
  if (!cfg.drift_set) {
    report.checks.push_back(
        {"CS2-transition-mass", "not-checkable", "needs the set D"});
    report.checks.push_back(
        {"CS1-emission-floor", "not-checkable", "needs the set D"});
    return;
  }
  const auto& d_set = *cfg.drift_set;
  auto xs = rectangle_grid(d_set, cfg.grid_points);

  if (model.transition_density) {
    // Midpoint quadrature of the transition mass into D from each grid start.
    const Eigen::Index dim = d_set.low.size();
    double cell = 1.0;
    for (Eigen::Index i = 0; i < dim; ++i)
      cell *= (d_set.high[i] - d_set.low[i]) /
              static_cast<double>(cfg.grid_points);
    HyperRectangle mids;
    double half = 0.5 / static_cast<double>(cfg.grid_points);
    mids.low = d_set.low +
               (d_set.high - d_set.low) * half;
    mids.high = d_set.high -
                (d_set.high - d_set.low) * half;
    auto targets = rectangle_grid(mids, cfg.grid_points);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& x : xs) {
      double mass = 0.0;
      for (const auto& xn : targets) mass += model.transition_density(x, xn);
      mass *= cell;
      worst = std::min(worst, mass);
    }
    bool pass = worst >= cfg.delta;
    report.checks.push_back({"CS2-transition-mass", pass ? "pass" : "fail",
                             "min_mass=" + fmt(worst) + " delta=" + fmt(cfg.delta)});
  } else {
    report.checks.push_back({"CS2-transition-mass", "not-checkable",
                             "no transition density; supply one or use the "
                             "sampling check"});
  }

  if (model.obs_density && !obs.discrete && obs.size() > 0) {
    double min_g = std::numeric_limits<double>::infinity();
    double mean_log_minus = 0.0;
    for (std::int64_t t = 0; t < obs.size(); ++t) {
      Eigen::VectorXd y = obs.vectors.col(t);
      double inf_g = std::numeric_limits<double>::infinity();
      for (const auto& x : xs) inf_g = std::min(inf_g, model.obs_density(x, y));
      min_g = std::min(min_g, inf_g);
      mean_log_minus += std::max(0.0, -std::log(inf_g));
    }
    mean_log_minus /= static_cast<double>(obs.size());
    bool pass = min_g > 0.0 && std::isfinite(mean_log_minus);
    report.checks.push_back(
        {"CS1-emission-floor", pass ? "pass" : "fail",
         "min_emission=" + fmt(min_g) + " mean_log_minus=" + fmt(mean_log_minus)});
  } else {
    report.checks.push_back({"CS1-emission-floor", "not-checkable",
                             "needs an observation density and a vector sample"});
  }
}

}  // namespace

AssumptionReport check_assumptions(const ModelVariant& model,
                                   const ObservationSequence& obs_sample,
                                   const VerifierConfig& config) {
  AssumptionReport report;
  frequency_check(report, config, obs_sample);

  if (const auto* d = std::get_if<DiscreteHmm>(&model)) {
    // Finite state space: the tail condition is vacuous and the whole space
    // is a Doeblin set whenever the transition matrix is positive.
    double qmin = d->transition().minCoeff();
    double qmax = d->transition().maxCoeff();
    report.checks.push_back(
        {"A1ii-doeblin", qmin > 0.0 ? "pass" : "fail",
         "eps_minus=" + fmt(qmin) + " eps_plus=" + fmt(qmax) +
             " (transition matrix extremes over the full finite space)"});
    report.checks.push_back({"A1ii-tail-ratio", "pass",
                             "finite state space; tail condition vacuous"});
    double gmin_used = std::numeric_limits<double>::infinity();
    if (obs_sample.discrete) {
      for (int sym : obs_sample.symbols)
        gmin_used = std::min(gmin_used, d->emission().col(sym).minCoeff());
      report.checks.push_back(
          {"CS1-emission-floor", gmin_used > 0.0 ? "pass" : "fail",
           "min_emission_over_sample=" + fmt(gmin_used)});
    } else {
      report.checks.push_back({"CS1-emission-floor", "not-checkable",
                               "needs alphabet observations"});
    }
    report.checks.push_back({"CS2-transition-mass", "pass",
                             "D = full finite space; mass 1"});
    return report;
  }

  if (const auto* l = std::get_if<LinearGaussianModel>(&model)) {
    LgssStructure s = lgss_structure(*l, config.r_max);
    std::ostringstream ev;
    if (s.r_star)
      ev << "r_star=" << *s.r_star;
    else
      ev << "no full-rank r up to " << config.r_max;
    ev << " obs_rank=" << s.obs_rank.back() << " ctrl_rank=" << s.ctrl_rank.back()
       << " f_min_eig=" << fmt(s.f_min_eigval.back());
    report.checks.push_back({"LGSS1-observability-controllability",
                             s.r_star ? "pass" : "fail", ev.str()});
    int s_rank = numerical_rank(l->s());
    report.checks.push_back(
        {"LGSS2-full-rank-noise", s_rank == l->obs_dim() ? "pass" : "fail",
         "rank(S)=" + std::to_string(s_rank)});
    if (!obs_sample.discrete && obs_sample.size() > 0) {
      double mean_sq = 0.0;
      for (std::int64_t t = 0; t < obs_sample.size(); ++t)
        mean_sq += obs_sample.vectors.col(t).squaredNorm();
      mean_sq /= static_cast<double>(obs_sample.size());
      report.checks.push_back({"LGSS3-second-moment", "pass",
                               "sample_mean_sq_norm=" + fmt(mean_sq)});
    } else {
      report.checks.push_back(
          {"LGSS3-second-moment", "not-checkable", "needs a vector sample"});
    }
    return report;
  }

  const auto& g = std::get<GenericHmm>(model);
  doeblin_check(report, g, config);
  tail_check(report, g, config);
  drift_checks(report, g, obs_sample, config);
  return report;
}

}  // namespace smcstab
