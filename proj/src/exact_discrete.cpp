#include "smcstab/exact_discrete.hpp"

#include <cmath>

#include "smcstab/errors.hpp"

namespace smcstab {

namespace {

void check_symbols(const DiscreteHmm& model, const std::vector<int>& y) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] < 0 || y[k] >= model.num_symbols())
      throw Error(ErrorCode::dimension,
                  "observation symbol " + std::to_string(y[k]) + " at index " +
                      std::to_string(k) + " is outside the alphabet");
  }
}

}  // namespace

DiscreteFilterTrace forward_filter_discrete(const DiscreteHmm& model,
                                            const std::vector<int>& y) {
  check_symbols(model, y);
  const Eigen::Index m = model.num_states();
  DiscreteFilterTrace trace;
  trace.predictors.reserve(y.size() + 1);
  trace.filters.reserve(y.size());
  trace.step_densities.reserve(y.size());
  trace.step_log_densities.reserve(y.size());

  Eigen::VectorXd predictor = model.initial();
  trace.predictors.push_back(predictor);
  Eigen::VectorXd weighted(m), filter(m);
  for (std::size_t k = 0; k < y.size(); ++k) {
    weighted = predictor.cwiseProduct(model.emission().col(y[k]));
    double step = weighted.sum();
    if (!(step > 0.0))
      throw DegeneracyError(
          "zero one-step observation density at time " + std::to_string(k),
          static_cast<long long>(k));
    filter = weighted / step;
    predictor = model.transition().transpose() * filter;
    predictor /= predictor.sum();  // guard against rounding drift
    trace.filters.push_back(filter);
    trace.predictors.push_back(predictor);
    trace.step_densities.push_back(step);
    trace.step_log_densities.push_back(std::log(step));
    trace.log_likelihood += std::log(step);
  }
  return trace;
}

Eigen::VectorXd unnormalized_kernel_apply_discrete(const DiscreteHmm& model,
                                                   const std::vector<int>& segment,
                                                   const Eigen::VectorXd& h) {
  check_symbols(model, segment);
  if (h.size() != model.num_states())
    throw Error(ErrorCode::dimension, "test function has wrong length");
  Eigen::VectorXd v = h;
  for (std::size_t i = segment.size(); i-- > 0;) {
    v = model.emission().col(segment[i]).cwiseProduct(model.transition() * v);
  }
  return v;
}

namespace {

// Variance of the scaled predictor error at time n = y.size(), reusing an
// already computed forward trace over (a prefix of) the observations. The
// backward functions are kept normalized so that predictor . b == 1 at every
// step; a and b share the same scale, which is all the formula needs.
double variance_from_trace(const DiscreteHmm& model, const std::vector<int>& y,
                           std::size_t n, const DiscreteFilterTrace& trace,
                           const Eigen::VectorXd& h) {
  Eigen::VectorXd a = h;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(model.num_states());
  const double target = trace.predictors[n].dot(h);
  double total = trace.predictors[n].dot(
      (h.array() - target).square().matrix());
  for (std::size_t k = n; k-- > 0;) {
    const auto& col = model.emission().col(y[k]);
    a = col.cwiseProduct(model.transition() * a);
    b = col.cwiseProduct(model.transition() * b);
    double scale = trace.predictors[k].dot(b);
    if (!(scale > 0.0))
      throw DegeneracyError("degenerate backward normalizer at time " +
                                std::to_string(k),
                            static_cast<long long>(k));
    a /= scale;
    b /= scale;
    Eigen::ArrayXd centered = a.array() - target * b.array();
    total += trace.predictors[k].dot(centered.square().matrix());
  }
  return total;
}

}  // namespace

double exact_asymptotic_variance_discrete(const DiscreteHmm& model,
                                          const std::vector<int>& y,
                                          const Eigen::VectorXd& h) {
  if (h.size() != model.num_states())
    throw Error(ErrorCode::dimension, "test function has wrong length");
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  return variance_from_trace(model, y, y.size(), trace, h);
}

double exact_filter_variance_discrete(const DiscreteHmm& model,
                                      const std::vector<int>& y,
                                      const Eigen::VectorXd& h) {
  if (y.empty())
    throw Error(ErrorCode::invalid_argument,
                "filter variance needs at least one observation");
  if (h.size() != model.num_states())
    throw Error(ErrorCode::dimension, "test function has wrong length");
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  const std::size_t n = y.size() - 1;
  double filter_mean = trace.filters[n].dot(h);
  Eigen::VectorXd f =
      model.emission().col(y[n]).cwiseProduct(h - Eigen::VectorXd::Constant(
                                                      h.size(), filter_mean));
  double numerator = variance_from_trace(model, y, n, trace, f);
  double denom = trace.step_densities[n];
  return numerator / (denom * denom);
}

VarianceSeries exact_variance_series_discrete(const DiscreteHmm& model,
                                              const std::vector<int>& y,
                                              const Eigen::VectorXd& h,
                                              const std::string& h_label) {
  if (h.size() != model.num_states())
    throw Error(ErrorCode::dimension, "test function has wrong length");
  DiscreteFilterTrace trace = forward_filter_discrete(model, y);
  VarianceSeries out;
  out.h_label = h_label;
  out.sigma2.reserve(y.size() + 1);
  out.sigma2_filter.reserve(y.size());
  for (std::size_t t = 0; t <= y.size(); ++t)
    out.sigma2.push_back(variance_from_trace(model, y, t, trace, h));
  for (std::size_t t = 0; t < y.size(); ++t) {
    double filter_mean = trace.filters[t].dot(h);
    Eigen::VectorXd f = model.emission().col(y[t]).cwiseProduct(
        h - Eigen::VectorXd::Constant(h.size(), filter_mean));
    double numerator = variance_from_trace(model, y, t, trace, f);
    double denom = trace.step_densities[t];
    out.sigma2_filter.push_back(numerator / (denom * denom));
  }
  return out;
}

}  // namespace smcstab
