#include "smcstab/models.hpp"

#include <cmath>
#include <sstream>

#include "smcstab/errors.hpp"

namespace smcstab {

namespace {

constexpr double kNormTol = 1e-12;

void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace

DiscreteHmm::DiscreteHmm(Eigen::MatrixXd transition, Eigen::MatrixXd emission,
                         Eigen::VectorXd initial)
    : transition_(std::move(transition)),
      emission_(std::move(emission)),
      initial_(std::move(initial)) {
  const auto m = transition_.rows();
  require(m >= 1, ErrorCode::dimension, "discrete model needs at least one state");
  require(transition_.cols() == m, ErrorCode::dimension,
          "transition matrix must be square");
  require(emission_.rows() == m, ErrorCode::dimension,
          "emission rows must match state count");
  require(emission_.cols() >= 1, ErrorCode::dimension,
          "emission needs at least one symbol");
  require(initial_.size() == m, ErrorCode::dimension,
          "initial vector must match state count");
  require((transition_.array() >= 0.0).all(), ErrorCode::model_violation,
          "transition entries must be nonnegative");
  require((emission_.array() >= 0.0).all(), ErrorCode::model_violation,
          "emission entries must be nonnegative");
  require((initial_.array() >= 0.0).all(), ErrorCode::model_violation,
          "initial entries must be nonnegative");
  for (Eigen::Index i = 0; i < m; ++i) {
    require(std::fabs(transition_.row(i).sum() - 1.0) <= kNormTol,
            ErrorCode::model_violation,
            "transition row " + std::to_string(i) + " does not sum to 1");
  }
  require(std::fabs(initial_.sum() - 1.0) <= kNormTol, ErrorCode::model_violation,
          "initial distribution does not sum to 1");
  for (Eigen::Index y = 0; y < emission_.cols(); ++y) {
    require(emission_.col(y).maxCoeff() > 0.0, ErrorCode::model_violation,
            "emission column " + std::to_string(y) +
                " is all zero (positivity of the local likelihood fails)");
  }
}

DiscreteHmm DiscreteHmm::with_initial(Eigen::VectorXd initial) const {
  return DiscreteHmm(transition_, emission_, std::move(initial));
}

LinearGaussianModel::LinearGaussianModel(Eigen::MatrixXd a, Eigen::MatrixXd r,
                                         Eigen::MatrixXd b, Eigen::MatrixXd s,
                                         Eigen::VectorXd init_mean,
                                         Eigen::MatrixXd init_cov)
    : a_(std::move(a)),
      r_(std::move(r)),
      b_(std::move(b)),
      s_(std::move(s)),
      init_mean_(std::move(init_mean)),
      init_cov_(std::move(init_cov)) {
  const auto dx = a_.rows();
  const auto dy = b_.rows();
  require(dx >= 1, ErrorCode::dimension, "state dimension must be positive");
  require(a_.cols() == dx, ErrorCode::dimension, "A must be square");
  require(r_.rows() == dx, ErrorCode::dimension, "R rows must match state dim");
  require(b_.cols() == dx, ErrorCode::dimension, "B cols must match state dim");
  require(dy >= 1, ErrorCode::dimension, "observation dimension must be positive");
  require(s_.rows() == dy && s_.cols() == dy, ErrorCode::dimension,
          "S must be square with observation dimension");
  require(init_mean_.size() == dx, ErrorCode::dimension,
          "init_mean must match state dim");
  require(init_cov_.rows() == dx && init_cov_.cols() == dx, ErrorCode::dimension,
          "init_cov must be state_dim x state_dim");
  require((init_cov_ - init_cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
          ErrorCode::model_violation, "init_cov must be symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(init_cov_);
  require(es.eigenvalues().minCoeff() >= -1e-12, ErrorCode::model_violation,
          "init_cov must be positive semidefinite");
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  init_cov_sqrt_ = es.eigenvectors() * lam.asDiagonal() *
                   es.eigenvectors().transpose();
}

GenericHmm make_arch_hmm(double alpha0, double alpha1, double obs_sd) {
  if (!(alpha0 > 0.0) || alpha1 < 0.0 || !(obs_sd > 0.0))
    throw Error(ErrorCode::invalid_argument,
                "arch model needs alpha0 > 0, alpha1 >= 0, obs_sd > 0");
  const double inv_sqrt_2pi = 0.3989422804014326779399461;
  GenericHmm h;
  h.state_dim = 1;
  h.obs_dim = 1;
  h.name = "arch";
  // Stationary-variance initial law when alpha1 < 1, else unit Gaussian.
  double init_sd = alpha1 < 1.0 ? std::sqrt(alpha0 / (1.0 - alpha1)) : 1.0;
  h.initial_sampler = [init_sd](Rng& rng) {
    Eigen::VectorXd x(1);
    x[0] = init_sd * rng.gaussian();
    return x;
  };
  h.initial_density = [init_sd, inv_sqrt_2pi](const Eigen::VectorXd& x) {
    double z = x[0] / init_sd;
    return inv_sqrt_2pi / init_sd * std::exp(-0.5 * z * z);
  };
  h.transition_sampler = [alpha0, alpha1](const Eigen::VectorXd& x, Rng& rng) {
    Eigen::VectorXd next(1);
    next[0] = std::sqrt(alpha0 + alpha1 * x[0] * x[0]) * rng.gaussian();
    return next;
  };
  h.transition_density = [alpha0, alpha1, inv_sqrt_2pi](
                             const Eigen::VectorXd& x, const Eigen::VectorXd& xn) {
    double sd = std::sqrt(alpha0 + alpha1 * x[0] * x[0]);
    double z = xn[0] / sd;
    return inv_sqrt_2pi / sd * std::exp(-0.5 * z * z);
  };
  h.obs_density = [obs_sd, inv_sqrt_2pi](const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y) {
    double z = (y[0] - x[0]) / obs_sd;
    return inv_sqrt_2pi / obs_sd * std::exp(-0.5 * z * z);
  };
  h.obs_sampler = [obs_sd](const Eigen::VectorXd& x, Rng& rng) {
    Eigen::VectorXd y(1);
    y[0] = x[0] + obs_sd * rng.gaussian();
    return y;
  };
  return h;
}

namespace {

double checked_density(double value, const std::string& what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << what << " returned a nonpositive or non-finite density (" << value
       << "); the positivity assumption on g is violated";
    throw Error(ErrorCode::model_violation, os.str());
  }
  return value;
}

}  // namespace

double local_likelihood(const DiscreteHmm& model, int x, int y) {
  if (x < 0 || x >= model.num_states())
    throw Error(ErrorCode::dimension, "state index out of range");
  if (y < 0 || y >= model.num_symbols())
    throw Error(ErrorCode::dimension, "observation symbol out of range");
  return checked_density(model.emission()(x, y), "discrete emission");
}

double gaussian_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                            const Eigen::LLT<Eigen::MatrixXd>& cov_llt) {
  const Eigen::Index d = y.size();
  Eigen::VectorXd diff = y - mean;
  Eigen::VectorXd w = cov_llt.matrixL().solve(diff);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    log_det += std::log(cov_llt.matrixL()(i, i));
  return -0.5 * w.squaredNorm() - log_det -
         0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
}

double local_likelihood(const LinearGaussianModel& model,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != model.state_dim() || y.size() != model.obs_dim())
    throw Error(ErrorCode::dimension, "state/observation dimension mismatch");
  Eigen::MatrixXd cov = model.s() * model.s().transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::numeric,
                "observation noise covariance S S^T is not positive definite");
  return checked_density(std::exp(gaussian_log_density(y, model.b() * x, llt)),
                         "gaussian emission");
}

double local_likelihood(const GenericHmm& model, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) {
  if (!model.obs_density)
    throw Error(ErrorCode::model_violation, "generic model has no obs_density");
  if (x.size() != model.state_dim || y.size() != model.obs_dim)
    throw Error(ErrorCode::dimension, "state/observation dimension mismatch");
  return checked_density(model.obs_density(x, y), "generic emission");
}

}  // namespace smcstab
