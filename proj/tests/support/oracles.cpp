#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "smcstab/stats.hpp"

namespace oracles {

namespace {

// Iterates every path x_{0:t}; calls visit(path, weight) with the joint
// weight chi(x0) * prod q * prod_{k in obs_steps} g(x_k, y_k).
template <class Visit>
void for_each_path(const smcstab::DiscreteHmm& model, const std::vector<int>& y,
                   int t, int obs_through, Visit&& visit) {
  const int m = model.num_states();
  std::vector<int> path(static_cast<std::size_t>(t) + 1, 0);
  for (;;) {
    double w = model.initial()[path[0]];
    for (int k = 1; k <= t; ++k)
      w *= model.transition()(path[static_cast<std::size_t>(k - 1)],
                              path[static_cast<std::size_t>(k)]);
    for (int k = 0; k <= obs_through; ++k)
      w *= model.emission()(path[static_cast<std::size_t>(k)], y[static_cast<std::size_t>(k)]);
    visit(path, w);
    int i = 0;
    while (i <= t) {
      if (++path[static_cast<std::size_t>(i)] < m) break;
      path[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i > t) break;
  }
}

}  // namespace

Eigen::VectorXd enum_predictor(const smcstab::DiscreteHmm& model,
                               const std::vector<int>& y, int t) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(model.num_states());
  for_each_path(model, y, t, t - 1, [&](const std::vector<int>& path, double w) {
    mass[path[static_cast<std::size_t>(t)]] += w;
  });
  return mass / mass.sum();
}

Eigen::VectorXd enum_filter(const smcstab::DiscreteHmm& model,
                            const std::vector<int>& y, int t) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(model.num_states());
  for_each_path(model, y, t, t, [&](const std::vector<int>& path, double w) {
    mass[path[static_cast<std::size_t>(t)]] += w;
  });
  return mass / mass.sum();
}

double enum_likelihood(const smcstab::DiscreteHmm& model,
                       const std::vector<int>& y) {
  const int t = static_cast<int>(y.size()) - 1;
  double total = 0.0;
  for_each_path(model, y, t, t,
                [&](const std::vector<int>&, double w) { total += w; });
  return total;
}

Eigen::VectorXd enum_kernel_apply(const smcstab::DiscreteHmm& model,
                                  const std::vector<int>& segment,
                                  const Eigen::VectorXd& h) {
  const int m = model.num_states();
  const int len = static_cast<int>(segment.size());
  Eigen::VectorXd out(m);
  // Sum over all intermediate paths x_{1:len} for each start state.
  for (int x0 = 0; x0 < m; ++x0) {
    if (len == 0) {
      out[x0] = h[x0];
      continue;
    }
    std::vector<int> inner(static_cast<std::size_t>(len), 0);
    double total = 0.0;
    for (;;) {
      double w = model.emission()(x0, segment[0]);
      int prev = x0;
      for (int k = 0; k < len; ++k) {
        int cur = inner[static_cast<std::size_t>(k)];
        w *= model.transition()(prev, cur);
        if (k + 1 < len) w *= model.emission()(cur, segment[static_cast<std::size_t>(k + 1)]);
        prev = cur;
      }
      total += w * h[prev];
      int i = 0;
      while (i < len) {
        if (++inner[static_cast<std::size_t>(i)] < m) break;
        inner[static_cast<std::size_t>(i)] = 0;
        ++i;
      }
      if (i == len) break;
    }
    out[x0] = total;
  }
  return out;
}

int row_reduction_rank(Eigen::MatrixXd m, double rel_tol) {
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  const double tol = rel_tol * scale;
  int rank = 0;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < m.cols() && row < m.rows(); ++col) {
    Eigen::Index pivot = row;
    for (Eigen::Index i = row + 1; i < m.rows(); ++i)
      if (std::fabs(m(i, col)) > std::fabs(m(pivot, col))) pivot = i;
    if (std::fabs(m(pivot, col)) <= tol) continue;
    m.row(pivot).swap(m.row(row));
    for (Eigen::Index i = row + 1; i < m.rows(); ++i) {
      double f = m(i, col) / m(row, col);
      m.row(i) -= f * m.row(row);
    }
    ++row;
    ++rank;
  }
  return rank;
}

double anderson_darling_normal(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  double a2 = -static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = smcstab::normal_cdf(samples[i]);
    double hi = smcstab::normal_cdf(samples[n - 1 - i]);
    lo = std::min(std::max(lo, 1e-300), 1.0 - 1e-16);
    hi = std::min(std::max(hi, 1e-300), 1.0 - 1e-16);
    a2 -= (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) *
          (std::log(lo) + std::log1p(-hi));
  }
  return a2;
}

double chi_square_stat(const std::vector<long long>& counts,
                       const std::vector<double>& probs) {
  long long total = 0;
  for (long long c : counts) total += c;
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double expected = static_cast<double>(total) * probs[i];
    double diff = static_cast<double>(counts[i]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
  Eigen::VectorXd pi =
      Eigen::VectorXd::Constant(transition.rows(), 1.0 / transition.rows());
  for (int i = 0; i < 100000; ++i) {
    Eigen::VectorXd next = transition.transpose() * pi;
    next /= next.sum();
    if ((next - pi).cwiseAbs().maxCoeff() < 1e-14) return next;
    pi = next;
  }
  return pi;
}

smcstab::DiscreteHmm random_discrete_hmm(smcstab::Rng& rng, int num_states,
                                         int num_symbols) {
  auto random_stochastic = [&rng](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      double sum = 0.0;
      for (int j = 0; j < cols; ++j) {
        m(i, j) = 0.05 + rng.uniform();
        sum += m(i, j);
      }
      m.row(i) /= sum;
    }
    return m;
  };
  Eigen::MatrixXd q = random_stochastic(num_states, num_states);
  Eigen::MatrixXd g = random_stochastic(num_states, num_symbols);
  Eigen::MatrixXd chi_row = random_stochastic(1, num_states);
  return smcstab::DiscreteHmm(q, g, chi_row.row(0).transpose());
}

smcstab::LinearGaussianModel random_lgss(smcstab::Rng& rng, int dx, int du,
                                         int dy) {
  auto randm = [&rng](int r, int c, double scale) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = scale * (2.0 * rng.uniform() - 1.0);
    return m;
  };
  Eigen::MatrixXd a = randm(dx, dx, 0.9 / dx);
  Eigen::MatrixXd r = randm(dx, du, 1.0);
  Eigen::MatrixXd b = randm(dy, dx, 1.0);
  Eigen::MatrixXd s =
      randm(dy, dy, 0.3) + 0.8 * Eigen::MatrixXd::Identity(dy, dy);
  Eigen::VectorXd mean = randm(dx, 1, 1.0).col(0);
  Eigen::MatrixXd c = randm(dx, dx, 0.5);
  Eigen::MatrixXd cov =
      c * c.transpose() + 0.2 * Eigen::MatrixXd::Identity(dx, dx);
  return smcstab::LinearGaussianModel(a, r, b, s, mean, cov);
}

smcstab::DiscreteHmm two_state_fixture() {
  Eigen::MatrixXd q(2, 2), g(2, 2);
  q << 0.9, 0.1, 0.2, 0.8;
  g << 0.8, 0.2, 0.3, 0.7;
  Eigen::VectorXd chi(2);
  chi << 0.5, 0.5;
  return smcstab::DiscreteHmm(q, g, chi);
}

}  // namespace oracles
