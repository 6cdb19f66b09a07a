#ifndef SMCSTAB_STATS_HPP
#define SMCSTAB_STATS_HPP

#include <functional>

namespace smcstab {

double normal_cdf(double z);
// Inverse of normal_cdf, solved numerically; p in (0, 1).
double normal_quantile(double p);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

double chi_square_cdf(double dof, double x);
double chi_square_quantile(double dof, double p);

// E|Z|^p for Z standard normal, p >= 0, computed by adaptive quadrature
// (not a closed form) to absolute tolerance ~1e-12.
double gaussian_absolute_moment(double p);

// Adaptive Simpson on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol);

}  // namespace smcstab

#endif
