#ifndef FACEATTR_STATS_HPP
#define FACEATTR_STATS_HPP

namespace faceattr {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
/// x in [0, 1]. Evaluated with the Lentz continued fraction, applied
/// directly for x < (a+1)/(a+b+2) and through the symmetry
/// I_x(a,b) = 1 - I_{1-x}(b,a) otherwise. Absolute accuracy ~1e-10.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided_p(double t, double dof);

}  // namespace faceattr

#endif
