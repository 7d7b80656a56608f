#include "volgram/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "volgram/error.hpp"

namespace volgram::special {
namespace {

constexpr int kMaxIterations = 500;
constexpr double kTolerance = 1e-15;
constexpr double kTiny = 1e-300;

void check_args(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::DomainError, "incomplete gamma needs a > 0, got a=" + std::to_string(a));
  }
  if (!(x >= 0.0) || std::isnan(x)) {
    throw Error(ErrorCode::DomainError, "incomplete gamma needs x >= 0, got x=" + std::to_string(x));
  }
}

// exp(-x + a ln x - ln Γ(a)); shared prefactor of the series and the continued fraction.
double prefactor(double a, double x, double ln_gamma_a) {
  return std::exp(-x + a * std::log(x) - ln_gamma_a);
}

// P(a, x) by the power series; valid for x < a + 1.
double lower_series(double a, double x, double ln_gamma_a) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n <= kMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kTolerance) {
      return sum * prefactor(a, x, ln_gamma_a);
    }
  }
  throw Error(ErrorCode::NonConvergence,
              "incomplete gamma series, a=" + std::to_string(a) + " x=" + std::to_string(x));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); valid for x >= a + 1.
double upper_continued_fraction(double a, double x, double ln_gamma_a) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kTolerance) {
      return prefactor(a, x, ln_gamma_a) * h;
    }
  }
  throw Error(ErrorCode::NonConvergence,
              "incomplete gamma continued fraction, a=" + std::to_string(a) + " x=" + std::to_string(x));
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::DomainError, "ln_gamma needs x > 0, got " + std::to_string(x));
  }
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);  // std::lgamma writes the global signgam
#else
  return std::lgamma(x);
#endif
}

IncGamma reg_inc_gamma(double a, double x, double ln_gamma_a) {
  check_args(a, x);
  if (x == 0.0) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};
  if (x < a + 1.0) {
    const double p = std::fmin(lower_series(a, x, ln_gamma_a), 1.0);
    return {p, 1.0 - p};
  }
  const double q = std::fmin(upper_continued_fraction(a, x, ln_gamma_a), 1.0);
  return {1.0 - q, q};
}

double reg_inc_gamma_lower(double a, double x) {
  check_args(a, x);
  return reg_inc_gamma(a, x, ln_gamma(a)).lower;
}

double reg_inc_gamma_upper(double a, double x) {
  check_args(a, x);
  return reg_inc_gamma(a, x, ln_gamma(a)).upper;
}

double erf(double x) { return std::erf(x); }

double erfc(double x) { return std::erfc(x); }

}  // namespace volgram::special
