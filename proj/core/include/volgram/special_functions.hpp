#pragma once

// Special functions behind the model CDFs. All functions are stateless and
// reentrant.

namespace volgram::special {

/// ln Γ(x) for x > 0. Throws DomainError otherwise.
double ln_gamma(double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double reg_inc_gamma_lower(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double reg_inc_gamma_upper(double a, double x);

/// Both halves at once, with ln Γ(a) supplied by the caller. Used by the
/// batched CDF evaluation, where `a` is fixed across many `x`.
struct IncGamma {
  double lower;
  double upper;
};
IncGamma reg_inc_gamma(double a, double x, double ln_gamma_a);

double erf(double x);
double erfc(double x);

}  // namespace volgram::special
