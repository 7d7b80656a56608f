#include "volgram/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "volgram/error.hpp"
#include "volgram/parallel.hpp"

namespace volgram {
namespace {

constexpr double kLambdaInit = 1e-3;
constexpr double kLambdaMax = 1e20;
constexpr double kFlatJacobian = 1e-24;

// Residuals (model CDF - F) scaled by sqrt of the point weights.
class CdfResiduals {
 public:
  CdfResiduals(ModelKind kind, const EmpiricalCDF& ecdf, Weighting weighting)
      : kind_(kind), ecdf_(ecdf), sqrt_w_(ecdf.s.size(), 1.0) {
    if (weighting == Weighting::Tail) {
      for (std::size_t k = 0; k < sqrt_w_.size(); ++k) {
        sqrt_w_[k] = 1.0 / std::sqrt(ecdf.F[k] * (1.0 - ecdf.F[k]));
      }
    }
  }

  std::size_t size() const { return sqrt_w_.size(); }
  double sqrt_weight(std::size_t k) const { return sqrt_w_[k]; }

  bool operator()(double phi, double theta, std::vector<double>& r) const {
    const ModelParams p{kind_, phi, theta};
    if (!in_domain(p)) return false;
    r.resize(size());
    try {
      cdf(p, ecdf_.s, r);
    } catch (const Error&) {
      return false;
    }
    for (std::size_t k = 0; k < r.size(); ++k) {
      r[k] = (r[k] - ecdf_.F[k]) * sqrt_w_[k];
      if (!std::isfinite(r[k])) return false;
    }
    return true;
  }

 private:
  ModelKind kind_;
  const EmpiricalCDF& ecdf_;
  std::vector<double> sqrt_w_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

bool phi_must_be_positive(ModelKind kind) { return kind != ModelKind::LogNormal; }

struct Normal2 {
  double a00 = 0, a01 = 0, a11 = 0;  // J^T J
  double g0 = 0, g1 = 0;             // J^T r
};

// Central-difference Jacobian folded straight into the normal equations.
bool normal_equations(const CdfResiduals& f, ModelKind kind, double phi, double theta,
                      const std::vector<double>& r0, Normal2& out,
                      std::array<std::vector<double>, 2>* jacobian = nullptr) {
  std::vector<double> plus, minus;
  std::array<std::vector<double>, 2> cols;
  const std::array<double, 2> p{phi, theta};
  for (int j = 0; j < 2; ++j) {
    const double h = std::max(1e-6 * std::fabs(p[j]), 1e-9);
    auto at = [&](double delta, std::vector<double>& r) {
      return j == 0 ? f(phi + delta, theta, r) : f(phi, theta + delta, r);
    };
    const bool lower_in_domain = (j == 1 || phi_must_be_positive(kind)) ? p[j] - h > 0.0 : true;
    if (!at(h, plus)) return false;
    cols[j].resize(r0.size());
    if (lower_in_domain && at(-h, minus)) {
      for (std::size_t k = 0; k < r0.size(); ++k) cols[j][k] = (plus[k] - minus[k]) / (2.0 * h);
    } else {
      for (std::size_t k = 0; k < r0.size(); ++k) cols[j][k] = (plus[k] - r0[k]) / h;
    }
  }
  out = {dot(cols[0], cols[0]), dot(cols[0], cols[1]), dot(cols[1], cols[1]),
         dot(cols[0], r0), dot(cols[1], r0)};
  if (jacobian != nullptr) *jacobian = std::move(cols);
  return true;
}

// u^T C v / n with C_kl = min(F_k, F_l) - F_k F_l, the covariance of the
// empirical CDF at increasing levels F. O(m) via suffix sums.
double bridge_form(const std::vector<double>& u, const std::vector<double>& v, const std::vector<double>& F,
                   double n) {
  double upper = 0.0;  // sum_k sum_l u_k v_l F_min(k,l)
  double u_tail = 0.0;
  double v_tail = 0.0;
  double uf = 0.0;
  double vf = 0.0;
  for (std::size_t i = F.size(); i-- > 0;) {
    upper += F[i] * (u[i] * v[i] + u[i] * v_tail + v[i] * u_tail);
    u_tail += u[i];
    v_tail += v[i];
    uf += u[i] * F[i];
    vf += v[i] * F[i];
  }
  return (upper - uf * vf) / n;
}

}  // namespace

std::string_view to_string(FitStatus status) noexcept {
  switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max-iterations";
    case FitStatus::SingularJacobian: return "singular-jacobian";
    case FitStatus::DomainEscape: return "domain-escape";
    case FitStatus::TooFewSamples: return "too-few-samples";
    case FitStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

EmpiricalCDF empirical_cdf(std::span<const double> samples, std::size_t min_samples) {
  if (samples.size() < std::max<std::size_t>(min_samples, 1)) {
    throw Error(ErrorCode::TooFewSamples, "empirical CDF needs >= " + std::to_string(min_samples) +
                                              " samples, got " + std::to_string(samples.size()));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() > 0.0) || !std::isfinite(sorted.back())) {
    throw Error(ErrorCode::DomainError, "empirical CDF needs finite samples > 0");
  }
  EmpiricalCDF ecdf;
  ecdf.n = sorted.size();
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double f = (static_cast<double>(k) + 0.5) / n;
    if (!ecdf.s.empty() && ecdf.s.back() == sorted[k]) {
      ecdf.F.back() = f;
    } else {
      ecdf.s.push_back(sorted[k]);
      ecdf.F.push_back(f);
    }
  }
  return ecdf;
}

FitResult fit_cdf(ModelKind model, const EmpiricalCDF& ecdf, const ModelParams& guess,
                  const FitOptions& options) {
  FitResult res;
  res.params = {model, guess.phi, guess.theta};
  const std::size_t m = ecdf.s.size();
  if (m < 3) {
    res.status = FitStatus::TooFewSamples;
    res.diagnostic = "need >= 3 distinct points, got " + std::to_string(m);
    return res;
  }
  if (!in_domain(res.params)) {
    res.status = FitStatus::DomainEscape;
    res.diagnostic = "initial guess outside the model domain";
    return res;
  }

  const CdfResiduals f(model, ecdf, options.weighting);
  double phi = guess.phi;
  double theta = guess.theta;
  std::vector<double> r, trial;
  if (!f(phi, theta, r)) {
    res.status = FitStatus::NumericalFailure;
    res.diagnostic = "model CDF not evaluable at the initial guess";
    return res;
  }
  double rss = dot(r, r);
  double lambda = kLambdaInit;
  int clamps = 0;
  bool done = false;

  for (int iter = 1; iter <= options.max_iterations && !done; ++iter) {
    res.iterations = iter;
    Normal2 ne;
    if (!normal_equations(f, model, phi, theta, r, ne)) {
      res.status = FitStatus::NumericalFailure;
      res.diagnostic = "Jacobian evaluation failed";
      done = true;
      break;
    }
    if (ne.a00 + ne.a11 < kFlatJacobian) {
      // Saturated CDF at the guess: widen theta until the data is resolved.
      if (++clamps > options.max_domain_clamps) {
        res.status = FitStatus::DomainEscape;
        res.diagnostic = "model CDF flat over the data near the domain boundary";
        done = true;
        break;
      }
      std::vector<double> widened;
      if (!f(phi, theta * 10.0, widened)) {
        res.status = FitStatus::NumericalFailure;
        res.diagnostic = "model CDF not evaluable while leaving a flat region";
        done = true;
        break;
      }
      theta *= 10.0;
      r.swap(widened);
      rss = dot(r, r);
      continue;
    }
    if (std::hypot(ne.g0, ne.g1) < options.gradient_tolerance) {
      res.status = FitStatus::Converged;
      done = true;
      break;
    }
    for (;;) {
      const double d00 = ne.a00 + lambda * (ne.a00 > 0 ? ne.a00 : 1.0);
      const double d11 = ne.a11 + lambda * (ne.a11 > 0 ? ne.a11 : 1.0);
      const double det = d00 * d11 - ne.a01 * ne.a01;
      if (!(std::fabs(det) > 0.0) || !std::isfinite(det)) {
        lambda *= 10.0;
        if (lambda > kLambdaMax) {
          res.status = FitStatus::SingularJacobian;
          res.diagnostic = "damped normal matrix singular";
          done = true;
          break;
        }
        continue;
      }
      double dphi = -(d11 * ne.g0 - ne.a01 * ne.g1) / det;
      double dtheta = -(d00 * ne.g1 - ne.a01 * ne.g0) / det;
      const double rel_step = std::max(std::fabs(dphi) / std::max(std::fabs(phi), 1e-12),
                                       std::fabs(dtheta) / std::max(std::fabs(theta), 1e-12));

      // Keep positive parameters positive: shorten the step to stop at 10% of the current value.
      double t = 1.0;
      if (phi_must_be_positive(model) && phi + dphi <= 0.0) t = std::min(t, 0.9 * phi / -dphi);
      if (theta + dtheta <= 0.0) t = std::min(t, 0.9 * theta / -dtheta);
      if (t < 1.0) {
        if (++clamps > options.max_domain_clamps) {
          res.status = FitStatus::DomainEscape;
          res.diagnostic = "step clamped to the domain boundary " + std::to_string(clamps - 1) + " times";
          done = true;
          break;
        }
        dphi *= t;
        dtheta *= t;
      }

      const double new_phi = phi + dphi;
      const double new_theta = theta + dtheta;
      double new_rss = std::numeric_limits<double>::infinity();
      if (f(new_phi, new_theta, trial)) new_rss = dot(trial, trial);
      if (new_rss < rss) {
        phi = new_phi;
        theta = new_theta;
        r.swap(trial);
        rss = new_rss;
        lambda = std::max(lambda * 0.1, 1e-15);
        if (rel_step < options.step_tolerance) {
          res.status = FitStatus::Converged;
          done = true;
        }
        break;
      }
      // No descent along an already negligible step: we are at the minimum.
      if (rel_step < options.step_tolerance) {
        res.status = FitStatus::Converged;
        done = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > kLambdaMax) {
        res.status = FitStatus::Converged;
        res.diagnostic = "stalled: no descent direction at machine precision";
        done = true;
        break;
      }
    }
  }
  if (!done) res.status = FitStatus::MaxIterations;

  res.params = {model, phi, theta};
  res.rss = rss;
  if (res.status == FitStatus::Converged) {
    Normal2 ne;
    std::array<std::vector<double>, 2> jac;
    const double det = normal_equations(f, model, phi, theta, r, ne, &jac)
                           ? ne.a00 * ne.a11 - ne.a01 * ne.a01
                           : 0.0;
    if (!(det > 0.0) || !std::isfinite(det)) {
      res.status = FitStatus::SingularJacobian;
      res.diagnostic = "J^T J singular at the solution";
    } else {
      // Inverse of J^T J.
      const double i00 = ne.a11 / det;
      const double i01 = -ne.a01 / det;
      const double i11 = ne.a00 / det;
      double var_phi = 0.0;
      double var_theta = 0.0;
      if (options.error_model == ErrorModel::Residual) {
        const double s2 = rss / static_cast<double>(m - 2);
        var_phi = i00 * s2;
        var_theta = i11 * s2;
      } else {
        // Sandwich (J^T J)^-1 B^T C B (J^T J)^-1 with B the weighted Jacobian.
        for (auto& col : jac) {
          for (std::size_t k = 0; k < m; ++k) col[k] *= f.sqrt_weight(k);
        }
        const double n = static_cast<double>(ecdf.n);
        const double c00 = bridge_form(jac[0], jac[0], ecdf.F, n);
        const double c01 = bridge_form(jac[0], jac[1], ecdf.F, n);
        const double c11 = bridge_form(jac[1], jac[1], ecdf.F, n);
        var_phi = i00 * i00 * c00 + 2.0 * i00 * i01 * c01 + i01 * i01 * c11;
        var_theta = i01 * i01 * c00 + 2.0 * i01 * i11 * c01 + i11 * i11 * c11;
        // Misfit inflation: observed rss over its expectation for a correct
        // model, tr((I - H) C_w). Reduces to rss / (m - 2) for white residuals.
        double expected_rss = -(i00 * c00 + 2.0 * i01 * c01 + i11 * c11);
        for (std::size_t k = 0; k < m; ++k) {
          const double w = f.sqrt_weight(k);
          expected_rss += w * w * ecdf.F[k] * (1.0 - ecdf.F[k]) / n;
        }
        if (expected_rss > 0.0) {
          const double dispersion = std::max(1.0, rss / expected_rss);
          var_phi *= dispersion;
          var_theta *= dispersion;
        }
      }
      res.rel_err_phi = std::sqrt(std::max(var_phi, 0.0)) / std::fabs(phi);
      res.rel_err_theta = std::sqrt(std::max(var_theta, 0.0)) / std::fabs(theta);
    }
  }
  res.converged = res.status == FitStatus::Converged;
  return res;
}

WindowFits fit_window_all_models(const SnapshotWindow& window, const FitOptions& options,
                                 std::span<const ModelKind> models) {
  WindowFits out;
  out.window_start = window.window_start;
  out.window_len = window.window_len;
  out.n_companies = window.n_companies;

  EmpiricalCDF ecdf;
  try {
    ecdf = empirical_cdf(window.samples);
  } catch (const Error& e) {
    for (ModelKind kind : models) {
      FitResult r;
      r.params.kind = kind;
      r.status = FitStatus::TooFewSamples;
      r.diagnostic = e.what();
      out[kind] = r;
    }
    return out;
  }
  for (ModelKind kind : models) {
    try {
      out[kind] = fit_cdf(kind, ecdf, initial_guess(kind, window.samples), options);
    } catch (const Error& e) {
      FitResult r;
      r.params.kind = kind;
      r.status = FitStatus::NumericalFailure;
      r.diagnostic = e.what();
      out[kind] = r;
    }
  }
  return out;
}

std::vector<WindowFits> fit_windows(std::span<const SnapshotWindow> windows, const FitOptions& options,
                                    std::span<const ModelKind> models, unsigned jobs) {
  std::vector<WindowFits> out(windows.size());
  parallel_for(windows.size(), jobs,
               [&](std::size_t i) { out[i] = fit_window_all_models(windows[i], options, models); });
  return out;
}

ErrorSummary error_summary(std::span<const WindowFits> results, std::size_t hist_bins) {
  if (hist_bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs >= 1 bin");
  ErrorSummary summary;
  summary.n_windows = results.size();

  std::array<std::vector<double>, 4> phi_errs, theta_errs;
  std::array<ModelErrorSummary, 4> per_model;
  std::array<bool, 4> present{};
  std::size_t total_converged = 0;
  for (const WindowFits& w : results) {
    for (ModelKind kind : kAllModels) {
      const auto idx = static_cast<std::size_t>(kind);
      const auto& fit = w[kind];
      if (!fit) continue;
      present[idx] = true;
      ++per_model[idx].n_windows;
      if (!fit->converged || !std::isfinite(fit->rel_err_phi) || !std::isfinite(fit->rel_err_theta)) {
        ++per_model[idx].n_failed;
        continue;
      }
      phi_errs[idx].push_back(fit->rel_err_phi);
      theta_errs[idx].push_back(fit->rel_err_theta);
      ++total_converged;
    }
  }
  if (total_converged == 0) {
    throw Error(ErrorCode::NoConvergedFits, "no converged fits in " + std::to_string(results.size()) + " windows");
  }

  auto stats = [](const std::vector<double>& v) -> std::optional<ErrorStats> {
    if (v.empty()) return std::nullopt;
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return ErrorStats{mean, std::sqrt(var / n)};
  };
  auto upper_edge = [&](const std::array<std::vector<double>, 4>& errs) {
    double hi = 0.0;
    for (const auto& v : errs) {
      for (double x : v) hi = std::max(hi, x);
    }
    return hi > 0.0 ? hi * (1.0 + 1e-9) : 1.0;
  };
  auto histogram = [&](const std::vector<double>& v, double hi) {
    Histogram h{0.0, hi, std::vector<double>(hist_bins, 0.0)};
    const double width = hi / static_cast<double>(hist_bins);
    for (double x : v) {
      const auto b = std::min(hist_bins - 1, static_cast<std::size_t>(x / width));
      h.density[b] += 1.0;
    }
    if (!v.empty()) {
      for (double& d : h.density) d /= static_cast<double>(v.size()) * width;
    }
    return h;
  };

  const double phi_hi = upper_edge(phi_errs);
  const double theta_hi = upper_edge(theta_errs);
  for (ModelKind kind : kAllModels) {
    const auto idx = static_cast<std::size_t>(kind);
    if (!present[idx]) continue;
    ModelErrorSummary& ms = per_model[idx];
    ms.kind = kind;
    ms.phi = stats(phi_errs[idx]);
    ms.theta = stats(theta_errs[idx]);
    ms.phi_hist = histogram(phi_errs[idx], phi_hi);
    ms.theta_hist = histogram(theta_errs[idx], theta_hi);
    summary.models.push_back(std::move(ms));
  }
  return summary;
}

}  // namespace volgram
