#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volgram/distributions.hpp"
#include "volgram/market_data.hpp"

namespace volgram {

/// Sorted sample with plotting positions F_k = (k - 0.5) / n; tied samples
/// collapse onto one point carrying the largest F of the tie.
struct EmpiricalCDF {
  std::vector<double> s;
  std::vector<double> F;
  std::size_t n = 0;  // sample count before tie collapse
};

/// Throws TooFewSamples when fewer than `min_samples` values are given.
EmpiricalCDF empirical_cdf(std::span<const double> samples, std::size_t min_samples = 10);

enum class Weighting {
  None,  // plain residuals in probability space
  Tail,  // residuals weighted by 1 / (F (1 - F))
};

/// Source of the parameter standard errors.
enum class ErrorModel {
  /// Sandwich covariance with the empirical-CDF covariance
  /// (min(F_k, F_l) - F_k F_l) / n, inflated by max(1, rss / E[rss]) so a
  /// misfitting model reports larger errors. Shrinks like 1 / sqrt(n).
  Bridge,
  /// diag((J^T J)^-1) rss / (m - 2), treating residuals as independent.
  Residual,
};

struct FitOptions {
  Weighting weighting = Weighting::None;
  ErrorModel error_model = ErrorModel::Bridge;
  int max_iterations = 200;
  double step_tolerance = 1e-9;       // relative parameter step
  double gradient_tolerance = 1e-10;  // |J^T r|
  int max_domain_clamps = 20;
};

enum class FitStatus {
  Converged,
  MaxIterations,
  SingularJacobian,
  DomainEscape,
  TooFewSamples,
  NumericalFailure,
};

std::string_view to_string(FitStatus status) noexcept;

struct FitResult {
  ModelParams params;
  double rel_err_phi = 0.0;    // stderr(phi) / |phi|
  double rel_err_theta = 0.0;  // stderr(theta) / |theta|
  double rss = 0.0;
  bool converged = false;
  int iterations = 0;
  FitStatus status = FitStatus::NumericalFailure;
  std::string diagnostic;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) on sum_k (CDF(s_k) - F_k)^2
/// with a central-difference Jacobian. Never throws for numerical trouble;
/// the outcome is reported in `status`.
FitResult fit_cdf(ModelKind model, const EmpiricalCDF& ecdf, const ModelParams& guess,
                  const FitOptions& options = {});

/// Per-model results for one window; empty slots were not requested.
struct WindowFits {
  std::int64_t window_start = 0;
  std::int64_t window_len = 600;
  std::size_t n_companies = 0;
  std::array<std::optional<FitResult>, 4> results;

  const std::optional<FitResult>& operator[](ModelKind kind) const {
    return results[static_cast<std::size_t>(kind)];
  }
  std::optional<FitResult>& operator[](ModelKind kind) {
    return results[static_cast<std::size_t>(kind)];
  }
};

/// Fits every requested model independently, each from its own initial guess.
/// Per-model failures (including TooFewSamples) are recorded, not thrown.
WindowFits fit_window_all_models(const SnapshotWindow& window, const FitOptions& options = {},
                                 std::span<const ModelKind> models = kAllModels);

/// Fits a batch of windows on `jobs` workers; output is in input order.
std::vector<WindowFits> fit_windows(std::span<const SnapshotWindow> windows, const FitOptions& options,
                                    std::span<const ModelKind> models, unsigned jobs);

struct ErrorStats {
  double average = 0.0;
  double std = 0.0;  // population convention
};

/// Density histogram on [lo, hi) shared by all models of one error kind.
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> density;
};

struct ModelErrorSummary {
  ModelKind kind = ModelKind::InverseGamma;
  std::size_t n_windows = 0;  // windows where this model was fitted
  std::size_t n_failed = 0;   // of those, not converged (excluded below)
  std::optional<ErrorStats> phi;
  std::optional<ErrorStats> theta;
  Histogram phi_hist;
  Histogram theta_hist;
};

struct ErrorSummary {
  std::size_t n_windows = 0;
  std::vector<ModelErrorSummary> models;  // in kAllModels order, present models only
};

/// Mean and std of the relative errors over converged fits, per model, plus
/// density histograms. Throws NoConvergedFits when no model converged anywhere.
ErrorSummary error_summary(std::span<const WindowFits> results, std::size_t hist_bins = 64);

}  // namespace volgram
