#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "volgram/random.hpp"

namespace volgram {

enum class ModelKind { Gamma, InverseGamma, LogNormal, Weibull };

inline constexpr std::array<ModelKind, 4> kAllModels = {
    ModelKind::Gamma, ModelKind::InverseGamma, ModelKind::LogNormal, ModelKind::Weibull};

/// Stable identifiers used in files and on the command line:
/// "gamma", "inverse-gamma", "log-normal", "weibull".
std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

/// Two-parameter model. `phi` is the shape (tail) parameter for Gamma,
/// inverse Gamma and Weibull, and the log-mean for the log-normal; `theta`
/// is the scale, or the log-standard-deviation for the log-normal.
struct ModelParams {
  ModelKind kind = ModelKind::InverseGamma;
  double phi = 1.0;
  double theta = 1.0;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

bool in_domain(const ModelParams& params) noexcept;

double log_pdf(const ModelParams& params, double s);
double pdf(const ModelParams& params, double s);
double cdf(const ModelParams& params, double s);

/// CDF at every point of `s` (all > 0); hoists ln Γ(φ) out of the loop.
void cdf(const ModelParams& params, std::span<const double> s, std::span<double> out);

struct Moments {
  std::optional<double> mean;
  std::optional<double> variance;
};

/// Closed-form mean and variance; absent where the moment diverges.
Moments analytic_moments(const ModelParams& params);

/// One variate drawn with the caller's generator.
double draw(const ModelParams& params, Rng& rng);

/// Gamma(shape, scale) variate. Marsaglia-Tsang squeeze/rejection for
/// shape >= 1, boosted through shape + 1 for shape < 1.
double draw_gamma(double shape, double scale, Rng& rng);

/// `n` variates, deterministic in `seed`.
std::vector<double> sample(const ModelParams& params, std::size_t n, std::uint64_t seed);

/// Moment-based starting point for the least-squares fit (Weibull uses a
/// regression on the linearized empirical CDF instead).
ModelParams initial_guess(ModelKind kind, std::span<const double> samples);

}  // namespace volgram
