#include "volgram/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "volgram/error.hpp"
#include "volgram/special_functions.hpp"

namespace volgram {
namespace {

constexpr double kLnSqrt2Pi = 0.91893853320467274178;  // ln √(2π)

void require_valid(const ModelParams& params) {
  if (!in_domain(params)) {
    throw Error(ErrorCode::DomainError,
                std::string(to_string(params.kind)) + " parameters out of domain: phi=" +
                    std::to_string(params.phi) + " theta=" + std::to_string(params.theta));
  }
}

void require_positive(double s) {
  if (!(s > 0.0)) {
    throw Error(ErrorCode::DomainError, "support is s > 0, got s=" + std::to_string(s));
  }
}

double cdf_point(const ModelParams& p, double s, double ln_gamma_phi) {
  switch (p.kind) {
    case ModelKind::Gamma:
      return special::reg_inc_gamma(p.phi, s / p.theta, ln_gamma_phi).lower;
    case ModelKind::InverseGamma:
      return special::reg_inc_gamma(p.phi, p.theta / s, ln_gamma_phi).upper;
    case ModelKind::LogNormal:
      return 0.5 * special::erfc(-(std::log(s) - p.phi) / (p.theta * std::numbers::sqrt2));
    case ModelKind::Weibull:
      return -std::expm1(-std::pow(s / p.theta, p.phi));
  }
  return 0.0;
}

bool uses_gamma_function(ModelKind kind) {
  return kind == ModelKind::Gamma || kind == ModelKind::InverseGamma;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Gamma: return "gamma";
    case ModelKind::InverseGamma: return "inverse-gamma";
    case ModelKind::LogNormal: return "log-normal";
    case ModelKind::Weibull: return "weibull";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  for (ModelKind kind : kAllModels) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

bool in_domain(const ModelParams& p) noexcept {
  if (!std::isfinite(p.phi) || !std::isfinite(p.theta) || !(p.theta > 0.0)) return false;
  return p.kind == ModelKind::LogNormal || p.phi > 0.0;
}

double log_pdf(const ModelParams& p, double s) {
  require_valid(p);
  require_positive(s);
  const double ln_s = std::log(s);
  switch (p.kind) {
    case ModelKind::Gamma:
      return (p.phi - 1.0) * ln_s - p.phi * std::log(p.theta) - special::ln_gamma(p.phi) - s / p.theta;
    case ModelKind::InverseGamma:
      return p.phi * std::log(p.theta) - special::ln_gamma(p.phi) - (p.phi + 1.0) * ln_s - p.theta / s;
    case ModelKind::LogNormal: {
      const double z = (ln_s - p.phi) / p.theta;
      return -ln_s - std::log(p.theta) - kLnSqrt2Pi - 0.5 * z * z;
    }
    case ModelKind::Weibull:
      return std::log(p.phi) - p.phi * std::log(p.theta) + (p.phi - 1.0) * ln_s -
             std::pow(s / p.theta, p.phi);
  }
  return 0.0;
}

double pdf(const ModelParams& p, double s) { return std::exp(log_pdf(p, s)); }

double cdf(const ModelParams& p, double s) {
  require_valid(p);
  require_positive(s);
  const double lg = uses_gamma_function(p.kind) ? special::ln_gamma(p.phi) : 0.0;
  return cdf_point(p, s, lg);
}

void cdf(const ModelParams& p, std::span<const double> s, std::span<double> out) {
  require_valid(p);
  if (out.size() != s.size()) {
    throw Error(ErrorCode::InvalidArgument, "cdf: output span size mismatch");
  }
  const double lg = uses_gamma_function(p.kind) ? special::ln_gamma(p.phi) : 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    require_positive(s[i]);
    out[i] = cdf_point(p, s[i], lg);
  }
}

Moments analytic_moments(const ModelParams& p) {
  require_valid(p);
  Moments m;
  switch (p.kind) {
    case ModelKind::Gamma:
      m.mean = p.phi * p.theta;
      m.variance = p.phi * p.theta * p.theta;
      break;
    case ModelKind::InverseGamma:
      if (p.phi > 1.0) m.mean = p.theta / (p.phi - 1.0);
      if (p.phi > 2.0) {
        const double d = p.phi - 1.0;
        m.variance = p.theta * p.theta / (d * d * (p.phi - 2.0));
      }
      break;
    case ModelKind::LogNormal: {
      const double t2 = p.theta * p.theta;
      m.mean = std::exp(p.phi + 0.5 * t2);
      m.variance = std::expm1(t2) * std::exp(2.0 * p.phi + t2);
      break;
    }
    case ModelKind::Weibull: {
      const double g1 = std::tgamma(1.0 + 1.0 / p.phi);
      const double g2 = std::tgamma(1.0 + 2.0 / p.phi);
      m.mean = p.theta * g1;
      m.variance = p.theta * p.theta * (g2 - g1 * g1);
      break;
    }
  }
  return m;
}

double draw_gamma(double shape, double scale, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    double u = unif(rng);
    while (u == 0.0) u = unif(rng);
    return draw_gamma(shape + 1.0, scale, rng) * std::pow(u, 1.0 / shape);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = unif(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

double draw(const ModelParams& p, Rng& rng) {
  switch (p.kind) {
    case ModelKind::Gamma:
      return draw_gamma(p.phi, p.theta, rng);
    case ModelKind::InverseGamma:
      return 1.0 / draw_gamma(p.phi, 1.0 / p.theta, rng);
    case ModelKind::LogNormal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return std::exp(p.phi + p.theta * normal(rng));
    }
    case ModelKind::Weibull: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      return p.theta * std::pow(-std::log1p(-unif(rng)), 1.0 / p.phi);
    }
  }
  return 0.0;
}

std::vector<double> sample(const ModelParams& p, std::size_t n, std::uint64_t seed) {
  require_valid(p);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample: n must be >= 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = draw(p, rng);
  return out;
}

ModelParams initial_guess(ModelKind kind, std::span<const double> samples) {
  if (samples.size() < 10) {
    throw Error(ErrorCode::TooFewSamples,
                "initial_guess needs >= 10 samples, got " + std::to_string(samples.size()));
  }
  for (double s : samples) require_positive(s);

  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= n;
  if (!(var > 0.0)) throw Error(ErrorCode::DegenerateSample, "samples have zero variance");

  switch (kind) {
    case ModelKind::Gamma:
      return {kind, mean * mean / var, var / mean};
    case ModelKind::InverseGamma: {
      const double phi = mean * mean / var + 2.0;
      return {kind, phi, mean * (phi - 1.0)};
    }
    case ModelKind::LogNormal: {
      double lm = 0.0;
      for (double s : samples) lm += std::log(s);
      lm /= n;
      double lv = 0.0;
      for (double s : samples) lv += (std::log(s) - lm) * (std::log(s) - lm);
      lv /= n;
      if (!(lv > 0.0)) throw Error(ErrorCode::DegenerateSample, "log-samples have zero variance");
      return {kind, lm, std::sqrt(lv)};
    }
    case ModelKind::Weibull: {
      // ln(-ln(1 - F)) = phi ln s - phi ln theta, regressed over plotting positions.
      std::vector<double> sorted(samples.begin(), samples.end());
      std::sort(sorted.begin(), sorted.end());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double f = (static_cast<double>(k) + 0.5) / n;
        const double x = std::log(sorted[k]);
        const double y = std::log(-std::log1p(-f));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double denom = n * sxx - sx * sx;
      const double slope = denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
      if (!(slope > 0.0) || !std::isfinite(slope)) return {kind, 1.0, mean};
      const double intercept = (sy - slope * sx) / n;
      return {kind, slope, std::exp(-intercept / slope)};
    }
  }
  return {kind, 1.0, 1.0};
}

}  // namespace volgram
