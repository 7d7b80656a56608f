#include "volgram/kramers_moyal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "volgram/error.hpp"
#include "volgram/random.hpp"

namespace volgram {
namespace {

// gap_prefix[i] = number of gap markers at indices <= i.
std::vector<std::size_t> gap_prefix(const ParamSeries& series) {
  std::vector<std::size_t> mark(series.values.size(), 0);
  for (std::size_t g : series.gaps) {
    if (g < mark.size()) mark[g] = 1;
  }
  std::partial_sum(mark.begin(), mark.end(), mark.begin());
  return mark;
}

struct EqualWidthBins {
  double lo = 0.0;
  double width = 1.0;
  std::size_t n = 1;

  EqualWidthBins(double lo_, double hi_, std::size_t n_) : lo(lo_), n(n_) {
    width = hi_ > lo_ ? (hi_ - lo_) / static_cast<double>(n_) : 1.0;
  }
  std::size_t operator()(double x) const {
    const double pos = (x - lo) / width;
    if (!(pos > 0.0)) return 0;
    return std::min(n - 1, static_cast<std::size_t>(pos));
  }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width; }
};

struct PolyFit {
  std::array<double, 3> coef{};  // constant, linear, quadratic
  double rms = 0.0;
};

// Least-squares polynomial of degree `order` (1 or 2) through (x_i, y_i).
PolyFit fit_polynomial(std::span<const double> x, std::span<const double> y, int order) {
  const std::size_t n = x.size();
  const int m = order + 1;
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  // Normal equations in the centered variable u = x - xbar.
  std::array<std::array<double, 4>, 3> a{};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] - xbar;
    const std::array<double, 3> basis{1.0, u, u * u};
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) a[r][c] += basis[r] * basis[c];
      a[r][m] += basis[r] * y[i];
    }
  }
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (int c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::array<double, 3> centered{};
  for (int r = 0; r < m; ++r) centered[r] = a[r][m] / a[r][r];

  PolyFit fit;
  // Expand c0 + c1 u + c2 u^2 back to powers of x.
  fit.coef[0] = centered[0] - centered[1] * xbar + centered[2] * xbar * xbar;
  fit.coef[1] = centered[1] - 2.0 * centered[2] * xbar;
  fit.coef[2] = centered[2];
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] - xbar;
    const double r = y[i] - (centered[0] + centered[1] * u + centered[2] * u * u);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

std::vector<double> tau_grid(const ConditionalMoments& moments, const KmOptions& options) {
  if (options.fit_order < 1 || options.fit_order > 2) {
    throw Error(ErrorCode::InvalidArgument, "fit_order must be 1 or 2");
  }
  const int n_points = options.tau_hi - options.tau_lo + 1;
  if (options.tau_lo < 1 || options.tau_hi > moments.tau_max || n_points < 3 ||
      n_points < options.fit_order + 1) {
    throw Error(ErrorCode::InsufficientTauPoints,
                "tau range [" + std::to_string(options.tau_lo) + ", " + std::to_string(options.tau_hi) +
                    "] needs >= 3 points within [1, " + std::to_string(moments.tau_max) + "]");
  }
  std::vector<double> taus;
  for (int t = options.tau_lo; t <= options.tau_hi; ++t) taus.push_back(t);
  return taus;
}

double noise_from_intercept(double intercept) { return std::sqrt(std::max(intercept, 0.0) / 2.0); }

}  // namespace

ParamSeries make_param_series(std::vector<double> times, std::vector<double> values, double nominal_step) {
  if (times.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "times and values differ in length");
  }
  ParamSeries series;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] - times[i - 1] > 1.5 * nominal_step) series.gaps.push_back(i);
  }
  series.times = std::move(times);
  series.values = std::move(values);
  series.dt = 1.0;
  return series;
}

ConditionalMoments conditional_moments(const ParamSeries& series, const MomentOptions& options) {
  const auto& x = series.values;
  if (options.n_bins == 0 || options.tau_max < 3) {
    throw Error(ErrorCode::InvalidArgument, "need n_bins >= 1 and tau_max >= 3");
  }
  if (x.size() < 10 * options.n_bins) {
    throw Error(ErrorCode::SeriesTooShort, "series of " + std::to_string(x.size()) + " values, need >= " +
                                               std::to_string(10 * options.n_bins));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw Error(ErrorCode::InvalidArgument, "non-finite value at index " + std::to_string(i));
    }
  }
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const EqualWidthBins bins(*mn, *mx, options.n_bins);
  const auto gaps = gap_prefix(series);
  const auto taus = static_cast<std::size_t>(options.tau_max);

  std::vector<std::size_t> bin_of(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) bin_of[t] = bins(x[t]);

  std::vector<std::vector<std::size_t>> counts(options.n_bins, std::vector<std::size_t>(taus, 0));
  std::vector<std::vector<double>> s1(options.n_bins, std::vector<double>(taus, 0.0));
  std::vector<std::vector<double>> s2 = s1;
  for (std::size_t tau = 1; tau <= taus; ++tau) {
    for (std::size_t t = 0; t + tau < x.size(); ++t) {
      if (gaps[t + tau] != gaps[t]) continue;
      const double d = x[t + tau] - x[t];
      const std::size_t b = bin_of[t];
      ++counts[b][tau - 1];
      s1[b][tau - 1] += d;
      s2[b][tau - 1] += d * d;
    }
  }

  ConditionalMoments out;
  out.lo = *mn;
  out.hi = *mx;
  out.n_bins = options.n_bins;
  out.tau_max = options.tau_max;
  out.series_mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  for (std::size_t b = 0; b < options.n_bins; ++b) {
    if (counts[b][0] < options.min_count || counts[b][0] == 0) continue;
    std::vector<double> m1(taus, 0.0), m2(taus, 0.0);
    for (std::size_t k = 0; k < taus; ++k) {
      if (counts[b][k] == 0) continue;
      const double c = static_cast<double>(counts[b][k]);
      m1[k] = s1[b][k] / c;
      m2[k] = s2[b][k] / c;
    }
    out.bin_index.push_back(b);
    out.centers.push_back(bins.center(b));
    out.counts.push_back(counts[b]);
    out.m1.push_back(std::move(m1));
    out.m2.push_back(std::move(m2));
  }
  if (out.centers.empty()) {
    throw Error(ErrorCode::AllBinsUnderpopulated,
                "no bin reaches min_count=" + std::to_string(options.min_count));
  }
  return out;
}

double estimate_measurement_noise(const ConditionalMoments& moments, const KmOptions& options) {
  const auto taus = tau_grid(moments, options);
  const EqualWidthBins bins(moments.lo, moments.hi, moments.n_bins);
  const std::size_t mean_bin = bins(moments.series_mean);
  if (std::find(moments.bin_index.begin(), moments.bin_index.end(), mean_bin) == moments.bin_index.end()) {
    throw Error(ErrorCode::MeanBinUnpopulated,
                "bin " + std::to_string(mean_bin) + " holding the series mean is not populated");
  }
  std::vector<double> pooled;
  for (double tau : taus) {
    const auto k = static_cast<std::size_t>(tau) - 1;
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < moments.centers.size(); ++b) {
      num += static_cast<double>(moments.counts[b][k]) * moments.m2[b][k];
      den += static_cast<double>(moments.counts[b][k]);
    }
    pooled.push_back(den > 0.0 ? num / den : 0.0);
  }
  return noise_from_intercept(fit_polynomial(taus, pooled, options.fit_order).coef[0]);
}

KMCoefficients km_estimate(const ConditionalMoments& moments, const KmOptions& options) {
  const auto taus = tau_grid(moments, options);
  KMCoefficients out;
  std::vector<double> y1(taus.size()), y2(taus.size());
  for (std::size_t b = 0; b < moments.centers.size(); ++b) {
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const auto k = static_cast<std::size_t>(taus[i]) - 1;
      y1[i] = moments.m1[b][k];
      y2[i] = moments.m2[b][k];
    }
    const PolyFit f1 = fit_polynomial(taus, y1, options.fit_order);
    const PolyFit f2 = fit_polynomial(taus, y2, options.fit_order);
    BinCoefficients c;
    c.center = moments.centers[b];
    c.count = moments.counts[b][0];
    c.d1 = f1.coef[1];
    c.d2_raw = f2.coef[1] / 2.0;
    c.d2_clipped = c.d2_raw < 0.0;
    c.d2 = std::max(c.d2_raw, 0.0);
    c.a1 = f1.coef[0];
    c.a2 = f2.coef[0];
    c.resid1 = f1.rms;
    c.resid2 = f2.rms;
    out.any_d2_clipped = out.any_d2_clipped || c.d2_clipped;
    out.bins.push_back(c);
  }

  // Count-weighted line D1 = slope * x + intercept; fixed point at its zero.
  double w = 0, wx = 0, wy = 0;
  for (const auto& c : out.bins) {
    const double cw = static_cast<double>(c.count);
    w += cw;
    wx += cw * c.center;
    wy += cw * c.d1;
  }
  const double xbar = wx / w;
  const double ybar = wy / w;
  double sxx = 0, sxy = 0, d2_mean = 0;
  for (const auto& c : out.bins) {
    const double cw = static_cast<double>(c.count);
    sxx += cw * (c.center - xbar) * (c.center - xbar);
    sxy += cw * (c.center - xbar) * (c.d1 - ybar);
    d2_mean += cw * c.d2;
  }
  out.drift_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  out.fixed_point = out.drift_slope != 0.0 ? xbar - ybar / out.drift_slope
                                           : std::numeric_limits<double>::quiet_NaN();
  out.diffusion_amplitude = std::sqrt(d2_mean / w);

  try {
    out.noise_sigma = estimate_measurement_noise(moments, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MeanBinUnpopulated) throw;
    out.noise_sigma = std::numeric_limits<double>::quiet_NaN();
  }
  const EqualWidthBins bins(moments.lo, moments.hi, moments.n_bins);
  std::size_t nearest = 0;
  for (std::size_t b = 1; b < out.bins.size(); ++b) {
    if (std::fabs(out.bins[b].center - moments.series_mean) <
        std::fabs(out.bins[nearest].center - moments.series_mean)) {
      nearest = b;
    }
  }
  out.noise_sigma_mean_bin = noise_from_intercept(out.bins[nearest].a2);
  return out;
}

MarkovResult markov_test(const ParamSeries& series, const MarkovOptions& options) {
  const auto& x = series.values;
  const std::size_t nb = options.n_bins;
  const std::size_t lag = options.lag;
  if (nb < 2 || lag < 1 || options.n_surrogates < 1) {
    throw Error(ErrorCode::InvalidArgument, "markov_test needs n_bins >= 2, lag >= 1, n_surrogates >= 1");
  }
  if (x.size() <= 2 * lag) {
    throw Error(ErrorCode::SeriesTooShort, "series shorter than two lags");
  }
  const auto gaps = gap_prefix(series);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const EqualWidthBins value_bins(*mn, *mx, nb);

  std::vector<std::size_t> first, middle;
  std::vector<double> increments;
  for (std::size_t t = 0; t + 2 * lag < x.size(); ++t) {
    if (gaps[t + 2 * lag] != gaps[t]) continue;
    first.push_back(value_bins(x[t]));
    middle.push_back(value_bins(x[t + lag]));
    increments.push_back(x[t + 2 * lag] - x[t + lag]);
  }
  const std::size_t n = increments.size();
  if (n < 3) throw Error(ErrorCode::SeriesTooShort, "fewer than 3 gap-free triples");
  const auto [dmn, dmx] = std::minmax_element(increments.begin(), increments.end());
  const EqualWidthBins increment_bins(*dmn, *dmx, nb);
  std::vector<std::size_t> last(n);
  for (std::size_t i = 0; i < n; ++i) last[i] = increment_bins(increments[i]);

  std::vector<std::size_t> n_ij(nb * nb, 0), n_j(nb, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++n_ij[first[i] * nb + middle[i]];
    ++n_j[middle[i]];
  }
  std::size_t cells = 0;
  for (std::size_t c : n_ij) cells += c >= options.min_events ? 1 : 0;
  if (cells == 0) {
    throw Error(ErrorCode::SeriesTooShort, "no conditioning cell reaches " +
                                               std::to_string(options.min_events) + " events");
  }

  std::vector<std::size_t> n_ijk(nb * nb * nb), n_jk(nb * nb);
  auto statistic = [&](const std::vector<std::size_t>& k_of) {
    std::fill(n_ijk.begin(), n_ijk.end(), 0);
    std::fill(n_jk.begin(), n_jk.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++n_ijk[(first[i] * nb + middle[i]) * nb + k_of[i]];
      ++n_jk[middle[i] * nb + k_of[i]];
    }
    double total = 0.0, weight = 0.0;
    for (std::size_t a = 0; a < nb; ++a) {
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t cond = n_ij[a * nb + b];
        if (cond < options.min_events) continue;
        double diff = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
          const double p3 = static_cast<double>(n_ijk[(a * nb + b) * nb + k]) / static_cast<double>(cond);
          const double p2 = static_cast<double>(n_jk[b * nb + k]) / static_cast<double>(n_j[b]);
          diff += std::fabs(p3 - p2);
        }
        total += static_cast<double>(cond) * diff / static_cast<double>(nb);
        weight += static_cast<double>(cond);
      }
    }
    return total / weight;
  };

  MarkovResult result;
  result.n_cells = cells;
  result.n_triples = n;
  result.distance = statistic(last);

  // Surrogates: permute the x3 labels among triples sharing the same x2 bin.
  std::vector<std::vector<std::size_t>> groups(nb);
  for (std::size_t i = 0; i < n; ++i) groups[middle[i]].push_back(i);
  Rng rng(options.seed);
  std::vector<double> surrogate_stats;
  std::vector<std::size_t> shuffled(n), pool;
  for (std::size_t s = 0; s < options.n_surrogates; ++s) {
    for (const auto& g : groups) {
      pool.clear();
      for (std::size_t i : g) pool.push_back(last[i]);
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t q = 0; q < g.size(); ++q) shuffled[g[q]] = pool[q];
    }
    surrogate_stats.push_back(statistic(shuffled));
  }
  std::sort(surrogate_stats.begin(), surrogate_stats.end());

  // 95th percentile, plotting position p (B + 1).
  const double h = 0.95 * static_cast<double>(surrogate_stats.size() + 1);
  const auto lower = static_cast<std::size_t>(std::floor(h));
  if (lower < 1) {
    result.threshold = surrogate_stats.front();
  } else if (lower >= surrogate_stats.size()) {
    result.threshold = surrogate_stats.back();
  } else {
    const double lo_v = surrogate_stats[lower - 1];
    const double hi_v = surrogate_stats[lower];
    result.threshold = lo_v + (h - static_cast<double>(lower)) * (hi_v - lo_v);
  }
  result.pass = result.distance <= result.threshold;
  return result;
}

}  // namespace volgram
