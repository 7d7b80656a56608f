#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace volgram {

/// Time-ordered parameter values. `gaps` lists indices i such that the step
/// from i-1 to i crosses a break (market closed, failed fit); increments
/// spanning a gap are never used.
struct ParamSeries {
  std::vector<double> times;
  std::vector<double> values;
  double dt = 1.0;
  std::vector<std::size_t> gaps;
};

/// Builds a series from sampled times, marking a gap wherever consecutive
/// times are more than 1.5 nominal steps apart. `dt` is set to 1 (one step).
ParamSeries make_param_series(std::vector<double> times, std::vector<double> values, double nominal_step);

struct MomentOptions {
  std::size_t n_bins = 50;
  int tau_max = 10;
  std::size_t min_count = 100;
};

/// Conditional moments M_n(x_i, tau) = < (x(t+tau) - x(t))^n | x(t) in bin i >
/// for n = 1, 2 and tau = 1..tau_max. Only bins with at least min_count
/// tau = 1 increments are reported.
struct ConditionalMoments {
  double lo = 0.0;  // binning range [lo, hi]
  double hi = 0.0;
  std::size_t n_bins = 0;
  int tau_max = 0;
  double series_mean = 0.0;
  std::vector<std::size_t> bin_index;           // index into the full equal-width grid
  std::vector<double> centers;
  std::vector<std::vector<std::size_t>> counts;  // [bin][tau - 1]
  std::vector<std::vector<double>> m1;           // [bin][tau - 1]
  std::vector<std::vector<double>> m2;
};

/// Throws SeriesTooShort (fewer than 10 * n_bins values) or AllBinsUnderpopulated.
ConditionalMoments conditional_moments(const ParamSeries& series, const MomentOptions& options = {});

struct KmOptions {
  int tau_lo = 1;
  int tau_hi = 5;
  /// Degree of the polynomial in tau fitted to each moment; the linear
  /// coefficient is the tau -> 0 slope and the constant term the intercept.
  int fit_order = 2;
};

struct BinCoefficients {
  double center = 0.0;
  std::size_t count = 0;
  double d1 = 0.0;  // drift
  double d2 = 0.0;  // diffusion, clipped at 0
  double d2_raw = 0.0;
  bool d2_clipped = false;
  double a1 = 0.0;  // tau -> 0 intercepts
  double a2 = 0.0;
  double resid1 = 0.0;  // RMS residual of each moment fit
  double resid2 = 0.0;
};

struct KMCoefficients {
  std::vector<BinCoefficients> bins;
  double noise_sigma = 0.0;           // from the pooled M2 intercept
  double noise_sigma_mean_bin = 0.0;  // from the intercept in the bin holding the mean
  double drift_slope = 0.0;           // -k in D1 = -k (x - x_f)
  double fixed_point = 0.0;           // x_f
  double diffusion_amplitude = 0.0;   // sqrt of the count-weighted mean D2
  bool any_d2_clipped = false;
};

/// Drift D1 = b1 and diffusion D2 = b2 / 2 from polynomial fits of M_n(tau)
/// over [tau_lo, tau_hi]; measurement noise and the count-weighted drift line.
/// Throws InsufficientTauPoints.
KMCoefficients km_estimate(const ConditionalMoments& moments, const KmOptions& options = {});

/// sqrt(max(M2(<x>, 0), 0) / 2), with M2(<x>, 0) the tau -> 0 intercept of the
/// count-pooled second moment. Throws MeanBinUnpopulated when the bin holding
/// the series mean was not reported.
double estimate_measurement_noise(const ConditionalMoments& moments, const KmOptions& options = {});

struct MarkovOptions {
  std::size_t n_bins = 20;
  std::size_t lag = 1;
  std::size_t min_events = 30;
  std::size_t n_surrogates = 100;
  std::uint64_t seed = 1;
};

struct MarkovResult {
  double distance = 0.0;
  double threshold = 0.0;  // 95th percentile over surrogates
  bool pass = false;
  std::size_t n_cells = 0;  // (x1, x2) cells with enough events
  std::size_t n_triples = 0;
};

/// Compares p(x3 | x2) with p(x3 | x2, x1) for triples spaced `lag` apart,
/// x3 represented by the increment x3 - x2. The statistic is calibrated
/// against surrogates in which the x3 labels are shuffled within each x2 bin.
/// Throws SeriesTooShort.
MarkovResult markov_test(const ParamSeries& series, const MarkovOptions& options = {});

}  // namespace volgram
