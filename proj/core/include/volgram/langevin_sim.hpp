#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "volgram/kramers_moyal.hpp"
#include "volgram/market_data.hpp"

namespace volgram {

/// D1(x) = -k (x - fixed_point)
struct AffineDrift {
  double k = 0.0;
  double fixed_point = 0.0;
};

/// Piecewise-linear table, clamped to the end values outside the grid.
struct Tabulated {
  std::vector<double> grid;  // strictly increasing
  std::vector<double> values;

  double operator()(double x) const;
};

using DriftFn = std::variant<AffineDrift, Tabulated>;
using DiffusionFn = std::variant<double, Tabulated>;

/// dx = D1(x) dt + sqrt(D2(x)) dW with <dW(t) dW(t')> = 2 delta(t - t').
struct LangevinSpec {
  DriftFn drift = AffineDrift{};
  DiffusionFn diffusion = 0.0;
  double dt = 1.0;
  std::size_t n_steps = 1;
  double initial = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> floor;  // values are clamped to >= floor when set
};

/// Euler-Maruyama: x_{t+1} = x_t + D1(x_t) dt + sqrt(2 D2(x_t) dt) xi_t.
/// Returns n_steps + 1 values (the initial value first); times are 0, dt, 2 dt, ...
ParamSeries simulate_langevin(const LangevinSpec& spec);

/// Adds i.i.d. N(0, sigma_m^2) to every value; times and gaps are kept.
ParamSeries add_measurement_noise(const ParamSeries& series, double sigma_m, std::uint64_t seed);

/// dS / S = mu dt + sigma dW with the standard <dW^2> = dt.
struct GBMSpec {
  double mu = 0.0;
  double sigma = 0.0;
  double s0 = 1.0;
  double dt = 1.0;
  std::size_t n_steps = 1;
  std::uint64_t seed = 0;
};

/// Exact log-space update; returns n_steps + 1 prices starting at s0.
std::vector<double> simulate_gbm(const GBMSpec& spec);

struct SyntheticMarket {
  std::vector<SnapshotWindow> windows;
  ParamSeries true_phi;  // the tail parameter that generated each window
};

struct MarketLayout {
  std::int64_t t0 = 1300282800;  // 2011-03-16 13:40 UTC
  std::int64_t window_len = 600;
};

/// The phi trajectory driving a synthetic market: `phi_process` run for
/// n_windows - 1 steps, clamped to phi > 0.05.
ParamSeries market_phi_path(std::size_t n_windows, const LangevinSpec& phi_process,
                            const MarketLayout& layout = {});

/// Window `index` of a synthetic market: n_companies inverse-Gamma(phi, theta)
/// volume-prices, normalized. Draws come from sub-stream `index` of `seed`, so
/// any window can be regenerated on its own.
SnapshotWindow market_window(std::size_t index, double phi, std::size_t n_companies, double theta,
                             std::uint64_t seed, const MarketLayout& layout = {});

SyntheticMarket simulate_market(std::size_t n_companies, std::size_t n_windows, const LangevinSpec& phi_process,
                                double theta, std::uint64_t seed, const MarketLayout& layout = {});

}  // namespace volgram
