#include "volgram/langevin_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "volgram/distributions.hpp"
#include "volgram/error.hpp"
#include "volgram/random.hpp"

namespace volgram {
namespace {

constexpr double kMinMarketPhi = 0.05;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double drift_at(const DriftFn& drift, double x) {
  return std::visit(overloaded{[x](const AffineDrift& d) { return -d.k * (x - d.fixed_point); },
                               [x](const Tabulated& t) { return t(x); }},
                    drift);
}

double diffusion_at(const DiffusionFn& diffusion, double x) {
  return std::visit(overloaded{[](double c) { return c; }, [x](const Tabulated& t) { return t(x); }},
                    diffusion);
}

void validate_table(const Tabulated& t, const char* what) {
  if (t.grid.empty() || t.grid.size() != t.values.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " table needs equal, non-empty grid and values");
  }
  if (!std::is_sorted(t.grid.begin(), t.grid.end(), std::less_equal<>{}) && t.grid.size() > 1) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " table grid must be strictly increasing");
  }
}

void validate(const LangevinSpec& spec) {
  if (!(spec.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "Langevin dt must be > 0");
  if (const auto* t = std::get_if<Tabulated>(&spec.drift)) validate_table(*t, "drift");
  if (const auto* c = std::get_if<double>(&spec.diffusion)) {
    if (!(*c >= 0.0)) throw Error(ErrorCode::InvalidArgument, "diffusion must be >= 0");
  } else {
    const auto& t = std::get<Tabulated>(spec.diffusion);
    validate_table(t, "diffusion");
    if (std::any_of(t.values.begin(), t.values.end(), [](double v) { return !(v >= 0.0); })) {
      throw Error(ErrorCode::InvalidArgument, "tabulated diffusion must be >= 0");
    }
  }
}

std::vector<double> euler_maruyama(const LangevinSpec& spec, std::size_t n_steps) {
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n_steps + 1);
  x[0] = spec.floor ? std::max(spec.initial, *spec.floor) : spec.initial;
  for (std::size_t t = 0; t < n_steps; ++t) {
    const double d1 = drift_at(spec.drift, x[t]);
    const double d2 = std::max(diffusion_at(spec.diffusion, x[t]), 0.0);
    double next = x[t] + d1 * spec.dt + std::sqrt(2.0 * d2 * spec.dt) * normal(rng);
    if (spec.floor) next = std::max(next, *spec.floor);
    x[t + 1] = next;
  }
  return x;
}

}  // namespace

double Tabulated::operator()(double x) const {
  if (x <= grid.front()) return values.front();
  if (x >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto hi = static_cast<std::size_t>(it - grid.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

ParamSeries simulate_langevin(const LangevinSpec& spec) {
  validate(spec);
  if (spec.n_steps < 1) throw Error(ErrorCode::InvalidArgument, "n_steps must be >= 1");
  ParamSeries out;
  out.values = euler_maruyama(spec, spec.n_steps);
  out.times.resize(out.values.size());
  for (std::size_t i = 0; i < out.times.size(); ++i) out.times[i] = static_cast<double>(i) * spec.dt;
  out.dt = spec.dt;
  return out;
}

ParamSeries add_measurement_noise(const ParamSeries& series, double sigma_m, std::uint64_t seed) {
  if (!(sigma_m >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_m must be >= 0");
  ParamSeries out = series;
  if (sigma_m == 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sigma_m);
  for (double& v : out.values) v += normal(rng);
  return out;
}

std::vector<double> simulate_gbm(const GBMSpec& spec) {
  if (!(spec.s0 > 0.0) || !(spec.dt > 0.0) || !(spec.sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "GBM needs s0 > 0, dt > 0, sigma >= 0");
  }
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double drift = (spec.mu - 0.5 * spec.sigma * spec.sigma) * spec.dt;
  const double vol = spec.sigma * std::sqrt(spec.dt);
  std::vector<double> path(spec.n_steps + 1);
  path[0] = spec.s0;
  double log_s = std::log(spec.s0);
  for (std::size_t t = 1; t <= spec.n_steps; ++t) {
    log_s += drift + vol * normal(rng);
    path[t] = std::exp(log_s);
  }
  return path;
}

ParamSeries market_phi_path(std::size_t n_windows, const LangevinSpec& phi_process, const MarketLayout& layout) {
  if (n_windows == 0) throw Error(ErrorCode::InvalidArgument, "n_windows must be >= 1");
  validate(phi_process);
  LangevinSpec spec = phi_process;
  spec.floor = std::max(spec.floor.value_or(kMinMarketPhi), kMinMarketPhi);
  ParamSeries out;
  out.values = euler_maruyama(spec, n_windows - 1);
  out.times.resize(n_windows);
  for (std::size_t i = 0; i < n_windows; ++i) {
    out.times[i] = static_cast<double>(layout.t0 + static_cast<std::int64_t>(i) * layout.window_len);
  }
  out.dt = 1.0;
  return out;
}

SnapshotWindow market_window(std::size_t index, double phi, std::size_t n_companies, double theta,
                             std::uint64_t seed, const MarketLayout& layout) {
  if (n_companies == 0) throw Error(ErrorCode::InvalidArgument, "n_companies must be >= 1");
  const ModelParams params{ModelKind::InverseGamma, phi, theta};
  if (!in_domain(params)) throw Error(ErrorCode::DomainError, "market needs phi > 0 and theta > 0");
  Rng rng(derive_seed(seed, index + 1));
  std::vector<double> s(n_companies);
  for (double& v : s) v = draw(params, rng);
  return make_window(layout.t0 + static_cast<std::int64_t>(index) * layout.window_len, layout.window_len,
                     std::move(s));
}

SyntheticMarket simulate_market(std::size_t n_companies, std::size_t n_windows, const LangevinSpec& phi_process,
                                double theta, std::uint64_t seed, const MarketLayout& layout) {
  SyntheticMarket market;
  market.true_phi = market_phi_path(n_windows, phi_process, layout);
  market.windows.reserve(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    market.windows.push_back(market_window(w, market.true_phi.values[w], n_companies, theta, seed, layout));
  }
  return market;
}

}  // namespace volgram
