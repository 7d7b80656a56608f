#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "volgram/error.hpp"
#include "volgram/kramers_moyal.hpp"
#include "volgram/langevin_sim.hpp"
#include "volgram/random.hpp"

using volgram::ConditionalMoments;
using volgram::ParamSeries;

namespace {

ParamSeries from_values(std::vector<double> values) {
  ParamSeries s;
  s.times.resize(values.size());
  std::iota(s.times.begin(), s.times.end(), 0.0);
  s.values = std::move(values);
  return s;
}

ParamSeries ou(std::size_t steps, std::uint64_t seed, double k = 0.05, double fp = 0.93, double d2 = 1e-6) {
  volgram::LangevinSpec spec;
  spec.drift = volgram::AffineDrift{k, fp};
  spec.diffusion = d2;
  spec.n_steps = steps;
  spec.initial = fp;
  spec.seed = seed;
  return volgram::simulate_langevin(spec);
}

ParamSeries moving_average(std::size_t n, std::uint64_t seed) {
  volgram::Rng rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> e(n + 2);
  for (double& v : e) v = z(rng);
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = (e[t] + e[t + 1] + e[t + 2]) / 3.0;
  return from_values(std::move(x));
}

double median_d2(const volgram::KMCoefficients& c) {
  std::vector<double> d;
  for (const auto& b : c.bins) d.push_back(b.d2);
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

// Moments with M1 = a * tau and M2 = b * tau exactly, in 5 bins.
ConditionalMoments exact_linear(double a, double b) {
  ConditionalMoments m;
  m.lo = 0.0;
  m.hi = 1.0;
  m.n_bins = 5;
  m.tau_max = 6;
  m.series_mean = 0.5;
  for (std::size_t i = 0; i < 5; ++i) {
    m.bin_index.push_back(i);
    m.centers.push_back(0.1 + 0.2 * i);
    m.counts.emplace_back(6, 1000);
    std::vector<double> m1;
    std::vector<double> m2;
    for (int t = 1; t <= 6; ++t) {
      m1.push_back(a * t);
      m2.push_back(b * t);
    }
    m.m1.push_back(m1);
    m.m2.push_back(m2);
  }
  return m;
}

}  // namespace

TEST_SUITE("kramers_moyal") {
  TEST_CASE("gap detection from sampling times") {
    const auto s = volgram::make_param_series({0, 600, 1200, 3000, 3600, 4200}, {1, 2, 3, 4, 5, 6}, 600);
    CHECK(s.gaps == std::vector<std::size_t>{3});
    CHECK(s.dt == 1.0);
  }

  TEST_CASE("constant series has zero moments") {
    const auto m = volgram::conditional_moments(from_values(std::vector<double>(1000, 0.7)), {10, 5, 10});
    REQUIRE_FALSE(m.centers.empty());
    for (std::size_t b = 0; b < m.centers.size(); ++b) {
      for (int t = 0; t < 5; ++t) {
        CHECK(m.m1[b][t] == 0.0);
        CHECK(m.m2[b][t] == 0.0);
      }
    }
    const auto c = volgram::km_estimate(m, {1, 5, 2});
    CHECK(c.noise_sigma == 0.0);
    CHECK(c.bins[0].d1 == doctest::Approx(0.0));
    CHECK(c.bins[0].d2 == doctest::Approx(0.0));
  }

  TEST_CASE("deterministic ramp") {
    std::vector<double> x(2000);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = 0.5 + 0.001 * t;
    const auto m = volgram::conditional_moments(from_values(x), {10, 5, 10});
    CHECK(m.centers.size() == 10);
    for (std::size_t b = 0; b < m.centers.size(); ++b) {
      for (int t = 1; t <= 5; ++t) {
        CHECK(m.m1[b][t - 1] == doctest::Approx(0.001 * t).epsilon(1e-9));
        CHECK(m.m2[b][t - 1] == doctest::Approx(1e-6 * t * t).epsilon(1e-9));
      }
    }
    const auto c = volgram::km_estimate(m);
    for (const auto& bin : c.bins) {
      CHECK(bin.d1 == doctest::Approx(0.001).epsilon(1e-6));
      CHECK(std::abs(bin.d2) < 1e-12);
    }
  }

  TEST_CASE("exact linear moments") {
    for (int order : {1, 2}) {
      const auto c = volgram::km_estimate(exact_linear(0.002, 0.0004), {1, 5, order});
      REQUIRE(c.bins.size() == 5);
      for (const auto& b : c.bins) {
        CHECK(b.d1 == doctest::Approx(0.002).epsilon(1e-9));
        CHECK(b.d2 == doctest::Approx(0.0002).epsilon(1e-9));
        CHECK(std::abs(b.a1) < 1e-12);
        CHECK(std::abs(b.a2) < 1e-12);
        CHECK_FALSE(b.d2_clipped);
      }
      CHECK(c.noise_sigma == doctest::Approx(0.0).scale(1.0));
      CHECK(c.noise_sigma < 1e-6);
    }
  }

  TEST_CASE("negative diffusion estimates are clipped and flagged") {
    const auto c = volgram::km_estimate(exact_linear(0.0, -0.0004), {1, 5, 1});
    CHECK(c.any_d2_clipped);
    for (const auto& b : c.bins) {
      CHECK(b.d2 == 0.0);
      CHECK(b.d2_raw < 0.0);
      CHECK(b.d2_clipped);
    }
  }

  TEST_CASE("tau range validation") {
    const auto m = exact_linear(0.1, 0.1);
    CHECK_THROWS_AS(volgram::km_estimate(m, {1, 2, 1}), volgram::Error);
    CHECK_THROWS_AS(volgram::km_estimate(m, {2, 9, 2}), volgram::Error);
    CHECK_THROWS_AS(volgram::km_estimate(m, {0, 4, 2}), volgram::Error);
    CHECK_THROWS_AS(volgram::km_estimate(m, {1, 5, 3}), volgram::Error);
  }

  TEST_CASE("series length and population errors") {
    CHECK_THROWS_AS(volgram::conditional_moments(from_values(std::vector<double>(499, 1.0)), {50, 10, 1}),
                    volgram::Error);
    std::vector<double> x(600);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7);
    try {
      volgram::conditional_moments(from_values(x), {50, 10, 1000});
      FAIL("expected AllBinsUnderpopulated");
    } catch (const volgram::Error& e) {
      CHECK(e.code() == volgram::ErrorCode::AllBinsUnderpopulated);
    }
  }

  TEST_CASE("i.i.d. noise on a constant gives sigma") {
    volgram::Rng rng(4);
    std::normal_distribution<double> z(0.0, 0.01);
    std::vector<double> x(200'000);
    for (double& v : x) v = 0.9 + z(rng);
    const auto m = volgram::conditional_moments(from_values(x), {20, 10, 100});
    for (int t = 1; t <= 10; ++t) {
      double pooled = 0.0;
      std::size_t n = 0;
      for (std::size_t b = 0; b < m.centers.size(); ++b) {
        pooled += m.m2[b][t - 1] * m.counts[b][t - 1];
        n += m.counts[b][t - 1];
      }
      CHECK(pooled / n == doctest::Approx(2e-4).epsilon(0.02));
    }
    CHECK(volgram::estimate_measurement_noise(m) == doctest::Approx(0.01).epsilon(0.03));
  }

  TEST_CASE("OU drift, diffusion and noise") {
    const auto s = ou(1'000'000, 17);
    const auto m = volgram::conditional_moments(s);
    const auto c = volgram::km_estimate(m);
    CHECK(c.drift_slope == doctest::Approx(-0.05).epsilon(0.1));
    CHECK(std::abs(c.fixed_point - 0.93) < 0.02);
    CHECK(median_d2(c) == doctest::Approx(1e-6).epsilon(0.15));
    CHECK(c.noise_sigma < 0.1 * std::sqrt(2.0 * 1e-6));
    // M1 slope at bins well away from the fixed point.
    for (const auto& b : c.bins) {
      if (b.count < 20'000 || std::abs(b.center - 0.93) < 0.004) continue;
      const double truth = -0.05 * (b.center - 0.93);
      CAPTURE(b.center);
      CHECK(b.d1 == doctest::Approx(truth).epsilon(0.1 + 0.5e-4 / std::abs(truth)));
    }

    const auto noisy = volgram::add_measurement_noise(s, 5e-3, 99);
    const auto cn = volgram::km_estimate(volgram::conditional_moments(noisy));
    CHECK(cn.noise_sigma == doctest::Approx(5e-3).epsilon(0.1));
  }

  TEST_CASE("doubling min_count never adds bins") {
    const auto s = ou(200'000, 5);
    std::size_t prev = SIZE_MAX;
    for (std::size_t mc : {10, 20, 40, 80, 160, 320, 640, 1280}) {
      const auto m = volgram::conditional_moments(s, {50, 10, mc});
      CHECK(m.centers.size() <= prev);
      prev = m.centers.size();
      for (const auto& row : m.counts) CHECK(row[0] >= mc);
    }
  }

  TEST_CASE("time origin does not matter") {
    auto s = ou(50'000, 6);
    const auto a = volgram::conditional_moments(s, {20, 10, 50});
    for (double& t : s.times) t += 1.3e9;
    const auto b = volgram::conditional_moments(s, {20, 10, 50});
    CHECK(a.centers == b.centers);
    CHECK(a.counts == b.counts);
    CHECK(a.m1 == b.m1);
    CHECK(a.m2 == b.m2);
  }

  TEST_CASE("increments never span gaps") {
    // A jump across a gap would dominate M2 if it were used.
    std::vector<double> x(2000, 0.0);
    for (std::size_t i = 1000; i < x.size(); ++i) x[i] = 1.0;
    auto s = from_values(x);
    s.gaps = {1000};
    const auto m = volgram::conditional_moments(s, {2, 5, 10});
    for (const auto& row : m.m2) {
      for (double v : row) CHECK(v == 0.0);
    }
  }

  TEST_CASE("artificial gaps barely move the estimates") {
    const auto s = ou(1'000'000, 23);
    auto gapped = s;
    for (std::size_t i = 5000; i < s.values.size(); i += 5000) gapped.gaps.push_back(i);
    const auto a = volgram::km_estimate(volgram::conditional_moments(s));
    const auto b = volgram::km_estimate(volgram::conditional_moments(gapped));
    CHECK(b.drift_slope == doctest::Approx(a.drift_slope).epsilon(0.03));
    CHECK(median_d2(b) == doctest::Approx(median_d2(a)).epsilon(0.03));
  }

  TEST_CASE("Markov test: i.i.d. and OU pass") {
    volgram::Rng rng(8);
    std::uniform_real_distribution<double> u;
    std::vector<double> x(100'000);
    for (double& v : x) v = u(rng);
    const auto iid = volgram::markov_test(from_values(x));
    CHECK(iid.pass);
    CHECK(iid.distance >= 0.0);
    CHECK(iid.n_cells > 0);

    const auto r = volgram::markov_test(ou(100'000, 31));
    CHECK(r.pass);
  }

  TEST_CASE("Markov test: moving average fails") {
    const auto r = volgram::markov_test(moving_average(100'000, 9));
    CHECK_FALSE(r.pass);
    CHECK(r.distance > r.threshold);
  }

  TEST_CASE("Markov test is deterministic in the seed") {
    const auto s = ou(20'000, 2);
    volgram::MarkovOptions o;
    o.seed = 42;
    const auto a = volgram::markov_test(s, o);
    const auto b = volgram::markov_test(s, o);
    CHECK(a.distance == b.distance);
    CHECK(a.threshold == b.threshold);
    CHECK_THROWS_AS(volgram::markov_test(from_values({1.0, 2.0})), volgram::Error);
  }
}
