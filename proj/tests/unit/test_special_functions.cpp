#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "support/quadrature.hpp"
#include "volgram/error.hpp"
#include "volgram/special_functions.hpp"

namespace sf = volgram::special;
namespace vt = volgram::testing;

// Reference values computed offline with mpmath at 30 significant digits.
namespace frozen {
constexpr double P_2_5_1_7 = 0.361430076896204909880922985571;
constexpr double erf_1 = 0.842700792949714869341220635083;
constexpr double P_1_1 = 0.632120558828557678404476229839;
constexpr double ln_gamma_half = 0.572364942924700087071713675677;
constexpr double ln_gamma_10 = 12.8018274800814696112077178746;
constexpr double Q_2_2 = 0.406005849709838075681998484917;
constexpr double P_0_5_0_3 = 0.561421973919000136477739599533;
constexpr double P_20_15 = 0.124781215032524822698489990342;
constexpr double P_50_60 = 0.915593318906308170377335863877;
}  // namespace frozen

TEST_SUITE("special_functions") {
  TEST_CASE("quadrature oracle reproduces frozen references") {
    CHECK(vt::oracle_P(2.5, 1.7) == doctest::Approx(frozen::P_2_5_1_7).epsilon(1e-12));
    CHECK(vt::oracle_P(0.5, 0.3) == doctest::Approx(frozen::P_0_5_0_3).epsilon(1e-12));
    CHECK(vt::oracle_P(20.0, 15.0) == doctest::Approx(frozen::P_20_15).epsilon(1e-11));
    CHECK(vt::oracle_Q(2.0, 2.0) == doctest::Approx(frozen::Q_2_2).epsilon(1e-12));
    CHECK(vt::oracle_erf(1.0) == doctest::Approx(frozen::erf_1).epsilon(1e-13));
  }

  TEST_CASE("ln_gamma known values") {
    CHECK(sf::ln_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(sf::ln_gamma(0.5) - frozen::ln_gamma_half) < 1e-14);
    CHECK(std::abs(sf::ln_gamma(0.5) - std::log(std::sqrt(std::numbers::pi))) < 1e-14);
    CHECK(std::abs(sf::ln_gamma(10.0) - std::log(362880.0)) < 1e-13);
    CHECK(std::abs(sf::ln_gamma(10.0) - frozen::ln_gamma_10) < 1e-13);
  }

  TEST_CASE("ln_gamma recurrence") {
    for (double x = 0.05; x < 60.0; x *= 1.37) {
      const double lhs = sf::ln_gamma(x + 1.0);
      const double rhs = sf::ln_gamma(x) + std::log(x);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }

  TEST_CASE("ln_gamma rejects non-positive arguments") {
    CHECK_THROWS_AS(sf::ln_gamma(0.0), volgram::Error);
    CHECK_THROWS_AS(sf::ln_gamma(-1.5), volgram::Error);
    CHECK_THROWS_AS(sf::ln_gamma(std::numeric_limits<double>::quiet_NaN()), volgram::Error);
  }

  TEST_CASE("incomplete gamma special cases") {
    CHECK(std::abs(sf::reg_inc_gamma_lower(1.0, 1.0) - frozen::P_1_1) < 1e-14);
    for (double x : {0.01, 0.5, 3.0, 25.0}) {
      CHECK(std::abs(sf::reg_inc_gamma_lower(1.0, x) + std::expm1(-x)) < 1e-14);
    }
    for (double a : {0.1, 1.0, 7.5, 50.0}) {
      CHECK(sf::reg_inc_gamma_lower(a, 0.0) == 0.0);
      CHECK(sf::reg_inc_gamma_upper(a, 0.0) == 1.0);
    }
    CHECK(std::abs(sf::reg_inc_gamma_upper(2.0, 2.0) - 3.0 * std::exp(-2.0)) < 1e-15);
    CHECK(sf::reg_inc_gamma_lower(3.0, std::numeric_limits<double>::infinity()) == 1.0);
  }

  TEST_CASE("incomplete gamma against frozen references") {
    CHECK(std::abs(sf::reg_inc_gamma_lower(2.5, 1.7) - frozen::P_2_5_1_7) < 1e-14);
    CHECK(std::abs(sf::reg_inc_gamma_lower(0.5, 0.3) - frozen::P_0_5_0_3) < 1e-14);
    CHECK(std::abs(sf::reg_inc_gamma_lower(20.0, 15.0) - frozen::P_20_15) < 1e-13);
    CHECK(std::abs(sf::reg_inc_gamma_lower(50.0, 60.0) - frozen::P_50_60) < 1e-13);
    CHECK(std::abs(sf::reg_inc_gamma_upper(2.0, 2.0) - frozen::Q_2_2) < 1e-14);
  }

  TEST_CASE("incomplete gamma against the quadrature oracle") {
    for (double a : {0.1, 0.5, 0.93, 1.5, 3.0, 10.0, 30.0}) {
      for (double x : {0.05, 0.4, 1.0, 2.5, 8.0, 20.0, 45.0}) {
        CAPTURE(a);
        CAPTURE(x);
        CHECK(std::abs(sf::reg_inc_gamma_lower(a, x) - vt::oracle_P(a, x)) < 1e-10);
        CHECK(std::abs(sf::reg_inc_gamma_upper(a, x) - vt::oracle_Q(a, x)) < 1e-10);
      }
    }
  }

  TEST_CASE("P + Q = 1 and range on a grid") {
    const std::vector<double> as{0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0};
    for (double a : as) {
      for (double x = 0.0; x <= 100.0; x += 2.5) {
        const double p = sf::reg_inc_gamma_lower(a, x);
        const double q = sf::reg_inc_gamma_upper(a, x);
        CHECK(std::abs(p + q - 1.0) < 1e-12);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
  }

  TEST_CASE("P is non-decreasing in x") {
    for (double a : {0.1, 0.9, 1.0, 1.1, 4.0, 49.0}) {
      double prev = 0.0;
      for (double x = 0.0; x <= 120.0; x += 0.37) {
        const double p = sf::reg_inc_gamma_lower(a, x);
        CHECK(p >= prev - 1e-15);
        prev = p;
      }
    }
  }

  TEST_CASE("batched form matches the single calls") {
    const double a = 2.7;
    const double lg = sf::ln_gamma(a);
    for (double x : {0.0, 0.3, 2.7, 3.7, 9.0}) {
      const auto both = sf::reg_inc_gamma(a, x, lg);
      CHECK(both.lower == doctest::Approx(sf::reg_inc_gamma_lower(a, x)).epsilon(1e-14));
      CHECK(both.upper == doctest::Approx(sf::reg_inc_gamma_upper(a, x)).epsilon(1e-14));
    }
  }

  TEST_CASE("incomplete gamma domain errors") {
    CHECK_THROWS_AS(sf::reg_inc_gamma_lower(0.0, 1.0), volgram::Error);
    CHECK_THROWS_AS(sf::reg_inc_gamma_lower(1.0, -1.0), volgram::Error);
    CHECK_THROWS_AS(sf::reg_inc_gamma_upper(-2.0, 1.0), volgram::Error);
  }

  TEST_CASE("erf values and symmetry") {
    CHECK(sf::erf(0.0) == 0.0);
    CHECK(std::abs(sf::erf(1.0) - frozen::erf_1) < 1e-15);
    CHECK(std::abs(sf::erf(1.0) - vt::oracle_erf(1.0)) < 1e-13);
    for (double x = 0.01; x < 6.0; x *= 1.3) {
      CHECK(sf::erf(-x) == -sf::erf(x));
      CHECK(std::abs(sf::erf(x) - vt::oracle_erf(x)) < 1e-12);
      CHECK(std::abs(sf::erf(x) + sf::erfc(x) - 1.0) < 1e-15);
    }
  }
}
