#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "doctest.h"
#include "volgram/error.hpp"
#include "volgram/io.hpp"
#include "volgram/market_data.hpp"

using volgram::QuoteRecord;
using volgram::WindowOptions;

namespace {

constexpr std::int64_t kWed0940Edt = 1300282800;  // 2011-03-16 09:40 EDT

WindowOptions loose() {
  WindowOptions o;
  o.min_companies = 1;
  return o;
}

}  // namespace

TEST_SUITE("market_data") {
  TEST_CASE("timestamps") {
    CHECK(volgram::parse_timestamp("2011-03-16T13:40:00Z") == kWed0940Edt);
    CHECK(volgram::parse_timestamp("2011-03-16T09:40:00-04:00") == kWed0940Edt);
    CHECK(volgram::parse_timestamp("2011-03-16 13:40:00") == kWed0940Edt);
    CHECK(volgram::parse_timestamp("2011-03-16T13:40:00.750Z") == kWed0940Edt);
    CHECK(volgram::parse_timestamp("1300282800") == kWed0940Edt);
    CHECK_FALSE(volgram::parse_timestamp("yesterday"));
    CHECK_FALSE(volgram::parse_timestamp("2011-13-16T13:40:00Z"));
    CHECK_FALSE(volgram::parse_timestamp(""));
  }

  TEST_CASE("US/Eastern offset follows daylight time") {
    CHECK(volgram::us_eastern_offset(kWed0940Edt) == -4 * 3600);
    // 2011-03-11, before the second Sunday of March.
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2011-03-11T15:00:00Z")) == -5 * 3600);
    // Transition instants: 2011-03-13 07:00Z and 2011-11-06 06:00Z.
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2011-03-13T06:59:59Z")) == -5 * 3600);
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2011-03-13T07:00:00Z")) == -4 * 3600);
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2011-11-06T05:59:59Z")) == -4 * 3600);
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2011-11-06T06:00:00Z")) == -5 * 3600);
    // Pre-2007 rules: first Sunday of April 2006 was April 2.
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2006-03-20T15:00:00Z")) == -5 * 3600);
    CHECK(volgram::us_eastern_offset(*volgram::parse_timestamp("2006-04-03T15:00:00Z")) == -4 * 3600);
  }

  TEST_CASE("parse a single row") {
    std::istringstream in("timestamp,symbol,last_price,volume\n2011-03-16T09:40:00Z,IBM,100.0,5000\n");
    const auto r = volgram::parse_quotes(in);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].symbol == "IBM");
    CHECK(r.records[0].last_price == 100.0);
    CHECK(r.records[0].volume == 5000.0);
    CHECK(r.malformed == 0);
  }

  TEST_CASE("negative volume is rejected") {
    std::istringstream in(
        "timestamp,symbol,last_price,volume\n"
        "2011-03-16T09:40:00Z,IBM,100.0,5000\n"
        "2011-03-16T09:40:00Z,GE,20.0,-3\n");
    const auto r = volgram::parse_quotes(in);
    CHECK(r.records.size() == 1);
    CHECK(r.malformed == 1);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].rfind("line 3", 0) == 0);
  }

  TEST_CASE("header only") {
    std::istringstream in("timestamp,symbol,last_price,volume\n");
    const auto r = volgram::parse_quotes(in);
    CHECK(r.records.empty());
    CHECK(r.malformed == 0);
  }

  TEST_CASE("extra columns, quoting and column order") {
    std::istringstream in(
        "\xEF\xBB\xBFname,volume,symbol,high,last_price,timestamp\n"
        "\"Acme, Inc.\",10,ACME,5.5,5.0,1300282800\n");
    const auto r = volgram::parse_quotes(in);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].symbol == "ACME");
    CHECK(r.records[0].last_price == 5.0);
  }

  TEST_CASE("custom schema and missing columns") {
    std::istringstream in("t,ticker,px,vol\n1300282800,A,1,2\n");
    volgram::CsvSchema schema{"t", "ticker", "px", "vol"};
    CHECK(volgram::parse_quotes(in, schema).records.size() == 1);
    std::istringstream bad("timestamp,symbol,price,volume\n");
    CHECK_THROWS_AS(volgram::parse_quotes(bad), volgram::Error);
  }

  TEST_CASE("mostly malformed input is an error") {
    std::istringstream in(
        "timestamp,symbol,last_price,volume\n"
        "x,A,1,1\n"
        "1300282800,B,0,1\n"
        "1300282800,C,1,1\n");
    try {
      volgram::parse_quotes(in);
      FAIL("expected TooManyMalformed");
    } catch (const volgram::Error& e) {
      CHECK(e.code() == volgram::ErrorCode::TooManyMalformed);
    }
  }

  TEST_CASE("normalization arithmetic") {
    std::vector<QuoteRecord> recs{{kWed0940Edt, "A", 1.0, 1.0}, {kWed0940Edt + 5, "B", 2.0, 1.0},
                                  {kWed0940Edt + 10, "C", 1.5, 2.0}};
    const auto rep = volgram::build_windows(recs, loose());
    REQUIRE(rep.windows.size() == 1);
    const auto& w = rep.windows[0];
    CHECK(w.samples == std::vector<double>{0.5, 1.0, 1.5});
    CHECK(w.mean_s == 2.0);
    CHECK(w.n_companies == 3);
    CHECK(w.std_s == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(w.window_start == kWed0940Edt);
  }

  TEST_CASE("session filter excludes after-hours windows") {
    const std::int64_t at1605 = kWed0940Edt + (6 * 60 + 25) * 60;
    std::vector<QuoteRecord> recs{{kWed0940Edt, "A", 1.0, 1.0}, {at1605, "A", 1.0, 1.0}};
    auto rep = volgram::build_windows(recs, loose());
    CHECK(rep.windows.size() == 1);
    CHECK(rep.excluded_by_session == 1);

    auto opts = loose();
    opts.session.enabled = false;
    CHECK(volgram::build_windows(recs, opts).windows.size() == 2);

    std::vector<QuoteRecord> only_late{{at1605, "A", 1.0, 1.0}};
    CHECK_THROWS_AS(volgram::build_windows(only_late, loose()), volgram::Error);
  }

  TEST_CASE("session filter tracks daylight time") {
    // 2011-03-11 is on standard time: 14:30Z is 09:30 local, 14:20Z is 09:20.
    const auto open = *volgram::parse_timestamp("2011-03-11T14:30:00Z");
    volgram::SessionFilter f;
    CHECK(f.contains(open));
    CHECK_FALSE(f.contains(open - 600));
    CHECK(f.contains(*volgram::parse_timestamp("2011-03-11T20:50:00Z")));
    CHECK_FALSE(f.contains(*volgram::parse_timestamp("2011-03-11T21:00:00Z")));
    // Same UTC clock time a week later is one hour later locally.
    CHECK(f.contains(*volgram::parse_timestamp("2011-03-18T13:30:00Z")));
    CHECK_FALSE(f.contains(*volgram::parse_timestamp("2011-03-18T20:00:00Z")));
  }

  TEST_CASE("last record of a symbol wins") {
    std::vector<QuoteRecord> recs{{kWed0940Edt + 100, "A", 9.0, 1.0},
                                  {kWed0940Edt + 10, "A", 1.0, 1.0},
                                  {kWed0940Edt, "B", 3.0, 1.0}};
    const auto rep = volgram::build_windows(recs, loose());
    REQUIRE(rep.windows.size() == 1);
    CHECK(rep.windows[0].n_companies == 2);
    CHECK(rep.windows[0].mean_s == 6.0);
  }

  TEST_CASE("zero-volume entries are dropped") {
    std::vector<QuoteRecord> recs{{kWed0940Edt, "A", 1.0, 0.0}, {kWed0940Edt, "B", 4.0, 1.0}};
    const auto rep = volgram::build_windows(recs, loose());
    CHECK(rep.windows[0].n_companies == 1);
    CHECK(rep.windows[0].samples == std::vector<double>{1.0});
  }

  TEST_CASE("min_companies") {
    std::vector<QuoteRecord> recs{{kWed0940Edt, "A", 1.0, 1.0}, {kWed0940Edt + 600, "A", 1.0, 1.0},
                                  {kWed0940Edt + 600, "B", 1.0, 1.0}};
    auto opts = loose();
    opts.min_companies = 2;
    const auto rep = volgram::build_windows(recs, opts);
    CHECK(rep.windows.size() == 1);
    CHECK(rep.excluded_too_small == 1);
  }

  TEST_CASE("windowing invariants and idempotence") {
    std::vector<QuoteRecord> recs;
    std::uint64_t state = 12345;
    auto next = [&state] {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      return static_cast<double>(state >> 11) / 9007199254740992.0;
    };
    for (int minute = 0; minute < 120; ++minute) {
      for (int c = 0; c < 60; ++c) {
        recs.push_back({kWed0940Edt + minute * 60 + c, "S" + std::to_string(c), 1.0 + 100.0 * next(),
                        std::floor(1e4 * next())});
      }
    }
    const auto a = volgram::build_windows(recs);
    const auto b = volgram::build_windows(recs);
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.windows.size(); ++i) {
      const auto& w = a.windows[i];
      total += w.n_companies;
      CHECK(w.n_companies == w.samples.size());
      const double m = std::accumulate(w.samples.begin(), w.samples.end(), 0.0) / w.samples.size();
      CHECK(std::abs(m - 1.0) < 1e-12);
      CHECK(volgram::window_to_json(w) == volgram::window_to_json(b.windows[i]));
    }
    CHECK(a.windows.size() == 12);
    CHECK(total <= recs.size());
  }

  TEST_CASE("empty input") {
    CHECK_THROWS_AS(volgram::build_windows({}, loose()), volgram::Error);
  }
}
