#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "volgram/error.hpp"
#include "volgram/io.hpp"

using nlohmann::json;
using volgram::ModelKind;

namespace {

volgram::WindowFits sample_fits() {
  volgram::WindowFits f;
  f.window_start = 1300282800;
  f.window_len = 600;
  f.n_companies = 2000;
  volgram::FitResult r;
  r.params = {ModelKind::InverseGamma, 0.9312345678901234, 1.0 / 3.0};
  r.rel_err_phi = 0.0143;
  r.rel_err_theta = 0.021;
  r.rss = 1.25e-4;
  r.converged = true;
  r.iterations = 7;
  r.status = volgram::FitStatus::Converged;
  f[ModelKind::InverseGamma] = r;
  volgram::FitResult bad;
  bad.params = {ModelKind::Weibull, 0.5, 2.0};
  bad.rel_err_phi = std::numeric_limits<double>::quiet_NaN();
  bad.status = volgram::FitStatus::DomainEscape;
  bad.diagnostic = "theta left the domain";
  f[ModelKind::Weibull] = bad;
  return f;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("window round trip") {
    const auto w = volgram::make_window(600, 600, {1.0, 2.5, 0.1, 7.0 / 3.0});
    const std::string line = volgram::window_to_json(w);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(json::parse(line).at("format_version") == 1);
    CHECK(volgram::window_from_json(line) == w);
  }

  TEST_CASE("fits round trip keeps only present models") {
    const auto f = sample_fits();
    const std::string line = volgram::fits_to_json(f);
    const json j = json::parse(line);
    CHECK(j.at("models").size() == 2);
    CHECK(j.at("models").at("weibull").at("rel_err_phi").is_null());
    CHECK(j.at("models").at("weibull").at("status") == "domain-escape");
    const auto back = volgram::fits_from_json(line);
    CHECK(back.window_start == f.window_start);
    CHECK(back.n_companies == 2000);
    CHECK_FALSE(back[ModelKind::Gamma].has_value());
    const auto& ig = *back[ModelKind::InverseGamma];
    CHECK(ig.params == f[ModelKind::InverseGamma]->params);
    CHECK(ig.rss == f[ModelKind::InverseGamma]->rss);
    CHECK(ig.iterations == 7);
    CHECK(ig.converged);
    const auto& wb = *back[ModelKind::Weibull];
    CHECK(std::isnan(wb.rel_err_phi));
    CHECK(wb.status == volgram::FitStatus::DomainEscape);
    CHECK(wb.diagnostic == "theta left the domain");
    CHECK(volgram::fits_to_json(back) == line);
  }

  TEST_CASE("format errors name the line") {
    std::istringstream in(volgram::window_to_json(volgram::make_window(0, 600, {1.0})) + "\n\n{\"format_version\":2}\n");
    try {
      volgram::read_windows(in);
      FAIL("expected FormatError");
    } catch (const volgram::Error& e) {
      CHECK(e.code() == volgram::ErrorCode::FormatError);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(volgram::window_from_json("not json"), volgram::Error);
    CHECK_THROWS_AS(volgram::window_from_json(R"({"format_version":1,"window_start":0,"samples":[1,-1],)"
                                              R"("mean_s":1,"std_s":0,"n_companies":2})"),
                    volgram::Error);
  }

  TEST_CASE("series from fits leaves gaps at failed windows") {
    std::vector<volgram::WindowFits> fits;
    for (int i = 0; i < 6; ++i) {
      volgram::WindowFits f;
      f.window_start = 600 * i;
      volgram::FitResult r;
      r.params = {ModelKind::InverseGamma, 1.0 + 0.1 * i, 2.0};
      r.converged = i != 3;
      r.status = r.converged ? volgram::FitStatus::Converged : volgram::FitStatus::MaxIterations;
      f[ModelKind::InverseGamma] = r;
      fits.push_back(f);
    }
    const auto s = volgram::series_from_fits(fits, ModelKind::InverseGamma, volgram::FittedParam::Phi);
    CHECK(s.values.size() == 5);
    CHECK(s.gaps == std::vector<std::size_t>{3});
    CHECK(s.values[3] == doctest::Approx(1.4));
    const auto t = volgram::series_from_fits(fits, ModelKind::InverseGamma, volgram::FittedParam::Theta);
    CHECK(t.values[0] == 2.0);
    CHECK(volgram::series_from_fits(fits, ModelKind::Gamma, volgram::FittedParam::Phi).values.empty());
  }

  TEST_CASE("summary json fields") {
    volgram::ErrorSummary s;
    s.n_windows = 3;
    volgram::ModelErrorSummary m;
    m.kind = ModelKind::LogNormal;
    m.n_windows = 3;
    m.phi = volgram::ErrorStats{0.02, 0.01};
    m.phi_hist = {0.0, 1.0, {1.0, 1.0}};
    m.theta_hist = {0.0, 1.0, {2.0, 0.0}};
    s.models.push_back(m);
    const json j = json::parse(volgram::summary_to_json(s));
    CHECK(j.at("format_version") == 1);
    CHECK(j.at("models").at("log-normal").at("rel_err_phi").at("average") == 0.02);
    CHECK(j.at("models").at("log-normal").at("rel_err_theta").at("average").is_null());
  }
}
