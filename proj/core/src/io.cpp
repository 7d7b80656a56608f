#include "volgram/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"
#include "volgram/error.hpp"

namespace volgram {
namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::FormatError, std::string("missing field '") + key + "'");
  if (it->is_null()) return std::numeric_limits<double>::quiet_NaN();
  return it->get<double>();
}

json parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "record is not a JSON object");
  const auto v = j.value("format_version", -1);
  if (v != kFormatVersion) {
    throw Error(ErrorCode::FormatError, "unsupported format_version " + std::to_string(v));
  }
  return j;
}

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

json stats_json(const std::optional<ErrorStats>& s) {
  if (!s) return json{{"average", nullptr}, {"std", nullptr}};
  return json{{"average", number(s->average)}, {"std", number(s->std)}};
}

json histogram_json(const Histogram& h) {
  return json{{"lo", h.lo}, {"hi", h.hi}, {"density", h.density}};
}

}  // namespace

std::string window_to_json(const SnapshotWindow& w) {
  const json j{{"format_version", kFormatVersion},
               {"window_start", w.window_start},
               {"window_len", w.window_len},
               {"samples", w.samples},
               {"mean_s", number(w.mean_s)},
               {"std_s", number(w.std_s)},
               {"n_companies", w.n_companies}};
  return j.dump();
}

namespace {

SnapshotWindow window_from_record(const json& j) {
  SnapshotWindow w;
  w.window_start = j.at("window_start").get<std::int64_t>();
  w.window_len = j.value("window_len", std::int64_t{600});
  w.samples = j.at("samples").get<std::vector<double>>();
  w.mean_s = number_from(j, "mean_s");
  w.std_s = number_from(j, "std_s");
  w.n_companies = j.at("n_companies").get<std::size_t>();
  if (w.n_companies != w.samples.size()) {
    throw Error(ErrorCode::FormatError, "n_companies does not match the number of samples");
  }
  for (double s : w.samples) {
    if (!(s > 0.0)) throw Error(ErrorCode::FormatError, "samples must be > 0");
  }
  return w;
}

// Type and key errors from the JSON layer surface as FormatError.
template <typename F>
auto decode(std::string_view line, F from_record) {
  const json j = parse_record(line);
  try {
    return from_record(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
}

}  // namespace

SnapshotWindow window_from_json(std::string_view line) { return decode(line, window_from_record); }

std::string fits_to_json(const WindowFits& fits) {
  json models = json::object();
  for (ModelKind kind : kAllModels) {
    const auto& r = fits[kind];
    if (!r) continue;
    json m{{"phi", number(r->params.phi)},
           {"theta", number(r->params.theta)},
           {"rel_err_phi", number(r->rel_err_phi)},
           {"rel_err_theta", number(r->rel_err_theta)},
           {"rss", number(r->rss)},
           {"converged", r->converged},
           {"iterations", r->iterations},
           {"status", std::string(to_string(r->status))}};
    if (!r->diagnostic.empty()) m["diagnostic"] = r->diagnostic;
    models[std::string(to_string(kind))] = std::move(m);
  }
  const json j{{"format_version", kFormatVersion},
               {"window_start", fits.window_start},
               {"window_len", fits.window_len},
               {"n_companies", fits.n_companies},
               {"models", std::move(models)}};
  return j.dump();
}

namespace {

WindowFits fits_from_record(const json& j) {
  WindowFits fits;
  fits.window_start = j.at("window_start").get<std::int64_t>();
  fits.window_len = j.value("window_len", std::int64_t{600});
  fits.n_companies = j.value("n_companies", std::size_t{0});
  for (const auto& [name, m] : j.at("models").items()) {
    const auto kind = parse_model_kind(name);
    if (!kind) throw Error(ErrorCode::FormatError, "unknown model '" + name + "'");
    FitResult r;
    r.params = {*kind, number_from(m, "phi"), number_from(m, "theta")};
    r.rel_err_phi = number_from(m, "rel_err_phi");
    r.rel_err_theta = number_from(m, "rel_err_theta");
    r.rss = number_from(m, "rss");
    r.converged = m.at("converged").get<bool>();
    r.iterations = m.value("iterations", 0);
    const std::string status = m.value("status", std::string(r.converged ? "converged" : "numerical-failure"));
    r.status = r.converged ? FitStatus::Converged : FitStatus::NumericalFailure;
    for (FitStatus s : {FitStatus::Converged, FitStatus::MaxIterations, FitStatus::SingularJacobian,
                        FitStatus::DomainEscape, FitStatus::TooFewSamples, FitStatus::NumericalFailure}) {
      if (status == to_string(s)) r.status = s;
    }
    r.diagnostic = m.value("diagnostic", std::string{});
    fits[*kind] = r;
  }
  return fits;
}

}  // namespace

WindowFits fits_from_json(std::string_view line) { return decode(line, fits_from_record); }

std::vector<SnapshotWindow> read_windows(std::istream& in) {
  return read_lines<SnapshotWindow>(in, [](const std::string& l) { return window_from_json(l); });
}

std::vector<WindowFits> read_fits(std::istream& in) {
  return read_lines<WindowFits>(in, [](const std::string& l) { return fits_from_json(l); });
}

std::string summary_to_json(const ErrorSummary& summary) {
  json models = json::object();
  for (const auto& m : summary.models) {
    models[std::string(to_string(m.kind))] = json{{"rel_err_phi", stats_json(m.phi)},
                                                  {"rel_err_theta", stats_json(m.theta)},
                                                  {"n_windows", m.n_windows},
                                                  {"n_failed", m.n_failed},
                                                  {"histogram_phi", histogram_json(m.phi_hist)},
                                                  {"histogram_theta", histogram_json(m.theta_hist)}};
  }
  const json j{{"format_version", kFormatVersion}, {"n_windows", summary.n_windows}, {"models", std::move(models)}};
  return j.dump(2);
}

std::string markov_to_json(const MarkovResult& r, const MarkovOptions& o) {
  const json j{{"format_version", kFormatVersion},
               {"distance", number(r.distance)},
               {"threshold", number(r.threshold)},
               {"pass", r.pass},
               {"n_cells", r.n_cells},
               {"n_triples", r.n_triples},
               {"n_bins", o.n_bins},
               {"lag", o.lag},
               {"n_surrogates", o.n_surrogates}};
  return j.dump(2);
}

std::string km_report_to_json(const KmReport& report) {
  const auto& c = report.coefficients;
  const auto& m = report.moments;
  json d1 = json::array(), d2 = json::array(), d2_raw = json::array(), a1 = json::array(), a2 = json::array(),
       clipped = json::array(), counts = json::array(), m1 = json::array(), m2 = json::array();
  for (std::size_t b = 0; b < c.bins.size(); ++b) {
    d1.push_back(number(c.bins[b].d1));
    d2.push_back(number(c.bins[b].d2));
    d2_raw.push_back(number(c.bins[b].d2_raw));
    a1.push_back(number(c.bins[b].a1));
    a2.push_back(number(c.bins[b].a2));
    clipped.push_back(c.bins[b].d2_clipped);
    counts.push_back(c.bins[b].count);
    m1.push_back(m.m1[b]);
    m2.push_back(m.m2[b]);
  }
  json j{{"format_version", kFormatVersion},
         {"model", std::string(to_string(report.model))},
         {"param", report.param == FittedParam::Phi ? "phi" : "theta"},
         {"n_points", report.n_points},
         {"n_gaps", report.n_gaps},
         {"n_bins", report.moment_options.n_bins},
         {"tau_max", report.moment_options.tau_max},
         {"min_count", report.moment_options.min_count},
         {"tau_fit_range", {report.km_options.tau_lo, report.km_options.tau_hi}},
         {"fit_order", report.km_options.fit_order},
         {"bins", m.centers},
         {"counts", counts},
         {"M1", m1},
         {"M2", m2},
         {"D1", d1},
         {"D2", d2},
         {"D2_raw", d2_raw},
         {"a1", a1},
         {"a2", a2},
         {"d2_clipped", clipped},
         {"noise_sigma", number(c.noise_sigma)},
         {"noise_sigma_mean_bin", number(c.noise_sigma_mean_bin)},
         {"drift_slope", number(c.drift_slope)},
         {"phi_f", number(c.fixed_point)},
         {"diffusion_amplitude", number(c.diffusion_amplitude)},
         {"series_mean", number(m.series_mean)}};
  if (report.markov) {
    j["markov"] = json{{"distance", number(report.markov->distance)},
                       {"threshold", number(report.markov->threshold)},
                       {"pass", report.markov->pass}};
  }
  return j.dump(2);
}

ParamSeries series_from_fits(std::span<const WindowFits> fits, ModelKind model, FittedParam param) {
  std::vector<double> times, values;
  std::vector<std::size_t> forced_gaps;
  double step = 0.0;
  bool pending_gap = false;
  for (const WindowFits& w : fits) {
    if (step == 0.0) step = static_cast<double>(w.window_len);
    const auto& r = w[model];
    const double v = r ? (param == FittedParam::Phi ? r->params.phi : r->params.theta) : 0.0;
    if (!r || !r->converged || !std::isfinite(v)) {
      pending_gap = !times.empty();
      continue;
    }
    if (pending_gap) forced_gaps.push_back(times.size());
    pending_gap = false;
    times.push_back(static_cast<double>(w.window_start));
    values.push_back(v);
  }
  ParamSeries series = make_param_series(std::move(times), std::move(values), step > 0.0 ? step : 600.0);
  series.gaps.insert(series.gaps.end(), forced_gaps.begin(), forced_gaps.end());
  std::sort(series.gaps.begin(), series.gaps.end());
  series.gaps.erase(std::unique(series.gaps.begin(), series.gaps.end()), series.gaps.end());
  return series;
}

}  // namespace volgram
