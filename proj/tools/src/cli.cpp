#include "volgram/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "volgram/error.hpp"
#include "volgram/fitting.hpp"
#include "volgram/io.hpp"
#include "volgram/kramers_moyal.hpp"
#include "volgram/langevin_sim.hpp"
#include "volgram/market_data.hpp"
#include "volgram/parallel.hpp"
#include "volgram/plotdata.hpp"
#include "volgram/random.hpp"

namespace volgram::cli {
namespace {

namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Input stream for a path, "-" meaning the given fallback stream.
class Input {
 public:
  Input(const std::string& path, std::istream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw Error(ErrorCode::IoError, "cannot open " + path);
    stream_ = file_.get();
  }
  std::istream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
      std::error_code ec;
      fs::create_directories(parent, ec);
    }
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error(ErrorCode::IoError, "cannot write " + path);
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::IoError, "write failed for " + path_);
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

struct IngestArgs {
  std::string input = "-";
  std::string output = "-";
  std::int64_t window_len = 600;
  bool no_session_filter = false;
  std::size_t min_companies = 50;
  CsvSchema schema;
};

struct FitArgs {
  std::string input = "-";
  std::string output = "-";
  std::vector<std::string> models{"gamma", "inverse-gamma", "log-normal", "weibull"};
  std::string weighting = "none";
  std::string stderr_model = "bridge";
  int max_iterations = 200;
  double step_tolerance = 1e-9;
  std::optional<unsigned> jobs;
};

struct SummaryArgs {
  std::string input = "-";
  std::string output = "-";
  std::size_t hist_bins = 64;
};

struct KmArgs {
  std::string input = "-";
  std::string series;
  std::string output = "-";
  std::string model = "inverse-gamma";
  std::string param = "phi";
  std::size_t n_bins = 50;
  int tau_max = 10;
  int tau_lo = 1;
  int tau_hi = 5;
  int fit_order = 2;
  std::size_t min_count = 100;
  bool no_markov = false;
  std::size_t markov_bins = 20;
  std::size_t markov_lag = 1;
  std::size_t surrogates = 100;
  std::string plot_dir;
  std::string windows;
};

struct MarketArgs {
  std::size_t companies = 2000;
  std::size_t windows = 1000;
  double k = 0.05;
  double phi_f = 0.93;
  double d2 = 1e-6;
  std::optional<double> phi0;
  double theta = 1.0;
  std::int64_t t0 = 1300282800;
  std::int64_t window_len = 600;
  std::string output = "-";
  std::string truth;
};

struct LangevinArgs {
  std::size_t steps = 100000;
  double k = 0.05;
  double fixed_point = 0.93;
  double d2 = 1e-6;
  double dt = 1.0;
  std::optional<double> initial;
  double noise = 0.0;
  std::string output = "-";
};

struct GbmArgs {
  double mu = 0.0;
  double sigma = 0.01;
  double s0 = 1.0;
  double dt = 1.0;
  std::size_t steps = 1000;
  std::string output = "-";
};

struct PipelineArgs {
  std::string input;
  std::string out_dir = ".";
  std::size_t plot_window = 0;
};

struct Logger {
  std::ostream& err;
  bool verbose = false;
  template <class... T>
  void info(const T&... parts) const {
    if (!verbose) return;
    err << "volgram: ";
    (err << ... << parts);
    err << '\n';
  }
};

std::vector<ModelKind> parse_models(const std::vector<std::string>& names) {
  std::vector<ModelKind> models;
  for (const auto& name : names) {
    const auto kind = parse_model_kind(name);
    if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "'");
    if (std::find(models.begin(), models.end(), *kind) == models.end()) models.push_back(*kind);
  }
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "no models requested");
  std::sort(models.begin(), models.end());
  return models;
}

FitOptions fit_options(const FitArgs& a) {
  FitOptions o;
  if (a.weighting == "none") {
    o.weighting = Weighting::None;
  } else if (a.weighting == "tail") {
    o.weighting = Weighting::Tail;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown weighting '" + a.weighting + "'");
  }
  o.error_model = a.stderr_model == "iid" ? ErrorModel::Residual : ErrorModel::Bridge;
  o.max_iterations = a.max_iterations;
  o.step_tolerance = a.step_tolerance;
  return o;
}

FittedParam parse_param(const std::string& name) {
  if (name == "phi") return FittedParam::Phi;
  if (name == "theta") return FittedParam::Theta;
  throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + name + "'");
}

// ---- stages -----------------------------------------------------------------

WindowReport ingest_stage(std::istream& in, const IngestArgs& a, const Logger& log) {
  ParseReport parsed = parse_quotes(in, a.schema);
  log.info("parsed ", parsed.records.size(), " of ", parsed.rows, " rows (", parsed.malformed, " malformed)");
  for (const auto& d : parsed.diagnostics) log.info(d);
  WindowOptions wo;
  wo.window_len = a.window_len;
  wo.session.enabled = !a.no_session_filter;
  wo.min_companies = a.min_companies;
  WindowReport report = build_windows(std::move(parsed.records), wo);
  log.info(report.windows.size(), " windows (", report.excluded_by_session, " outside session, ",
           report.excluded_too_small, " too small)");
  return report;
}

void write_windows(std::ostream& out, const std::vector<SnapshotWindow>& windows) {
  for (const auto& w : windows) out << window_to_json(w) << '\n';
}

// Streams windows through the fitter in batches; returns all fits when
// `keep` is set (pipeline), otherwise only writes them.
std::vector<WindowFits> fit_stage(std::istream& in, std::ostream& out, const FitArgs& a, bool keep,
                                  const Logger& log) {
  const FitOptions options = fit_options(a);
  const std::vector<ModelKind> models = parse_models(a.models);
  const unsigned jobs = resolve_jobs(a.jobs);
  const std::size_t batch_size = std::max<std::size_t>(64, 16 * static_cast<std::size_t>(jobs));
  std::vector<WindowFits> kept;
  std::vector<SnapshotWindow> batch;
  std::size_t line_no = 0;
  std::size_t total = 0;
  auto flush = [&] {
    if (batch.empty()) return;
    std::vector<WindowFits> fits = fit_windows(batch, options, models, jobs);
    for (const auto& f : fits) out << fits_to_json(f) << '\n';
    total += batch.size();
    log.info("fitted ", total, " windows");
    if (keep) std::move(fits.begin(), fits.end(), std::back_inserter(kept));
    batch.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      batch.push_back(window_from_json(line));
    } catch (const Error& e) {
      const std::string what = e.what();
      const auto colon = what.find(": ");
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " +
                                (colon == std::string::npos ? what : what.substr(colon + 2)));
    }
    if (batch.size() >= batch_size) flush();
  }
  flush();
  if (total == 0) throw Error(ErrorCode::EmptyInput, "no windows to fit");
  return kept;
}

void fit_stage_in_memory(const std::vector<SnapshotWindow>& windows, std::ostream& out, const FitArgs& a,
                         std::vector<WindowFits>& fits, const Logger& log) {
  if (windows.empty()) throw Error(ErrorCode::EmptyInput, "no windows to fit");
  const std::vector<ModelKind> models = parse_models(a.models);
  const unsigned jobs = resolve_jobs(a.jobs);
  fits = fit_windows(windows, fit_options(a), models, jobs);
  for (const auto& f : fits) out << fits_to_json(f) << '\n';
  log.info("fitted ", fits.size(), " windows on ", jobs, " worker(s)");
}

ParamSeries read_series_csv(std::istream& in) {
  std::vector<double> times;
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": expected 't,value'");
    }
    try {
      std::size_t used = 0;
      const double t = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      times.push_back(t);
      values.push_back(v);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": not numeric");
    }
  }
  if (times.size() < 2) throw Error(ErrorCode::SeriesTooShort, "series has fewer than 2 points");
  double step = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double d = times[i] - times[i - 1];
    if (d <= 0.0) {
      throw Error(ErrorCode::FormatError, "times not strictly increasing at point " + std::to_string(i));
    }
    if (step == 0.0 || d < step) step = d;
  }
  ParamSeries series = make_param_series(std::move(times), std::move(values), step);
  series.dt = step;
  return series;
}

MarkovOptions markov_options(const KmArgs& a, std::uint64_t seed) {
  MarkovOptions m;
  m.n_bins = a.markov_bins;
  m.lag = a.markov_lag;
  m.n_surrogates = a.surrogates;
  m.seed = seed;
  return m;
}

KmReport km_stage(const ParamSeries& series, const KmArgs& a, std::uint64_t seed, bool with_markov,
                  const Logger& log) {
  KmReport report;
  report.model = parse_model_kind(a.model).value_or(ModelKind::InverseGamma);
  report.param = parse_param(a.param);
  report.n_points = series.values.size();
  report.n_gaps = series.gaps.size();
  report.moment_options.n_bins = a.n_bins;
  report.moment_options.tau_max = a.tau_max;
  report.moment_options.min_count = a.min_count;
  report.km_options.tau_lo = a.tau_lo;
  report.km_options.tau_hi = a.tau_hi;
  report.km_options.fit_order = a.fit_order;
  if (a.tau_hi > a.tau_max) {
    throw Error(ErrorCode::InvalidArgument, "--tau-hi exceeds --tau-max");
  }
  report.moments = conditional_moments(series, report.moment_options);
  report.coefficients = km_estimate(report.moments, report.km_options);
  log.info("km: ", report.coefficients.bins.size(), " bins, fixed point ", report.coefficients.fixed_point);
  if (with_markov) {
    report.markov = markov_test(series, markov_options(a, seed));
    log.info("markov: distance ", report.markov->distance, " threshold ", report.markov->threshold);
  }
  return report;
}

ParamSeries series_for_km(const std::vector<WindowFits>& fits, const KmArgs& a) {
  const auto model = parse_model_kind(a.model);
  if (!model) throw Error(ErrorCode::InvalidArgument, "unknown model '" + a.model + "'");
  return series_from_fits(fits, *model, parse_param(a.param));
}

std::vector<WindowFits> read_fits_file(const std::string& path, std::istream& stdin_stream) {
  Input in(path, stdin_stream);
  return read_fits(in.get());
}

const SnapshotWindow* pick_window(const std::vector<SnapshotWindow>& windows, std::size_t index) {
  if (windows.empty()) return nullptr;
  return &windows[std::min(index, windows.size() - 1)];
}

const WindowFits* matching_fits(const std::vector<WindowFits>& fits, const SnapshotWindow* window) {
  if (window == nullptr) return nullptr;
  for (const auto& f : fits) {
    if (f.window_start == window->window_start) return &f;
  }
  return nullptr;
}

// ---- subcommand bodies ------------------------------------------------------

void cmd_ingest(const IngestArgs& a, std::istream& in_fallback, std::ostream& out_fallback, const Logger& log) {
  Input in(a.input, in_fallback);
  const WindowReport report = ingest_stage(in.get(), a, log);
  Output out(a.output, out_fallback);
  write_windows(out.get(), report.windows);
  out.close();
}

void cmd_fit(const FitArgs& a, std::istream& in_fallback, std::ostream& out_fallback, const Logger& log) {
  Input in(a.input, in_fallback);
  Output out(a.output, out_fallback);
  fit_stage(in.get(), out.get(), a, false, log);
  out.close();
}

void cmd_summary(const SummaryArgs& a, std::istream& in_fallback, std::ostream& out_fallback) {
  const auto fits = read_fits_file(a.input, in_fallback);
  const ErrorSummary summary = error_summary(fits, a.hist_bins);
  Output out(a.output, out_fallback);
  out.get() << summary_to_json(summary) << '\n';
  out.close();
}

ParamSeries km_input_series(const KmArgs& a, std::istream& in_fallback, std::vector<WindowFits>* fits_out) {
  if (!a.series.empty()) {
    Input in(a.series, in_fallback);
    return read_series_csv(in.get());
  }
  auto fits = read_fits_file(a.input, in_fallback);
  ParamSeries series = series_for_km(fits, a);
  if (fits_out != nullptr) *fits_out = std::move(fits);
  return series;
}

void cmd_km(const KmArgs& a, std::uint64_t seed, std::istream& in_fallback, std::ostream& out_fallback,
            const Logger& log) {
  std::vector<WindowFits> fits;
  const ParamSeries series = km_input_series(a, in_fallback, &fits);
  const KmReport report = km_stage(series, a, seed, !a.no_markov, log);
  Output out(a.output, out_fallback);
  out.get() << km_report_to_json(report) << '\n';
  out.close();
  if (!a.plot_dir.empty()) {
    std::vector<SnapshotWindow> windows;
    if (!a.windows.empty()) {
      Input win(a.windows, in_fallback);
      windows = read_windows(win.get());
    }
    PlotInputs plots;
    plots.window = pick_window(windows, 0);
    plots.window_fits = matching_fits(fits, plots.window);
    plots.all_fits = fits;
    plots.km = &report;
    emit_plotdata(a.plot_dir, plots);
  }
}

void cmd_markov(const KmArgs& a, std::uint64_t seed, std::istream& in_fallback, std::ostream& out_fallback) {
  const ParamSeries series = km_input_series(a, in_fallback, nullptr);
  const MarkovOptions options = markov_options(a, seed);
  const MarkovResult result = markov_test(series, options);
  Output out(a.output, out_fallback);
  out.get() << markov_to_json(result, options) << '\n';
  out.close();
}

LangevinSpec ou_spec(double k, double fixed_point, double d2, double initial, std::size_t steps, double dt,
                     std::uint64_t seed) {
  LangevinSpec spec;
  spec.drift = AffineDrift{k, fixed_point};
  spec.diffusion = d2;
  spec.dt = dt;
  spec.n_steps = steps;
  spec.initial = initial;
  spec.seed = seed;
  return spec;
}

void cmd_simulate_market(const MarketArgs& a, std::uint64_t seed, std::ostream& out_fallback, const Logger& log) {
  const MarketLayout layout{a.t0, a.window_len};
  const LangevinSpec phi_process =
      ou_spec(a.k, a.phi_f, a.d2, a.phi0.value_or(a.phi_f), 1, 1.0, derive_seed(seed, 0));
  const ParamSeries phi = market_phi_path(a.windows, phi_process, layout);
  Output out(a.output, out_fallback);
  out.get() << std::setprecision(17);
  for (std::size_t w = 0; w < a.windows; ++w) {
    out.get() << window_to_json(market_window(w, phi.values[w], a.companies, a.theta, seed, layout)) << '\n';
    if ((w + 1) % 1000 == 0) log.info("simulated ", w + 1, " windows");
  }
  out.close();
  if (!a.truth.empty()) {
    Output truth(a.truth, out_fallback);
    truth.get() << std::setprecision(17) << "window_start,phi\n";
    for (std::size_t w = 0; w < a.windows; ++w) {
      truth.get() << static_cast<std::int64_t>(phi.times[w]) << ',' << phi.values[w] << '\n';
    }
    truth.close();
  }
}

void cmd_simulate_langevin(const LangevinArgs& a, std::uint64_t seed, std::ostream& out_fallback) {
  ParamSeries series = simulate_langevin(
      ou_spec(a.k, a.fixed_point, a.d2, a.initial.value_or(a.fixed_point), a.steps, a.dt, derive_seed(seed, 0)));
  if (a.noise > 0.0) series = add_measurement_noise(series, a.noise, derive_seed(seed, 1));
  Output out(a.output, out_fallback);
  out.get() << std::setprecision(17) << "t,value\n";
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    out.get() << series.times[i] << ',' << series.values[i] << '\n';
  }
  out.close();
}

void cmd_simulate_gbm(const GbmArgs& a, std::uint64_t seed, std::ostream& out_fallback) {
  const std::vector<double> prices = simulate_gbm({a.mu, a.sigma, a.s0, a.dt, a.steps, derive_seed(seed, 0)});
  Output out(a.output, out_fallback);
  out.get() << std::setprecision(17) << "t,price\n";
  for (std::size_t i = 0; i < prices.size(); ++i) {
    out.get() << static_cast<double>(i) * a.dt << ',' << prices[i] << '\n';
  }
  out.close();
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int cmd_pipeline(const PipelineArgs& p, const IngestArgs& ingest, const FitArgs& fit, const SummaryArgs& summary,
                 const KmArgs& km, std::uint64_t seed, std::istream& in_fallback, std::ostream& err,
                 const Logger& log) {
  const fs::path dir(p.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<SnapshotWindow> windows;
  {
    Input in(p.input, in_fallback);
    if (has_suffix(p.input, ".csv")) {
      windows = ingest_stage(in.get(), ingest, log).windows;
      Output out((dir / "windows.jsonl").string(), err);
      write_windows(out.get(), windows);
      out.close();
    } else {
      windows = read_windows(in.get());
    }
  }

  std::vector<WindowFits> fits;
  {
    Output out((dir / "fits.jsonl").string(), err);
    fit_stage_in_memory(windows, out.get(), fit, fits, log);
    out.close();
  }

  PlotInputs plots;
  plots.window = pick_window(windows, p.plot_window);
  plots.window_fits = matching_fits(fits, plots.window);
  plots.all_fits = fits;

  // Later stages may fail on small inputs; plot files are still written
  // from whatever completed and the first error decides the exit code.
  std::optional<Error> failure;
  std::optional<ErrorSummary> summary_result;
  try {
    summary_result = error_summary(fits, summary.hist_bins);
    Output out((dir / "summary.json").string(), err);
    out.get() << summary_to_json(*summary_result) << '\n';
    out.close();
    plots.summary = &*summary_result;
  } catch (const Error& e) {
    failure = e;
  }

  std::optional<KmReport> km_report;
  if (!failure) {
    try {
      km_report = km_stage(series_for_km(fits, km), km, seed, !km.no_markov, log);
      Output out((dir / "km.json").string(), err);
      out.get() << km_report_to_json(*km_report) << '\n';
      out.close();
      plots.km = &*km_report;
    } catch (const Error& e) {
      failure = e;
    }
  }

  emit_plotdata(dir / "plots", plots);
  if (failure) throw *failure;
  return 0;
}

int exit_code_for(const Error& e) {
  switch (category(e.code())) {
    case ErrorCategory::Usage:
      return kExitUsage;
    case ErrorCategory::Numerical:
      return kExitNumerical;
    case ErrorCategory::Data:
      break;
  }
  return kExitData;
}

// ---- option registration ----------------------------------------------------

void add_ingest_options(CLI::App& app, IngestArgs& a, bool with_io) {
  if (with_io) {
    app.add_option("-i,--input", a.input, "Quote CSV ('-' for stdin)");
    app.add_option("-o,--output", a.output, "Windows JSON-lines ('-' for stdout)");
  }
  app.add_option("--window-len", a.window_len, "Window length in seconds")->check(CLI::PositiveNumber);
  app.add_flag("--no-session-filter", a.no_session_filter, "Keep windows outside 09:30-16:00 US/Eastern");
  app.add_option("--min-companies", a.min_companies, "Drop windows with fewer companies");
  app.add_option("--col-timestamp", a.schema.timestamp, "Timestamp column name");
  app.add_option("--col-symbol", a.schema.symbol, "Symbol column name");
  app.add_option("--col-price", a.schema.last_price, "Last price column name");
  app.add_option("--col-volume", a.schema.volume, "Volume column name");
}

void add_fit_options(CLI::App& app, FitArgs& a, bool with_io) {
  if (with_io) {
    app.add_option("-i,--input", a.input, "Windows JSON-lines ('-' for stdin)");
    app.add_option("-o,--output", a.output, "Fits JSON-lines ('-' for stdout)");
  }
  app.add_option("--models", a.models, "Comma-separated models")->delimiter(',');
  app.add_option("--weighting", a.weighting, "Residual weighting")->check(CLI::IsMember({"none", "tail"}));
  app.add_option("--stderr", a.stderr_model, "Standard errors: bridge (ECDF covariance) or iid (residual variance)")
      ->check(CLI::IsMember({"bridge", "iid"}));
  app.add_option("--max-iterations", a.max_iterations, "Iteration cap per fit")->check(CLI::PositiveNumber);
  app.add_option("--step-tol", a.step_tolerance, "Relative step tolerance")->check(CLI::PositiveNumber);
  app.add_option("-j,--jobs", a.jobs, "Worker threads (default: VOLGRAM_JOBS or hardware)")
      ->check(CLI::PositiveNumber);
}

void add_km_options(CLI::App& app, KmArgs& a, bool moments) {
  app.add_option("--model", a.model, "Model whose parameter series is analysed")
      ->check(CLI::IsMember({"gamma", "inverse-gamma", "log-normal", "weibull"}));
  app.add_option("--param", a.param, "Fitted parameter")->check(CLI::IsMember({"phi", "theta"}));
  app.add_option("--markov-bins", a.markov_bins, "Bins per axis in the Markov test")->check(CLI::PositiveNumber);
  app.add_option("--markov-lag", a.markov_lag, "Step between the three points")->check(CLI::PositiveNumber);
  app.add_option("--surrogates", a.surrogates, "Surrogate count")->check(CLI::PositiveNumber);
  if (!moments) return;
  app.add_option("--bins", a.n_bins, "Number of value bins")->check(CLI::PositiveNumber);
  app.add_option("--tau-max", a.tau_max, "Largest lag of the conditional moments")->check(CLI::PositiveNumber);
  app.add_option("--tau-lo", a.tau_lo, "First lag of the tau fit")->check(CLI::PositiveNumber);
  app.add_option("--tau-hi", a.tau_hi, "Last lag of the tau fit")->check(CLI::PositiveNumber);
  app.add_option("--fit-order", a.fit_order, "Polynomial degree in tau")->check(CLI::Range(1, 2));
  app.add_option("--min-count", a.min_count, "Minimum increments per reported bin")->check(CLI::PositiveNumber);
  app.add_flag("--no-markov", a.no_markov, "Skip the Markov test");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution fitting and Kramers-Moyal analysis of volume-price windows", "volgram"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  bool verbose = false;
  app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");
  // Global options may also follow the subcommand.
  auto global = [&](CLI::App* sub) {
    sub->fallthrough();
  };

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Quote CSV to normalized windows");
  add_ingest_options(*ingest_cmd, ingest, true);
  global(ingest_cmd);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the models to every window");
  add_fit_options(*fit_cmd, fit, true);
  global(fit_cmd);

  SummaryArgs summary;
  auto* summary_cmd = app.add_subcommand("summary", "Relative-error statistics of fits");
  summary_cmd->add_option("-i,--input", summary.input, "Fits JSON-lines");
  summary_cmd->add_option("-o,--output", summary.output, "Summary JSON");
  summary_cmd->add_option("--hist-bins", summary.hist_bins, "Histogram bins")->check(CLI::PositiveNumber);
  global(summary_cmd);

  KmArgs km;
  auto* km_cmd = app.add_subcommand("km", "Drift and diffusion of a fitted-parameter series");
  km_cmd->add_option("-i,--input", km.input, "Fits JSON-lines");
  km_cmd->add_option("--series", km.series, "CSV series 't,value' instead of fits");
  km_cmd->add_option("-o,--output", km.output, "KM report JSON");
  km_cmd->add_option("--plot-dir", km.plot_dir, "Also write plot-data CSVs here");
  km_cmd->add_option("--windows", km.windows, "Windows JSON-lines for cdf-fit.csv");
  add_km_options(*km_cmd, km, true);
  global(km_cmd);

  KmArgs markov;
  auto* markov_cmd = app.add_subcommand("markov", "Markov-property test of a fitted-parameter series");
  markov_cmd->add_option("-i,--input", markov.input, "Fits JSON-lines");
  markov_cmd->add_option("--series", markov.series, "CSV series 't,value' instead of fits");
  markov_cmd->add_option("-o,--output", markov.output, "Result JSON");
  add_km_options(*markov_cmd, markov, false);
  global(markov_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Synthetic data with known parameters");
  sim_cmd->require_subcommand(1);
  global(sim_cmd);

  MarketArgs market;
  auto* market_cmd = sim_cmd->add_subcommand("market", "Inverse-Gamma windows driven by an OU tail parameter");
  market_cmd->add_option("--companies", market.companies, "Companies per window")->check(CLI::PositiveNumber);
  market_cmd->add_option("--windows", market.windows, "Number of windows")->check(CLI::PositiveNumber);
  market_cmd->add_option("--k", market.k, "Mean-reversion rate")->check(CLI::NonNegativeNumber);
  market_cmd->add_option("--phi-f", market.phi_f, "Fixed point of phi")->check(CLI::PositiveNumber);
  market_cmd->add_option("--d2", market.d2, "Diffusion of phi")->check(CLI::NonNegativeNumber);
  market_cmd->add_option("--phi0", market.phi0, "Initial phi (default: fixed point)")->check(CLI::PositiveNumber);
  market_cmd->add_option("--theta", market.theta, "Inverse-Gamma scale")->check(CLI::PositiveNumber);
  market_cmd->add_option("--t0", market.t0, "First window start (epoch seconds)");
  market_cmd->add_option("--window-len", market.window_len, "Window length in seconds")
      ->check(CLI::PositiveNumber);
  market_cmd->add_option("-o,--output", market.output, "Windows JSON-lines");
  market_cmd->add_option("--truth", market.truth, "CSV of the generating phi per window");
  global(market_cmd);

  LangevinArgs langevin;
  auto* langevin_cmd = sim_cmd->add_subcommand("langevin", "OU trajectory with optional measurement noise");
  langevin_cmd->add_option("--steps", langevin.steps, "Number of steps")->check(CLI::PositiveNumber);
  langevin_cmd->add_option("--k", langevin.k, "Mean-reversion rate")->check(CLI::NonNegativeNumber);
  langevin_cmd->add_option("--fixed-point", langevin.fixed_point, "Drift zero");
  langevin_cmd->add_option("--d2", langevin.d2, "Diffusion coefficient")->check(CLI::NonNegativeNumber);
  langevin_cmd->add_option("--dt", langevin.dt, "Time step")->check(CLI::PositiveNumber);
  langevin_cmd->add_option("--initial", langevin.initial, "Initial value (default: fixed point)");
  langevin_cmd->add_option("--noise", langevin.noise, "Measurement-noise sigma")->check(CLI::NonNegativeNumber);
  langevin_cmd->add_option("-o,--output", langevin.output, "CSV 't,value'");
  global(langevin_cmd);

  GbmArgs gbm;
  auto* gbm_cmd = sim_cmd->add_subcommand("gbm", "Geometric Brownian motion price path");
  gbm_cmd->add_option("--mu", gbm.mu, "Drift");
  gbm_cmd->add_option("--sigma", gbm.sigma, "Volatility")->check(CLI::NonNegativeNumber);
  gbm_cmd->add_option("--s0", gbm.s0, "Initial price")->check(CLI::PositiveNumber);
  gbm_cmd->add_option("--dt", gbm.dt, "Time step")->check(CLI::PositiveNumber);
  gbm_cmd->add_option("--steps", gbm.steps, "Number of steps")->check(CLI::PositiveNumber);
  gbm_cmd->add_option("-o,--output", gbm.output, "CSV 't,price'");
  global(gbm_cmd);

  PipelineArgs pipeline;
  IngestArgs p_ingest;
  FitArgs p_fit;
  SummaryArgs p_summary;
  KmArgs p_km;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "ingest, fit, summary, km and markov in one pass");
  pipeline_cmd->add_option("-i,--input", pipeline.input, "Quote CSV (.csv) or windows JSON-lines")->required();
  pipeline_cmd->add_option("--out-dir", pipeline.out_dir, "Output directory");
  pipeline_cmd->add_option("--plot-window", pipeline.plot_window, "Index of the window shown in cdf-fit.csv");
  pipeline_cmd->add_option("--hist-bins", p_summary.hist_bins, "Histogram bins")->check(CLI::PositiveNumber);
  add_ingest_options(*pipeline_cmd, p_ingest, false);
  add_fit_options(*pipeline_cmd, p_fit, false);
  add_km_options(*pipeline_cmd, p_km, true);
  global(pipeline_cmd);

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::Success&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const Logger log{err, verbose};
  try {
    if (ingest_cmd->parsed()) {
      cmd_ingest(ingest, std::cin, out, log);
    } else if (fit_cmd->parsed()) {
      cmd_fit(fit, std::cin, out, log);
    } else if (summary_cmd->parsed()) {
      cmd_summary(summary, std::cin, out);
    } else if (km_cmd->parsed()) {
      cmd_km(km, seed, std::cin, out, log);
    } else if (markov_cmd->parsed()) {
      cmd_markov(markov, seed, std::cin, out);
    } else if (market_cmd->parsed()) {
      cmd_simulate_market(market, seed, out, log);
    } else if (langevin_cmd->parsed()) {
      cmd_simulate_langevin(langevin, seed, out);
    } else if (gbm_cmd->parsed()) {
      cmd_simulate_gbm(gbm, seed, out);
    } else if (pipeline_cmd->parsed()) {
      return cmd_pipeline(pipeline, p_ingest, p_fit, p_summary, p_km, seed, std::cin, err, log);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}

}  // namespace volgram::cli
