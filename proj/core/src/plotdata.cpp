#include "volgram/plotdata.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "volgram/error.hpp"

namespace volgram {
namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void cell(std::ostream& out, double v) {
  if (std::isfinite(v)) out << v;
}

void write_cdf_fit(const std::filesystem::path& dir, const PlotInputs& in) {
  const auto path = dir / "cdf-fit.csv";
  auto out = open_csv(path);
  out << "s,F_emp";
  for (ModelKind k : kAllModels) out << ',' << to_string(k);
  out << '\n';
  if (in.window != nullptr && !in.window->samples.empty()) {
    const EmpiricalCDF ecdf = empirical_cdf(in.window->samples, 1);
    for (std::size_t i = 0; i < ecdf.s.size(); ++i) {
      out << ecdf.s[i] << ',' << ecdf.F[i];
      for (ModelKind k : kAllModels) {
        out << ',';
        if (in.window_fits == nullptr) continue;
        const auto& r = (*in.window_fits)[k];
        if (r && r->converged) cell(out, cdf(r->params, ecdf.s[i]));
      }
      out << '\n';
    }
  }
  finish(out, path);
}

void write_param_series(const std::filesystem::path& dir, const PlotInputs& in) {
  const auto path = dir / "param-series.csv";
  auto out = open_csv(path);
  out << "window_start";
  for (ModelKind k : kAllModels) out << ',' << to_string(k) << "_phi," << to_string(k) << "_theta";
  out << '\n';
  for (const WindowFits& w : in.all_fits) {
    out << w.window_start;
    for (ModelKind k : kAllModels) {
      out << ',';
      const auto& r = w[k];
      if (r && r->converged) {
        cell(out, r->params.phi);
        out << ',';
        cell(out, r->params.theta);
      } else {
        out << ',';
      }
    }
    out << '\n';
  }
  finish(out, path);
}

void write_relerr_hist(const std::filesystem::path& dir, const PlotInputs& in) {
  const auto path = dir / "relerr-hist.csv";
  auto out = open_csv(path);
  out << "bin,phi_center";
  for (ModelKind k : kAllModels) out << ",phi_" << to_string(k);
  out << ",theta_center";
  for (ModelKind k : kAllModels) out << ",theta_" << to_string(k);
  out << '\n';
  if (in.summary != nullptr && !in.summary->models.empty()) {
    const auto& first = in.summary->models.front();
    const std::size_t n_bins = first.phi_hist.density.size();
    auto find = [&](ModelKind k) -> const ModelErrorSummary* {
      for (const auto& m : in.summary->models) {
        if (m.kind == k) return &m;
      }
      return nullptr;
    };
    auto center = [n_bins](const Histogram& h, std::size_t b) {
      return h.lo + (static_cast<double>(b) + 0.5) * (h.hi - h.lo) / static_cast<double>(n_bins);
    };
    for (std::size_t b = 0; b < n_bins; ++b) {
      out << b << ',' << center(first.phi_hist, b);
      for (ModelKind k : kAllModels) {
        out << ',';
        if (const auto* m = find(k)) cell(out, m->phi_hist.density[b]);
      }
      out << ',' << center(first.theta_hist, b);
      for (ModelKind k : kAllModels) {
        out << ',';
        if (const auto* m = find(k)) cell(out, m->theta_hist.density[b]);
      }
      out << '\n';
    }
  }
  finish(out, path);
}

void write_moments(const std::filesystem::path& dir, const PlotInputs& in) {
  const auto path = dir / "moments-vs-tau.csv";
  auto out = open_csv(path);
  out << "bin_center,tau,count,M1,M2\n";
  if (in.km != nullptr) {
    const auto& m = in.km->moments;
    for (std::size_t b = 0; b < m.centers.size(); ++b) {
      for (int tau = 1; tau <= m.tau_max; ++tau) {
        const auto k = static_cast<std::size_t>(tau - 1);
        out << m.centers[b] << ',' << tau << ',' << m.counts[b][k] << ',' << m.m1[b][k] << ',' << m.m2[b][k]
            << '\n';
      }
    }
  }
  finish(out, path);
}

void write_drift_diffusion(const std::filesystem::path& dir, const PlotInputs& in) {
  const auto path = dir / "drift-diffusion.csv";
  auto out = open_csv(path);
  out << "center,count,D1,D2,D2_raw,a1,a2,d2_clipped\n";
  if (in.km != nullptr) {
    for (const auto& c : in.km->coefficients.bins) {
      out << c.center << ',' << c.count << ',' << c.d1 << ',' << c.d2 << ',' << c.d2_raw << ',' << c.a1 << ','
          << c.a2 << ',' << (c.d2_clipped ? 1 : 0) << '\n';
    }
  }
  finish(out, path);
}

}  // namespace

void emit_plotdata(const std::filesystem::path& dir, const PlotInputs& inputs) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_cdf_fit(dir, inputs);
  write_param_series(dir, inputs);
  write_relerr_hist(dir, inputs);
  write_moments(dir, inputs);
  write_drift_diffusion(dir, inputs);
}

}  // namespace volgram
