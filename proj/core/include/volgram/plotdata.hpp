#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include "volgram/fitting.hpp"
#include "volgram/io.hpp"
#include "volgram/market_data.hpp"

namespace volgram {

// Plot-data CSV files. Headers are fixed; a missing input yields a
// header-only file.
//
//   cdf-fit.csv          s,F_emp,gamma,inverse-gamma,log-normal,weibull
//   param-series.csv     window_start,<model>_phi,<model>_theta for each model
//   relerr-hist.csv      bin,phi_center,phi_<model>...,theta_center,theta_<model>...
//   moments-vs-tau.csv   bin_center,tau,count,M1,M2
//   drift-diffusion.csv  center,count,D1,D2,D2_raw,a1,a2,d2_clipped

struct PlotInputs {
  const SnapshotWindow* window = nullptr;  // window shown in cdf-fit.csv
  const WindowFits* window_fits = nullptr;
  std::span<const WindowFits> all_fits;
  const ErrorSummary* summary = nullptr;
  const KmReport* km = nullptr;
};

/// Writes all five files into `dir` (created if needed). Throws IoError.
void emit_plotdata(const std::filesystem::path& dir, const PlotInputs& inputs);

}  // namespace volgram
