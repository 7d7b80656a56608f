#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "volgram/fitting.hpp"
#include "volgram/kramers_moyal.hpp"
#include "volgram/market_data.hpp"

namespace volgram {

inline constexpr int kFormatVersion = 1;

// JSON-lines records. Every record carries "format_version": 1; readers
// reject other versions with FormatError.

std::string window_to_json(const SnapshotWindow& window);
SnapshotWindow window_from_json(std::string_view line);

std::string fits_to_json(const WindowFits& fits);
WindowFits fits_from_json(std::string_view line);

/// Reads all non-blank lines; FormatError names the offending line.
std::vector<SnapshotWindow> read_windows(std::istream& in);
std::vector<WindowFits> read_fits(std::istream& in);

std::string summary_to_json(const ErrorSummary& summary);

enum class FittedParam { Phi, Theta };

/// KM stage output: moments, coefficients and optional Markov check for one
/// fitted parameter of one model.
struct KmReport {
  ModelKind model = ModelKind::InverseGamma;
  FittedParam param = FittedParam::Phi;
  std::size_t n_points = 0;
  std::size_t n_gaps = 0;
  MomentOptions moment_options;
  KmOptions km_options;
  ConditionalMoments moments;
  KMCoefficients coefficients;
  std::optional<MarkovResult> markov;
};

std::string km_report_to_json(const KmReport& report);
std::string markov_to_json(const MarkovResult& result, const MarkovOptions& options);

/// Series of a fitted parameter over windows. Windows where the model was
/// not fitted or did not converge are dropped and leave a gap.
ParamSeries series_from_fits(std::span<const WindowFits> fits, ModelKind model, FittedParam param);

}  // namespace volgram
