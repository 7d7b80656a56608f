#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace volgram {

/// One company's quote snapshot.
struct QuoteRecord {
  std::int64_t timestamp = 0;  // UTC seconds since epoch
  std::string symbol;
  double last_price = 0.0;  // > 0
  double volume = 0.0;      // >= 0
};

/// Column names for the four required fields. Extra columns are ignored.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string symbol = "symbol";
  std::string last_price = "last_price";
  std::string volume = "volume";
};

struct ParseReport {
  std::vector<QuoteRecord> records;
  std::size_t rows = 0;        // data rows seen (header excluded)
  std::size_t malformed = 0;   // rows rejected
  std::vector<std::string> diagnostics;  // first few rejection reasons, "line N: ..."
};

/// Reads header + rows. Throws MissingColumn, or TooManyMalformed when more
/// than half the data rows are rejected.
ParseReport parse_quotes(std::istream& in, const CsvSchema& schema = {});

/// ISO-8601 ("2011-03-16T09:40:00Z", optional fraction, "Z"/"±hh:mm" or no
/// zone meaning UTC) or epoch seconds.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Offset of US/Eastern local time from UTC at the given instant, in seconds
/// (-14400 under daylight time, -18000 otherwise).
std::int64_t us_eastern_offset(std::int64_t utc_seconds);

/// Cross-sectional volume-prices of one window, normalized to unit mean.
struct SnapshotWindow {
  std::int64_t window_start = 0;
  std::int64_t window_len = 600;
  std::vector<double> samples;  // s / <s>, ordered by symbol
  double mean_s = 0.0;          // <s>
  double std_s = 0.0;           // population std of raw s
  std::size_t n_companies = 0;

  friend bool operator==(const SnapshotWindow&, const SnapshotWindow&) = default;
};

/// Regular-session filter on window start, in US/Eastern minutes after midnight.
struct SessionFilter {
  bool enabled = true;
  int open_minute = 9 * 60 + 30;
  int close_minute = 16 * 60;

  bool contains(std::int64_t window_start) const;
};

struct WindowOptions {
  std::int64_t window_len = 600;
  SessionFilter session;
  std::size_t min_companies = 50;
};

struct WindowReport {
  std::vector<SnapshotWindow> windows;
  std::size_t excluded_by_session = 0;
  std::size_t excluded_too_small = 0;
};

/// Groups records into [start, start + window_len) windows aligned to the
/// epoch, keeps each symbol's last record, drops zero-volume entries and
/// normalizes by the window mean. Throws EmptyInput or AllWindowsFiltered.
WindowReport build_windows(std::vector<QuoteRecord> records, const WindowOptions& options = {});

/// Window from raw volume-prices (all > 0), used by the simulators.
SnapshotWindow make_window(std::int64_t window_start, std::int64_t window_len,
                           std::vector<double> volume_prices);

}  // namespace volgram
