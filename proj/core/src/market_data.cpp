#include "volgram/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "volgram/error.hpp"

namespace volgram {
namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return sys_days{year{y} / month{m} / day{d}}.time_since_epoch().count();
}

// Day of month of the n-th (1-based) Sunday of a month; n = 0 means the last one.
unsigned nth_sunday(int y, unsigned m, unsigned n) {
  using namespace std::chrono;
  if (n == 0) {
    const year_month_weekday_last ld{year{y} / month{m} / Sunday[last]};
    return static_cast<unsigned>(year_month_day{sys_days{ld}}.day());
  }
  const year_month_weekday wd{year{y} / month{m} / Sunday[n]};
  return static_cast<unsigned>(year_month_day{sys_days{wd}}.day());
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;

  if (text.find('-', 1) == std::string_view::npos && text.find('T') == std::string_view::npos) {
    auto v = parse_double(text);
    if (!v) return std::nullopt;
    return static_cast<std::int64_t>(std::floor(*v));
  }

  // YYYY-MM-DD[T ]hh:mm[:ss[.fff]][Z|±hh[:mm]]
  if (text.size() < 16) return std::nullopt;
  int y = 0;
  unsigned mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    return std::nullopt;
  }
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), hh) ||
      !parse_int(text.substr(14, 2), mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (pos + 3 > text.size() || !parse_int(text.substr(pos + 1, 2), ss)) return std::nullopt;
    pos += 3;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
  }
  std::int64_t offset = 0;
  if (pos < text.size()) {
    const std::string_view zone = text.substr(pos);
    if (zone == "Z") {
      offset = 0;
    } else if ((zone[0] == '+' || zone[0] == '-') && zone.size() >= 3) {
      unsigned oh = 0, om = 0;
      if (!parse_int(zone.substr(1, 2), oh)) return std::nullopt;
      std::string_view rest = zone.substr(3);
      if (!rest.empty() && rest[0] == ':') rest.remove_prefix(1);
      if (!rest.empty() && !parse_int(rest, om)) return std::nullopt;
      offset = (zone[0] == '+' ? 1 : -1) * static_cast<std::int64_t>(oh * 3600 + om * 60);
    } else {
      return std::nullopt;
    }
  }
  using namespace std::chrono;
  if (!year_month_day{year{y} / month{mo} / day{d}}.ok() || hh > 23 || mi > 59 || ss > 60) {
    return std::nullopt;
  }
  return days_from_civil(y, mo, d) * 86400 + hh * 3600 + mi * 60 + ss - offset;
}

std::int64_t us_eastern_offset(std::int64_t utc_seconds) {
  using namespace std::chrono;
  constexpr std::int64_t kStandard = -5 * 3600;
  constexpr std::int64_t kDaylight = -4 * 3600;
  const auto day_count = static_cast<int>(std::floor(static_cast<double>(utc_seconds) / 86400.0));
  const int y = static_cast<int>(year_month_day{sys_days{days{day_count}}}.year());
  // Since 2007: second Sunday of March to first Sunday of November.
  // 1987-2006: first Sunday of April to last Sunday of October. 02:00 local both ends.
  unsigned start_month = 3, start_day = 0, end_month = 11, end_day = 0;
  if (y >= 2007) {
    start_day = nth_sunday(y, 3, 2);
    end_day = nth_sunday(y, 11, 1);
  } else {
    start_month = 4;
    start_day = nth_sunday(y, 4, 1);
    end_month = 10;
    end_day = nth_sunday(y, 10, 0);
  }
  const std::int64_t dst_start = days_from_civil(y, start_month, start_day) * 86400 + 2 * 3600 - kStandard;
  const std::int64_t dst_end = days_from_civil(y, end_month, end_day) * 86400 + 2 * 3600 - kDaylight;
  return (utc_seconds >= dst_start && utc_seconds < dst_end) ? kDaylight : kStandard;
}

bool SessionFilter::contains(std::int64_t window_start) const {
  if (!enabled) return true;
  const std::int64_t local = window_start + us_eastern_offset(window_start);
  std::int64_t minute = (local % 86400 + 86400) % 86400 / 60;
  return minute >= open_minute && minute < close_minute;
}

ParseReport parse_quotes(std::istream& in, const CsvSchema& schema) {
  ParseReport report;
  std::string line;
  if (!std::getline(in, line)) return report;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw Error(ErrorCode::MissingColumn, "required column '" + name + "' not in header");
  };
  const std::size_t c_ts = column(schema.timestamp);
  const std::size_t c_sym = column(schema.symbol);
  const std::size_t c_price = column(schema.last_price);
  const std::size_t c_vol = column(schema.volume);
  const std::size_t needed = std::max({c_ts, c_sym, c_price, c_vol}) + 1;

  std::size_t line_no = 1;
  auto reject = [&](const std::string& why) {
    ++report.malformed;
    if (report.diagnostics.size() < 20) {
      report.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++report.rows;
    const auto fields = split_csv_line(line);
    if (fields.size() < needed) {
      reject("expected at least " + std::to_string(needed) + " fields");
      continue;
    }
    const auto ts = parse_timestamp(fields[c_ts]);
    const auto price = parse_double(fields[c_price]);
    const auto volume = parse_double(fields[c_vol]);
    const std::string_view symbol = trim(fields[c_sym]);
    if (!ts) {
      reject("bad timestamp");
    } else if (symbol.empty()) {
      reject("empty symbol");
    } else if (!price || !(*price > 0.0)) {
      reject("last_price must be > 0");
    } else if (!volume || !(*volume >= 0.0)) {
      reject("volume must be >= 0");
    } else {
      report.records.push_back({*ts, std::string(symbol), *price, *volume});
    }
  }
  if (report.rows > 0 && 2 * report.malformed > report.rows) {
    throw Error(ErrorCode::TooManyMalformed, std::to_string(report.malformed) + " of " +
                                                 std::to_string(report.rows) + " rows malformed");
  }
  return report;
}

SnapshotWindow make_window(std::int64_t window_start, std::int64_t window_len,
                           std::vector<double> volume_prices) {
  SnapshotWindow w;
  w.window_start = window_start;
  w.window_len = window_len;
  w.n_companies = volume_prices.size();
  if (volume_prices.empty()) return w;
  const double n = static_cast<double>(volume_prices.size());
  double mean = 0.0;
  for (double s : volume_prices) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : volume_prices) var += (s - mean) * (s - mean);
  w.mean_s = mean;
  w.std_s = std::sqrt(var / n);
  for (double& s : volume_prices) s /= mean;
  w.samples = std::move(volume_prices);
  return w;
}

WindowReport build_windows(std::vector<QuoteRecord> records, const WindowOptions& options) {
  if (options.window_len <= 0) {
    throw Error(ErrorCode::InvalidArgument, "window_len must be > 0");
  }
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no quote records");

  std::stable_sort(records.begin(), records.end(),
                   [](const QuoteRecord& a, const QuoteRecord& b) { return a.timestamp < b.timestamp; });

  auto floor_div = [](std::int64_t a, std::int64_t b) {
    return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
  };

  WindowReport report;
  std::size_t i = 0;
  while (i < records.size()) {
    const std::int64_t start = floor_div(records[i].timestamp, options.window_len) * options.window_len;
    const std::int64_t end = start + options.window_len;
    std::map<std::string, double> last;  // symbol -> s of its latest record
    for (; i < records.size() && records[i].timestamp < end; ++i) {
      last[records[i].symbol] = records[i].last_price * records[i].volume;
    }
    if (!options.session.contains(start)) {
      ++report.excluded_by_session;
      continue;
    }
    std::vector<double> s;
    s.reserve(last.size());
    for (const auto& [symbol, value] : last) {
      if (value > 0.0) s.push_back(value);
    }
    if (s.empty() || s.size() < options.min_companies) {
      ++report.excluded_too_small;
      continue;
    }
    report.windows.push_back(make_window(start, options.window_len, std::move(s)));
  }
  if (report.windows.empty()) {
    throw Error(ErrorCode::AllWindowsFiltered,
                std::to_string(report.excluded_by_session) + " windows outside session, " +
                    std::to_string(report.excluded_too_small) + " below min_companies");
  }
  return report;
}

}  // namespace volgram
