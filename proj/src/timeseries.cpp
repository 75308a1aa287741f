#include "anomalycd/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "anomalycd/error.hpp"

namespace anomalycd::ts {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    if (!line.empty()) lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, long long& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  pos += count;
  return true;
}

std::optional<double> parse_iso8601(std::string_view s) {
  std::size_t pos = 0;
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!read_digits(s, pos, 4, year) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_digits(s, pos, 2, month) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_digits(s, pos, 2, day)) return std::nullopt;
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
  double frac = 0.0;
  int offset_seconds = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!read_digits(s, pos, 2, hour) || pos >= s.size() || s[pos++] != ':') return std::nullopt;
    if (!read_digits(s, pos, 2, minute)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!read_digits(s, pos, 2, second)) return std::nullopt;
      if (pos < s.size() && s[pos] == '.') {
        const std::size_t start = pos;
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        auto f = parse_number(std::string("0") + std::string(s.substr(start, pos - start)));
        if (!f) return std::nullopt;
        frac = *f;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh = 0, om = 0;
        if (!read_digits(s, pos, 2, oh)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (!read_digits(s, pos, 2, om)) return std::nullopt;
        offset_seconds = sign * (oh * 3600 + om * 60);
      }
    }
    if (pos != s.size() || hour > 23 || minute > 59 || second > 60) return std::nullopt;
  }
  const long long days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  const double t = static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second + frac;
  return t - offset_seconds;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.remove_prefix(3);  // UTF-8 BOM
  auto lines = split_lines(text);
  if (lines.empty()) throw InputError("csv: missing header row");
  RawTable table;
  table.header = split_csv_line(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != table.header.size()) {
      throw InputError("csv: row " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

std::size_t find_column(const RawTable& table, std::string_view name) {
  auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) throw InputError("csv: no timestamp column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - table.header.begin());
}

std::pair<std::vector<double>, TimeFormat> parse_time_column(const RawTable& table, std::size_t col) {
  std::vector<double> ts;
  ts.reserve(table.rows.size());
  TimeFormat format = TimeFormat::Index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto parsed = parse_timestamp(table.rows[r][col]);
    if (!parsed) throw InputError("csv: unparseable timestamp '" + table.rows[r][col] + "' at row " + std::to_string(r + 1));
    if (r == 0) format = parsed->second;
    ts.push_back(parsed->first);
    if (r > 0 && !(ts[r] > ts[r - 1])) {
      throw InputError("csv: timestamps not strictly increasing at row " + std::to_string(r + 1));
    }
  }
  return {std::move(ts), format};
}

double infer_interval(const std::vector<double>& ts) {
  if (ts.size() < 2) return 1.0;
  std::vector<double> diffs(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) diffs[i - 1] = ts[i] - ts[i - 1];
  std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
  return diffs[diffs.size() / 2];
}

}  // namespace

void TimeFrame::validate() const {
  if (!(interval > 0.0)) throw InputError("frame: interval must be positive");
  if (values.size() != channels.size()) throw InputError("frame: channel/value count mismatch");
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (!seen.insert(c).second) throw InputError("frame: duplicate channel '" + c + "'");
  }
  for (const auto& v : values) {
    if (v.size() != timestamps.size()) throw InputError("frame: channel length differs from timestamp count");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) throw InputError("frame: timestamps not strictly increasing");
  }
  if (!timestamps.empty() && (segment_starts.empty() || segment_starts.front() != 0)) {
    throw InputError("frame: first segment must start at row 0");
  }
  for (std::size_t i = 1; i < segment_starts.size(); ++i) {
    if (segment_starts[i] <= segment_starts[i - 1] || segment_starts[i] >= timestamps.size()) {
      throw InputError("frame: segment starts must be increasing row indices");
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> TimeFrame::segments() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (timestamps.empty()) return out;
  std::vector<std::size_t> starts = segment_starts.empty() ? std::vector<std::size_t>{0} : segment_starts;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : timestamps.size();
    out.emplace_back(starts[i], end);
  }
  return out;
}

FlagMatrix::FlagMatrix(std::vector<std::string> channels, std::vector<double> timestamps,
                       std::vector<std::vector<std::uint8_t>> flags, TimeFormat format)
    : channels_(std::move(channels)), timestamps_(std::move(timestamps)), flags_(std::move(flags)), format_(format) {
  if (timestamps_.empty()) throw InputError("flags: need at least one sample");
  if (flags_.size() != channels_.size()) throw InputError("flags: channel count mismatch");
  for (const auto& ch : flags_) {
    if (ch.size() != timestamps_.size()) throw InputError("flags: channel length differs from timestamp count");
    for (auto v : ch) {
      if (v > 1) throw InputError("flags: cell outside {0,1}");
    }
  }
}

std::optional<std::size_t> FlagMatrix::find_channel(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i] == name) return i;
  }
  return std::nullopt;
}

FlagMatrix FlagMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> ts;
  ts.reserve(rows.size());
  for (auto r : rows) ts.push_back(timestamps_.at(r));
  std::vector<std::vector<std::uint8_t>> f(flags_.size());
  for (std::size_t c = 0; c < flags_.size(); ++c) {
    f[c].reserve(rows.size());
    for (auto r : rows) f[c].push_back(flags_[c][r]);
  }
  return FlagMatrix(channels_, std::move(ts), std::move(f), format_);
}

std::optional<std::pair<double, TimeFormat>> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (auto v = parse_number(text)) return std::pair{*v, TimeFormat::Index};
  if (auto v = parse_iso8601(text)) return std::pair{*v, TimeFormat::Iso8601};
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_timestamp(double t, TimeFormat format) {
  if (format == TimeFormat::Index) return format_double(t);
  const double whole = std::floor(t);
  const long long secs = static_cast<long long>(whole);
  long long days = secs / 86400;
  long long rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  long long y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld", y, m, d, rem / 3600, (rem % 3600) / 60,
                rem % 60);
  std::string out(buf);
  const double frac = t - whole;
  if (frac > 0.0) {
    char fbuf[32];
    std::snprintf(fbuf, sizeof(fbuf), "%.6f", frac);
    std::string f(fbuf + 1);  // drop leading 0
    while (!f.empty() && f.back() == '0') f.pop_back();
    if (f.size() > 1) out += f;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << contents;
}

TimeFrame parse_csv(std::string_view text, std::string_view timestamp_column) {
  RawTable table = read_table(text);
  const std::size_t tcol = find_column(table, timestamp_column);
  if (table.rows.empty()) throw InputError("csv: no data rows");

  TimeFrame frame;
  std::tie(frame.timestamps, frame.time_format) = parse_time_column(table, tcol);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == tcol) continue;
    frame.channels.push_back(table.header[c]);
    std::vector<Cell> col;
    col.reserve(table.rows.size());
    for (const auto& row : table.rows) col.push_back(parse_number(row[c]));
    frame.values.push_back(std::move(col));
  }
  frame.interval = infer_interval(frame.timestamps);
  frame.segment_starts = {0};
  frame.validate();
  return frame;
}

TimeFrame load_csv(const std::filesystem::path& path, std::string_view timestamp_column) {
  return parse_csv(read_file(path), timestamp_column);
}

std::string to_csv(const TimeFrame& frame, std::string_view timestamp_column) {
  std::string out(timestamp_column);
  for (const auto& c : frame.channels) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out += format_timestamp(frame.timestamps[r], frame.time_format);
    for (const auto& col : frame.values) {
      out += ",";
      if (col[r]) out += format_double(*col[r]);
    }
    out += "\n";
  }
  return out;
}

void write_csv(const TimeFrame& frame, const std::filesystem::path& path, std::string_view timestamp_column) {
  write_file(path, to_csv(frame, timestamp_column));
}

OperationMask load_mask_csv(const std::filesystem::path& path) {
  RawTable table = read_table(read_file(path));
  const std::size_t tcol = find_column(table, "timestamp");
  auto it = std::find(table.header.begin(), table.header.end(), "active");
  if (it == table.header.end()) throw InputError("mask: no 'active' column");
  const std::size_t acol = static_cast<std::size_t>(it - table.header.begin());
  OperationMask mask;
  mask.timestamps = parse_time_column(table, tcol).first;
  for (const auto& row : table.rows) {
    auto v = parse_number(row[acol]);
    if (!v || (*v != 0.0 && *v != 1.0)) throw InputError("mask: active must be 0 or 1, got '" + row[acol] + "'");
    mask.active.push_back(static_cast<std::uint8_t>(*v));
  }
  return mask;
}

TimeFrame apply_mask(const TimeFrame& frame, const OperationMask& mask, bool allow_empty) {
  if (mask.active.size() != frame.rows()) {
    throw InputError("mask: length " + std::to_string(mask.active.size()) + " does not match frame length " +
                     std::to_string(frame.rows()));
  }
  std::vector<bool> original_start(frame.rows(), false);
  for (auto s : frame.segment_starts) {
    if (s < frame.rows()) original_start[s] = true;
  }

  TimeFrame out;
  out.channels = frame.channels;
  out.interval = frame.interval;
  out.time_format = frame.time_format;
  out.values.resize(frame.num_channels());
  bool prev_kept = false;
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (!mask.active[r]) {
      prev_kept = false;
      continue;
    }
    if (out.timestamps.empty() || !prev_kept || original_start[r]) out.segment_starts.push_back(out.timestamps.size());
    out.timestamps.push_back(frame.timestamps[r]);
    for (std::size_t c = 0; c < frame.num_channels(); ++c) out.values[c].push_back(frame.values[c][r]);
    prev_kept = true;
  }
  if (out.timestamps.empty() && !allow_empty) throw InputError("mask: no active rows remain");
  return out;
}

TimeFrame interpolate_gaps(const TimeFrame& frame, double max_gap, double interval) {
  if (!(interval > 0.0)) throw InputError("interpolate: interval must be positive");
  if (max_gap < interval) throw InputError("interpolate: max_gap must be >= interval");

  TimeFrame out;
  out.channels = frame.channels;
  out.interval = interval;
  out.time_format = frame.time_format;
  out.values.resize(frame.num_channels());
  const double tol = 1e-9 * interval;

  for (auto [begin, end] : frame.segments()) {
    const double t0 = frame.timestamps[begin];
    const double span = frame.timestamps[end - 1] - t0;
    const auto count = static_cast<std::size_t>(std::floor(span / interval + 1e-9)) + 1;
    out.segment_starts.push_back(out.timestamps.size());
    for (std::size_t k = 0; k < count; ++k) out.timestamps.push_back(t0 + static_cast<double>(k) * interval);

    for (std::size_t c = 0; c < frame.num_channels(); ++c) {
      std::vector<std::pair<double, double>> obs;
      for (std::size_t r = begin; r < end; ++r) {
        if (frame.values[c][r]) obs.emplace_back(frame.timestamps[r], *frame.values[c][r]);
      }
      std::size_t next = 0;  // first observation with time > grid point - tol
      for (std::size_t k = 0; k < count; ++k) {
        const double g = t0 + static_cast<double>(k) * interval;
        while (next < obs.size() && obs[next].first < g - tol) ++next;
        Cell value;
        if (next < obs.size() && std::abs(obs[next].first - g) <= tol) {
          value = obs[next].second;
        } else if (next > 0 && next < obs.size()) {
          const auto& [ta, va] = obs[next - 1];
          const auto& [tb, vb] = obs[next];
          if (tb - ta <= max_gap + tol) value = va + (vb - va) * (g - ta) / (tb - ta);
        }
        out.values[c].push_back(value);
      }
    }
  }
  return out;
}

FlagMatrix parse_flags_csv(std::string_view text, std::string_view timestamp_column) {
  RawTable table = read_table(text);
  const std::size_t tcol = find_column(table, timestamp_column);
  if (table.rows.empty()) throw InputError("flags csv: no data rows");
  auto [ts, format] = parse_time_column(table, tcol);
  std::vector<std::string> channels;
  std::vector<std::vector<std::uint8_t>> flags;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == tcol) continue;
    channels.push_back(table.header[c]);
    std::vector<std::uint8_t> col;
    col.reserve(table.rows.size());
    for (const auto& row : table.rows) {
      auto v = parse_number(row[c]);
      if (!v || (*v != 0.0 && *v != 1.0)) {
        throw InputError("flags csv: cell '" + row[c] + "' in column '" + table.header[c] + "' is not 0/1");
      }
      col.push_back(static_cast<std::uint8_t>(*v));
    }
    flags.push_back(std::move(col));
  }
  return FlagMatrix(std::move(channels), std::move(ts), std::move(flags), format);
}

FlagMatrix load_flags_csv(const std::filesystem::path& path, std::string_view timestamp_column) {
  return parse_flags_csv(read_file(path), timestamp_column);
}

std::string flags_to_csv(const FlagMatrix& flags, std::string_view timestamp_column) {
  std::string out(timestamp_column);
  for (const auto& c : flags.channels()) out += "," + c;
  out += "\n";
  out.reserve(out.size() + flags.length() * (flags.num_channels() * 2 + 12));
  for (std::size_t t = 0; t < flags.length(); ++t) {
    out += format_timestamp(flags.timestamps()[t], flags.time_format());
    for (std::size_t c = 0; c < flags.num_channels(); ++c) {
      out += ',';
      out += static_cast<char>('0' + flags.at(c, t));
    }
    out += '\n';
  }
  return out;
}

void write_flags_csv(const FlagMatrix& flags, const std::filesystem::path& path, std::string_view timestamp_column) {
  write_file(path, flags_to_csv(flags, timestamp_column));
}

}  // namespace anomalycd::ts
