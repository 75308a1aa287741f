#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anomalycd::ts {

/// How timestamps were written in the source file; preserved on output.
enum class TimeFormat { Index, Iso8601 };

/// A cell value; std::nullopt is the missing marker.
using Cell = std::optional<double>;

/// Multivariate sensor readings over a shared, strictly increasing time axis.
///
/// `segment_starts` lists the row indices at which a contiguous recording
/// segment begins (always starts with 0 for a non-empty frame). Rows removed
/// by a mask introduce a new segment; interpolation and detection never
/// cross a segment boundary.
struct TimeFrame {
  std::vector<double> timestamps;
  std::vector<std::string> channels;
  std::vector<std::vector<Cell>> values;  // [channel][row]
  double interval = 1.0;
  TimeFormat time_format = TimeFormat::Index;
  std::vector<std::size_t> segment_starts;

  std::size_t rows() const noexcept { return timestamps.size(); }
  std::size_t num_channels() const noexcept { return channels.size(); }

  /// Throws InputError when any structural invariant is broken.
  void validate() const;

  /// [begin, end) row ranges of the contiguous segments.
  std::vector<std::pair<std::size_t, std::size_t>> segments() const;
};

/// Operation status per timestamp, positionally aligned with a frame.
struct OperationMask {
  std::vector<double> timestamps;
  std::vector<std::uint8_t> active;
};

/// N binary anomaly-flag channels (0 = normal, 1 = anomaly) over T >= 1 samples.
class FlagMatrix {
 public:
  FlagMatrix() = default;
  FlagMatrix(std::vector<std::string> channels, std::vector<double> timestamps,
             std::vector<std::vector<std::uint8_t>> flags, TimeFormat format = TimeFormat::Index);

  std::size_t num_channels() const noexcept { return channels_.size(); }
  std::size_t length() const noexcept { return timestamps_.size(); }
  const std::vector<std::string>& channels() const noexcept { return channels_; }
  const std::vector<double>& timestamps() const noexcept { return timestamps_; }
  TimeFormat time_format() const noexcept { return format_; }

  std::span<const std::uint8_t> channel(std::size_t c) const { return flags_.at(c); }
  std::uint8_t at(std::size_t c, std::size_t t) const { return flags_[c][t]; }

  /// Index of a channel by name, or nullopt.
  std::optional<std::size_t> find_channel(std::string_view name) const;

  /// New matrix holding only the given rows (in the given order).
  FlagMatrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const FlagMatrix&) const = default;

 private:
  std::vector<std::string> channels_;
  std::vector<double> timestamps_;
  std::vector<std::vector<std::uint8_t>> flags_;  // [channel][t]
  TimeFormat format_ = TimeFormat::Index;
};

/// Parses an integer/decimal index or an ISO-8601 date-time (seconds since
/// the Unix epoch, UTC). Returns nullopt when neither form matches.
std::optional<std::pair<double, TimeFormat>> parse_timestamp(std::string_view text);
std::string format_timestamp(double t, TimeFormat format);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

TimeFrame load_csv(const std::filesystem::path& path, std::string_view timestamp_column = "timestamp");
TimeFrame parse_csv(std::string_view text, std::string_view timestamp_column = "timestamp");
std::string to_csv(const TimeFrame& frame, std::string_view timestamp_column = "timestamp");
void write_csv(const TimeFrame& frame, const std::filesystem::path& path,
               std::string_view timestamp_column = "timestamp");

/// Mask CSV with columns `timestamp,active`.
OperationMask load_mask_csv(const std::filesystem::path& path);

/// Drops rows with active == 0. Survivors keep their timestamps; each removed
/// run starts a new segment. An all-inactive mask throws unless allow_empty.
TimeFrame apply_mask(const TimeFrame& frame, const OperationMask& mask, bool allow_empty = false);

/// Resamples every segment onto a regular `interval` grid anchored at the
/// segment's first timestamp. Gaps between valid observations no longer than
/// `max_gap` are filled linearly; longer gaps and the segment ends outside the
/// first/last valid observation stay missing.
TimeFrame interpolate_gaps(const TimeFrame& frame, double max_gap, double interval);

FlagMatrix load_flags_csv(const std::filesystem::path& path, std::string_view timestamp_column = "timestamp");
FlagMatrix parse_flags_csv(std::string_view text, std::string_view timestamp_column = "timestamp");
std::string flags_to_csv(const FlagMatrix& flags, std::string_view timestamp_column = "timestamp");
void write_flags_csv(const FlagMatrix& flags, const std::filesystem::path& path,
                     std::string_view timestamp_column = "timestamp");

/// Reads a whole file; throws InputError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace anomalycd::ts
