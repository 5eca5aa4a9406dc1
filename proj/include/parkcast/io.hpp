#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace parkcast::io {

/// Shortest round-trippable decimal form of a double (%.17g trimmed by
/// the printf library; always re-reads to the same bits).
std::string fmt_double(double v);

/// Whole-file read; throws IoError when the file cannot be opened.
std::string read_file(const std::string &path);

/// Writes to a sibling temp file, then renames over `path`, so readers
/// never observe a half-written file.
void write_file_atomic(const std::string &path, const std::string &content);

/// Splits text into lines; accepts \n and \r\n, drops a trailing empty line.
std::vector<std::string> split_lines(const std::string &text);

/// Splits one CSV record on commas. Fields are trimmed of surrounding
/// whitespace; quoting is not supported (no field in any format used here
/// may contain a comma).
std::vector<std::string> split_csv(const std::string &line);

/// Strict double parse of a whole field; context names the field in errors.
double parse_double(const std::string &field, const std::string &context);

/// Strict nonnegative integer parse of a whole field.
std::int64_t parse_int(const std::string &field, const std::string &context);

/// FNV-1a 64-bit hash of raw bytes; fingerprints input files so a
/// checkpoint can refuse to run against different data.
std::uint64_t fnv1a64(std::string_view bytes);

// Timestamps are treated as naive wall-clock values: no time zones, no
// leap seconds. The panel only needs equal spacing and ordering.

struct Timestamp {
  std::int64_t epoch_s = 0;
  bool operator==(const Timestamp &o) const { return epoch_s == o.epoch_s; }
  bool operator<(const Timestamp &o) const { return epoch_s < o.epoch_s; }
};

/// Parses "YYYY-MM-DD HH:MM:SS" (space or 'T' separator; seconds optional).
Timestamp parse_timestamp(const std::string &text);

/// Formats as "YYYY-MM-DDTHH:MM:SS".
std::string format_timestamp(Timestamp t);

} // namespace parkcast::io
