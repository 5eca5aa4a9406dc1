#include "parkcast/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "parkcast/error.hpp"

namespace parkcast::io {

std::string fmt_double(double v) {
  // Shortest decimal form that parses back to the same bits; plain
  // notation is preferred over scientific when no longer.
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc())
    throw NumericError("fmt_double: conversion failed");
  return std::string(buf, p);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw IoError("read failed for " + path);
  return ss.str();
}

void write_file_atomic(const std::string &path, const std::string &content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw IoError("write failed for " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    std::remove(tmp.c_str());
    throw IoError("rename " + tmp + " -> " + path + " failed: " +
                  std::strerror(err));
  }
}

std::vector<std::string> split_lines(const std::string &text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (start < text.size())
        lines.push_back(text.substr(start));
      break;
    }
    std::size_t end = nl;
    if (end > start && text[end - 1] == '\r')
      --end;
    lines.push_back(text.substr(start, end - start));
    start = nl + 1;
  }
  return lines;
}

namespace {

std::string trim(const std::string &s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t'))
    ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

} // namespace

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string &field, const std::string &context) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw ValidationError(context + ": not a number: '" + field + "'");
  return v;
}

std::int64_t parse_int(const std::string &field, const std::string &context) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw ValidationError(context + ": not an integer: '" + field + "'");
  return v;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (civil calendar).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t &y, unsigned &m, unsigned &d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

unsigned parse_fixed(const std::string &s, std::size_t pos, std::size_t len,
                     const std::string &what) {
  if (pos + len > s.size())
    throw ValidationError("timestamp '" + s + "': truncated at " + what);
  unsigned v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9')
      throw ValidationError("timestamp '" + s + "': bad digit in " + what);
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  return v;
}

bool leap(std::int64_t y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static const unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : lengths[m - 1];
}

} // namespace

Timestamp parse_timestamp(const std::string &text) {
  // YYYY-MM-DD[ T]HH:MM[:SS]
  if (text.size() < 16)
    throw ValidationError("timestamp '" + text + "': too short");
  const unsigned year = parse_fixed(text, 0, 4, "year");
  if (text[4] != '-')
    throw ValidationError("timestamp '" + text + "': expected '-' after year");
  const unsigned month = parse_fixed(text, 5, 2, "month");
  if (text[7] != '-')
    throw ValidationError("timestamp '" + text + "': expected '-' after month");
  const unsigned day = parse_fixed(text, 8, 2, "day");
  if (text[10] != ' ' && text[10] != 'T')
    throw ValidationError("timestamp '" + text + "': expected ' ' or 'T' separator");
  const unsigned hh = parse_fixed(text, 11, 2, "hour");
  if (text[13] != ':')
    throw ValidationError("timestamp '" + text + "': expected ':' after hour");
  const unsigned mm = parse_fixed(text, 14, 2, "minute");
  unsigned ss = 0;
  if (text.size() > 16) {
    if (text[16] != ':' || text.size() != 19)
      throw ValidationError("timestamp '" + text + "': malformed seconds");
    ss = parse_fixed(text, 17, 2, "second");
  } else if (text.size() != 16) {
    throw ValidationError("timestamp '" + text + "': malformed time");
  }

  if (month < 1 || month > 12)
    throw ValidationError("timestamp '" + text + "': month out of range");
  if (day < 1 || day > days_in_month(year, month))
    throw ValidationError("timestamp '" + text + "': day out of range");
  if (hh > 23 || mm > 59 || ss > 59)
    throw ValidationError("timestamp '" + text + "': time out of range");

  const std::int64_t days = days_from_civil(year, month, day);
  return Timestamp{days * 86400 + hh * 3600 + mm * 60 + ss};
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t.epoch_s / 86400;
  std::int64_t rem = t.epoch_s % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

} // namespace parkcast::io
