#include <doctest.h>

#include <charconv>
#include <cstdio>
#include <string>

#include "parkcast/error.hpp"
#include "parkcast/io.hpp"
#include "parkcast/rng.hpp"

using namespace parkcast;

TEST_SUITE("io") {

TEST_CASE("fmt_double round-trips arbitrary doubles exactly") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-1e6, 1e6) *
                     std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
    const std::string s = io::fmt_double(v);
    double back = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(ec == std::errc());
    REQUIRE(p == s.data() + s.size());
    CHECK(back == v);
  }
}

TEST_CASE("fmt_double prefers short forms") {
  CHECK(io::fmt_double(0.1) == "0.1");
  CHECK(io::fmt_double(42.0) == "42");
  CHECK(io::fmt_double(-3.5) == "-3.5");
  CHECK(io::fmt_double(0.0) == "0");
}

TEST_CASE("split_lines handles LF, CRLF and missing final newline") {
  CHECK(io::split_lines("a\nb\n") == std::vector<std::string>{"a", "b"});
  CHECK(io::split_lines("a\r\nb") == std::vector<std::string>{"a", "b"});
  CHECK(io::split_lines("") == std::vector<std::string>{});
  CHECK(io::split_lines("only") == std::vector<std::string>{"only"});
}

TEST_CASE("split_csv trims fields and keeps empties") {
  CHECK(io::split_csv("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(io::split_csv("x,,z") == std::vector<std::string>{"x", "", "z"});
  CHECK(io::split_csv("single") == std::vector<std::string>{"single"});
}

TEST_CASE("strict numeric parses reject partial matches") {
  CHECK(io::parse_double("2.5", "t") == 2.5);
  CHECK_THROWS_AS(io::parse_double("2.5x", "t"), ValidationError);
  CHECK_THROWS_AS(io::parse_double("", "t"), ValidationError);
  CHECK(io::parse_int("17", "t") == 17);
  CHECK_THROWS_AS(io::parse_int("17.0", "t"), ValidationError);
}

TEST_CASE("atomic write then read returns the same bytes") {
  const std::string path = "io_test_tmp.txt";
  io::write_file_atomic(path, "line1\nline2\n");
  CHECK(io::read_file(path) == "line1\nline2\n");
  io::write_file_atomic(path, "replaced");
  CHECK(io::read_file(path) == "replaced");
  std::remove(path.c_str());
  CHECK_THROWS_AS(io::read_file(path), IoError);
}

TEST_CASE("timestamp parse matches known epoch values") {
  CHECK(io::parse_timestamp("1970-01-01 00:00:00").epoch_s == 0);
  CHECK(io::parse_timestamp("1970-01-02T00:00:00").epoch_s == 86400);
  CHECK(io::parse_timestamp("2016-07-01 00:00:00").epoch_s == 1467331200);
  CHECK(io::parse_timestamp("2016-02-29 12:30:45").epoch_s == 1456749045);
  CHECK(io::parse_timestamp("1999-12-31 23:59:59").epoch_s == 946684799);
  // seconds are optional
  CHECK(io::parse_timestamp("2016-07-01 00:00").epoch_s == 1467331200);
}

TEST_CASE("timestamp format uses the T separator and round-trips") {
  const io::Timestamp t = io::parse_timestamp("2016-07-01 08:05:00");
  CHECK(io::format_timestamp(t) == "2016-07-01T08:05:00");
  CHECK(io::parse_timestamp(io::format_timestamp(t)) == t);
}

TEST_CASE("timestamp validation") {
  CHECK_THROWS_AS(io::parse_timestamp("2017-02-29 00:00:00"), ValidationError);
  CHECK_THROWS_AS(io::parse_timestamp("2016-13-01 00:00:00"), ValidationError);
  CHECK_THROWS_AS(io::parse_timestamp("2016-07-01 24:00:00"), ValidationError);
  CHECK_THROWS_AS(io::parse_timestamp("2016-07-01"), ValidationError);
  CHECK_THROWS_AS(io::parse_timestamp("2016/07/01 00:00:00"), ValidationError);
  CHECK_THROWS_AS(io::parse_timestamp("2016-07-01x00:00:00"), ValidationError);
}

TEST_CASE("timestamps order by instant") {
  CHECK(io::parse_timestamp("2016-07-01 08:00:00") <
        io::parse_timestamp("2016-07-01 08:05:00"));
}

} // TEST_SUITE
