#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fdiv/errors.hpp"
#include "fdiv/sample_io.hpp"

using namespace fdivergence;

namespace {

SampleMatrix parse(const std::string& text, const SampleFormat& format = {}) {
  std::istringstream in(text);
  return read_sample(in, format);
}

long failing_line(const std::string& text, const SampleFormat& format = {}) {
  try {
    parse(text, format);
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("delimiters are detected") {
  for (const char* text : {"0.1,2\n3,4.5\n", "0.1;2\n3;4.5\n", "0.1\t2\n3\t4.5\n", "0.1  2\n  3 4.5\n",
                           "0.1, 2\r\n3 ,4.5\r\n"}) {
    const SampleMatrix m = parse(text);
    CAPTURE(text);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 2);
    CHECK(m(0, 0) == 0.1);
    CHECK(m(1, 1) == 4.5);
  }
  SampleFormat semicolon;
  semicolon.delimiter = ';';
  const SampleMatrix m = parse("1e-3;+2\n-3.5;4E2\n", semicolon);
  CHECK(m(0, 0) == 1e-3);
  CHECK(m(0, 1) == 2.0);
  CHECK(m(1, 0) == -3.5);
  CHECK(m(1, 1) == 400.0);
}

TEST_CASE("comments, blank lines and headers") {
  const SampleMatrix m = parse("# comment\n\n0.5\n   # indented comment\n0.25\n\n");
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 1);
  CHECK(m(1, 0) == 0.25);

  SampleFormat header;
  header.skip_header = true;
  const SampleMatrix h = parse("# produced by hand\nx,y\n1,2\n", header);
  CHECK(h.rows() == 1);
  CHECK(h(0, 1) == 2.0);
  CHECK(failing_line("x,y\n1,2\n") == 1);
}

TEST_CASE("malformed input") {
  CHECK(failing_line("1,2\n3\n") == 2);
  CHECK(failing_line("1\n2\nabc\n") == 3);
  CHECK(failing_line("1\n0.5x\n") == 2);
  SampleFormat comma;
  comma.delimiter = ',';
  CHECK(failing_line("1,,2\n", comma) == 1);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("# only comments\n\n"), ParseError);
  CHECK_THROWS_AS(read_sample_file("/nonexistent/sample.csv"), ParseError);
}

TEST_CASE("write then read round-trips exactly") {
  SampleMatrix m(3, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 0.7;
  std::stringstream buffer;
  write_sample(buffer, m);
  const SampleMatrix back = read_sample(buffer);
  CHECK((back.array() == m.array()).all());

  const std::string path = "sample_io_roundtrip.tsv";
  {
    std::ofstream out(path);
    write_sample(out, m, '\t');
  }
  SampleFormat tab;
  tab.delimiter = '\t';
  CHECK((read_sample_file(path, tab).array() == m.array()).all());
  std::ofstream(path) << "1\nbad\n";
  try {
    read_sample_file(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
  std::remove(path.c_str());
}
