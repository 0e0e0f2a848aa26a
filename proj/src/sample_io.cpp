#include "fdiv/sample_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "fdiv/errors.hpp"

namespace fdivergence {
namespace {

std::vector<std::string_view> split(std::string_view line, const std::optional<char>& delimiter) {
  std::vector<std::string_view> fields;
  auto is_sep = [&](char c) {
    return delimiter ? c == *delimiter : (c == ',' || c == ';' || c == '\t' || c == ' ');
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || is_sep(line[i])) {
      std::string_view field = line.substr(start, i - start);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
      }
      // runs of whitespace separate a single field when auto-detecting
      if (!(field.empty() && !delimiter)) fields.push_back(field);
      start = i + 1;
    }
  }
  return fields;
}

double parse_number(std::string_view field, long line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse '" + std::string(field) +
                         "' as a number",
                     line);
  }
  return value;
}

}  // namespace

SampleMatrix read_sample(std::istream& in, const SampleFormat& format) {
  std::vector<double> values;
  Index columns = -1;
  Index rows = 0;
  std::string line;
  long line_number = 0;
  bool header_pending = format.skip_header;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view(line);
    const auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split(view, format.delimiter);
    if (columns < 0) columns = Index(fields.size());
    if (Index(fields.size()) != columns) {
      throw ParseError("line " + std::to_string(line_number) + ": expected " +
                           std::to_string(columns) + " fields, found " + std::to_string(fields.size()),
                       line_number);
    }
    for (auto field : fields) values.push_back(parse_number(field, line_number));
    ++rows;
  }
  if (rows == 0) throw ParseError("input contains no data rows");
  SampleMatrix out(rows, columns);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < columns; ++j) out(i, j) = values[std::size_t(i * columns + j)];
  }
  return out;
}

SampleMatrix read_sample_file(const std::string& path, const SampleFormat& format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open sample file '" + path + "'");
  try {
    return read_sample(in, format);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line);
  }
}

void write_sample(std::ostream& out, const SampleMatrix& sample, char delimiter) {
  char buffer[32];
  for (Index i = 0; i < sample.rows(); ++i) {
    for (Index j = 0; j < sample.cols(); ++j) {
      std::snprintf(buffer, sizeof buffer, "%.17g", sample(i, j));
      if (j) out << delimiter;
      out << buffer;
    }
    out << '\n';
  }
}

}  // namespace fdivergence
