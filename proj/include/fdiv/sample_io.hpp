#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "fdiv/types.hpp"

namespace fdivergence {

struct SampleFormat {
  /// Field delimiter; unset means commas, semicolons, tabs or spaces.
  std::optional<char> delimiter;
  bool skip_header = false;
};

/// One point per line; blank lines and lines starting with '#' are ignored.
/// Throws ParseError on non-numeric fields or ragged rows.
SampleMatrix read_sample(std::istream& in, const SampleFormat& format = {});
SampleMatrix read_sample_file(const std::string& path, const SampleFormat& format = {});

void write_sample(std::ostream& out, const SampleMatrix& sample, char delimiter = ',');

}  // namespace fdivergence
