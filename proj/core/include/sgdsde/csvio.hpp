#pragma once

// Minimal CSV emission with full-precision doubles, so identical runs
// produce byte-identical files.

#include <fstream>
#include <string>
#include <vector>

namespace sgdsde {

// Shortest round-trippable decimal form ("%.17g"); NaN and infinities are
// spelled nan / inf / -inf.
std::string fmt_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  // One row; each cell is written verbatim (numbers should go through
  // fmt_double).  Throws WrongShape if the width differs from the header.
  void row(const std::vector<std::string>& cells);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t width_;
  std::ofstream out_;
};

}  // namespace sgdsde
