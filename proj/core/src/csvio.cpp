#include "sgdsde/csvio.hpp"

#include <cmath>
#include <cstdio>

#include "sgdsde/errors.hpp"

namespace sgdsde {

std::string fmt_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : path_(path), width_(header.size()) {
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) {
    throw Error("CsvWriter: cannot open " + path + " for writing");
  }
  row(header);
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) {
    throw WrongShape("CsvWriter: row width " + std::to_string(cells.size()) +
                     " does not match header width " + std::to_string(width_) +
                     " in " + path_);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      out_ << ',';
    }
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) {
    throw Error("CsvWriter: write failed for " + path_);
  }
}

}  // namespace sgdsde
