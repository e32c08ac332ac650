#pragma once

// Deterministic CSV output: '.' decimal separator regardless of locale
// (snprintf with %.17g under the untouched "C" locale), '\n' line ends, and a
// newline-terminated final row.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfbias::cli {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) {
      throw std::runtime_error("cannot open CSV file " + path.string());
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format(values[i]);
    }
    out_ << '\n';
  }

  void row_with_label(const std::string& label, const std::vector<double>& values) {
    out_ << label;
    for (double v : values) {
      out_ << ',' << format(v);
    }
    out_ << '\n';
  }

  static std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

 private:
  std::ofstream out_;
};

}  // namespace kfbias::cli
