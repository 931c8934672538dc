#pragma once

// CSV ingestion and emission, and the key/value configuration file.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kis/likelihood.hpp"
#include "kis/skim.hpp"

namespace kis {

// Parse failure with a 1-based location; row 1 is the header.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column);
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

struct CsvTable {
  std::vector<std::string> header;
  RowMatrix values;
};

// Header row followed by numeric rows. Empty, non-numeric or non-finite
// cells and ragged rows are errors.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Round-trip formatting (%.17g).
std::string format_double(double v);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const RowMatrix& values);

// Splits off the response column (default: last).
Dataset dataset_from_table(const CsvTable& table, const std::string& response = "");

struct ColumnScaling {
  std::vector<double> mean;
  std::vector<double> sd;
};

// Rescales every column of X to mean 0, SD 1 (columns with zero SD are only
// centred) and marks them standardized.
ColumnScaling standardize(Dataset& data);
void apply_scaling(Dataset& data, const ColumnScaling& scaling);

struct RunSettings {
  SkimConfig skim;
  std::optional<std::uint64_t> seed;
  std::set<std::string> explicit_keys;
};

// JSON object or "key = value" lines ('#' starts a comment). Keys: s,
// alpha1..alpha5, beta1..beta4, seed. Unknown keys are errors.
void apply_config_text(const std::string& text, RunSettings& settings);
void apply_config_file(const std::string& path, RunSettings& settings);

}  // namespace kis
