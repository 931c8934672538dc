#include "kis/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kis {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  if (cell.empty()) throw CsvError("missing value", row, col);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw CsvError("non-numeric value '" + cell + "'", row, col);
  if (!std::isfinite(v)) throw CsvError("non-finite value '" + cell + "'", row, col);
  return v;
}

double number_value(const std::string& key, const nlohmann::json& v) {
  if (!v.is_number()) throw std::invalid_argument("config: value of '" + key + "' must be a number");
  return v.get<double>();
}

void set_key(RunSettings& st, const std::string& key, double value) {
  SkimConfig& c = st.skim;
  st.explicit_keys.insert(key);
  if (key == "s") c.s = value;
  else if (key == "alpha1") c.alpha1 = value;
  else if (key == "alpha2") c.alpha2 = value;
  else if (key == "alpha3") c.alpha3 = value;
  else if (key == "alpha4") c.alpha4 = value;
  else if (key == "alpha5") c.alpha5 = value;
  else if (key == "beta1") c.beta1 = value;
  else if (key == "beta2") c.beta2 = value;
  else if (key == "beta3") c.beta3 = value;
  else if (key == "beta4") c.beta4 = value;
  else if (key == "seed") {
    if (value < 0 || value != std::floor(value)) throw std::invalid_argument("config: seed must be a nonnegative integer");
    st.seed = static_cast<std::uint64_t>(value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

}  // namespace

CsvError::CsvError(const std::string& what, std::size_t row, std::size_t column)
    : std::runtime_error("csv row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
      row_(row),
      column_(column) {}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!trim(line).empty()) break;
  }
  if (row == 0 || trim(line).empty()) throw CsvError("empty input (no header row)", 1, 1);
  t.header = split_line(line);
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c].empty()) throw CsvError("empty column name", row, c + 1);
  }
  const std::size_t cols = t.header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != cols) {
      throw CsvError("expected " + std::to_string(cols) + " fields, found " + std::to_string(cells.size()), row,
                     std::min(cells.size(), cols) + 1);
    }
    for (std::size_t c = 0; c < cols; ++c) values.push_back(parse_cell(cells[c], row, c + 1));
    ++rows;
  }
  t.values = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(in);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const RowMatrix& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw std::invalid_argument("write_csv: header does not match column count");
  }
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
}

Dataset dataset_from_table(const CsvTable& table, const std::string& response) {
  if (table.header.size() < 2) throw std::invalid_argument("dataset: need at least one covariate and a response");
  if (table.values.rows() < 1) throw std::invalid_argument("dataset: no observations");
  std::size_t ycol = table.header.size() - 1;
  if (!response.empty()) {
    const auto it = std::find(table.header.begin(), table.header.end(), response);
    if (it == table.header.end()) throw std::invalid_argument("dataset: no column named '" + response + "'");
    ycol = static_cast<std::size_t>(it - table.header.begin());
  }
  Dataset d;
  const Eigen::Index n = table.values.rows();
  const auto p = static_cast<Eigen::Index>(table.header.size() - 1);
  d.X.resize(n, p);
  d.Y = table.values.col(static_cast<Eigen::Index>(ycol));
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == ycol) continue;
    d.X.col(k++) = table.values.col(static_cast<Eigen::Index>(c));
    d.names.push_back(table.header[c]);
  }
  d.standardized.assign(static_cast<std::size_t>(p), false);
  d.validate();
  return d;
}

ColumnScaling standardize(Dataset& data) {
  ColumnScaling s;
  const double n = static_cast<double>(data.n());
  for (Eigen::Index c = 0; c < data.X.cols(); ++c) {
    const double m = data.X.col(c).mean();
    const double var = data.n() > 1 ? (data.X.col(c).array() - m).square().sum() / (n - 1.0) : 0.0;
    s.mean.push_back(m);
    s.sd.push_back(std::sqrt(var));
  }
  apply_scaling(data, s);
  return s;
}

void apply_scaling(Dataset& data, const ColumnScaling& s) {
  if (s.mean.size() != data.p() || s.sd.size() != data.p()) throw std::invalid_argument("scaling: column count mismatch");
  data.standardized.assign(data.p(), true);
  for (Eigen::Index c = 0; c < data.X.cols(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    data.X.col(c).array() -= s.mean[k];
    if (s.sd[k] > 0.0) data.X.col(c) /= s.sd[k];
  }
}

void apply_config_text(const std::string& text, RunSettings& settings) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    const auto j = nlohmann::json::parse(body);
    for (const auto& [key, value] : j.items()) set_key(settings, key, number_value(key, value));
    return;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find_first_of("=:");
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": value of '" + key + "' is not a number");
    }
    set_key(settings, key, v);
  }
}

void apply_config_file(const std::string& path, RunSettings& settings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(ss.str(), settings);
}

}  // namespace kis
