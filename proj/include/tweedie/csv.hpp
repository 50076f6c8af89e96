#pragma once

// Headered, comma-separated numeric data files.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "tweedie/dataset.hpp"
#include "tweedie/error.hpp"

namespace tweedie {

enum class MissingPolicy {
  error,      ///< the first missing cell aborts the load
  drop_rows,  ///< rows with a missing cell in a used column are skipped
};

struct SchemaConfig {
  std::string response = "meddol";
  std::vector<std::string> covariates{"age", "disea", "physlm", "logc", "idp", "lpi",   "fmde",
                                      "linc", "lfam", "female", "black", "educdec", "hlthg"};
  MissingPolicy missing = MissingPolicy::error;
};

struct CsvLoadInfo {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

namespace csv {

/// Splits one record on commas; double quotes group a field and "" inside a
/// quoted field is a literal quote.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

inline bool is_missing(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".";
}

/// Locale-independent parse of the whole cell; false on any trailing text.
inline bool parse_double(std::string_view cell, double* out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), *out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

/// Shortest text that reads back as the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace csv

/// Reads the response and covariate columns named in `schema` and prepends
/// an intercept. Data rows are numbered from 1 in error messages, so data
/// row 1 is line 2 of the file.
inline Dataset load_csv(std::istream& in, const SchemaConfig& schema, CsvLoadInfo* info = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = csv::split_record(line);
  for (auto& h : header) h = std::string(csv::trim(h));

  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> used{column(schema.response)};
  for (const auto& c : schema.covariates) used.push_back(column(c));

  std::vector<double> values;
  CsvLoadInfo stats;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    ++row;
    const auto fields = csv::split_record(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "csv: row " << row << " has " << fields.size() << " fields, header has " << header.size();
      throw DataError(os.str());
    }
    std::vector<double> record;
    bool drop = false;
    for (std::size_t c : used) {
      if (csv::is_missing(fields[c])) {
        if (schema.missing == MissingPolicy::drop_rows) {
          drop = true;
          break;
        }
        std::ostringstream os;
        os << "csv: missing value at row " << row << ", column '" << header[c] << "'";
        throw DataError(os.str());
      }
      double v = 0.0;
      if (!csv::parse_double(fields[c], &v)) {
        std::ostringstream os;
        os << "csv: non-numeric value '" << fields[c] << "' at row " << row << ", column '" << header[c] << "'";
        throw DataError(os.str());
      }
      record.push_back(v);
    }
    if (drop) {
      ++stats.rows_dropped;
      continue;
    }
    values.insert(values.end(), record.begin(), record.end());
  }
  stats.rows_read = row;
  if (values.empty()) throw DataError("csv: no data rows");
  if (info) *info = stats;

  const auto width = used.size();
  const auto n = static_cast<Eigen::Index>(values.size() / width);
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = values[i * width];
    x(i, 0) = 1.0;
    for (std::size_t j = 1; j < width; ++j) x(i, static_cast<Eigen::Index>(j)) = values[i * width + j];
  }
  std::vector<std::string> names{"(Intercept)"};
  names.insert(names.end(), schema.covariates.begin(), schema.covariates.end());
  return Dataset(std::move(y), std::move(x), std::move(names));
}

inline Dataset load_csv(const std::string& path, const SchemaConfig& schema, CsvLoadInfo* info = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  return load_csv(in, schema, info);
}

/// Writes the response and non-intercept columns; reading the result back
/// with the matching schema reproduces the dataset exactly.
inline void write_csv(std::ostream& out, const Dataset& data, const std::string& response_name = "y") {
  const bool intercept = !data.names().empty() && data.names().front() == "(Intercept)";
  const Eigen::Index first = intercept ? 1 : 0;
  out << response_name;
  for (Eigen::Index j = first; j < data.cols(); ++j) out << ',' << data.names()[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out << csv::format_double(data.response()[i]);
    for (Eigen::Index j = first; j < data.cols(); ++j) out << ',' << csv::format_double(data.design()(i, j));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& data, const std::string& response_name = "y") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  write_csv(out, data, response_name);
  if (!out) throw DataError("csv: write to '" + path + "' failed");
}

/// Schema matching a file written by write_csv.
inline SchemaConfig schema_of(const Dataset& data, const std::string& response_name = "y") {
  SchemaConfig s;
  s.response = response_name;
  s.covariates.assign(data.names().begin() + (data.names().front() == "(Intercept)" ? 1 : 0), data.names().end());
  return s;
}

}  // namespace tweedie
