#ifndef FDAPOI_CSV_HPP
#define FDAPOI_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fdapoi/dataset.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"

namespace fdapoi {

/// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

inline bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA";
}

inline double parse_cell(const std::string& cell, int row, int col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw data_error("csv: non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  return value;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

}  // namespace detail

struct LoadReport {
  int repaired_cells = 0;
  std::vector<int> repairs_per_case;   // index matches the kept dataset rows
  std::vector<int> dropped_rows;       // 1-based data-row numbers
  std::vector<std::string> drop_reasons;
};

struct LoadedBundle {
  FunctionalDataset data;
  LoadReport report;
};

/// Reads a curve bundle: header row of strictly increasing, equidistant
/// grid times (optionally ending in a response column named y), then one
/// row per case. Missing cells (empty or NA) are repaired with the mean
/// of the closest observed predecessor and successor (nearest observed
/// value at the boundary); a case with more than `missing_threshold`
/// missing curve values is dropped.
inline LoadedBundle load_curves(const std::string& path, int missing_threshold = 10) {
  std::ifstream in(path);
  if (!in) throw data_error("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("csv: empty file '" + path + "'");
  std::vector<std::string> header = detail::split_line(line);
  bool has_response = false;
  if (!header.empty() && (header.back() == "y" || header.back() == "Y")) {
    has_response = true;
    header.pop_back();
  }
  const int p = static_cast<int>(header.size());
  if (p < 3) throw data_error("csv: header needs at least 3 grid times");

  Eigen::VectorXd times(p);
  for (int j = 0; j < p; ++j) times[j] = detail::parse_cell(header[j], 0, j + 1);
  const double h = (times[p - 1] - times[0]) / (p - 1);
  if (!(h > 0.0)) throw data_error("csv: grid times must be strictly increasing");
  for (int j = 1; j < p; ++j) {
    const double step = times[j] - times[j - 1];
    if (!(step > 0.0) || std::abs(step - h) > 1e-9 * std::max(std::abs(h), 1.0))
      throw data_error("csv: grid is not equidistant at header column " + std::to_string(j + 1));
  }

  LoadedBundle out;
  out.data.grid = Grid(times[0], times[p - 1], p);

  std::vector<std::vector<double>> rows;
  std::vector<double> responses;
  int row_number = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    ++row_number;
    const std::vector<std::string> cells = detail::split_line(line);
    const int expected = p + (has_response ? 1 : 0);
    if (static_cast<int>(cells.size()) != expected)
      throw data_error("csv: row " + std::to_string(row_number) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(expected));

    std::vector<double> values(p);
    std::vector<char> missing(p, 0);
    int missing_count = 0;
    for (int j = 0; j < p; ++j) {
      if (detail::is_missing_token(cells[j])) {
        missing[j] = 1;
        ++missing_count;
      } else {
        values[j] = detail::parse_cell(cells[j], row_number, j + 1);
      }
    }
    bool response_missing = false;
    double y = 0.0;
    if (has_response) {
      if (detail::is_missing_token(cells[p])) {
        response_missing = true;
      } else {
        y = detail::parse_cell(cells[p], row_number, p + 1);
      }
    }

    if (missing_count > missing_threshold) {
      out.report.dropped_rows.push_back(row_number);
      out.report.drop_reasons.push_back(std::to_string(missing_count) +
                                        " missing values exceed the threshold of " +
                                        std::to_string(missing_threshold));
      continue;
    }
    if (response_missing) {
      out.report.dropped_rows.push_back(row_number);
      out.report.drop_reasons.push_back("missing response");
      continue;
    }
    if (missing_count == p) {
      out.report.dropped_rows.push_back(row_number);
      out.report.drop_reasons.push_back("no observed values");
      continue;
    }

    // repair: interior gaps take the mean of the nearest observed
    // neighbours, boundary gaps copy the nearest observed value
    if (missing_count > 0) {
      std::vector<double> repaired = values;
      for (int j = 0; j < p; ++j) {
        if (!missing[j]) continue;
        int prev = j - 1;
        while (prev >= 0 && missing[prev]) --prev;
        int next = j + 1;
        while (next < p && missing[next]) ++next;
        if (prev >= 0 && next < p) {
          repaired[j] = 0.5 * (values[prev] + values[next]);
        } else if (prev >= 0) {
          repaired[j] = values[prev];
        } else {
          repaired[j] = values[next];
        }
      }
      values = repaired;
    }
    rows.push_back(std::move(values));
    out.report.repairs_per_case.push_back(missing_count);
    out.report.repaired_cells += missing_count;
    if (has_response) responses.push_back(y);
  }

  if (rows.empty()) throw data_error("csv: no usable data rows in '" + path + "'");
  const int n = static_cast<int>(rows.size());
  out.data.curves.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) out.data.curves(i, j) = rows[i][j];
  if (has_response) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = responses[i];
    out.data.responses = y;
  }
  out.data.validate();
  return out;
}

/// Writes a curve bundle in the format load_curves reads. All numbers are
/// shortest round-trip decimals, so save -> load reproduces the dataset
/// bit for bit.
inline void save_curves(const FunctionalDataset& data, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw data_error("csv: cannot write '" + path + "'");
  for (int j = 0; j < data.grid.p; ++j) {
    if (j) outf << ',';
    outf << format_double(data.grid.point(j));
  }
  if (data.responses) outf << ",y";
  outf << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.grid.p; ++j) {
      if (j) outf << ',';
      outf << format_double(data.curves(i, j));
    }
    if (data.responses) outf << ',' << format_double((*data.responses)[i]);
    outf << '\n';
  }
  if (!outf) throw data_error("csv: write failed for '" + path + "'");
}

/// Two-column CSV (t, value), e.g. detection profiles or slope curves.
inline void save_curve_csv(const Eigen::VectorXd& t, const Eigen::VectorXd& v,
                           const std::string& header, const std::string& path) {
  if (t.size() != v.size()) throw data_error("csv: column length mismatch");
  std::ofstream outf(path);
  if (!outf) throw data_error("csv: cannot write '" + path + "'");
  outf << header << '\n';
  for (Eigen::Index i = 0; i < t.size(); ++i)
    outf << format_double(t[i]) << ',' << format_double(v[i]) << '\n';
  if (!outf) throw data_error("csv: write failed for '" + path + "'");
}

}  // namespace fdapoi

#endif  // FDAPOI_CSV_HPP
