#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "types.hpp"

namespace lpcd::io {

struct io_error : std::runtime_error
{
  explicit io_error(const std::string& what)
    : std::runtime_error(what)
  {
  }
};

//! A parsed delimited table: header names plus string cells.
struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const
  {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) {
        return static_cast<int>(c);
      }
    }
    throw io_error("missing column '" + name + "' in input file");
  }
};

inline Table
read_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open " + path);
  }
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (line.back() == ',') {
      cells.emplace_back();
    }
    if (first) {
      table.header = cells;
      first = false;
    } else {
      table.rows.push_back(cells);
    }
  }
  if (first) {
    throw io_error("empty input file " + path);
  }
  return table;
}

inline bool
parse_double(const std::string& cell, double& out)
{
  if (cell == "inf" || cell == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (cell == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  try {
    std::size_t used = 0;
    out = std::stod(cell, &used);
    return used == cell.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

struct LoadResult
{
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  int dropped_rows{ 0 };
};

//! Load (y, x...) columns; rows with missing or non-finite values are
//! dropped and counted.
inline LoadResult
load_sample_csv(const std::string& path, const std::string& y_col, const std::vector<std::string>& x_cols)
{
  const Table table = read_csv(path);
  const int yc = table.column(y_col);
  std::vector<int> xcs;
  for (const std::string& name : x_cols) {
    xcs.push_back(table.column(name));
  }
  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  int dropped = 0;
  for (const auto& row : table.rows) {
    bool ok = static_cast<int>(row.size()) > yc;
    double y = 0.0;
    ok = ok && parse_double(row[yc], y);
    std::vector<double> x(xcs.size());
    for (std::size_t k = 0; ok && k < xcs.size(); ++k) {
      ok = static_cast<int>(row.size()) > xcs[k] && parse_double(row[xcs[k]], x[k]);
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    ys.push_back(y);
    xs.push_back(std::move(x));
  }
  if (ys.empty()) {
    throw io_error("no usable rows in " + path);
  }
  LoadResult result;
  result.dropped_rows = dropped;
  result.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  result.x.resize(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xcs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < xcs.size(); ++k) {
      result.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i][k];
    }
  }
  return result;
}

//! Fixed "%.12g" rendering keeps artifacts byte-identical across reruns.
inline std::string
format_double(double value)
{
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

class CsvWriter
{
public:
  explicit CsvWriter(const std::string& path)
    : out_(path)
  {
    if (!out_) {
      throw io_error("cannot write " + path);
    }
  }

  void row(const std::vector<std::string>& cells)
  {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) {
        out_ << ',';
      }
      out_ << cells[c];
    }
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

} // namespace lpcd::io
