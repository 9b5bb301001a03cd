#pragma once

// Text formats used by the command line tool.
//
//   matrix:     "rows cols" then one line per row
//   partition:  one line of block sizes
//   columns:    "nblocks", then per block column its width b followed by
//               the (d_{n-1} + b) x b column as a matrix

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "incexpm/block.hpp"
#include "incexpm/generators.hpp"

namespace incexpm {

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
T read_value(std::istream& is, const char* what) {
  T v{};
  if (!(is >> v)) throw ParseError(std::string("expected ") + what);
  return v;
}

inline double read_double(std::istream& is, const char* what) {
  std::string tok;
  if (!(is >> tok)) throw ParseError(std::string("expected ") + what);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(std::string("bad number '") + tok + "' for " + what);
  }
  if (used != tok.size()) throw ParseError(std::string("bad number '") + tok + "' for " + what);
  if (!std::isfinite(v)) throw ParseError(std::string("non-finite entry '") + tok + "'");
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

inline DenseMatrix read_matrix(std::istream& is) {
  long long rows = detail::read_value<long long>(is, "row count");
  long long cols = detail::read_value<long long>(is, "column count");
  if (rows < 0 || cols < 0) throw ParseError("negative matrix dimension");
  DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) {
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = detail::read_double(is, "matrix entry");
    }
  }
  return m;
}

inline void write_matrix(std::ostream& os, ConstMatrixView m) {
  os << m.rows << ' ' << m.cols << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (j) os << ' ';
      os << detail::format_double(m(i, j));
    }
    os << '\n';
  }
}

inline void write_matrix(std::ostream& os, const DenseMatrix& m) { write_matrix(os, m.view()); }

inline DenseMatrix read_matrix_file(const std::string& path) {
  auto in = detail::open_in(path);
  return read_matrix(in);
}

inline void write_matrix_file(const std::string& path, const DenseMatrix& m) {
  auto out = detail::open_out(path);
  write_matrix(out, m);
  if (!out) throw ParseError("write to '" + path + "' failed");
}

inline Partition read_partition(std::istream& is) {
  std::string line;
  std::getline(is, line);
  std::istringstream ls(line);
  Partition p;
  long long b = 0;
  while (ls >> b) {
    if (b <= 0) throw ParseError("partition: block sizes must be positive");
    p.push_back(static_cast<std::size_t>(b));
  }
  if (!ls.eof()) throw ParseError("partition: bad entry in '" + line + "'");
  return p;
}

inline void write_partition(std::ostream& os, const Partition& p) {
  for (std::size_t l = 0; l < p.num_blocks(); ++l) {
    if (l) os << ' ';
    os << p.size(l);
  }
  os << '\n';
}

/// Initial block plus the appended block columns of a nested sequence.
struct ColumnStream {
  DenseMatrix initial;
  std::vector<BlockColumn> columns;
};

inline ColumnStream read_block_columns(std::istream& is) {
  const long long nblocks = detail::read_value<long long>(is, "block count");
  if (nblocks <= 0) throw ParseError("columns: need at least one block");
  ColumnStream s;
  std::size_t d = 0;
  for (long long n = 0; n < nblocks; ++n) {
    const long long b = detail::read_value<long long>(is, "block width");
    if (b <= 0) throw ParseError("columns: block widths must be positive");
    const DenseMatrix col = read_matrix(is);
    const std::size_t bw = static_cast<std::size_t>(b);
    if (col.rows() != d + bw || col.cols() != bw) {
      throw ParseError("columns: block column " + std::to_string(n) + " is " +
                       shape_string(col.rows(), col.cols()) + ", expected " +
                       shape_string(d + bw, bw));
    }
    if (n == 0) {
      s.initial = col;
    } else {
      s.columns.emplace_back(col.block(0, 0, d, bw), col.block(d, 0, bw, bw));
    }
    d += bw;
  }
  return s;
}

inline ColumnStream read_block_columns_file(const std::string& path) {
  auto in = detail::open_in(path);
  return read_block_columns(in);
}

inline void write_block_columns(std::ostream& os, const BlockTriangularMatrix& m) {
  const Partition& p = m.partition();
  os << p.num_blocks() << '\n';
  for (std::size_t l = 0; l < p.num_blocks(); ++l) {
    os << p.size(l) << '\n';
    write_matrix(os, m.data().view(0, p.begin(l), p.end(l), p.size(l)));
  }
}

// ---------------------------------------------------------------------------
// Model parameters "key=val,key=val"

inline std::map<std::string, double> parse_params(const std::string& text) {
  static const char* const keys[] = {"kappa", "theta", "sigma", "r", "rho", "vmin", "vmax", "tau"};
  std::map<std::string, double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("params: '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ParseError("params: unknown key '" + key + "'");
    std::istringstream vs(item.substr(eq + 1));
    out[key] = detail::read_double(vs, key.c_str());
  }
  return out;
}

namespace detail {

inline double require_param(const std::map<std::string, double>& m, const char* key) {
  auto it = m.find(key);
  if (it == m.end()) throw ParseError(std::string("params: missing '") + key + "'");
  return it->second;
}

inline double optional_param(const std::map<std::string, double>& m, const char* key, double def) {
  auto it = m.find(key);
  return it == m.end() ? def : it->second;
}

}  // namespace detail

inline JacobiParams jacobi_params_from(const std::map<std::string, double>& m) {
  JacobiParams p;
  p.kappa = detail::require_param(m, "kappa");
  p.theta = detail::require_param(m, "theta");
  p.sigma = detail::require_param(m, "sigma");
  p.r = detail::optional_param(m, "r", 0.0);
  p.rho = detail::optional_param(m, "rho", 0.0);
  p.vmin = detail::require_param(m, "vmin");
  p.vmax = detail::require_param(m, "vmax");
  p.validate();
  return p;
}

inline HestonParams heston_params_from(const std::map<std::string, double>& m) {
  HestonParams p;
  p.kappa = detail::require_param(m, "kappa");
  p.theta = detail::require_param(m, "theta");
  p.sigma = detail::require_param(m, "sigma");
  p.r = detail::optional_param(m, "r", 0.0);
  p.rho = detail::optional_param(m, "rho", 0.0);
  p.validate();
  return p;
}

}  // namespace incexpm
