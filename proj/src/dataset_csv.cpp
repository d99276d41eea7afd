// SPDX-License-Identifier: Apache-2.0
#include "dircov/errors.hpp"
#include "dircov/estimators.hpp"
#include "dircov/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace dircov {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InputError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InputError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

unsigned long long parse_u64(std::string_view s) {
  s = trim(s);
  unsigned long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InputError("not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("dataset CSV: missing header");
  const auto header = split(trim(line), ',');
  bool with_y = !header.empty() && trim(header.back()) == "y";
  const std::size_t dim = header.size() - (with_y ? 1 : 0);
  if (dim == 0) throw InputError("dataset CSV: no feature columns");
  for (std::size_t j = 0; j < dim; ++j) {
    if (trim(header[j]) != "x" + std::to_string(j + 1)) {
      throw InputError("dataset CSV: expected column x" + std::to_string(j + 1));
    }
  }

  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw InputError("dataset CSV: wrong field count on line " + std::to_string(line_no));
    }
    for (std::size_t j = 0; j < dim; ++j) xs.push_back(parse_double(cells[j]));
    if (with_y) ys.push_back(parse_double(cells.back()));
  }
  const Index n = static_cast<Index>(xs.size() / dim);
  if (n == 0) throw InputError("dataset CSV: no rows");
  Matrix x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), n, static_cast<Index>(dim));
  if (!with_y) return Dataset(std::move(x));
  return Dataset(std::move(x), Eigen::Map<const Vector>(ys.data(), n));
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (Index j = 0; j < data.dim(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
  if (data.has_y()) out << ",y";
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) out << (j ? "," : "") << format_double(data.x()(i, j));
    if (data.has_y()) out << ',' << format_double(data.y()(i));
    out << '\n';
  }
}

}  // namespace dircov
