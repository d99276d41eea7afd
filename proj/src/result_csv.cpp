// SPDX-License-Identifier: Apache-2.0
#include "dircov/errors.hpp"
#include "dircov/format.hpp"
#include "dircov/harness.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace dircov {

namespace {

constexpr std::string_view kProvenancePrefix = "# provenance: ";

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }
std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

std::optional<double> read_opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

std::optional<int> read_opt_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return static_cast<int>(parse_int(s));
}

}  // namespace

void write_results_csv(std::ostream& out, const ResultTable& table) {
  for (const auto& [key, value] : table.provenance) out << kProvenancePrefix << key << '=' << value << '\n';
  out << kResultHeader << '\n';
  for (const ResultRow& r : table.rows) {
    out << r.experiment << ',' << r.setting << ',' << opt(r.nu) << ',' << r.link << ','
        << opt(r.sigma_zeta) << ',' << r.dim << ',' << r.n << ',' << opt(r.j) << ',' << opt(r.trial)
        << ',' << r.metric << ',' << (std::isfinite(r.value) ? format_double(r.value) : "NA") << '\n';
  }
}

ResultTable read_results_csv(std::istream& in) {
  ResultTable table;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line.rfind(kProvenancePrefix, 0) == 0) {
        const std::string body = line.substr(kProvenancePrefix.size());
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw InputError("malformed provenance line " + std::to_string(line_no));
        table.provenance.emplace_back(body.substr(0, eq), body.substr(eq + 1));
        continue;
      }
      if (!line.empty() && line[0] == '#') continue;
      if (line != kResultHeader) {
        throw InputError("results header mismatch: expected '" + std::string(kResultHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11) throw InputError("results line " + std::to_string(line_no) + ": expected 11 fields");
    try {
      ResultRow r;
      r.experiment = f[0];
      r.setting = f[1];
      r.nu = read_opt_double(f[2]);
      r.link = f[3];
      r.sigma_zeta = read_opt_double(f[4]);
      r.dim = static_cast<Index>(parse_int(f[5]));
      r.n = static_cast<Index>(parse_int(f[6]));
      r.j = read_opt_int(f[7]);
      r.trial = read_opt_int(f[8]);
      r.metric = f[9];
      r.value = f[10] == "NA" ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[10]);
      table.rows.push_back(std::move(r));
    } catch (const InputError& e) {
      throw InputError("results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw InputError("results header missing");
  return table;
}

}  // namespace dircov
