#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "grpadmm/run.hpp"

namespace grpadmm {

inline constexpr const char* kCsvHeader = "k,tau,sigma,objective,rel_gap,fes_gap,ergodic_objective,psnr,time_ms";

namespace detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::runtime_error("csv line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  using detail::format_double;
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.k << ',' << format_double(r.tau) << ',' << format_double(r.sigma) << ','
       << format_double(r.objective) << ',' << (r.rel_gap ? format_double(*r.rel_gap) : "") << ','
       << format_double(r.fes_gap) << ',' << format_double(r.ergodic_objective) << ','
       << (r.psnr ? format_double(*r.psnr) : "") << ',' << format_double(r.time_ms) << '\n';
  }
}

inline std::vector<MetricsRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("csv: unexpected header '" + line + "'");
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    if (f.size() != 9) throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected 9 fields");
    MetricsRow r;
    r.k = std::stol(f[0]);
    r.tau = detail::parse_double(f[1], lineno);
    r.sigma = detail::parse_double(f[2], lineno);
    r.objective = detail::parse_double(f[3], lineno);
    if (!f[4].empty()) r.rel_gap = detail::parse_double(f[4], lineno);
    r.fes_gap = detail::parse_double(f[5], lineno);
    r.ergodic_objective = detail::parse_double(f[6], lineno);
    if (!f[7].empty()) r.psnr = detail::parse_double(f[7], lineno);
    r.time_ms = detail::parse_double(f[8], lineno);
    rows.push_back(r);
  }
  return rows;
}

inline void write_csv_file(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(os, rows);
}

inline std::vector<MetricsRow> read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_csv(is);
}

}  // namespace grpadmm
