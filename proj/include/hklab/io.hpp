#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/flows.hpp"
#include "hklab/measures.hpp"

namespace hklab::io {

/// `%.12e`, the fixed numeric format of every CSV this library writes.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::BadParams, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) raise(ErrorKind::BadParams, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    raise(ErrorKind::BadParams, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline std::string measure_csv(const DiscreteMeasure& mu) {
  std::string s = "x,density\n";
  for (std::size_t i = 0; i < mu.size(); ++i) s += fmt(mu.grid().center(i)) + "," + fmt(mu[i]) + "\n";
  return s;
}

/// Reads `x,density` rows (header required). The grid is rebuilt from the first two centers.
inline DiscreteMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,density", 0) != 0)
    raise(ErrorKind::BadParams, "measure CSV must start with header x,density");
  std::vector<double> xs;
  std::vector<double> ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a;
    std::string b;
    if (!std::getline(row, a, ',') || !std::getline(row, b)) raise(ErrorKind::BadParams, "malformed row: " + line);
    try {
      xs.push_back(std::stod(a));
      ds.push_back(std::stod(b));
    } catch (const std::exception&) {
      raise(ErrorKind::BadParams, "non-numeric row: " + line);
    }
  }
  if (xs.size() < 2) raise(ErrorKind::BadParams, "measure CSV needs at least two rows");
  const double h = xs[1] - xs[0];
  const Grid1D grid(xs.front() - 0.5 * h, xs.back() + 0.5 * h, xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (std::abs(grid.center(i) - xs[i]) > 1e-9 * (1.0 + std::abs(xs[i])))
      raise(ErrorKind::BadParams, "measure CSV centers are not uniformly spaced");
  return {grid, std::move(ds)};
}

inline std::string trace_csv(const DecayTrace& trace) {
  std::string s = "t,divergence,mass,dissipation";
  for (const AuxSeries& a : trace.aux) s += ",aux_q=" + fmt(a.q);
  s += "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    s += fmt(trace.times[i]) + "," + fmt(trace.divergence[i]) + "," + fmt(trace.mass[i]) + "," +
         fmt(trace.dissipation[i]);
    for (const AuxSeries& a : trace.aux) s += "," + fmt(a.values[i]);
    s += "\n";
  }
  return s;
}

}  // namespace hklab::io
