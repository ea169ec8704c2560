#pragma once

// Plain CSV tables with a fixed number format, so that identical runs give
// byte-identical files.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volterra/levy.hpp"
#include "volterra/pathbuild.hpp"

namespace volterra::io {

/// Shortest round-trip-safe rendering ("%.17g").
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw std::logic_error("table row width does not match header");
    rows.push_back(std::move(row));
  }
  template <class... Ts>
  void add_numbers(Ts... xs) {
    add({format_double(static_cast<double>(xs))...});
  }
};

inline void write_csv(std::ostream& os, const Table& t) {
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline void write_csv_file(const std::string& path, const Table& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(os, t);
}

/// time,value,jump_size for a driver path.
inline Table path_table(const LevyPath& path) {
  Table t{{"time", "value", "jump_size"}, {}};
  for (std::size_t i = 0; i < path.size(); ++i) t.add_numbers(path.times[i], path.values[i], path.jump_sizes[i]);
  return t;
}

/// time,value,jump_size for a Volterra path (jump_size is the observed jump of M).
inline Table path_table(const VolterraPath& path) {
  Table t{{"time", "value", "jump_size"}, {}};
  std::size_t j = 0;
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    double jump = 0.0;
    while (j < path.jumps.size() && path.jumps[j].time < path.times[i]) ++j;
    if (j < path.jumps.size() && path.jumps[j].time == path.times[i]) jump = path.jumps[j].size;
    t.add_numbers(path.times[i], path.values[i], jump);
  }
  return t;
}

}  // namespace volterra::io
