#pragma once

#include "ultracarl/core.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

inline std::string data_path(const std::string& rel) { return std::string(ULTRACARL_SOURCE_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<double> numbers(const std::string& s) {
  std::istringstream in(s);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

struct GoldenWeight {
  int m, n;
  double a, b, eps;
  ultracarl::SpaceTimePoint p, q;
  double log_zeta;
};

/// Rows of tests/data/weight_golden.csv (vectors are space separated).
inline std::vector<GoldenWeight> golden_weights() {
  std::ifstream in(data_path("tests/data/weight_golden.csv"));
  std::string line;
  std::getline(in, line);
  std::vector<GoldenWeight> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() != 10) continue;
    GoldenWeight g;
    g.m = std::stoi(c[0]);
    g.n = std::stoi(c[1]);
    g.a = std::stod(c[2]);
    g.b = std::stod(c[3]);
    g.eps = std::stod(c[4]);
    g.p = {ultracarl::make_vector(numbers(c[5])), ultracarl::make_vector(numbers(c[6]))};
    g.q = {ultracarl::make_vector(numbers(c[7])), ultracarl::make_vector(numbers(c[8]))};
    g.log_zeta = std::stod(c[9]);
    rows.push_back(g);
  }
  return rows;
}

}  // namespace testutil
