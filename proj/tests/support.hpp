#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hklab/measures.hpp"

namespace hklab::testing {

/// Seeded generator of random grids and measures for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return a + (b - a) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  /// Strictly positive smooth-ish density: exp of a random walk, scaled to the given mass.
  DiscreteMeasure positive(const Grid1D& grid, double total_mass = 1.0, double roughness = 0.3) {
    std::vector<double> d(grid.size());
    double log_v = 0.0;
    for (double& v : d) {
      log_v += uniform(-roughness, roughness);
      v = std::exp(log_v);
    }
    return normalize(DiscreteMeasure(grid, std::move(d))).shape.scaled(total_mass);
  }

  DiscreteMeasure probability(const Grid1D& grid) { return positive(grid, 1.0); }

  /// Nonnegative density with roughly a third of the cells empty.
  DiscreteMeasure sparse(const Grid1D& grid) {
    std::vector<double> d(grid.size());
    for (double& v : d) v = uniform(0.0, 1.0) < 0.33 ? 0.0 : uniform(0.1, 3.0);
    d[0] = 1.0;
    return DiscreteMeasure(grid, std::move(d));
  }

 private:
  std::mt19937_64 rng_;
};

inline double l1(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return a.grid().h() * s;
}

inline double max_abs_diff(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

}  // namespace hklab::testing
