#pragma once

#include <algorithm>
#include <cmath>

#include "hklab/error.hpp"
#include "hklab/measures.hpp"

namespace hklab {

inline constexpr double kProbabilityTolerance = 1e-9;

inline void require_probability(const DiscreteMeasure& rho, const char* who) {
  if (std::abs(mass(rho) - 1.0) > kProbabilityTolerance)
    raise(ErrorKind::NotProbability, std::string(who) + " requires unit-mass input");
}

/// He(mu0, mu1)^2 = 4 int (sqrt(mu0) - sqrt(mu1))^2 dx. Finite for any pair of nonnegative
/// measures; note He(0, mu) = 2 sqrt(mass(mu)) in this normalization.
inline double hellinger(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1) {
  require_same_grid(mu0, mu1);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    const double d = std::sqrt(mu0[i]) - std::sqrt(mu1[i]);
    sum += d * d;
  }
  return std::sqrt(4.0 * mu0.grid().h() * sum);
}

/// Geodesic distance of the Hellinger geometry restricted to probability measures.
inline double spherical_hellinger(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1) {
  require_probability(rho0, "spherical_hellinger");
  require_probability(rho1, "spherical_hellinger");
  const double he = hellinger(rho0, rho1);
  return 4.0 * std::asin(std::min(1.0, 0.25 * he));
}

/// SHK_{alpha,beta} from HK_{alpha,beta}: (4/sqrt(beta)) asin(sqrt(beta)/4 * hk).
inline double shk_from_hk(double hk, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) raise(ErrorKind::BadParams, "beta must be positive");
  const double arg = 0.25 * std::sqrt(beta) * hk;
  if (!(arg >= 0.0) || arg > 1.0) raise(ErrorKind::OutOfRange, "sqrt(beta)/4 * hk must lie in [0, 1]");
  return 4.0 / std::sqrt(beta) * std::asin(arg);
}

/// Point s of the Hellinger geodesic ((1-s) sqrt(mu0) + s sqrt(mu1))^2.
inline DiscreteMeasure hellinger_geodesic(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double s) {
  require_same_grid(mu0, mu1);
  if (!(s >= 0.0 && s <= 1.0)) raise(ErrorKind::BadParams, "geodesic parameter must lie in [0, 1]");
  if (s == 0.0) return mu0;
  if (s == 1.0) return mu1;
  std::vector<double> d(mu0.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = (1.0 - s) * std::sqrt(mu0[i]) + s * std::sqrt(mu1[i]);
    d[i] = a * a;
  }
  return mu0.with_density(std::move(d));
}

}  // namespace hklab
