#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hklab/entropy.hpp"
#include "hklab/error.hpp"
#include "hklab/measures.hpp"
#include "hklab/metrics.hpp"

namespace hklab {

/// Dissipation geometry with transport weight alpha and reaction weight beta. Pure transport uses
/// only alpha, pure (spherical) Hellinger only beta.
struct Geometry {
  enum class Kind { Wasserstein, Hellinger, SphericalHellinger, HK, SHK };

  Kind kind;
  double alpha;
  double beta;

  static Geometry wasserstein(double alpha = 1.0) { return checked({Kind::Wasserstein, alpha, 0.0}); }
  static Geometry hellinger(double beta = 1.0) { return checked({Kind::Hellinger, 0.0, beta}); }
  static Geometry spherical_hellinger(double beta = 1.0) { return checked({Kind::SphericalHellinger, 0.0, beta}); }
  static Geometry hk(double alpha, double beta) { return checked({Kind::HK, alpha, beta}); }
  static Geometry shk(double alpha, double beta) { return checked({Kind::SHK, alpha, beta}); }

  bool has_transport() const noexcept { return alpha > 0.0; }
  bool has_reaction() const noexcept { return beta > 0.0; }
  bool is_spherical() const noexcept { return kind == Kind::SphericalHellinger || kind == Kind::SHK; }

  static Geometry checked(Geometry g) {
    if (!(g.alpha >= 0.0) || !(g.beta >= 0.0) || !std::isfinite(g.alpha) || !std::isfinite(g.beta))
      raise(ErrorKind::BadParams, "geometry weights must be finite and >= 0");
    if (!(g.alpha + g.beta > 0.0)) raise(ErrorKind::BadParams, "geometry needs alpha + beta > 0");
    return g;
  }
};

inline std::string to_string(Geometry::Kind kind) {
  switch (kind) {
    case Geometry::Kind::Wasserstein: return "w";
    case Geometry::Kind::Hellinger: return "he";
    case Geometry::Kind::SphericalHellinger: return "she";
    case Geometry::Kind::HK: return "hk";
    case Geometry::Kind::SHK: return "shk";
  }
  return "?";
}

/// delta D_phi_p / delta mu = phi_p'(dmu/dpi), cellwise. Cells outside the support of pi get 0.
inline std::vector<double> first_variation(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p) {
  const std::vector<double> r = density_ratio(mu, pi);
  std::vector<double> psi(r.size(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(pi[i] > 0.0)) continue;
    if (r[i] == 0.0 && p.p <= 1.0)
      raise(ErrorKind::LogOfZero, "first variation is -inf at empty cell " + std::to_string(i));
    psi[i] = dphi(p, r[i]);
  }
  return psi;
}

/// Cell gradient: central differences inside, one-sided at the two boundary cells.
inline std::vector<double> cell_gradient(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> g(n);
  g[0] = (f[1] - f[0]) / h;
  g[n - 1] = (f[n - 1] - f[n - 2]) / h;
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return g;
}

namespace detail {

inline bool ratio_is_constant(std::span<const double> r) {
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  return *hi - *lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(*hi);
}

}  // namespace detail

/// int mu |d/dx phi_p'(dmu/dpi)|^2 dx. A constant density ratio gives exactly zero.
inline double dissipation_w(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p) {
  const std::vector<double> r = density_ratio(mu, pi);
  if (detail::ratio_is_constant(r)) return 0.0;
  const std::vector<double> psi = first_variation(mu, pi, p);
  const double h = mu.grid().h();
  const std::vector<double> g = cell_gradient(psi, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += mu[i] * g[i] * g[i];
  return h * sum;
}

/// int mu (phi_p'(dmu/dpi))^2 dx; empty cells contribute the r -> 0 limit of r phi_p'(r)^2.
inline double dissipation_he(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p) {
  const std::vector<double> r = density_ratio(mu, pi);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(pi[i] > 0.0)) continue;
    const double v = s_dphi_squared(p, r[i]);
    if (std::isinf(v)) return kInf;
    sum += pi[i] * v;
  }
  return mu.grid().h() * sum;
}

/// int r phi'(r)^2 dpi - (int r phi'(r) dpi)^2 for a probability measure rho = r pi, evaluated in
/// centered form so that it stays nonnegative.
inline double dissipation_she(const DiscreteMeasure& rho, const DiscreteMeasure& pi, EntropyOrder p) {
  require_probability(rho, "dissipation_she");
  const std::vector<double> r = density_ratio(rho, pi);
  const double h = rho.grid().h();
  double mean = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(pi[i] > 0.0)) continue;
    const double v = s_dphi(p, r[i]);
    if (std::isinf(v)) return kInf;
    mean += h * pi[i] * v;
    weight += h * pi[i] * r[i];
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(pi[i] > 0.0)) continue;
    double term;
    if (r[i] > 0.0) {
      const double d = dphi(p, r[i]) - mean;
      term = r[i] * d * d;
    } else {
      term = s_dphi_squared(p, 0.0) - 2.0 * mean * s_dphi(p, 0.0);
    }
    if (std::isinf(term)) return kInf;
    sum += h * pi[i] * term;
  }
  return std::max(0.0, sum + mean * mean * (1.0 - weight));
}

inline double dissipation_total(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p,
                                const Geometry& g) {
  double total = 0.0;
  if (g.alpha > 0.0) total += g.alpha * dissipation_w(mu, pi, p);
  if (g.beta > 0.0)
    total += g.beta * (g.is_spherical() ? dissipation_she(mu, pi, p) : dissipation_he(mu, pi, p));
  return total;
}

}  // namespace hklab
