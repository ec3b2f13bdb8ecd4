#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <type_traits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hklab/error.hpp"

namespace hklab {

/// Uniform cell-centered mesh of [left, right] with n cells.
class Grid1D {
 public:
  Grid1D(double left, double right, std::size_t n) : left_(left), right_(right), n_(n) {
    if (!(std::isfinite(left) && std::isfinite(right)) || !(right > left))
      raise(ErrorKind::BadParams, "grid requires finite left < right");
    if (n < 2) raise(ErrorKind::BadParams, "grid requires at least two cells");
  }

  double left() const noexcept { return left_; }
  double right() const noexcept { return right_; }
  std::size_t size() const noexcept { return n_; }
  double h() const noexcept { return (right_ - left_) / static_cast<double>(n_); }
  double center(std::size_t i) const noexcept { return left_ + (static_cast<double>(i) + 0.5) * h(); }

  std::vector<double> centers() const {
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = center(i);
    return x;
  }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  double left_;
  double right_;
  std::size_t n_;
};

/// Nonnegative density (against Lebesgue) sampled at the cell centers of a grid.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Grid1D grid, std::vector<double> density) : grid_(grid), density_(std::move(density)) {
    if (density_.size() != grid_.size()) raise(ErrorKind::BadParams, "density length does not match grid");
    for (double v : density_)
      if (!std::isfinite(v) || v < 0.0) raise(ErrorKind::BadParams, "density values must be finite and >= 0");
  }

  static DiscreteMeasure zero(const Grid1D& grid) { return {grid, std::vector<double>(grid.size(), 0.0)}; }
  static DiscreteMeasure constant(const Grid1D& grid, double value) {
    return {grid, std::vector<double>(grid.size(), value)};
  }

  const Grid1D& grid() const noexcept { return grid_; }
  std::span<const double> density() const noexcept { return density_; }
  const std::vector<double>& values() const noexcept { return density_; }
  std::size_t size() const noexcept { return density_.size(); }
  double operator[](std::size_t i) const noexcept { return density_[i]; }

  /// Same grid, new density values (validated).
  DiscreteMeasure with_density(std::vector<double> density) const { return {grid_, std::move(density)}; }

  DiscreteMeasure scaled(double c) const {
    if (!(c >= 0.0) || !std::isfinite(c)) raise(ErrorKind::BadParams, "scale factor must be finite and >= 0");
    std::vector<double> d(density_);
    for (double& v : d) v *= c;
    return {grid_, std::move(d)};
  }

  bool strictly_positive() const noexcept {
    for (double v : density_)
      if (!(v > 0.0)) return false;
    return true;
  }

 private:
  Grid1D grid_;
  std::vector<double> density_;
};

inline void require_same_grid(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (!(a.grid() == b.grid())) raise(ErrorKind::BadParams, "measures live on different grids");
}

inline double mass(const DiscreteMeasure& mu) {
  double s = 0.0;
  for (double v : mu.density()) s += v;
  return mu.grid().h() * s;
}

/// Linear combination a*mu + b*nu; coefficients must keep the result nonnegative.
inline DiscreteMeasure combine(double a, const DiscreteMeasure& mu, double b, const DiscreteMeasure& nu) {
  require_same_grid(mu, nu);
  std::vector<double> d(mu.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a * mu[i] + b * nu[i];
  return mu.with_density(std::move(d));
}

struct ShapeMass {
  double mass;
  DiscreteMeasure shape;
};

inline ShapeMass normalize(const DiscreteMeasure& mu) {
  const double z = mass(mu);
  if (!(z > 0.0)) raise(ErrorKind::ZeroMass, "cannot normalize a measure with zero mass");
  std::vector<double> d(mu.values());
  for (double& v : d) v /= z;
  return {z, mu.with_density(std::move(d))};
}

/// Pointwise dmu/dpi with the convention 0/0 = 0.
inline std::vector<double> density_ratio(const DiscreteMeasure& mu, const DiscreteMeasure& pi) {
  require_same_grid(mu, pi);
  std::vector<double> r(mu.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (pi[i] > 0.0) {
      r[i] = mu[i] / pi[i];
    } else if (mu[i] > 0.0) {
      raise(ErrorKind::SupportMismatch, "mu has mass in cell " + std::to_string(i) + " where pi vanishes");
    } else {
      r[i] = 0.0;
    }
  }
  return r;
}

// Experiment targets.

struct GaussianBump {
  double mean;
  double sd;
};

namespace target {
struct Uniform {};
struct Gaussian {
  double mean;
  double sd;
};
struct Mixture {
  std::vector<double> weights;
  std::vector<GaussianBump> bumps;
};
/// pi proportional to exp(-V) with an asymmetric double well V of depth scale `a`.
struct DoubleWell {
  double a;
};
}  // namespace target

using TargetKind = std::variant<target::Uniform, target::Gaussian, target::Mixture, target::DoubleWell>;

namespace detail {

inline double gaussian_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline void check_bump(const Grid1D& grid, double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd))
    raise(ErrorKind::BadParams, "gaussian needs finite mean and sd > 0");
  if (mean < grid.left() || mean > grid.right()) raise(ErrorKind::BadParams, "gaussian mean outside the domain");
}

inline std::vector<double> unit_mass(const Grid1D& grid, std::vector<double> d) {
  double s = 0.0;
  for (double v : d) s += v;
  s *= grid.h();
  if (!(s > 0.0) || !std::isfinite(s)) raise(ErrorKind::BadParams, "target density underflows on this grid");
  for (double& v : d) {
    v /= s;
    if (!(v > 0.0)) raise(ErrorKind::BadParams, "target density is not strictly positive on the grid");
  }
  return d;
}

}  // namespace detail

/// Double-well potential on the normalized coordinate u in (-1, 1); wells near u = +-1/2,
/// the left one deeper.
inline double double_well_potential(const Grid1D& grid, double a, double x) {
  const double u = 2.0 * (x - grid.left()) / (grid.right() - grid.left()) - 1.0;
  const double w = 4.0 * u * u - 1.0;
  return a * (w * w + 0.25 * u);
}

inline DiscreteMeasure make_target(const TargetKind& kind, const Grid1D& grid) {
  const std::size_t n = grid.size();
  std::vector<double> d(n);
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, target::Uniform>) {
          const double v = 1.0 / (grid.right() - grid.left());
          for (auto& x : d) x = v;
        } else if constexpr (std::is_same_v<K, target::Gaussian>) {
          detail::check_bump(grid, k.mean, k.sd);
          for (std::size_t i = 0; i < n; ++i) d[i] = detail::gaussian_pdf(grid.center(i), k.mean, k.sd);
          d = detail::unit_mass(grid, std::move(d));
        } else if constexpr (std::is_same_v<K, target::Mixture>) {
          if (k.weights.empty() || k.weights.size() != k.bumps.size())
            raise(ErrorKind::BadParams, "mixture needs one weight per component");
          double wsum = 0.0;
          for (double w : k.weights) {
            if (!(w > 0.0) || !std::isfinite(w)) raise(ErrorKind::BadParams, "mixture weights must be positive");
            wsum += w;
          }
          for (const auto& b : k.bumps) detail::check_bump(grid, b.mean, b.sd);
          for (std::size_t i = 0; i < n; ++i) {
            double v = 0.0;
            for (std::size_t c = 0; c < k.bumps.size(); ++c)
              v += k.weights[c] / wsum * detail::gaussian_pdf(grid.center(i), k.bumps[c].mean, k.bumps[c].sd);
            d[i] = v;
          }
          d = detail::unit_mass(grid, std::move(d));
        } else {
          if (!(k.a > 0.0) || !std::isfinite(k.a)) raise(ErrorKind::BadParams, "double well depth must be positive");
          for (std::size_t i = 0; i < n; ++i) d[i] = std::exp(-double_well_potential(grid, k.a, grid.center(i)));
          d = detail::unit_mass(grid, std::move(d));
        }
      },
      kind);
  return {grid, std::move(d)};
}

}  // namespace hklab
