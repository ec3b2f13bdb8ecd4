#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "hklab/error.hpp"
#include "hklab/measures.hpp"

namespace hklab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponent p of the power entropy family
///   phi_p(s) = (s^p - p s + p - 1) / (p (p - 1)),
/// with the closed-form limits at p = 1 (KL) and p = 0 (forward KL).
struct EntropyOrder {
  double p;

  constexpr explicit EntropyOrder(double p_) : p(p_) {}

  static constexpr EntropyOrder kl() { return EntropyOrder{1.0}; }
  static constexpr EntropyOrder forward_kl() { return EntropyOrder{0.0}; }
  static constexpr EntropyOrder chi_squared() { return EntropyOrder{2.0}; }
  static constexpr EntropyOrder reverse_chi_squared() { return EntropyOrder{-1.0}; }
  static constexpr EntropyOrder hellinger() { return EntropyOrder{0.5}; }

  bool is_kl() const noexcept { return p == 1.0; }
  bool is_forward_kl() const noexcept { return p == 0.0; }
};

namespace detail {

inline void check_argument(double s) {
  if (!(s >= 0.0)) raise(ErrorKind::NegativeInput, "entropy argument must be >= 0");
}

// Taylor expansion of phi_p around s = 1; coefficients a_2 = 1/2, a_{k+1} = a_k (p - k) / (k + 1).
inline double phi_series(double p, double e) {
  double coeff = 0.5;
  double power = e * e;
  double sum = coeff * power;
  for (int k = 2; k < 40; ++k) {
    coeff *= (p - k) / (k + 1);
    power *= e;
    const double term = coeff * power;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace detail

inline double phi(EntropyOrder order, double s) {
  detail::check_argument(s);
  const double p = order.p;
  if (s == 0.0) {
    if (p == 1.0) return 1.0;
    return p > 0.0 ? 1.0 / p : kInf;
  }
  if (std::isinf(s)) return kInf;
  const double e = s - 1.0;
  if (std::abs(e) < 0.05) return detail::phi_series(p, e);
  if (p == 1.0) return s * std::log(s) - s + 1.0;
  if (p == 0.0) return s - 1.0 - std::log(s);
  return (std::expm1(p * std::log(s)) - p * e) / (p * (p - 1.0));
}

/// phi_p'(s); the s = 0 value is the one-sided limit (-inf for p <= 1).
inline double dphi(EntropyOrder order, double s) {
  detail::check_argument(s);
  const double p = order.p;
  if (s == 0.0) return p > 1.0 ? 1.0 / (1.0 - p) : -kInf;
  if (p == 1.0) return std::log(s);
  if (p == 0.0) return 1.0 - 1.0 / s;
  return std::expm1((p - 1.0) * std::log(s)) / (p - 1.0);
}

inline double d2phi(EntropyOrder order, double s) {
  detail::check_argument(s);
  return std::pow(s, order.p - 2.0);
}

/// s * phi_p'(s), continuously extended to s = 0.
inline double s_dphi(EntropyOrder order, double s) {
  if (s == 0.0) {
    if (order.p > 0.0) return 0.0;
    return order.p == 0.0 ? -1.0 : -kInf;
  }
  return s * dphi(order, s);
}

/// s * phi_p'(s)^2, continuously extended to s = 0 (0 for p > 1/2, 4 at p = 1/2, +inf below).
inline double s_dphi_squared(EntropyOrder order, double s) {
  if (s == 0.0) {
    if (order.p > 0.5) return 0.0;
    return order.p == 0.5 ? 4.0 : kInf;
  }
  const double d = dphi(order, s);
  return s * d * d;
}

/// D_phi(mu | pi) for a user-supplied convex generator with phi(1) = 0. Returns +inf when mu is
/// not absolutely continuous with respect to pi.
template <class Generator>
double divergence_with(const DiscreteMeasure& mu, const DiscreteMeasure& pi, Generator&& generator) {
  require_same_grid(mu, pi);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (pi[i] > 0.0) {
      const double v = generator(mu[i] / pi[i]);
      if (std::isinf(v)) return kInf;
      sum += pi[i] * v;
    } else if (mu[i] > 0.0) {
      return kInf;
    }
  }
  return mu.grid().h() * sum;
}

inline double divergence(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder order) {
  return divergence_with(mu, pi, [order](double s) { return phi(order, s); });
}

/// I_alpha(r) = int r^alpha dpi; +inf when r vanishes somewhere and alpha < 0.
inline double moment(std::span<const double> r, const DiscreteMeasure& pi, double alpha) {
  if (r.size() != pi.size()) raise(ErrorKind::BadParams, "ratio length does not match pi");
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(pi[i] > 0.0)) continue;
    if (r[i] < 0.0) raise(ErrorKind::NegativeInput, "density ratio must be >= 0");
    double v;
    if (r[i] == 0.0) {
      if (alpha < 0.0) return kInf;
      v = alpha == 0.0 ? 1.0 : 0.0;
    } else {
      v = std::pow(r[i], alpha);
    }
    sum += pi[i] * v;
  }
  return pi.grid().h() * sum;
}

}  // namespace hklab
