#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hklab/dissipation.hpp"
#include "hklab/entropy.hpp"
#include "hklab/error.hpp"
#include "hklab/measures.hpp"
#include "hklab/metrics.hpp"

namespace hklab {

/// Log-spaced sampling of (s_min, s_max) with golden-section polishing around the extremum.
struct ScanConfig {
  double s_min = 1e-12;
  double s_max = 1e12;
  std::size_t points = 4001;
  int refine_iters = 80;
  double divergence_threshold = 1e12;

  void validate() const {
    if (!(s_min > 0.0) || !(s_min < 1.0) || !(s_max > 1.0) || !std::isfinite(s_max))
      raise(ErrorKind::BadParams, "scan range must satisfy 0 < s_min < 1 < s_max");
    if (points < 100) raise(ErrorKind::BadParams, "scan needs at least 100 points");
    if (refine_iters < 0) raise(ErrorKind::BadParams, "refine_iters must be >= 0");
    if (!(divergence_threshold > 0.0)) raise(ErrorKind::BadParams, "divergence threshold must be positive");
  }

  std::vector<double> samples() const {
    std::vector<double> s(points);
    const double a = std::log(s_min);
    const double b = std::log(s_max);
    for (std::size_t i = 0; i < points; ++i)
      s[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    return s;
  }
};

namespace detail {

/// Golden-section search for the maximum of f(exp(u)) on [u_lo, u_hi].
template <class F>
double golden_max_log(F&& f, double u_lo, double u_hi, int iters) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = u_lo;
  double b = u_hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(std::exp(c));
  double fd = f(std::exp(d));
  double best = std::max(fc, fd);
  for (int k = 0; k < iters; ++k) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(std::exp(d));
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

/// Supremum of f over the scan grid, polished by golden section in log s around the grid argmax.
template <class F>
double scan_sup(F&& f, const ScanConfig& cfg) {
  cfg.validate();
  const std::vector<double> s = cfg.samples();
  std::vector<double> v(s.size());
  std::size_t arg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    v[i] = f(s[i]);
    if (v[i] > v[arg] || std::isnan(v[arg])) arg = i;
  }
  double best = v[arg];
  if (!std::isfinite(best) || cfg.refine_iters == 0) return best;
  const std::size_t lo = arg == 0 ? 0 : arg - 1;
  const std::size_t hi = std::min(arg + 1, s.size() - 1);
  return std::max(best, golden_max_log(f, std::log(s[lo]), std::log(s[hi]), cfg.refine_iters));
}

}  // namespace detail

/// Phi(s) = phi_p(s) / (s phi_p'(s)^2), extended by 1/2 at s = 1.
inline double he_ratio(EntropyOrder p, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) raise(ErrorKind::BadParams, "he_ratio needs finite s > 0");
  if (s == 1.0) return 0.5;
  const double d = dphi(p, s);
  return phi(p, s) / (s * d * d);
}

/// Best constant c in s phi'(s)^2 >= c phi(s), i.e. 1 / sup Phi. Zero when the sup diverges.
inline double loj_constant_he(EntropyOrder p, const ScanConfig& cfg = {}) {
  const double sup = detail::scan_sup([p](double s) { return he_ratio(p, s); }, cfg);
  if (!(sup < cfg.divergence_threshold)) return 0.0;
  return 1.0 / sup;
}

/// Spherical Hellinger constant: 1/(1-p) for p <= 1/3 and p(7-12p)/(1-p) on [1/3, 1/2].
inline double M_p(double p) {
  if (!(p <= 0.5)) raise(ErrorKind::OutOfRange, "M_p is defined for p <= 1/2");
  if (p <= 1.0 / 3.0) return 1.0 / (1.0 - p);
  return p * (7.0 - 12.0 * p) / (1.0 - p);
}

/// Spherical dissipation over divergence at a probability measure rho.
inline double she_ratio(const DiscreteMeasure& rho, const DiscreteMeasure& pi, EntropyOrder p) {
  require_probability(rho, "she_ratio");
  const double d = divergence(rho, pi, p);
  if (!(d > 0.0)) raise(ErrorKind::ZeroDivergence, "she_ratio needs a positive divergence");
  return dissipation_she(rho, pi, p) / d;
}

/// A probability target on two cells with weights (w, 1 - w) and the probability rho = r pi taking
/// level `low` on the first cell; the level on the second cell is fixed by unit mass.
struct TwoLevel {
  DiscreteMeasure rho;
  DiscreteMeasure pi;
};

inline TwoLevel two_level(double low_weight, double low_level) {
  const double w = low_weight;
  const double a = low_level;
  if (!(w > 0.0 && w < 1.0)) raise(ErrorKind::BadParams, "two-level weight must lie in (0, 1)");
  if (!(a >= 0.0) || !(a * w < 1.0)) raise(ErrorKind::BadParams, "two-level level must lie in [0, 1/w)");
  const double b = (1.0 - a * w) / (1.0 - w);
  const Grid1D grid(0.0, 1.0, 2);
  DiscreteMeasure pi(grid, {2.0 * w, 2.0 * (1.0 - w)});
  DiscreteMeasure rho(grid, {2.0 * w * a, 2.0 * (1.0 - w) * b});
  return {rho, pi};
}

/// The degenerating family rho = eps pi on a set of weight 1/(2 - eps), 2 pi elsewhere.
inline TwoLevel two_level_degenerate(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) raise(ErrorKind::BadParams, "eps must lie in (0, 1)");
  return two_level(1.0 / (2.0 - eps), eps);
}

struct SheScanConfig {
  std::size_t weight_points = 240;
  std::size_t level_points = 240;
  double logit_range = 14.0;     // weights and levels sampled at logistic(x), |x| <= logit_range
  double level_gap = 1e-4;       // skip |level - 1| below this; the ratio is 0/0 there
  std::vector<double> degenerate_eps = {0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
};

/// Infimum of she_ratio over two-level probability measures. Levels below one suffice: swapping the
/// two cells maps a > 1 onto a < 1.
inline double she_constant_scan(EntropyOrder p, const SheScanConfig& cfg = {}) {
  if (cfg.weight_points < 2 || cfg.level_points < 2 || !(cfg.logit_range > 0.0))
    raise(ErrorKind::BadParams, "two-level scan needs at least 2x2 points and a positive range");
  auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto axis = [&](std::size_t n, std::size_t i) {
    return -cfg.logit_range + 2.0 * cfg.logit_range * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  double best = kInf;
  auto consider = [&](const TwoLevel& t) {
    const double d = divergence(t.rho, t.pi, p);
    if (!(d > 0.0) || !std::isfinite(d)) return;
    const double v = dissipation_she(t.rho, t.pi, p) / d;
    if (std::isfinite(v)) best = std::min(best, v);
  };
  for (std::size_t i = 0; i < cfg.weight_points; ++i) {
    const double w = logistic(axis(cfg.weight_points, i));
    if (!(w > 0.0 && w < 1.0)) continue;
    for (std::size_t j = 0; j < cfg.level_points; ++j) {
      const double a = logistic(axis(cfg.level_points, j));
      if (std::abs(a - 1.0) < cfg.level_gap || !(a > 0.0)) continue;
      consider(two_level(w, a));
    }
  }
  for (double eps : cfg.degenerate_eps) consider(two_level_degenerate(eps));
  return best;
}

/// N_{p,q}(r) = r phi_p'(r) phi_q'(r) / phi_q(r), extended by 2 at r = 1.
inline double n_pq(double r, double p, double q) {
  if (!(r > 0.0) || !std::isfinite(r)) raise(ErrorKind::BadParams, "n_pq needs finite r > 0");
  if (r == 1.0) return 2.0;
  const EntropyOrder op(p);
  const EntropyOrder oq(q);
  return r * dphi(op, r) * dphi(oq, r) / phi(oq, r);
}

/// Limits of N_{p,q}(r) at r -> 0 and r -> infinity.
struct NpqLimits {
  double at_zero;
  double at_infinity;
};

inline NpqLimits n_pq_limits(double p, double q) {
  double zero;
  if (q < 0.0) {
    zero = p > 1.0 ? -q / (p - 1.0) : kInf;
  } else if (q == 0.0) {
    zero = p > 1.0 ? 0.0 : (p == 1.0 ? 1.0 : kInf);
  } else if (q < 1.0) {
    zero = p + q > 1.0 ? 0.0 : (p + q == 1.0 ? 1.0 / (1.0 - q) : kInf);
  } else if (q == 1.0) {
    zero = p > 0.0 ? 0.0 : kInf;
  } else {
    zero = p > 0.0 ? 0.0 : (p == 0.0 ? q / (q - 1.0) : kInf);
  }
  const double infinity = p >= 1.0 ? kInf : std::max(1.0, q) / (1.0 - p);
  return {zero, infinity};
}

/// m_{p,q} = inf_r N_{p,q}(r): grid infimum over the scan range combined with the endpoint limits.
inline double m_pq(double p, double q, const ScanConfig& cfg = {}) {
  const double neg_sup = detail::scan_sup([p, q](double r) { return -n_pq(r, p, q); }, cfg);
  const NpqLimits lim = n_pq_limits(p, q);
  return std::max(0.0, std::min({-neg_sup, lim.at_zero, lim.at_infinity}));
}

enum class SlopeKind { Zero, Finite, Infinite };

inline const char* to_string(SlopeKind k) {
  switch (k) {
    case SlopeKind::Zero: return "zero";
    case SlopeKind::Finite: return "finite";
    case SlopeKind::Infinite: return "infinite";
  }
  return "?";
}

struct SlopeResult {
  SlopeKind kind;
  double value;                 // last difference quotient (the limit estimate when finite)
  std::vector<double> quotients;
};

/// Difference quotients (D(0|pi) - D(r pi|pi))_+ / He(0, r pi) along r -> 0, classified by the
/// ratio of the last two quotients.
inline SlopeResult metric_slope_zero(EntropyOrder p, const DiscreteMeasure& pi, std::span<const double> r_grid,
                                     double trend_tolerance = 0.05) {
  require_probability(pi, "metric_slope_zero");
  if (r_grid.size() < 2) raise(ErrorKind::InsufficientData, "slope classification needs at least two radii");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0)) raise(ErrorKind::BadParams, "radii must be positive");
    if (i > 0 && !(r_grid[i] < r_grid[i - 1])) raise(ErrorKind::BadParams, "radii must decrease");
  }
  const DiscreteMeasure empty = DiscreteMeasure::zero(pi.grid());
  const double top = divergence(empty, pi, p);
  SlopeResult out{SlopeKind::Finite, 0.0, {}};
  if (std::isinf(top)) {
    out.kind = SlopeKind::Infinite;
    out.value = kInf;
    out.quotients.assign(r_grid.size(), kInf);
    return out;
  }
  for (double r : r_grid) {
    const DiscreteMeasure mu = pi.scaled(r);
    out.quotients.push_back(std::max(0.0, top - divergence(mu, pi, p)) / hellinger(empty, mu));
  }
  const std::size_t n = out.quotients.size();
  const double last = out.quotients[n - 1];
  const double prev = out.quotients[n - 2];
  out.value = last;
  if (last == 0.0 || last < prev * (1.0 - trend_tolerance)) {
    out.kind = SlopeKind::Zero;
  } else if (last > prev * (1.0 + trend_tolerance)) {
    out.kind = SlopeKind::Infinite;
  }
  return out;
}

struct CounterexampleValues {
  double dissipation_w;
  double dissipation_he;
  double divergence;
};

/// Dissipations and divergence at the constant multiple mu = r pi.
inline CounterexampleValues counterexample_scaled(const DiscreteMeasure& pi, double r, EntropyOrder p) {
  if (!(r > 0.0) || !std::isfinite(r)) raise(ErrorKind::BadParams, "scale must be finite and positive");
  const DiscreteMeasure mu = pi.scaled(r);
  return {dissipation_w(mu, pi, p), dissipation_he(mu, pi, p), divergence(mu, pi, p)};
}

struct LsiCheck {
  double lhs;
  double rhs_mplus;
  double rhs_scaled;
};

/// Transport dissipation of KL against the two mass-corrected right-hand sides c (D(mu|pi) - lambda(z))
/// and c D(mu|z pi), z = mass(mu), lambda(z) = z log z - z + 1.
inline LsiCheck generalized_lsi_check(const DiscreteMeasure& mu, const DiscreteMeasure& pi, double c_ref) {
  require_probability(pi, "generalized_lsi_check");
  if (!(c_ref >= 0.0) || !std::isfinite(c_ref)) raise(ErrorKind::BadParams, "c_ref must be finite and >= 0");
  const EntropyOrder kl = EntropyOrder::kl();
  const double z = mass(mu);
  const double lhs = dissipation_w(mu, pi, kl);
  const double rhs_mplus = c_ref * (divergence(mu, pi, kl) - phi(kl, z));
  const double rhs_scaled = z > 0.0 ? c_ref * divergence(mu, pi.scaled(z), kl) : 0.0;
  return {lhs, rhs_mplus, rhs_scaled};
}

}  // namespace hklab
