#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hklab/entropy.hpp"
#include "hklab/error.hpp"
#include "hklab/flows.hpp"
#include "hklab/measures.hpp"
#include "hklab/metrics.hpp"

namespace hklab {

/// z(t) = z_* (z0/z_*)^(exp(-beta t)) exp(-beta h(t)) at each (t, h) pair.
inline std::vector<double> mass_ode_solution(double z0, double z_star, double beta, std::span<const double> times,
                                             std::span<const double> h_values) {
  if (!(z0 > 0.0) || !(z_star > 0.0) || !(beta > 0.0))
    raise(ErrorKind::BadParams, "mass solution needs z0, z_star, beta > 0");
  if (times.size() != h_values.size()) raise(ErrorKind::BadParams, "times and h values differ in length");
  const double log_ratio = std::log(z0 / z_star);
  std::vector<double> z(times.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = z_star * std::exp(std::exp(-beta * times[i]) * log_ratio - beta * h_values[i]);
  return z;
}

/// h(t) = int_0^t exp(-beta (t - s)) kl(s) ds by the trapezoid rule on the sampled trace; a final
/// partial interval is handled by linear interpolation.
inline double h_integral(std::span<const double> times, std::span<const double> kl, double beta, double t) {
  if (times.size() != kl.size()) raise(ErrorKind::BadParams, "times and values differ in length");
  if (!(beta > 0.0)) raise(ErrorKind::BadParams, "beta must be positive");
  if (times.empty() || times.front() > 0.0 || times.back() < t * (1.0 - 1e-12) || t < 0.0)
    raise(ErrorKind::InsufficientData, "trace does not cover [0, t]");
  double sum = 0.0;
  for (std::size_t i = 1; i < times.size() && times[i - 1] < t; ++i) {
    const double t0 = times[i - 1];
    double t1 = times[i];
    double k1 = kl[i];
    if (t1 > t) {
      k1 = kl[i - 1] + (kl[i] - kl[i - 1]) * (t - t0) / (t1 - t0);
      t1 = t;
    }
    sum += 0.5 * (t1 - t0) * (std::exp(-beta * (t - t0)) * kl[i - 1] + std::exp(-beta * (t - t1)) * k1);
  }
  return sum;
}

/// h at every sample time, via the recursion h_k = e^{-beta dt} h_{k-1} + trapezoid increment.
inline std::vector<double> h_cumulative(std::span<const double> times, std::span<const double> kl, double beta) {
  if (times.size() != kl.size()) raise(ErrorKind::BadParams, "times and values differ in length");
  if (!(beta > 0.0)) raise(ErrorKind::BadParams, "beta must be positive");
  if (times.empty() || times.front() != 0.0) raise(ErrorKind::InsufficientData, "trace must start at t = 0");
  std::vector<double> h(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    const double decay = std::exp(-beta * dt);
    h[i] = decay * h[i - 1] + 0.5 * dt * (decay * kl[i - 1] + kl[i]);
  }
  return h;
}

inline double g_factor(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) raise(ErrorKind::BadParams, "g_factor needs finite a > 0");
  return std::max(-std::log(a), a - 1.0);
}

/// Scalars entering the shape and mass estimates.
struct ShapeMassConstants {
  double z0;
  double z_star;
  double h0;         // KL of the initial shape against the target shape
  double alpha_hat;  // shape decay rate
  double beta;

  void validate() const {
    if (!(z0 > 0.0) || !(z_star > 0.0) || !(beta > 0.0) || !(alpha_hat > 0.0) || !(h0 >= 0.0))
      raise(ErrorKind::BadParams, "shape-mass constants must be positive (H0 >= 0)");
  }
  double gamma() const { return std::min(beta, 0.5 * alpha_hat); }
};

inline constexpr double kStatedShapeCoefficient = 0.5;
// sqrt(int (sqrt(rho) - sqrt(pi))^2) <= sqrt(KL) is the sharp form of the shape estimate.
inline constexpr double kCorrectedShapeCoefficient = 1.0;

/// Hellinger decay envelope with rate gamma = min(beta, alpha_hat / 2). It bounds
/// (int (sqrt(mu) - sqrt(pi))^2)^(1/2), which is half of hellinger(mu, pi). The stated shape
/// coefficient 1/2 is not valid in general; kCorrectedShapeCoefficient gives a provable envelope.
inline double decay_bound(const ShapeMassConstants& c, double t,
                          double shape_coefficient = kStatedShapeCoefficient) {
  c.validate();
  const double prefactor = shape_coefficient * std::sqrt(std::max(c.z0, c.z_star)) * std::sqrt(c.h0) +
                           std::sqrt(c.z_star) * (g_factor(std::sqrt(c.z0 / c.z_star)) + 1.0 / c.alpha_hat);
  return prefactor * std::exp(-c.gamma() * t);
}

/// Mass estimate max(z0, z_*) |log(z0/z_*)| e^{-beta t} + H0 (e^{-alpha t} - e^{-beta t}) / (beta - alpha).
inline double mass_bound(const ShapeMassConstants& c, double t) {
  c.validate();
  const double first = std::max(c.z0, c.z_star) * std::abs(std::log(c.z0 / c.z_star)) * std::exp(-c.beta * t);
  const double gap = c.beta - c.alpha_hat;
  const double second = std::abs(gap) < 1e-12 * c.beta
                            ? c.h0 * t * std::exp(-c.beta * t)
                            : c.h0 * (std::exp(-c.alpha_hat * t) - std::exp(-c.beta * t)) / gap;
  return first + second;
}

struct KlSplit {
  double shape;  // z D_KL(rho | pi_*)
  double mass;   // z_* lambda(z / z_*)
};

/// D_KL(mu|pi) = z D_KL(rho|pi_*) + z_* lambda(z/z_*), lambda(r) = r log r - r + 1.
inline KlSplit kl_shape_mass_split(const DiscreteMeasure& mu, const DiscreteMeasure& pi) {
  const ShapeMass m = normalize(mu);
  const ShapeMass t = normalize(pi);
  const EntropyOrder kl = EntropyOrder::kl();
  return {m.mass * divergence(m.shape, t.shape, kl), t.mass * phi(kl, m.mass / t.mass)};
}

/// Time samples of an HK-KL run and the bounds evaluated on them.
struct ShapeMassReport {
  ShapeMassConstants constants;
  std::vector<double> times;
  std::vector<double> z;
  std::vector<double> z_closed_form;
  std::vector<double> kl_shape;
  std::vector<double> he_total;
  std::vector<double> bound;            // same normalization as he_total
  std::vector<double> bound_corrected;  // with kCorrectedShapeCoefficient
  std::vector<double> mass_error;
  std::vector<double> mass_bound;
  std::vector<bool> shape_bound_ok;
  std::vector<bool> mass_bound_ok;
  std::vector<bool> he_bound_ok;
  std::vector<bool> he_bound_corrected_ok;

  double max_mass_formula_error() const {
    double e = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) e = std::max(e, std::abs(z[i] - z_closed_form[i]) / z[i]);
    return e;
  }
  bool all_bounds_hold() const {
    auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
    return all(shape_bound_ok) && all(mass_bound_ok) && all(he_bound_ok);
  }
  bool corrected_bounds_hold() const {
    auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
    return all(shape_bound_ok) && all(mass_bound_ok) && all(he_bound_corrected_ok);
  }
};

/// Smallest rate a with kl_k <= h0 e^{-a t_k} at every sample, i.e. the tightest valid exponential envelope.
inline double envelope_rate(std::span<const double> times, std::span<const double> kl, double h0) {
  double rate = kInf;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] > 0.0 && kl[i] > 0.0) rate = std::min(rate, std::log(h0 / kl[i]) / times[i]);
  return rate;
}

struct ShapeMassRun {
  double dt = 1e-4;
  double t_end = 2.0;
  std::size_t record_every = 100;
  double tolerance = 1e-9;  // relative slack on the boolean bound checks
};

/// Runs the HK flow of KL from mu0, decomposes every sample into shape and mass, and evaluates the
/// mass formula, the mass estimate and the Hellinger envelope with the fitted shape rate.
inline ShapeMassReport verify_hk_decay(const DiscreteMeasure& mu0, const DiscreteMeasure& pi, double alpha,
                                       double beta, const ShapeMassRun& run_cfg = {}) {
  const EntropyOrder kl = EntropyOrder::kl();
  const double z_star = mass(pi);
  const DiscreteMeasure pi_star = normalize(pi).shape;
  FlowSpec spec{Geometry::hk(alpha, beta), kl, pi, run_cfg.dt, run_cfg.t_end, run_cfg.record_every};

  ShapeMassReport rep{};
  run(mu0, spec, {}, [&](double t, const DiscreteMeasure& mu) {
    const ShapeMass sm = normalize(mu);
    rep.times.push_back(t);
    rep.z.push_back(sm.mass);
    rep.kl_shape.push_back(divergence(sm.shape, pi_star, kl));
    rep.he_total.push_back(hellinger(mu, pi));
  });

  const double z0 = rep.z.front();
  const double h0 = rep.kl_shape.front();
  double alpha_hat = h0 > 0.0 ? envelope_rate(rep.times, rep.kl_shape, h0) : kInf;
  if (!std::isfinite(alpha_hat)) alpha_hat = 2.0 * beta;  // shape already at (or reaching) equilibrium
  if (!(alpha_hat > 0.0)) raise(ErrorKind::NonPositiveValues, "shape divergence does not decay");
  rep.constants = {z0, z_star, h0, alpha_hat, beta};

  rep.z_closed_form = mass_ode_solution(z0, z_star, beta, rep.times, h_cumulative(rep.times, rep.kl_shape, beta));
  const double tol = 1.0 + run_cfg.tolerance;
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const double t = rep.times[i];
    rep.bound.push_back(2.0 * decay_bound(rep.constants, t));
    rep.bound_corrected.push_back(2.0 * decay_bound(rep.constants, t, kCorrectedShapeCoefficient));
    rep.mass_error.push_back(std::abs(rep.z[i] - z_star));
    rep.mass_bound.push_back(mass_bound(rep.constants, t));
    rep.shape_bound_ok.push_back(rep.kl_shape[i] <= h0 * std::exp(-alpha_hat * t) * tol + 1e-300);
    rep.mass_bound_ok.push_back(rep.mass_error.back() <= rep.mass_bound.back() * tol + 1e-15);
    rep.he_bound_ok.push_back(rep.he_total[i] <= rep.bound.back() * tol);
    rep.he_bound_corrected_ok.push_back(rep.he_total[i] <= rep.bound_corrected.back() * tol);
  }
  return rep;
}

}  // namespace hklab
