#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hklab/dissipation.hpp"
#include "hklab/entropy.hpp"
#include "hklab/error.hpp"
#include "hklab/measures.hpp"
#include "hklab/metrics.hpp"

namespace hklab {

/// Integrator settings for one gradient-flow simulation.
struct FlowSpec {
  Geometry geometry;
  EntropyOrder p;
  DiscreteMeasure target;
  double dt;
  double t_end;
  std::size_t record_every = 1;
  double positivity_floor = 1e-300;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) raise(ErrorKind::BadParams, "dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) raise(ErrorKind::BadParams, "t_end must be positive");
    if (t_end < dt * (1.0 - 1e-12)) raise(ErrorKind::BadParams, "t_end must be >= dt");
    if (record_every < 1) raise(ErrorKind::BadParams, "record_every must be >= 1");
    if (!(positivity_floor >= 0.0)) raise(ErrorKind::BadParams, "positivity floor must be >= 0");
    Geometry::checked(geometry);
  }
};

/// Counters accumulated by the steppers.
struct StepDiagnostics {
  std::size_t floor_events = 0;
  double max_mass_drift = 0.0;  // spherical flows: |mass - 1| before renormalization
};

// Stability rules. Transport is explicit upwind finite volumes: dt <= 0.4 h^2 / (alpha max r phi''(r))
// and dt <= h / (2 alpha max|v|). Reaction substeps integrate a linear-in-w ODE (w = r^(1-p), or
// log r at p = 1) with Heun's method: dt <= 0.5 / (beta (1 + |(1-p) m|)), m the spherical mean term.
inline constexpr double kTransportDiffusionSafety = 0.4;
inline constexpr double kTransportCflSafety = 0.5;
inline constexpr double kReactionSafety = 0.5;

namespace detail {

inline std::vector<double> transport_velocity(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p,
                                              double alpha) {
  const std::vector<double> psi = first_variation(mu, pi, p);
  const double h = mu.grid().h();
  std::vector<double> v(mu.size() - 1);
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) v[i] = -alpha * (psi[i + 1] - psi[i]) / h;
  return v;
}

}  // namespace detail

inline double transport_stable_dt(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p,
                                  double alpha) {
  if (!(alpha > 0.0)) return kInf;
  const double h = mu.grid().h();
  const std::vector<double> r = density_ratio(mu, pi);
  double diffusivity = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (pi[i] > 0.0 && r[i] > 0.0) diffusivity = std::max(diffusivity, std::pow(r[i], p.p - 1.0));
  const std::vector<double> v = detail::transport_velocity(mu, pi, p, alpha);
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  double bound = kInf;
  if (diffusivity > 0.0) bound = kTransportDiffusionSafety * h * h / (alpha * diffusivity);
  if (vmax > 0.0) bound = std::min(bound, kTransportCflSafety * h / vmax);
  return bound;
}

namespace detail {

inline void check_stable(double dt, double bound, const char* what) {
  if (dt > bound * (1.0 + 1e-12))
    raise(ErrorKind::Unstable, std::string(what) + " step dt=" + std::to_string(dt) +
                                   " exceeds stability bound " + std::to_string(bound));
}

/// One explicit upwind step of d/dt mu = alpha d/dx(mu d/dx phi_p'(mu/pi)) with no-flux walls.
inline DiscreteMeasure transport(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p, double alpha,
                                 double dt, double floor, StepDiagnostics* diag) {
  check_stable(dt, transport_stable_dt(mu, pi, p, alpha), "transport");
  const std::vector<double> v = transport_velocity(mu, pi, p, alpha);
  const double h = mu.grid().h();
  const std::size_t n = mu.size();
  std::vector<double> flux(n + 1, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) flux[i + 1] = v[i] > 0.0 ? v[i] * mu[i] : v[i] * mu[i + 1];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = mu[i] - dt / h * (flux[i + 1] - flux[i]);
    if (m < -floor) raise(ErrorKind::Unstable, "transport produced a negative density in cell " + std::to_string(i));
    if (pi[i] > 0.0 && m < floor) {
      m = floor;
      if (diag) ++diag->floor_events;
    }
    out[i] = std::max(m, 0.0);
  }
  return mu.with_density(std::move(out));
}

/// Reaction state in the variable that makes the pure Hellinger ODE linear.
struct ReactionState {
  std::vector<double> y;      // log r (p = 1) or r^(1-p)
  std::vector<bool> active;   // cells that evolve; empty cells on the stay-at-zero branch are frozen
};

inline double to_ratio(double y, double p) {
  if (p == 1.0) return std::exp(y);
  return std::pow(y, 1.0 / (1.0 - p));
}

inline ReactionState reaction_state(std::span<const double> r, const DiscreteMeasure& pi, double p) {
  ReactionState s{std::vector<double>(r.size(), 0.0), std::vector<bool>(r.size(), false)};
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(pi[i] > 0.0)) continue;
    if (r[i] > 0.0) {
      s.active[i] = true;
      s.y[i] = p == 1.0 ? std::log(r[i]) : std::pow(r[i], 1.0 - p);
    } else if (p <= 0.0) {
      // phi_p'(0) = -inf forces immediate birth; w = r^(1-p) starts at 0.
      s.active[i] = true;
      s.y[i] = 0.0;
    }
  }
  return s;
}

/// int r phi_p'(r) dpi over the current state (the spherical mean term).
inline double spherical_mean(const ReactionState& s, const DiscreteMeasure& pi, EntropyOrder p) {
  const double h = pi.grid().h();
  double m = 0.0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (!s.active[i]) continue;
    const double r = to_ratio(p.p == 1.0 ? s.y[i] : std::max(s.y[i], 0.0), p.p);
    m += h * pi[i] * (p.p == 1.0 ? r * s.y[i] : s_dphi(p, r));
  }
  return m;
}

inline std::vector<double> reaction_rhs(const ReactionState& s, const DiscreteMeasure& pi, EntropyOrder p,
                                        double beta, bool spherical, double* mean_out) {
  const double m = spherical ? spherical_mean(s, pi, p) : 0.0;
  if (mean_out) *mean_out = m;
  std::vector<double> f(s.y.size(), 0.0);
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (!s.active[i]) continue;
    if (p.p == 1.0) {
      f[i] = -beta * (s.y[i] - m);
    } else {
      f[i] = beta * (1.0 - s.y[i]) + beta * (1.0 - p.p) * m * s.y[i];
    }
  }
  return f;
}

/// Heun step of the (spherical) Hellinger reaction mu' = -beta mu (phi_p'(r) - m), with m = 0 for the
/// plain Hellinger flow. Spherical output is renormalized to unit mass.
inline DiscreteMeasure reaction(const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p, double beta,
                                double dt, bool spherical, StepDiagnostics* diag) {
  if (!(beta > 0.0)) return mu;
  const std::vector<double> r = density_ratio(mu, pi);
  if (spherical && p.p < 0.0)
    for (std::size_t i = 0; i < r.size(); ++i)
      if (pi[i] > 0.0 && r[i] == 0.0)
        raise(ErrorKind::SupportMismatch, "spherical Hellinger flow with p < 0 needs a strictly positive start");
  ReactionState s = reaction_state(r, pi, p.p);
  double m0 = 0.0;
  const std::vector<double> k1 = reaction_rhs(s, pi, p, beta, spherical, &m0);
  const double stiffness = p.p == 1.0 ? 1.0 : 1.0 + std::abs((1.0 - p.p) * m0);
  check_stable(dt, kReactionSafety / (beta * stiffness), "reaction");

  ReactionState predictor = s;
  for (std::size_t i = 0; i < s.y.size(); ++i)
    if (s.active[i]) predictor.y[i] += dt * k1[i];
  const std::vector<double> k2 = reaction_rhs(predictor, pi, p, beta, spherical, nullptr);

  std::vector<double> out(mu.size(), 0.0);
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (!s.active[i]) {
      out[i] = mu[i];
      continue;
    }
    double y = s.y[i] + 0.5 * dt * (k1[i] + k2[i]);
    if (p.p != 1.0 && y < 0.0) {
      y = 0.0;
      if (diag) ++diag->floor_events;
    }
    out[i] = pi[i] * to_ratio(y, p.p);
  }
  DiscreteMeasure next = mu.with_density(std::move(out));
  if (!spherical) return next;
  const double z = mass(next);
  if (diag) diag->max_mass_drift = std::max(diag->max_mass_drift, std::abs(z - 1.0));
  return normalize(next).shape;
}

}  // namespace detail

/// Otto-Wasserstein step; preserves mass up to rounding.
inline DiscreteMeasure step_wasserstein(const DiscreteMeasure& mu, const FlowSpec& spec,
                                        StepDiagnostics* diag = nullptr) {
  const double alpha = spec.geometry.alpha > 0.0 ? spec.geometry.alpha : 1.0;
  return detail::transport(mu, spec.target, spec.p, alpha, spec.dt, spec.positivity_floor, diag);
}

/// Hellinger step of mu' = -beta mu phi_p'(mu/pi). Empty cells stay empty for p > 0.
inline DiscreteMeasure step_hellinger(const DiscreteMeasure& mu, const FlowSpec& spec,
                                      StepDiagnostics* diag = nullptr) {
  const double beta = spec.geometry.beta > 0.0 ? spec.geometry.beta : 1.0;
  return detail::reaction(mu, spec.target, spec.p, beta, spec.dt, false, diag);
}

inline DiscreteMeasure step_spherical_hellinger(const DiscreteMeasure& rho, const FlowSpec& spec,
                                                StepDiagnostics* diag = nullptr) {
  require_probability(rho, "step_spherical_hellinger");
  const double beta = spec.geometry.beta > 0.0 ? spec.geometry.beta : 1.0;
  return detail::reaction(rho, spec.target, spec.p, beta, spec.dt, true, diag);
}

namespace detail {

inline DiscreteMeasure strang(const DiscreteMeasure& mu, const FlowSpec& spec, bool spherical,
                              StepDiagnostics* diag) {
  const Geometry& g = spec.geometry;
  if (!g.has_transport()) return reaction(mu, spec.target, spec.p, g.beta, spec.dt, spherical, diag);
  if (!g.has_reaction()) {
    DiscreteMeasure out = transport(mu, spec.target, spec.p, g.alpha, spec.dt, spec.positivity_floor, diag);
    return spherical ? normalize(out).shape : out;
  }
  DiscreteMeasure a = reaction(mu, spec.target, spec.p, g.beta, 0.5 * spec.dt, spherical, diag);
  DiscreteMeasure b = transport(a, spec.target, spec.p, g.alpha, spec.dt, spec.positivity_floor, diag);
  return reaction(b, spec.target, spec.p, g.beta, 0.5 * spec.dt, spherical, diag);
}

}  // namespace detail

/// Hellinger-Kantorovich step: Strang splitting reaction(dt/2), transport(dt), reaction(dt/2).
inline DiscreteMeasure step_hk(const DiscreteMeasure& mu, const FlowSpec& spec, StepDiagnostics* diag = nullptr) {
  return detail::strang(mu, spec, false, diag);
}

/// Spherical HK step; same splitting with the mean-corrected reaction, unit mass after every step.
inline DiscreteMeasure step_shk(const DiscreteMeasure& rho, const FlowSpec& spec, StepDiagnostics* diag = nullptr) {
  require_probability(rho, "step_shk");
  return detail::strang(rho, spec, true, diag);
}

inline DiscreteMeasure step(const DiscreteMeasure& mu, const FlowSpec& spec, StepDiagnostics* diag = nullptr) {
  switch (spec.geometry.kind) {
    case Geometry::Kind::Wasserstein: return step_wasserstein(mu, spec, diag);
    case Geometry::Kind::Hellinger: return step_hellinger(mu, spec, diag);
    case Geometry::Kind::SphericalHellinger: return step_spherical_hellinger(mu, spec, diag);
    case Geometry::Kind::HK: return step_hk(mu, spec, diag);
    case Geometry::Kind::SHK: return step_shk(mu, spec, diag);
  }
  return mu;
}

/// Closed-form Hellinger flow of KL: mu(t) = pi (mu0/pi)^(exp(-beta t)); empty cells stay empty.
inline DiscreteMeasure kl_hellinger_exact(const DiscreteMeasure& mu0, const DiscreteMeasure& pi, double beta,
                                          double t) {
  const std::vector<double> r0 = density_ratio(mu0, pi);
  const double expo = std::exp(-beta * t);
  std::vector<double> d(r0.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (r0[i] > 0.0) d[i] = pi[i] * std::exp(expo * std::log(r0[i]));
  return mu0.with_density(std::move(d));
}

struct AuxSeries {
  double q;
  std::vector<double> values;
};

/// Time samples of a simulation.
struct DecayTrace {
  std::vector<double> times;
  std::vector<double> divergence;
  std::vector<double> mass;
  std::vector<double> dissipation;
  std::vector<AuxSeries> aux;
  StepDiagnostics diagnostics;

  std::size_t size() const noexcept { return times.size(); }
};

/// Observer invoked at every recorded sample with (time, state).
using SampleObserver = std::function<void(double, const DiscreteMeasure&)>;

inline DecayTrace run(const DiscreteMeasure& mu0, const FlowSpec& spec, std::span<const EntropyOrder> aux_orders = {},
                      const SampleObserver& observer = {}) {
  spec.validate();
  require_same_grid(mu0, spec.target);
  if (spec.geometry.is_spherical()) require_probability(mu0, "spherical flow");

  DecayTrace trace;
  for (const EntropyOrder& q : aux_orders) trace.aux.push_back({q.p, {}});
  auto record = [&](double t, const DiscreteMeasure& mu) {
    trace.times.push_back(t);
    trace.divergence.push_back(divergence(mu, spec.target, spec.p));
    trace.mass.push_back(mass(mu));
    trace.dissipation.push_back(dissipation_total(mu, spec.target, spec.p, spec.geometry));
    for (std::size_t k = 0; k < aux_orders.size(); ++k)
      trace.aux[k].values.push_back(divergence(mu, spec.target, aux_orders[k]));
    if (observer) observer(t, mu);
  };

  const auto steps = static_cast<std::size_t>(std::ceil(spec.t_end / spec.dt - 1e-9));
  DiscreteMeasure mu = mu0;
  record(0.0, mu);
  for (std::size_t k = 1; k <= steps; ++k) {
    mu = step(mu, spec, &trace.diagnostics);
    if (k % spec.record_every == 0 || k == steps) record(static_cast<double>(k) * spec.dt, mu);
  }
  return trace;
}

/// Least-squares slope c of -log(values) against time over [t_a, t_b].
inline double fit_decay_rate(std::span<const double> times, std::span<const double> values, double t_a, double t_b) {
  if (times.size() != values.size()) raise(ErrorKind::BadParams, "times and values differ in length");
  std::vector<double> t;
  std::vector<double> y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_a || times[i] > t_b) continue;
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      raise(ErrorKind::NonPositiveValues, "decay fit needs positive finite values");
    t.push_back(times[i]);
    y.push_back(-std::log(values[i]));
  }
  if (t.size() < 5) raise(ErrorKind::InsufficientData, "decay fit needs at least 5 samples in the window");
  double tm = 0.0;
  double ym = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    ym += y[i];
  }
  tm /= static_cast<double>(t.size());
  ym /= static_cast<double>(t.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - tm) * (y[i] - ym);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  if (!(sxx > 0.0)) raise(ErrorKind::InsufficientData, "decay fit window has no time spread");
  return sxy / sxx;
}

inline double fit_decay_rate(const DecayTrace& trace, double t_a, double t_b) {
  return fit_decay_rate(trace.times, trace.divergence, t_a, t_b);
}

}  // namespace hklab
