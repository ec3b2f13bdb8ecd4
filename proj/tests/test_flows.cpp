#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hklab/flows.hpp"
#include "support.hpp"

using namespace hklab;
using hklab::testing::Gen;
using hklab::testing::l1;
using hklab::testing::max_abs_diff;

namespace {

const EntropyOrder kKl = EntropyOrder::kl();

struct Fixture {
  Grid1D grid;
  DiscreteMeasure pi;
  DiscreteMeasure start;  // unit mass, strictly positive, not equal to pi
};

Fixture make_setup(std::size_t n = 100) {
  const Grid1D g(0, 1, n);
  const DiscreteMeasure pi = make_target(target::Gaussian{0.5, 0.2}, g);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = pi[i] * (1.0 + 0.5 * std::sin(6.0 * g.center(i)));
  return {g, pi, normalize(DiscreteMeasure(g, std::move(d))).shape};
}

double transport_dt(const Grid1D& g) { return 0.3 * g.h() * g.h(); }

FlowSpec spec_for(const Geometry& geom, EntropyOrder p, const DiscreteMeasure& pi, double dt, double t_end,
                  std::size_t every = 1) {
  return FlowSpec{geom, p, pi, dt, t_end, every};
}

}  // namespace

TEST(FlowSpec, Validation) {
  const Fixture s = make_setup(10);
  EXPECT_THROW(spec_for(Geometry::hellinger(), kKl, s.pi, 0.0, 1.0).validate(), Error);
  EXPECT_THROW(spec_for(Geometry::hellinger(), kKl, s.pi, 0.1, 0.01).validate(), Error);
  FlowSpec bad = spec_for(Geometry::hellinger(), kKl, s.pi, 0.1, 1.0);
  bad.record_every = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad.record_every = 1;
  bad.positivity_floor = -1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Steppers, EquilibriumIsFixedPoint) {
  const Fixture s = make_setup();
  const double dt = transport_dt(s.grid);
  for (double p : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
    const EntropyOrder o(p);
    EXPECT_LE(max_abs_diff(step_wasserstein(s.pi, spec_for(Geometry::wasserstein(), o, s.pi, dt, 1)), s.pi), 1e-14);
    EXPECT_LE(max_abs_diff(step_hellinger(s.pi, spec_for(Geometry::hellinger(), o, s.pi, 0.01, 1)), s.pi), 1e-14);
    EXPECT_LE(max_abs_diff(step_spherical_hellinger(s.pi, spec_for(Geometry::spherical_hellinger(), o, s.pi, 0.01, 1)),
                           s.pi),
              1e-14);
    EXPECT_LE(max_abs_diff(step_hk(s.pi, spec_for(Geometry::hk(1, 1), o, s.pi, dt, 1)), s.pi), 1e-14);
    EXPECT_LE(max_abs_diff(step_shk(s.pi, spec_for(Geometry::shk(1, 1), o, s.pi, dt, 1)), s.pi), 1e-14);
  }
}

TEST(Steppers, ConstantMultipleIsStuckUnderTransport) {
  const Fixture s = make_setup();
  const FlowSpec spec = spec_for(Geometry::wasserstein(), kKl, s.pi, transport_dt(s.grid), 1);
  const DiscreteMeasure mu = s.pi.scaled(2.0);
  EXPECT_LE(max_abs_diff(step_wasserstein(mu, spec), mu), 1e-14);
}

TEST(Steppers, WassersteinConservesMassAndHeatsToUniform) {
  const Grid1D g(0, 1, 80);
  const DiscreteMeasure pi = make_target(target::Uniform{}, g);
  Gen gen(51);
  DiscreteMeasure mu = gen.probability(g);
  const FlowSpec spec = spec_for(Geometry::wasserstein(), kKl, pi, transport_dt(g), 1);
  double prev = divergence(mu, pi, kKl);
  const double start = prev;
  for (int k = 0; k < 4000; ++k) {
    const double m0 = mass(mu);
    mu = step_wasserstein(mu, spec);
    EXPECT_NEAR(mass(mu), m0, 1e-13);
    const double d = divergence(mu, pi, kKl);
    EXPECT_LE(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 2e-2 * start);
}

TEST(Steppers, HellingerKeepsOrCreatesZeroCells) {
  const Fixture s = make_setup(20);
  std::vector<double> d(s.start.values());
  d[3] = 0.0;
  const DiscreteMeasure holed(s.grid, d);
  for (double p : {0.25, 0.5, 1.0, 2.0}) {
    DiscreteMeasure mu = holed;
    const FlowSpec spec = spec_for(Geometry::hellinger(), EntropyOrder(p), s.pi, 0.01, 1);
    for (int k = 0; k < 50; ++k) mu = step_hellinger(mu, spec);
    EXPECT_EQ(mu[3], 0.0) << "p=" << p;
  }
  for (double p : {-1.0, 0.0}) {
    const FlowSpec spec = spec_for(Geometry::hellinger(), EntropyOrder(p), s.pi, 0.01, 1);
    EXPECT_GT(step_hellinger(holed, spec)[3], 0.0) << "p=" << p;
  }
}

TEST(Steppers, UnstableStepRaises) {
  const Fixture s = make_setup();
  const FlowSpec spec = spec_for(Geometry::wasserstein(), kKl, s.pi, 10.0 * s.grid.h() * s.grid.h(), 1);
  try {
    step_wasserstein(s.start, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unstable);
  }
  EXPECT_THROW(step_hellinger(s.start, spec_for(Geometry::hellinger(), kKl, s.pi, 0.9, 1)), Error);
  EXPECT_THROW(step_hk(s.start, spec_for(Geometry::hk(1, 1), kKl, s.pi, 0.01, 1)), Error);
}

TEST(Steppers, SphericalRequiresProbability) {
  const Fixture s = make_setup();
  try {
    step_spherical_hellinger(s.start.scaled(1.5), spec_for(Geometry::spherical_hellinger(), kKl, s.pi, 0.01, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotProbability);
  }
  EXPECT_THROW(step_shk(s.start.scaled(0.5), spec_for(Geometry::shk(1, 1), kKl, s.pi, 1e-5, 1)), Error);
}

TEST(Steppers, SplittingReductionsAreExact) {
  const Fixture s = make_setup();
  for (double p : {0.0, 0.5, 1.0, 2.0}) {
    const EntropyOrder o(p);
    const double dt = 0.5 * transport_stable_dt(s.start, s.pi, o, 1.0);
    const DiscreteMeasure a = step_hk(s.start, spec_for(Geometry::hk(0, 1), o, s.pi, 0.01, 1));
    const DiscreteMeasure b = step_hellinger(s.start, spec_for(Geometry::hellinger(1), o, s.pi, 0.01, 1));
    EXPECT_LE(max_abs_diff(a, b), 1e-14);
    const DiscreteMeasure c = step_hk(s.start, spec_for(Geometry::hk(1, 0), o, s.pi, dt, 1));
    const DiscreteMeasure d = step_wasserstein(s.start, spec_for(Geometry::wasserstein(1), o, s.pi, dt, 1));
    EXPECT_LE(max_abs_diff(c, d), 1e-14);
    const DiscreteMeasure e = step_shk(s.start, spec_for(Geometry::shk(0, 1), o, s.pi, 0.01, 1));
    const DiscreteMeasure f =
        step_spherical_hellinger(s.start, spec_for(Geometry::spherical_hellinger(1), o, s.pi, 0.01, 1));
    EXPECT_LE(max_abs_diff(e, f), 1e-14);
  }
}

TEST(Steppers, SphericalOutputHasUnitMass) {
  const Fixture s = make_setup();
  for (double p : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
    DiscreteMeasure rho = s.start;
    StepDiagnostics diag;
    const FlowSpec spec = spec_for(Geometry::spherical_hellinger(), EntropyOrder(p), s.pi, 0.01, 1);
    for (int k = 0; k < 20; ++k) {
      rho = step_spherical_hellinger(rho, spec, &diag);
      EXPECT_NEAR(mass(rho), 1.0, 1e-14);
    }
    EXPECT_LT(diag.max_mass_drift, 1e-4);
  }
}

TEST(Steppers, SphericalForwardKlMatchesPlainHellinger) {
  // For p = 0 the mean term vanishes on probability measures.
  const Fixture s = make_setup();
  const EntropyOrder p0 = EntropyOrder::forward_kl();
  DiscreteMeasure a = s.start;
  DiscreteMeasure b = s.start;
  const double dt = 0.01;
  for (int k = 0; k < 100; ++k) {
    a = step_spherical_hellinger(a, spec_for(Geometry::spherical_hellinger(), p0, s.pi, dt, 1));
    b = step_hellinger(b, spec_for(Geometry::hellinger(), p0, s.pi, dt, 1));
  }
  EXPECT_LE(l1(a, b), 1e-8);
}

TEST(KlHellingerExact, Examples) {
  const Grid1D g(0, 1, 3);
  const DiscreteMeasure pi = DiscreteMeasure::constant(g, 1.0);
  const DiscreteMeasure mu0(g, {std::numbers::e, 0.0, 0.5});
  EXPECT_EQ(kl_hellinger_exact(mu0, pi, 1.0, 0.0).values(), mu0.values());
  const DiscreteMeasure mu = kl_hellinger_exact(mu0, pi, 1.0, std::log(2.0));
  EXPECT_NEAR(mu[0], 1.6487212707001281468, 1e-14);
  EXPECT_EQ(mu[1], 0.0);
  EXPECT_EQ(kl_hellinger_exact(mu0, pi, 1.0, 50.0)[1], 0.0);
  EXPECT_NEAR(kl_hellinger_exact(mu0, pi, 1.0, 50.0)[2], 1.0, 1e-15);
  EXPECT_THROW(kl_hellinger_exact(mu0, DiscreteMeasure(g, {1.0, 1.0, 0.0}), 1.0, 1.0), Error);
}

TEST(KlHellingerExact, StepperConvergesAtSecondOrder) {
  const Fixture s = make_setup(50);
  const DiscreteMeasure exact = kl_hellinger_exact(s.start, s.pi, 1.0, 1.0);
  std::vector<double> errors;
  for (double dt : {0.02, 0.01, 0.005}) {
    DiscreteMeasure mu = s.start;
    const FlowSpec spec = spec_for(Geometry::hellinger(), kKl, s.pi, dt, 1.0);
    for (long k = 0; k < std::lround(1.0 / dt); ++k) mu = step_hellinger(mu, spec);
    double e = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) e = std::max(e, std::abs(mu[i] - exact[i]) / exact[i]);
    errors.push_back(e);
  }
  EXPECT_GE(std::log2(errors[0] / errors[1]), 1.9);
  EXPECT_GE(std::log2(errors[1] / errors[2]), 1.9);
}

TEST(Run, TraceShape) {
  const Fixture s = make_setup(20);
  const DecayTrace t = run(s.start, spec_for(Geometry::hellinger(), kKl, s.pi, 0.1, 0.1));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.times[0], 0.0);
  EXPECT_NEAR(t.times[1], 0.1, 1e-15);

  const DecayTrace u = run(s.start, spec_for(Geometry::hellinger(), kKl, s.pi, 0.01, 1.0, 7));
  EXPECT_EQ(u.times.size(), u.divergence.size());
  EXPECT_EQ(u.times.size(), u.mass.size());
  EXPECT_EQ(u.times.size(), u.dissipation.size());
  EXPECT_NEAR(u.times.back(), 1.0, 1e-12);
  for (std::size_t i = 1; i < u.size(); ++i) EXPECT_GT(u.times[i], u.times[i - 1]);
}

TEST(Run, EquilibriumTraceIsZero) {
  const Fixture s = make_setup(50);
  const DecayTrace t = run(s.pi, spec_for(Geometry::hk(1, 1), kKl, s.pi, transport_dt(s.grid), 0.01));
  for (double d : t.divergence) EXPECT_EQ(d, 0.0);
}

TEST(Run, HalfOrderHellingerFollowsExactEnvelope) {
  const Fixture s = make_setup(100);
  const EntropyOrder half = EntropyOrder::hellinger();
  const DecayTrace t = run(s.start.scaled(3.0), spec_for(Geometry::hellinger(), half, s.pi, 0.001, 3.0, 10));
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_NEAR(t.divergence[i] / (t.divergence[0] * std::exp(-2.0 * t.times[i])), 1.0, 1e-5);
}

TEST(Run, MonotoneEnergyForEveryGeometry) {
  const Fixture s = make_setup(60);
  const Geometry geoms[] = {Geometry::wasserstein(), Geometry::hellinger(), Geometry::spherical_hellinger(),
                            Geometry::hk(1, 1), Geometry::shk(1, 1)};
  for (const Geometry& geom : geoms) {
    for (double p : {0.0, 0.5, 1.0, 2.0}) {
      const double dt = 0.5 * transport_stable_dt(s.start, s.pi, EntropyOrder(p), 1.0);
      const DecayTrace t = run(s.start, spec_for(geom, EntropyOrder(p), s.pi, dt, 0.05, 10));
      for (std::size_t i = 1; i < t.size(); ++i)
        EXPECT_LE(t.divergence[i], t.divergence[i - 1] * (1.0 + 1e-12)) << to_string(geom.kind) << " p=" << p;
      EXPECT_EQ(t.diagnostics.floor_events, 0u);
    }
  }
}

TEST(Run, AuxiliaryDivergencesAreLyapunov) {
  const Fixture s = make_setup(80);
  const std::vector<EntropyOrder> aux = {EntropyOrder(-1.0), EntropyOrder(0.0), EntropyOrder(0.5), EntropyOrder(2.0)};
  for (double p : {0.0, 0.5, 1.0, 2.0}) {
    const DecayTrace t = run(s.start.scaled(2.0), spec_for(Geometry::hellinger(), EntropyOrder(p), s.pi, 0.01, 2.0), aux);
    ASSERT_EQ(t.aux.size(), aux.size());
    for (const AuxSeries& a : t.aux)
      for (std::size_t i = 1; i < a.values.size(); ++i)
        EXPECT_LE(a.values[i], a.values[i - 1] * (1.0 + 1e-12)) << "p=" << p << " q=" << a.q;
  }
}

TEST(Run, EnergyDissipationBalance) {
  const Grid1D g(0, 1, 100);
  const DiscreteMeasure pi = make_target(target::Gaussian{0.5, 0.2}, g);
  const DiscreteMeasure start = make_target(target::Mixture{{0.5, 0.5}, {{0.3, 0.08}, {0.7, 0.1}}}, g);
  const double dt = 0.05 * g.h() * g.h();
  const Geometry geoms[] = {Geometry::wasserstein(), Geometry::hellinger(), Geometry::spherical_hellinger(),
                            Geometry::hk(1, 1), Geometry::shk(1, 1)};
  for (const Geometry& geom : geoms) {
    const FlowSpec spec = spec_for(geom, kKl, pi, dt, 1.0);
    DiscreteMeasure mu = start;
    for (int k = 0; k < 2000; ++k) mu = step(mu, spec);
    const DiscreteMeasure next = step(mu, spec);
    const double rate = (divergence(next, pi, kKl) - divergence(mu, pi, kKl)) / dt;
    const double diss = 0.5 * (dissipation_total(mu, pi, kKl, geom) + dissipation_total(next, pi, kKl, geom));
    EXPECT_LE(std::abs(rate + diss) / diss, 0.02) << to_string(geom.kind);
  }
}

TEST(Run, NormalizedHkMatchesShkOnlyForKl) {
  const Fixture s = make_setup(50);
  auto discrepancy = [&](EntropyOrder p) {
    const double dt = 0.25 * transport_stable_dt(s.start.scaled(2.0), s.pi, p, 1.0);
    std::vector<DiscreteMeasure> a;
    std::vector<DiscreteMeasure> b;
    run(s.start.scaled(2.0), spec_for(Geometry::hk(1, 1), p, s.pi, dt, 0.5, 100), {},
        [&](double, const DiscreteMeasure& m) { a.push_back(normalize(m).shape); });
    run(s.start, spec_for(Geometry::shk(1, 1), p, s.pi, dt, 0.5, 100), {},
        [&](double, const DiscreteMeasure& m) { b.push_back(m); });
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, l1(a[k], b[k]));
    return worst;
  };
  EXPECT_LE(discrepancy(kKl), 1e-4);
  EXPECT_GT(discrepancy(EntropyOrder(2.0)), 1e-2);
}

TEST(FitDecayRate, SyntheticTraces) {
  std::vector<double> t;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(0.1 * i);
    a.push_back(std::exp(-3.0 * t.back()));
    b.push_back(5.0 * std::exp(-0.7 * t.back()));
    c.push_back(0.25);
  }
  EXPECT_NEAR(fit_decay_rate(t, a, 0.0, 5.0), 3.0, 1e-9);
  EXPECT_NEAR(fit_decay_rate(t, b, 1.0, 4.0), 0.7, 1e-9);
  EXPECT_NEAR(fit_decay_rate(t, c, 0.0, 5.0), 0.0, 1e-12);

  try {
    fit_decay_rate(t, a, 0.0, 0.35);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
  c[10] = 0.0;
  try {
    fit_decay_rate(t, c, 0.0, 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveValues);
  }
}
