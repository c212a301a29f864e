#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ipswitch/bifurcation.hpp"

using namespace ipswitch;

namespace {

Params rule1(double a, double b, double tau, double s, GKind g = GKind::Cosine) {
  Params p;
  p.a = a;
  p.b = b;
  p.tau = tau;
  p.s = s;
  p.g = g;
  return p;
}

Params rule2(double a, double b, double tau, double sigma, GKind g = GKind::Cosine) {
  Params p = rule1(a, b, tau, 0.0, g);
  p.rule = Rule::Rule2;
  p.sigma = sigma;
  return p;
}

}  // namespace

TEST(Dib, LocatedDelayAndResidual) {
  const auto d = find_dib(rule1(1.5, 2.0, 0.0, -0.01));
  ASSERT_TRUE(d);
  EXPECT_EQ(d->kind, BifKind::DIB);
  EXPECT_NEAR(d->tau, 0.0408330329, 1e-9);
  EXPECT_LE(d->residual, 1e-8);
  EXPECT_LE(d->witness, 1e-6);
  EXPECT_THROW(find_dib(rule2(1.5, 2.0, 0.1, 0.3)), std::invalid_argument);
}

TEST(Dib, AgreesWithAsymptoticCurve) {
  for (double a : {1.3, 1.5}) {
    const auto d = find_dib(rule1(a, 2.0, 0.0, -0.01));
    ASSERT_TRUE(d);
    EXPECT_NEAR(d->tau / dib_curve(a, 2.0, -0.01), 1.0, 0.05) << a;
  }
}

TEST(Dib, ProbeAmplitudeInvariance) {
  DibOptions o;
  o.probe = 1e-3;
  o.confirm = 1e-4;
  for (double a : {1.3, 1.5}) {
    const auto d = find_dib(rule1(a, 2.0, 0.0, -0.01), o);
    ASSERT_TRUE(d) << a;
    EXPECT_LE(d->witness, 1e-6);
  }
  for (double a : {1.3, 1.5, 1.7}) EXPECT_TRUE(find_dib(rule1(a, 2.0, 0.0, -0.01))) << a;
}

TEST(Dib, IndependentOfGainShape) {
  for (double a : {1.3, 1.5, 1.7}) {
    const auto c = find_dib(rule1(a, 2.0, 0.0, -0.01));
    const auto o = find_dib(rule1(a, 2.0, 0.0, -0.01, GKind::One));
    ASSERT_TRUE(c && o) << a;
    EXPECT_NEAR(o->tau / c->tau, 1.0, 1e-4) << a;
  }
}

TEST(Dib, CriticalityFlip) {
  const auto c = find_dib_criticality(rule1(1.0, 2.0, 0.0, -0.01), 1.02, 1.3);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->a, 1.09, 0.05);
  // Stable birth below the flip, unstable above.
  Params lo = rule1(1.05, 2.0, 0.0, -0.01), hi = rule1(1.2, 2.0, 0.0, -0.01);
  lo.tau = find_dib(lo)->tau;
  hi.tau = find_dib(hi)->tau;
  EXPECT_LT(dib_cubic_coefficient(lo), 0.0);
  EXPECT_GT(dib_cubic_coefficient(hi), 0.0);
}

TEST(SaddleNode, BelowDibAndTangentAtCriticality) {
  const auto sn = find_saddle_node(rule1(1.2, 2.0, 0.0, -0.01));
  ASSERT_TRUE(sn);
  EXPECT_NEAR(sn->tau, 0.0242451, 1e-6);
  EXPECT_LE(sn->residual, 1e-9);
  // The gap to the DIB curve closes as a approaches the criticality point.
  double prev_gap = 1.0;
  for (double a : {1.3, 1.2, 1.15}) {
    const Params p = rule1(a, 2.0, 0.0, -0.01);
    const auto s = find_saddle_node(p);
    const auto d = find_dib(p);
    ASSERT_TRUE(s && d) << a;
    const double gap = (d->tau - s->tau) / d->tau;
    EXPECT_GT(gap, 0.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
}

TEST(ZigzagOrbits, FixedPointsBetweenSaddleNodeAndDib) {
  // Between the fold and the DIB there are two zigzag orbits, the inner one unstable.
  Params p = rule1(1.2, 2.0, 0.025, -0.01);
  const auto fps = zigzag_fixed_points(p);
  ASSERT_EQ(fps.size(), 2u);
  EXPECT_LT(fps[0].theta, fps[1].theta);
  EXPECT_FALSE(fps[0].stable);
  EXPECT_TRUE(fps[1].stable);
  for (const auto& fp : fps) EXPECT_LE(fp.residual, 1e-9);
}

TEST(Homoclinic, MatchesAsymptoticCurve) {
  for (double a : {1.7, 2.0}) {
    const Params p = rule1(a, 2.0, 0.0, -0.01);
    const auto h = find_homoclinic(p);
    ASSERT_TRUE(h) << a;
    EXPECT_NEAR(h->tau / homoclinic_curve(a, 2.0, -0.01), 1.0, 0.1) << a;
    EXPECT_NEAR(h->witness, saddle_eigen(p).theta_eq, 1e-12);
  }
  EXPECT_NEAR(find_homoclinic(rule1(1.7, 2.0, 0.0, -0.01))->tau, 0.03988725, 1e-6);
}

TEST(Homoclinic, NoneForConstantGain) {
  for (double a : {0.9, 1.7, 2.0}) EXPECT_FALSE(find_homoclinic(rule1(a, 2.0, 0.0, -0.01, GKind::One))) << a;
}

TEST(Homoclinic, CrossesDibNearOnePointFiveFour) {
  // Below the crossing the homoclinic delay lies above the DIB delay, above it below.
  for (double a : {1.53, 1.56}) {
    const Params p = rule1(a, 2.0, 0.0, -0.01);
    const auto d = find_dib(p);
    const auto h = find_homoclinic(p);
    ASSERT_TRUE(d && h) << a;
    if (a < 1.54)
      EXPECT_GT(h->tau, d->tau);
    else
      EXPECT_LT(h->tau, d->tau);
  }
}

TEST(Plane, Fig8Classifications) {
  for (double scale : {0.1, 1.0, 10.0}) {
    const auto both_out = classify_plane_point(3.0, 3.0, 0.5, 0.0, scale);
    EXPECT_NE(both_out.zigzag, ZigzagFate::In) << scale;
    EXPECT_EQ(both_out.spiral, SpiralFate::Out) << scale;
    EXPECT_FALSE(both_out.trapped());
    const auto mixed = classify_plane_point(1.5, 3.5, 0.5, 0.0, scale);
    EXPECT_EQ(mixed.zigzag, ZigzagFate::In) << scale;
    EXPECT_EQ(mixed.spiral, SpiralFate::Out) << scale;
  }
}

TEST(Plane, LinearisedRatiosAreScaleFree) {
  const auto a = classify_plane_point(1.5, 3.5, 0.5, 0.0, 0.1);
  const auto b = classify_plane_point(1.5, 3.5, 0.5, 0.0, 10.0);
  EXPECT_NEAR(a.zigzag_probe.ratio, b.zigzag_probe.ratio, 1e-9);
  EXPECT_NEAR(a.spiral_probe.ratio, b.spiral_probe.ratio, 1e-9);
  EXPECT_THROW(classify_plane_point(1.5, 3.5, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(classify_plane_point(1.5, 3.5, 0.5, 0.0, -1.0), std::invalid_argument);
}

TEST(Plane, CurvesSeparateDifferentLabels) {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(1.0 + 0.25 * i);
  const auto pts = plane_curves_at_b(3.5, 0.5, 0.0, grid, 1e-6);
  ASSERT_FALSE(pts.empty());
  for (const auto& pt : pts) {
    const auto l = classify_plane_point(pt.a - 1e-4, pt.b, 0.5, 0.0);
    const auto r = classify_plane_point(pt.a + 1e-4, pt.b, 0.5, 0.0);
    const double fl = plane_indicator(pt.curve, l), fr = plane_indicator(pt.curve, r);
    EXPECT_TRUE(fl * fr <= 0.0) << to_string(pt.curve) << " at a = " << pt.a;
  }
}

TEST(Burst, ThresholdsAndAttractor) {
  const auto d = burst_diagnose(rule1(1.18, 2.0, 0.3, -0.1), 1.10, 1.25);
  ASSERT_TRUE(d.a1 && d.a2 && d.a3);
  EXPECT_NEAR(*d.a1, 1.135, 0.01);
  EXPECT_NEAR(*d.a2, 1.161, 0.01);
  EXPECT_NEAR(*d.a3, 1.208, 0.01);
  EXPECT_LT(*d.a1, *d.a2);
  EXPECT_LT(*d.a2, *d.a3);
  EXPECT_NEAR(d.excursion_reentry_theta, 0.236, 0.01);
  EXPECT_NEAR(d.short_off_exit_theta, 0.32, 0.02);
  EXPECT_EQ(d.attractor_kind, AttractorKind::Periodic);
}

TEST(Rule2, StableOrbitWithSquareRootAmplitude) {
  std::vector<double> taus, amps;
  for (double tau : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    const auto fp = rule2_fixed_point(rule2(2.5, 0.5, tau, 0.3));
    ASSERT_TRUE(fp) << tau;
    EXPECT_TRUE(fp->stable);
    EXPECT_LT(std::fabs(fp->slope), 1.0);
    taus.push_back(tau);
    amps.push_back(fp->phi0);
  }
  EXPECT_NEAR(fit_power_exponent(taus, amps), 0.5, 0.05);
  // Smallest delay: close to the leading-order amplitude.
  EXPECT_NEAR(amps.front() / rule2_periodic(rule2(2.5, 0.5, 1e-4, 0.3)).phi0, 1.0, 1e-3);
  EXPECT_THROW(rule2_fixed_point(rule1(1.5, 2.0, 0.1, -0.1)), std::invalid_argument);
}

TEST(Rule2, PowerFitRecoversExponent) {
  EXPECT_NEAR(fit_power_exponent({1, 2, 4, 8}, {3, 3 * std::sqrt(2.0), 6, 6 * std::sqrt(2.0)}), 0.5, 1e-12);
  EXPECT_THROW(fit_power_exponent({1}, {1}), std::invalid_argument);
}

TEST(Rule2, ConstantGainHomoclinicMeetsBoundaryEquilibrium) {
  const Params p = rule2(1.0, 0.5, 0.1, 0.3, GKind::One);
  const auto beb = boundary_equilibrium(p);
  EXPECT_NEAR(beb.a, std::sin(0.3) / 0.3, 1e-15);
  EXPECT_NEAR(beb.residual, 0.0, 1e-15);
  const auto hc = find_rule2_left_homoclinic(p, 0.97, 1.0);
  ASSERT_TRUE(hc);
  EXPECT_NEAR(hc->a, beb.a, 1e-4);
  // Return time grows without bound at the connection.
  EXPECT_GT(hc->witness, 20.0);
}

TEST(Rule2, CosineBoundaryEquilibrium) {
  EXPECT_NEAR(boundary_equilibrium(rule2(1.0, 0.5, 0.1, 0.3)).a, std::tan(0.3) / 0.3, 1e-15);
}

TEST(Rule2, SymmetricTransitionAndDiagram) {
  const Params templ = rule2(1.0, 0.5, 0.1, 0.3);
  const auto st = find_rule2_symmetric_transition(templ, 1.5, 1.7);
  ASSERT_TRUE(st);
  EXPECT_GT(st->a, 1.6);
  EXPECT_LT(st->a, 1.65);
  // Just below it the orbit around (sigma, 0) reaches towards theta = 0.
  EXPECT_GT(st->witness, 0.0);
  EXPECT_LT(st->witness, 0.1);

  std::vector<double> grid;
  for (int i = 0; i < 33; ++i) grid.push_back(0.9 + 0.05 * i);
  const auto rows = bif_diagram(grid, templ);
  std::set<std::string> below, above;
  for (const auto& r : rows) {
    if (r.branch_id == "equilibrium") EXPECT_FALSE(r.stable);
    (r.a < st->a ? below : above).insert(r.branch_id);
    if (r.branch_id == "attractor_symmetric") EXPECT_NEAR(r.theta_min, -r.theta_max, 1e-3);
    if (r.branch_id == "orbit_sigma") EXPECT_GT(r.theta_min, 0.0);
  }
  EXPECT_TRUE(below.count("orbit_sigma"));
  EXPECT_FALSE(below.count("attractor_symmetric"));
  EXPECT_TRUE(above.count("attractor_symmetric"));
  EXPECT_FALSE(above.count("orbit_sigma"));
}
