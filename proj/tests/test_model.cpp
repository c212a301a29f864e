#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ipswitch/model.hpp"
#include "ipswitch/roots.hpp"

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

}  // namespace

TEST(Params, ValidateRejectsBadValues) {
  EXPECT_NO_THROW(rule1(1.5, 2, 0.1, -0.1).validate());
  EXPECT_THROW(rule1(1.5, 2, -0.1, -0.1).validate(), std::invalid_argument);
  EXPECT_THROW(rule1(1.5, 2, 0.1, 0.1).validate(), std::invalid_argument);
  EXPECT_THROW(rule1(NAN, 2, 0.1, -0.1).validate(), std::invalid_argument);
  Params p = rule1(1.5, 2, 0.1, 0.0);
  p.rule = Rule::Rule2;
  p.sigma = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.sigma = 0.3;
  p.s = 0.5;  // s is ignored by rule 2
  EXPECT_NO_THROW(p.validate());
}

TEST(Params, ParseNames) {
  EXPECT_EQ(parse_gkind("one"), GKind::One);
  EXPECT_EQ(parse_gkind("cos"), GKind::Cosine);
  EXPECT_EQ(parse_rule("2"), Rule::Rule2);
  EXPECT_THROW(parse_gkind("sin"), std::invalid_argument);
  EXPECT_THROW(parse_rule("3"), std::invalid_argument);
  EXPECT_EQ(to_string(GKind::One), "one");
  EXPECT_EQ(to_string(Manifold::Sigma4), "Sigma4");
}

TEST(Fields, OffFieldIsUncontrolledPendulum) {
  const State f = off_field({0.4, -0.2});
  EXPECT_DOUBLE_EQ(f.theta, -0.2);
  EXPECT_DOUBLE_EQ(f.phi, std::sin(0.4));
}

TEST(Fields, OnFieldReducesToZeroDelaySystem) {
  const Params p = rule1(1.5, 2.0, 0.0, -0.1);
  const State x{0.3, 0.1};
  const State f = on_field(x, x, p);
  EXPECT_DOUBLE_EQ(f.theta, 0.1);
  EXPECT_NEAR(f.phi, std::sin(0.3) - (1.5 * 0.3 + 2.0 * 0.1) * std::cos(0.3), 1e-15);
  // Delayed argument only enters the force; G is evaluated at the current angle.
  const State fd = on_field(x, {0.2, -0.05}, p);
  EXPECT_NEAR(fd.phi, std::sin(0.3) - (1.5 * 0.2 - 2.0 * 0.05) * std::cos(0.3), 1e-15);
}

TEST(Fields, Rule1ControlRegions) {
  const Params p = rule1(1.5, 2, 0.1, -0.3);
  EXPECT_TRUE(control_active({0.2, 0.1}, p));     // theta > 0, above Sigma1
  EXPECT_FALSE(control_active({0.2, -0.1}, p));   // theta > 0, below Sigma1
  EXPECT_TRUE(control_active({-0.2, -0.1}, p));   // theta < 0, below Sigma1
  EXPECT_FALSE(control_active({0.2, -0.06}, p));  // on Sigma1: OFF
  EXPECT_FALSE(control_active({0.0, 0.5}, p));    // on Sigma2: OFF
}

TEST(Fields, Rule2ControlRegions) {
  Params p = rule1(1.5, 2, 0.1, 0.0);
  p.rule = Rule::Rule2;
  p.sigma = 0.3;
  EXPECT_TRUE(control_active({0.31, 0.0}, p));
  EXPECT_TRUE(control_active({-0.31, 0.0}, p));
  EXPECT_FALSE(control_active({0.3, 1.0}, p));
  EXPECT_FALSE(control_active({0.0, 5.0}, p));
}

TEST(Fields, HamiltonianIsConservedByOffField) {
  // dH/dt = phi phi' - sin(theta) theta' = 0 along the OFF field.
  for (double th : {-1.0, -0.2, 0.0, 0.7}) {
    for (double ph : {-0.5, 0.0, 0.3}) {
      const State x{th, ph};
      const State f = off_field(x);
      EXPECT_NEAR(ph * f.phi - std::sin(th) * f.theta, 0.0, 1e-15);
    }
  }
  EXPECT_DOUBLE_EQ(hamiltonian({0.0, 0.0}), 1.0);
}

TEST(Manifolds, ValuesAndRates) {
  Params p = rule1(1.5, 2, 0.1, -0.3);
  p.sigma = 0.25;
  const State x{0.5, 0.2};
  EXPECT_DOUBLE_EQ(manifold_value(x, Manifold::Sigma1, p), 0.2 + 0.3 * 0.5);
  EXPECT_DOUBLE_EQ(manifold_value(x, Manifold::Sigma2, p), 0.5);
  EXPECT_DOUBLE_EQ(manifold_value(x, Manifold::Sigma3, p), 0.25);
  EXPECT_DOUBLE_EQ(manifold_value(x, Manifold::Sigma4, p), 0.75);
  const State f{1.0, 2.0};
  EXPECT_DOUBLE_EQ(manifold_rate(f, Manifold::Sigma1, p), 2.0 + 0.3);
  EXPECT_DOUBLE_EQ(manifold_rate(f, Manifold::Sigma3, p), 1.0);
  EXPECT_EQ(manifolds_for(Rule::Rule1).size(), 2u);
  EXPECT_EQ(manifolds_for(Rule::Rule2)[0], Manifold::Sigma3);
}

// Oracle values: roots of sin(theta) = a theta G(theta) from a 30-digit solver.
TEST(Equilibria, CosineSaddle) {
  const auto eq = on_equilibria(rule1(1.5, 2, 0, -0.01));
  ASSERT_EQ(eq.size(), 1u);
  EXPECT_NEAR(eq[0], 0.96740263817469972, 1e-11);
  EXPECT_NEAR(on_equilibria(rule1(2.0, 2, 0, -0.01))[0], 1.1655611852072113, 1e-11);
  EXPECT_TRUE(on_equilibria(rule1(0.9, 2, 0, -0.01)).empty());
}

TEST(Equilibria, ConstantGain) {
  const auto eq = on_equilibria(rule1(0.8, 2, 0, -0.01, GKind::One));
  ASSERT_EQ(eq.size(), 1u);
  EXPECT_NEAR(eq[0], 1.1311025856512828, 1e-11);
  EXPECT_TRUE(on_equilibria(rule1(1.2, 2, 0, -0.01, GKind::One)).empty());
}

TEST(Equilibria, JacobianMatchesFiniteDifference) {
  const Params p = rule1(1.7, 2.0, 0.0, -0.01);
  const double th = on_equilibria(p)[0];
  const auto J = on_jacobian_at(th, p);
  const double h = 1e-6;
  const State x0{th, 0.0};
  const State dth = (on_field(x0 + State{h, 0}, x0 + State{h, 0}, p) - on_field(x0 - State{h, 0}, x0 - State{h, 0}, p)) * (0.5 / h);
  const State dph = (on_field(x0 + State{0, h}, x0 + State{0, h}, p) - on_field(x0 - State{0, h}, x0 - State{0, h}, p)) * (0.5 / h);
  EXPECT_NEAR(J[0], dth.theta, 1e-8);
  EXPECT_NEAR(J[2], dth.phi, 1e-8);
  EXPECT_NEAR(J[1], dph.theta, 1e-8);
  EXPECT_NEAR(J[3], dph.phi, 1e-8);
  // Saddle: negative determinant.
  EXPECT_LT(J[0] * J[3] - J[1] * J[2], 0.0);
}

TEST(Roots, BisectAndFirstRoot) {
  EXPECT_NEAR(bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14), std::numbers::sqrt2, 1e-13);
  EXPECT_THROW(bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0, 1e-14), no_root_error);
  const double r = *first_root([](double x) { return std::sin(x); }, 1.0, 10.0, 200, 1e-14);
  EXPECT_NEAR(r, std::numbers::pi, 1e-12);
}

TEST(Models, LinearizedAgreesForSmallStates) {
  const Params p = rule1(1.5, 2.0, 0.1, -0.1);
  const State x{1e-5, 2e-5}, xd{0.8e-5, 1.5e-5};
  const State fn = NonlinearModel::on(x, xd, p), fl = LinearizedModel::on(x, xd, p);
  EXPECT_NEAR(fn.phi, fl.phi, 1e-14);
  EXPECT_NEAR(NonlinearModel::off(x, p).phi, LinearizedModel::off(x, p).phi, 1e-15);
}
