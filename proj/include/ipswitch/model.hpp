#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "ipswitch/params.hpp"
#include "ipswitch/roots.hpp"

namespace ipswitch {

inline double g_value(GKind g, double theta) { return g == GKind::One ? 1.0 : std::cos(theta); }

inline double g_derivative(GKind g, double theta) {
  return g == GKind::One ? 0.0 : -std::sin(theta);
}

/// Uncontrolled inverted pendulum.
inline State off_field(const State& x) { return {x.phi, std::sin(x.theta)}; }

/// Controlled pendulum with PD force read from the delayed state. The force enters
/// with a restoring sign, so at zero delay theta'' = sin(theta) - (a theta + b phi) G(theta).
inline State on_field(const State& x, const State& x_delayed, const Params& p) {
  const double force = p.a * x_delayed.theta + p.b * x_delayed.phi;
  return {x.phi, std::sin(x.theta) - force * g_value(p.g, x.theta)};
}

/// Control decision from the (delayed) state. Points exactly on a manifold are OFF.
inline bool control_active(const State& x_delayed, const Params& p) {
  if (p.rule == Rule::Rule1) return x_delayed.theta * (x_delayed.phi - p.s * x_delayed.theta) > 0.0;
  return std::fabs(x_delayed.theta) > p.sigma;
}

inline double hamiltonian(const State& x) { return 0.5 * x.phi * x.phi + std::cos(x.theta); }

/// Signed defining function of a switching manifold.
inline double manifold_value(const State& x, Manifold m, const Params& p) {
  switch (m) {
    case Manifold::Sigma1: return x.phi - p.s * x.theta;
    case Manifold::Sigma2: return x.theta;
    case Manifold::Sigma3: return x.theta - p.sigma;
    case Manifold::Sigma4: return x.theta + p.sigma;
  }
  return 0.0;
}

/// Manifolds on which the given rule switches.
inline std::span<const Manifold> manifolds_for(Rule r) {
  static constexpr std::array<Manifold, 2> rule1{Manifold::Sigma1, Manifold::Sigma2};
  static constexpr std::array<Manifold, 2> rule2{Manifold::Sigma3, Manifold::Sigma4};
  return r == Rule::Rule1 ? std::span<const Manifold>(rule1) : std::span<const Manifold>(rule2);
}

/// Time derivative of manifold_value along the field f at x.
inline double manifold_rate(const State& f, Manifold m, const Params& p) {
  switch (m) {
    case Manifold::Sigma1: return f.phi - p.s * f.theta;
    case Manifold::Sigma2:
    case Manifold::Sigma3:
    case Manifold::Sigma4: return f.theta;
  }
  return 0.0;
}

/// Positive roots of sin(theta) - a theta G(theta) in (0, pi]: nonzero ON-system
/// equilibria (theta*, 0). Searched by bracketed bisection on (0, pi/2] then (pi/2, pi].
inline std::vector<double> on_equilibria(const Params& p, double tol = 1e-12) {
  auto f = [&](double th) { return std::sin(th) - p.a * th * g_value(p.g, th); };
  std::vector<double> roots;
  constexpr double pi = std::numbers::pi;
  constexpr int cells = 1000;
  const std::array<std::array<double, 2>, 2> windows{{{1e-9, pi / 2}, {pi / 2, pi}}};
  for (const auto& w : windows) {
    double x0 = w[0];
    double f0 = f(x0);
    for (int i = 1; i <= cells; ++i) {
      const double x1 = (i == cells) ? w[1] : w[0] + (w[1] - w[0]) * i / cells;
      const double f1 = f(x1);
      if ((f0 > 0.0) != (f1 > 0.0) && f0 != 0.0) {
        const double r = bisect(f, x0, x1, tol);
        if (roots.empty() || r - roots.back() > 1e-9) roots.push_back(r);
      }
      x0 = x1;
      f0 = f1;
    }
  }
  return roots;
}

/// Jacobian of the zero-delay ON system at an equilibrium (theta*, 0).
inline std::array<double, 4> on_jacobian_at(double theta_eq, const Params& p) {
  const double dforce = p.a * (g_value(p.g, theta_eq) + theta_eq * g_derivative(p.g, theta_eq));
  return {0.0, 1.0, std::cos(theta_eq) - dforce, -p.b * g_value(p.g, theta_eq)};
}

/// Vector-field policy for the full nonlinear pendulum.
struct NonlinearModel {
  static State off(const State& x, const Params&) { return off_field(x); }
  static State on(const State& x, const State& xd, const Params& p) { return on_field(x, xd, p); }
  static constexpr double divergence_bound = std::numbers::pi / 2;
};

/// Linearization about the upright position; valid for both G kinds.
struct LinearizedModel {
  static State off(const State& x, const Params&) { return {x.phi, x.theta}; }
  static State on(const State& x, const State& xd, const Params& p) {
    return {x.phi, x.theta - (p.a * xd.theta + p.b * xd.phi)};
  }
  static constexpr double divergence_bound = 1e12;
};

}  // namespace ipswitch
