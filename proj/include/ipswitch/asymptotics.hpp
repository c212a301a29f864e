#pragma once

#include <cmath>
#include <stdexcept>

#include "ipswitch/model.hpp"
#include "ipswitch/params.hpp"

namespace ipswitch {

/// The series has no real intersection time (control too weak at this amplitude).
class no_intersection_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a closed-form curve is evaluated at a pole.
class singular_input_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Which expansion of the intersection time and Hamiltonian change applies.
///  Early: T_int <= 2 tau.  Late: T_int >= 2 tau.  Auto: predicted from the leading terms.
enum class TintBranch { Auto, Early, Late };

/// Coefficients of the one-zigzag series solution, evaluated at theta1.
struct ZigzagCoefficients {
  double alpha1_hat, alpha2_hat, alpha3, alpha4, alpha5_hat, alpha6, alpha6_hat;
};

inline ZigzagCoefficients zigzag_coefficients(double theta, const Params& p) {
  const double G = g_value(p.g, theta);
  const double sn = std::sin(theta);
  const double ab = p.a * p.b;
  return {
      -ab * theta * G * G / 6.0,
      ab * theta * G * G / 2.0,
      -0.5 * (p.a * theta * G - sn),
      -0.5 * p.b * theta * G,
      -ab * theta * G * G / 2.0,
      -p.b * sn * G * G / 6.0,
      p.b * G * (p.a * theta * G - sn) / 6.0,
  };
}

/// Series for the OFF arc leaving (theta0, s theta0), valid for t in [0, tau].
inline double series_off_segment(double theta0, double s, double t) {
  return theta0 + theta0 * s * t + 0.5 * std::sin(theta0) * t * t;
}

/// Angle at t = tau of the orbit leaving (theta0, s theta0).
inline double series_theta1(double theta0, double s, double tau) { return series_off_segment(theta0, s, tau); }

/// Three-branch series for theta(t) over one zigzag, expanded about theta1 = theta(tau).
/// The branch is picked from t: [0, tau], [tau, 2 tau], [2 tau, T_int + tau].
/// The cubic term on [tau, 2 tau] is alpha6 / G(theta1): the delayed OFF acceleration
/// sin(theta) enters once multiplied by G, as in the rule-2 series.
inline double series_zigzag(double theta1, const Params& p, double t) {
  const auto c = zigzag_coefficients(theta1, p);
  const double cubic_mid = c.alpha6 / g_value(p.g, theta1);
  const double tau = p.tau;
  const double s = p.s;
  const double sn = std::sin(theta1);
  const double u = t - tau;
  const double slope = s * theta1 + sn * tau;
  if (t <= tau) return theta1 + slope * u + 0.5 * sn * u * u;
  if (t <= 2.0 * tau) return theta1 + slope * u + (c.alpha3 + c.alpha4 * s) * u * u + cubic_mid * u * u * u;
  return theta1 + c.alpha1_hat * tau * tau * tau + (slope + c.alpha2_hat * tau * tau) * u +
         (c.alpha3 + c.alpha4 * s + c.alpha5_hat * tau) * u * u + c.alpha6_hat * u * u * u;
}

struct TintCoefficients {
  double xi1, xi2, xi3, xi3_hat;
};

/// Throws no_intersection_error unless a theta1 G(theta1) > sin(theta1).
inline TintCoefficients tint_coefficients(double theta1, const Params& p) {
  const double G = g_value(p.g, theta1);
  const double sn = std::sin(theta1);
  const double strength = p.a * theta1 * G;
  const double D = strength - sn;
  if (!(D > 0.0)) throw no_intersection_error("control too weak: a theta G(theta) <= sin(theta)");
  return {
      strength / D,
      -p.b * theta1 * sn * G / (D * D),
      -0.5 * p.b * sn * sn * sn * G / (D * D * D),
      0.5 * p.b * G * (sn * sn - 3.0 * p.a * theta1 * sn * G + strength * strength) / (D * D),
  };
}

namespace detail {

inline TintBranch resolve_branch(TintBranch br, const TintCoefficients& xi, const Params& p) {
  if (br != TintBranch::Auto) return br;
  return (xi.xi1 + xi.xi2 * p.s) < 2.0 ? TintBranch::Early : TintBranch::Late;
}

}  // namespace detail

/// Time at which the zigzag leaving (theta0, s theta0) next reaches Sigma1, as a series
/// in s and tau about theta1.
inline double series_T_int(double theta1, const Params& p, TintBranch branch = TintBranch::Auto) {
  const auto xi = tint_coefficients(theta1, p);
  const auto br = detail::resolve_branch(branch, xi, p);
  const double third = br == TintBranch::Early ? xi.xi3 : xi.xi3_hat;
  return xi.xi1 * p.tau + xi.xi2 * p.s * p.tau + third * p.tau * p.tau;
}

struct DeltaHCoefficients {
  double zeta1, zeta2, zeta3, zeta4, zeta5, zeta4_hat, zeta5_hat;
};

inline DeltaHCoefficients delta_h_coefficients(double theta1, const Params& p) {
  const double th = theta1;
  const double G = g_value(p.g, th);
  const double sn = std::sin(th);
  const double a = p.a;
  const double ab = p.a * p.b;
  const double A = a * th * G;  // control strength at theta1
  const double D = A - sn;
  if (!(D > 0.0)) throw no_intersection_error("control too weak: a theta G(theta) <= sin(theta)");
  const double G2 = G * G;
  const double D2 = D * D;
  const double D3 = D2 * D;
  const double half = sn - 0.5 * A;
  return {
      -A * A * th / D,
      -A * A * half / D,
      2.0 * ab * th * th * th * G2 * half / D2,
      -2.0 * ab * th * th * G2 * (sn * sn * sn - 2.75 * A * sn * sn + 2.0 * A * A * sn - 0.5 * A * A * A) / D3,
      -ab * th * sn * G2 * (sn * sn * sn - 6.0 * A * sn * sn + 8.0 * A * A * sn - 3.0 * A * A * A) / (6.0 * D3),
      2.0 * ab * th * th * G2 * (sn * sn - 0.75 * A * sn + 0.25 * A * A) / D2,
      ab * th * G2 * (sn * sn * sn + 7.0 * A * sn * sn - 9.0 * A * A * sn + 3.0 * A * A * A) / (6.0 * D2),
  };
}

/// Hamiltonian change between the two switching points of one zigzag, as a series in s
/// and tau about theta1.
inline double series_delta_H(double theta1, const Params& p, TintBranch branch = TintBranch::Auto) {
  const auto z = delta_h_coefficients(theta1, p);
  const auto br = detail::resolve_branch(branch, tint_coefficients(theta1, p), p);
  const double s = p.s;
  const double tau = p.tau;
  const double z4 = br == TintBranch::Early ? z.zeta4 : z.zeta4_hat;
  const double z5 = br == TintBranch::Early ? z.zeta5 : z.zeta5_hat;
  return z.zeta1 * s * tau + z.zeta2 * tau * tau + z.zeta3 * s * s * tau + z4 * s * tau * tau + z5 * tau * tau * tau;
}

/// Coefficient of theta1^2 in the small-amplitude expansion of the Hamiltonian change.
/// The same for both G kinds.
inline double delta_H_quadratic_coefficient(double a, double b, double s, double tau) {
  const double am1 = a - 1.0;
  if (am1 == 0.0) throw singular_input_error("a = 1 is a pole");
  return -a * a / am1 * s * tau + a * a * (a - 2.0) / (2.0 * am1) * tau * tau -
         a * b * (a - 2.0) / (am1 * am1) * s * s * tau + a * b * (a * a - 3.0 * a + 4.0) / (2.0 * am1 * am1) * s * tau * tau +
         a * b * (3.0 * a * a * a - 9.0 * a * a + 7.0 * a + 1.0) / (6.0 * am1 * am1) * tau * tau * tau;
}

/// Delay at which a zigzag periodic orbit is born at the origin, to second order in s.
inline double dib_curve(double a, double b, double s) {
  if (a == 1.0 || a == 2.0 || a == 0.0) throw singular_input_error("dib_curve is singular at a = 0, 1, 2");
  const double am2 = a - 2.0;
  return 2.0 * s / am2 -
         2.0 * (2.0 + 8.0 * a - 15.0 * a * a + 6.0 * a * a * a) / (3.0 * a * (a - 1.0) * am2 * am2 * am2) * b * s * s;
}

/// Delay at which the theta1^4 term of the Hamiltonian change vanishes (criticality of
/// the birth of zigzag orbits), to second order in s.
inline double criticality_curve(double a, double b, double s, GKind g) {
  if (g == GKind::One) {
    if (a == 0.0 || a == 1.0) throw singular_input_error("criticality_curve (G = 1) is singular at a = 0, 1");
    return -2.0 / a * s - 2.0 * b * (a * a - 2.0) * (3.0 * a - 1.0) / (3.0 * std::pow(a, 4) * (a - 1.0)) * s * s;
  }
  const double q = 3.0 * a * a - 8.0 * a + 6.0;
  if (a == 0.0 || a == 1.0) throw singular_input_error("criticality_curve (G = cos) is singular at a = 0, 1");
  const double poly = -243.0 * std::pow(a, 6) + 1674.0 * std::pow(a, 5) - 4491.0 * std::pow(a, 4) +
                      5862.0 * std::pow(a, 3) - 3611.0 * a * a + 642.0 * a + 175.0;
  return (3.0 * a - 5.0) / q * s + b * poly / (6.0 * a * (a - 1.0) * q * q * q) * s * s;
}

/// Eigen-data of the zero-delay ON system at the saddle (theta*, 0), G = cos.
struct SaddleEigen {
  double theta_eq;
  double lambda_plus, lambda_minus;
  double slope_plus, slope_minus;  // eigenvectors (1, slope)
};

inline SaddleEigen saddle_eigen(const Params& p) {
  if (p.g != GKind::Cosine) throw std::invalid_argument("saddle_eigen requires G = cos");
  const auto eq = on_equilibria(p);
  if (eq.empty() || !(p.a > 1.0)) throw std::domain_error("no saddle equilibrium (requires a > 1)");
  const double th = eq.front();
  const double c = std::cos(th);
  const double k = (2.0 * th - std::sin(2.0 * th)) / (2.0 * th * c);
  const double mid = -p.b * c / 2.0;
  const double rad = std::sqrt(p.b * p.b * c * c / 4.0 + k);
  return {th, mid + rad, mid - rad, mid + rad, mid - rad};
}

/// Delay at which the zigzag homoclinic connection to the saddle exists, first order in s.
inline double homoclinic_curve(double a, double b, double s) {
  Params p;
  p.a = a;
  p.b = b;
  p.s = s;
  p.g = GKind::Cosine;
  const auto e = saddle_eigen(p);
  return -(1.0 / a) * (2.0 / std::cos(e.theta_eq) + b / e.lambda_plus) * s;
}

/// a sigma G(sigma) - sin(sigma): positive when the control can push the pendulum back
/// across Sigma3.
inline double rule2_strength(const Params& p) {
  return p.a * p.sigma * g_value(p.g, p.sigma) - std::sin(p.sigma);
}

struct Rule2Coefficients {
  double chi1, chi2, chi3;
};

inline Rule2Coefficients rule2_coefficients(const Params& p) {
  const double D = rule2_strength(p);
  if (!(D > 0.0)) throw no_intersection_error("rule 2: a sigma G(sigma) <= sin(sigma)");
  const double G = g_value(p.g, p.sigma);
  return {2.0 / D, -(2.0 / 3.0) * p.b * G / (D * D), 2.0 * p.a * p.sigma * G / D};
}

/// Time for the orbit of (sigma, phi0) to return to Sigma3, for phi0 = O(tau^(1/2)).
inline double series_T_int_rule2(double phi0, const Params& p) {
  const auto chi = rule2_coefficients(p);
  return chi.chi1 * phi0 + chi.chi2 * phi0 * phi0 + chi.chi3 * p.tau;
}

/// Hamiltonian change over one excursion from (sigma, phi0) into the ON region and back.
inline double series_delta_H_rule2(double phi0, const Params& p) {
  const double D = rule2_strength(p);
  if (!(D > 0.0)) throw no_intersection_error("rule 2: a sigma G(sigma) <= sin(sigma)");
  const double G = g_value(p.g, p.sigma);
  return 2.0 * p.a * p.sigma * G * phi0 * p.tau - (2.0 / 3.0) * p.b * G / D * phi0 * phi0 * phi0;
}

struct Rule2Orbit {
  double phi0;
  bool stable;
};

/// Small periodic orbit around (sigma, 0): the nonzero root of the Hamiltonian-change series.
inline Rule2Orbit rule2_periodic(const Params& p) {
  if (p.rule != Rule::Rule2) throw std::invalid_argument("rule2_periodic requires rule 2");
  const double D = rule2_strength(p);
  if (!(D > 0.0)) throw std::domain_error("no periodic orbit: a sigma G(sigma) <= sin(sigma)");
  if (!(p.b > 0.0)) throw std::domain_error("no periodic orbit: requires b > 0");
  const double phi0 = std::sqrt(3.0 * p.a * p.sigma * D * p.tau / p.b);
  // d(Delta H)/d(phi0) at the orbit is -(4/3) b G phi0^2 / D.
  const bool stable = g_value(p.g, p.sigma) > 0.0;
  return {phi0, stable};
}

}  // namespace ipswitch
