#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ipswitch {

/// Choice of the control gain profile G(theta).
enum class GKind { One, Cosine };

/// State-dependent ON/OFF switching rule.
///  Rule1: control ON iff theta_d * (phi_d - s*theta_d) > 0
///  Rule2: control ON iff |theta_d| > sigma
enum class Rule { Rule1, Rule2 };

enum class Manifold { Sigma1, Sigma2, Sigma3, Sigma4 };

/// Point of the (theta, phi) phase plane. Also used for vector-field values.
struct State {
  double theta = 0.0;
  double phi = 0.0;

  constexpr State operator+(const State& o) const { return {theta + o.theta, phi + o.phi}; }
  constexpr State operator-(const State& o) const { return {theta - o.theta, phi - o.phi}; }
  constexpr State operator-() const { return {-theta, -phi}; }
  constexpr State operator*(double k) const { return {theta * k, phi * k}; }
  constexpr bool operator==(const State&) const = default;

  double norm() const { return std::hypot(theta, phi); }
  bool finite() const { return std::isfinite(theta) && std::isfinite(phi); }
};

constexpr State operator*(double k, const State& x) { return x * k; }

/// All model constants. Angles in radians, time dimensionless.
struct Params {
  double a = 0.0;      // position gain
  double b = 0.0;      // velocity gain
  double tau = 0.0;    // delay
  double s = 0.0;      // slope of Sigma1 (rule 1), s <= 0
  double sigma = 0.3;  // dead-zone half-width (rule 2), sigma > 0
  GKind g = GKind::Cosine;
  Rule rule = Rule::Rule1;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(tau) || !std::isfinite(s) ||
        !std::isfinite(sigma))
      throw std::invalid_argument("parameters must be finite");
    if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
    if (rule == Rule::Rule1 && s > 0.0) throw std::invalid_argument("rule 1 requires s <= 0");
    if (rule == Rule::Rule2 && !(sigma > 0.0))
      throw std::invalid_argument("rule 2 requires sigma > 0");
  }
};

inline std::string_view to_string(GKind g) { return g == GKind::One ? "one" : "cos"; }
inline std::string_view to_string(Rule r) { return r == Rule::Rule1 ? "1" : "2"; }

inline std::string_view to_string(Manifold m) {
  switch (m) {
    case Manifold::Sigma1: return "Sigma1";
    case Manifold::Sigma2: return "Sigma2";
    case Manifold::Sigma3: return "Sigma3";
    case Manifold::Sigma4: return "Sigma4";
  }
  return "?";
}

inline GKind parse_gkind(std::string_view v) {
  if (v == "one" || v == "1") return GKind::One;
  if (v == "cos" || v == "cosine") return GKind::Cosine;
  throw std::invalid_argument("unknown G kind '" + std::string(v) + "' (expected one|cos)");
}

inline Rule parse_rule(std::string_view v) {
  if (v == "1") return Rule::Rule1;
  if (v == "2") return Rule::Rule2;
  throw std::invalid_argument("unknown rule '" + std::string(v) + "' (expected 1|2)");
}

}  // namespace ipswitch
