#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ipswitch/engine.hpp"
#include "ipswitch/integrate.hpp"
#include "ipswitch/model.hpp"
#include "ipswitch/params.hpp"
#include "ipswitch/roots.hpp"

namespace ipswitch {

namespace detail {

inline double sinc(double th) { return th == 0.0 ? 1.0 : std::sin(th) / th; }

}  // namespace detail

/// OFF-field tangency on Sigma1: sin(theta)/theta - s^2.
inline double grazing_off_function(double theta, double s) { return detail::sinc(theta) - s * s; }

/// ON-field tangency on Sigma1 at zero delay: sin(theta)/theta - s^2 - (a + b s) G(theta).
inline double grazing_on_function(double theta, const Params& p) {
  return detail::sinc(theta) - p.s * p.s - (p.a + p.b * p.s) * g_value(p.g, theta);
}

/// Unique root of sin(theta)/theta = s^2 in (0, pi].
inline double grazing_off(double s) {
  if (!(s > -1.0 && s <= 0.0)) throw no_root_error("grazing_off requires s in (-1, 0]");
  if (s == 0.0) return std::numbers::pi;
  return bisect([s](double th) { return grazing_off_function(th, s); }, 1e-12, std::numbers::pi, 1e-14);
}

/// Grazing point of the ON field on Sigma1 (theta > 0), if any.
/// G = 1: the root in (0, pi/2), present only for 2/pi < a + b s + s^2 < 1.
/// G = cos: the smallest positive root, present only for a > 1 - b s - s^2.
inline std::optional<double> grazing_on(const Params& p) {
  constexpr double half_pi = std::numbers::pi / 2;
  auto f = [&](double th) { return grazing_on_function(th, p); };
  if (p.g == GKind::One) {
    const double c = p.a + p.b * p.s + p.s * p.s;
    if (!(c > 2.0 / std::numbers::pi && c < 1.0)) return std::nullopt;
    return bisect([c](double th) { return detail::sinc(th) - c; }, 1e-12, half_pi, 1e-14);
  }
  const double at_zero = f(0.0);
  if (std::fabs(at_zero) <= 1e-12) return 0.0;
  if (at_zero > 0.0) return std::nullopt;
  return first_root(f, 1e-12, std::numbers::pi, 4000, 1e-14);
}

struct SlidingRegion {
  double lo = 0.0;
  double hi = 0.0;
  bool attracting = true;
};

/// Attracting sliding interval on Sigma1 (theta > 0, mirrored for theta < 0) at zero delay.
inline std::optional<SlidingRegion> sliding_region(const Params& p) {
  if (p.rule != Rule::Rule1) throw std::invalid_argument("sliding_region requires rule 1");
  constexpr double half_pi = std::numbers::pi / 2;
  const double off_end = (p.s > -1.0) ? grazing_off(p.s) : 0.0;
  const auto on = grazing_on(p);
  SlidingRegion r;
  if (p.g == GKind::One) {
    const double c = p.a + p.b * p.s + p.s * p.s;
    if (on)
      r.lo = *on;
    else if (c >= 1.0)
      r.lo = 0.0;
    else
      return std::nullopt;
    r.hi = std::min(half_pi, off_end);
  } else {
    if (!on) return std::nullopt;
    r.lo = 0.0;
    r.hi = std::min(*on, off_end);
  }
  if (!(r.hi > r.lo)) return std::nullopt;
  return r;
}

/// Weight of the ON field in the Filippov convex combination tangent to Sigma1.
/// Throws std::domain_error when the result leaves [0, 1], i.e. theta is not a sliding point.
inline double filippov_q(double theta, const Params& p) {
  const double gain = p.a + p.b * p.s;
  double q;
  if (std::fabs(theta) < 1e-8) {
    q = (1.0 - p.s * p.s) / gain;
  } else {
    q = (std::sin(theta) - p.s * p.s * theta) / (gain * theta * g_value(p.g, theta));
  }
  if (!std::isfinite(q) || q < -1e-12 || q > 1.0 + 1e-12)
    throw std::domain_error("filippov_q: theta is outside a sliding region");
  return q;
}

/// Closed-form motion along an attracting sliding segment of Sigma1.
inline State sliding_solution(double theta0, double s, double t) {
  const double th = theta0 * std::exp(s * t);
  return {th, s * th};
}

enum class ZeroDelayEventKind { EnterSliding, ExitSliding, CrossSigma1, CrossSigma2, ReachEquilibrium };

inline std::string_view to_string(ZeroDelayEventKind k) {
  switch (k) {
    case ZeroDelayEventKind::EnterSliding: return "EnterSliding";
    case ZeroDelayEventKind::ExitSliding: return "ExitSliding";
    case ZeroDelayEventKind::CrossSigma1: return "CrossSigma1";
    case ZeroDelayEventKind::CrossSigma2: return "CrossSigma2";
    case ZeroDelayEventKind::ReachEquilibrium: return "ReachEquilibrium";
  }
  return "?";
}

struct ZeroDelayEvent {
  double t = 0.0;
  ZeroDelayEventKind kind = ZeroDelayEventKind::CrossSigma1;
  State state;
};

enum class ZeroDelayMode { Off, On, Sliding };

struct ZeroDelaySample {
  double t = 0.0;
  State x;
  ZeroDelayMode mode = ZeroDelayMode::Off;
};

struct ZeroDelayResult {
  std::vector<ZeroDelaySample> samples;
  std::vector<ZeroDelayEvent> events;
  bool diverged = false;
  bool reached_equilibrium = false;
  State final_state;
  double t_end = 0.0;
};

namespace detail {

class FilippovSimulator {
 public:
  FilippovSimulator(State x0, const Params& p, double t_max, double dt) : p_(p), t_max_(t_max), dt_(dt), x_(x0) {}

  ZeroDelayResult run() {
    if (p_.rule != Rule::Rule1) throw std::invalid_argument("simulate_zero_delay requires rule 1");
    if (!(dt_ > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!x_.finite()) throw std::invalid_argument("initial state must be finite");
    p_.tau = 0.0;
    p_.validate();
    initialise();
    while (!done_ && t_ < t_max_) step();
    res_.final_state = x_;
    res_.t_end = t_;
    return std::move(res_);
  }

 private:
  // Rates of change of phi - s theta along each field.
  double rate_off(const State& x) const { return manifold_rate(off_field(x), Manifold::Sigma1, p_); }
  double rate_on(const State& x) const { return manifold_rate(on_field(x, x, p_), Manifold::Sigma1, p_); }

  double q_of(const State& x) const {
    const double ro = rate_off(x);
    const double rn = rate_on(x);
    return ro / (ro - rn);
  }

  State field(const State& x) const {
    switch (mode_) {
      case ZeroDelayMode::Off: return off_field(x);
      case ZeroDelayMode::On: return on_field(x, x, p_);
      case ZeroDelayMode::Sliding: {
        const double q = q_of(x);
        return off_field(x) * (1.0 - q) + on_field(x, x, p_) * q;
      }
    }
    return {};
  }

  // Side of Sigma1 on which control is ON, expressed as the sign of phi - s theta.
  static int on_side(const State& x) { return x.theta > 0.0 ? 1 : -1; }

  // Mode after reaching Sigma1 at x (theta != 0).
  ZeroDelayMode mode_at_sigma1(const State& x) const {
    const int side = on_side(x);
    const double ro = rate_off(x) * side;  // > 0: OFF field points into the ON side
    const double rn = rate_on(x) * side;   // < 0: ON field points into the OFF side
    if (ro > 0.0 && rn < 0.0) return ZeroDelayMode::Sliding;
    if (ro > 0.0) return ZeroDelayMode::On;
    if (rn < 0.0) return ZeroDelayMode::Off;
    // Both fields point away from Sigma1 (repelling): keep the current side.
    return mode_ == ZeroDelayMode::On ? ZeroDelayMode::On : ZeroDelayMode::Off;
  }

  void initialise() {
    if (x_.theta == 0.0 && x_.phi == 0.0) {
      record_sample();
      reach_equilibrium();
      return;
    }
    const double h1 = manifold_value(x_, Manifold::Sigma1, p_);
    if (x_.theta != 0.0 && std::fabs(h1) <= 1e-13 * std::max(1.0, x_.norm())) {
      mode_ = ZeroDelayMode::Off;
      mode_ = mode_at_sigma1(x_);
      if (mode_ == ZeroDelayMode::Sliding) push({0.0, ZeroDelayEventKind::EnterSliding, x_});
    } else if (x_.theta == 0.0) {
      mode_ = ZeroDelayMode::On;  // theta' = phi carries the state into the ON side
    } else {
      mode_ = control_active(x_, p_) ? ZeroDelayMode::On : ZeroDelayMode::Off;
    }
    record_sample();
  }

  void step() {
    const double h = std::min(dt_, t_max_ - t_);
    const HistorySegment seg = rk4_step([this](double, const State& x) { return field(x); }, t_, x_, h);
    if (!seg.x_hi.finite() || std::fabs(seg.x_hi.theta) > std::numbers::pi / 2) {
      res_.diverged = true;
      done_ = true;
      x_ = seg.x_hi;
      t_ = seg.t_hi;
      record_sample();
      return;
    }
    if (mode_ == ZeroDelayMode::Sliding)
      step_sliding(seg);
    else
      step_smooth(seg);
    if (!done_ && x_.norm() < 1e-9) reach_equilibrium();
    if (!done_ && mode_ == ZeroDelayMode::Sliding && field(x_).norm() < 1e-14) reach_equilibrium();
  }

  void step_smooth(const HistorySegment& seg) {
    // Earliest sign change of Sigma1 or Sigma2 on the step, located on the dense output.
    constexpr int nodes = 8;
    const std::array<Manifold, 2> mans{Manifold::Sigma1, Manifold::Sigma2};
    double t_hit = seg.t_hi + 1.0;
    Manifold m_hit = Manifold::Sigma1;
    for (Manifold m : mans) {
      const double v0 = manifold_value(seg.x_lo, m, p_);
      int prev = sign_of(v0, sign_of(manifold_rate(seg.f_lo, m, p_), 1));
      double t_prev = seg.t_lo;
      for (int k = 1; k <= nodes; ++k) {
        const double tk = seg.t_lo + seg.width() * k / nodes;
        const int sk = sign_of(manifold_value(seg.eval(tk), m, p_), prev);
        if (sk != prev) {
          const double tc = localize_sign_change([&](double t) { return manifold_value(seg.eval(t), m, p_); },
                                                 prev, t_prev, tk, 1e-12);
          if (tc < t_hit) {
            t_hit = tc;
            m_hit = m;
          }
          break;
        }
        t_prev = tk;
      }
    }
    if (t_hit > seg.t_hi) {
      t_ = seg.t_hi;
      x_ = seg.x_hi;
      record_sample();
      return;
    }
    t_ = t_hit;
    x_ = seg.eval(t_hit);
    if (m_hit == Manifold::Sigma2) {
      x_.theta = 0.0;
      push({t_, ZeroDelayEventKind::CrossSigma2, x_});
      mode_ = ZeroDelayMode::On;
    } else {
      x_.phi = p_.s * x_.theta;
      push({t_, ZeroDelayEventKind::CrossSigma1, x_});
      const ZeroDelayMode next = mode_at_sigma1(x_);
      if (next == ZeroDelayMode::Sliding) push({t_, ZeroDelayEventKind::EnterSliding, x_});
      mode_ = next;
    }
    record_sample();
  }

  void step_sliding(const HistorySegment& seg) {
    auto q_at = [&](double t) { return q_of(seg.eval(t)); };
    const double q_hi = q_of(seg.x_hi);
    const bool low = q_hi < -1e-12;
    const bool high = q_hi > 1.0 + 1e-12;
    if (!low && !high) {
      t_ = seg.t_hi;
      x_ = seg.x_hi;
      record_sample();
      return;
    }
    const double bound = low ? 0.0 : 1.0;
    const int sign_lo = low ? 1 : -1;
    const double te = localize_sign_change([&](double t) { return q_at(t) - bound; }, sign_lo, seg.t_lo, seg.t_hi, 1e-12);
    t_ = te;
    x_ = seg.eval(te);
    push({t_, ZeroDelayEventKind::ExitSliding, x_});
    mode_ = low ? ZeroDelayMode::Off : ZeroDelayMode::On;
    record_sample();
  }

  void reach_equilibrium() {
    push({t_, ZeroDelayEventKind::ReachEquilibrium, x_});
    res_.reached_equilibrium = true;
    done_ = true;
  }

  void push(const ZeroDelayEvent& e) { res_.events.push_back(e); }
  void record_sample() { res_.samples.push_back({t_, x_, mode_}); }

  Params p_;
  double t_max_;
  double dt_;
  double t_ = 0.0;
  State x_;
  ZeroDelayMode mode_ = ZeroDelayMode::Off;
  bool done_ = false;
  ZeroDelayResult res_;
};

}  // namespace detail

/// Integrates the delay-free switched system with Filippov sliding on Sigma1.
/// Smooth pieces use RK4; sliding uses the convex combination of the two fields with the
/// weight recomputed from the state, and ends when that weight leaves [0, 1].
inline ZeroDelayResult simulate_zero_delay(State x0, const Params& p, double t_max, double dt = 1e-3) {
  return detail::FilippovSimulator(x0, p, t_max, dt).run();
}

}  // namespace ipswitch
