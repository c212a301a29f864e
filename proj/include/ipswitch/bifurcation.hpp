#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipswitch/asymptotics.hpp"
#include "ipswitch/engine.hpp"
#include "ipswitch/model.hpp"
#include "ipswitch/oscillation.hpp"
#include "ipswitch/roots.hpp"

namespace ipswitch {

enum class BifKind { DIB, SaddleNode, Homoclinic, BoundaryEquilibrium, SymmetricHomoclinic, TimeEqualsTau };

inline std::string_view to_string(BifKind k) {
  switch (k) {
    case BifKind::DIB: return "DIB";
    case BifKind::SaddleNode: return "SN";
    case BifKind::Homoclinic: return "HC";
    case BifKind::BoundaryEquilibrium: return "BEB";
    case BifKind::SymmetricHomoclinic: return "SHC";
    case BifKind::TimeEqualsTau: return "TOFF";
  }
  return "?";
}

/// A located bifurcation. `witness` is a locator-specific diagnostic (documented per
/// locator); `residual` is the defining function at the reported location.
struct BifPoint {
  BifKind kind = BifKind::DIB;
  double a = 0.0, b = 0.0, tau = 0.0;
  double s_or_sigma = 0.0;
  double witness = 0.0;
  double residual = 0.0;
};

namespace detail {

inline BifPoint make_point(BifKind k, const Params& p, double witness, double residual) {
  return {k, p.a, p.b, p.tau, p.rule == Rule::Rule1 ? p.s : p.sigma, witness, residual};
}

// Bisection on a boolean predicate that is false at lo and true at hi.
template <class Pred>
double bisect_predicate(Pred&& pred, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Discontinuity-induced bifurcation

struct DibOptions {
  double probe = 1e-4;         // theta0 of the small-amplitude return
  double confirm = 1e-5;       // second amplitude; both locations must agree
  double agree = 1e-6;         // relative tolerance between the two locations
  double residual = 1e-8;      // |theta3/theta0 - 1| accepted at the located tau
  double steps_per_tau = 50.0;
  double tau_max = 1.0;        // upper end of the bracket search
};

/// theta3/theta0 - 1 for one zigzag from (theta0, s theta0); NaN if the orbit does not
/// return to Sigma1.
inline double dib_indicator(const Params& p, double theta0, double steps_per_tau = 50.0) {
  ReturnOptions ro;
  ro.dt = p.tau / steps_per_tau;
  ro.t_max = 10.0 + 400.0 * p.tau;  // a small zigzag lasts O(tau); longer means trapped
  const auto r = zigzag_return_map(theta0, p, ro);
  if (!r.ok()) return std::numeric_limits<double>::quiet_NaN();
  return r.theta_return / theta0 - 1.0;
}

namespace detail {

inline std::optional<double> dib_tau_for_probe(const Params& templ, double theta0, const DibOptions& o) {
  auto ind = [&](double tau) {
    Params q = templ;
    q.tau = tau;
    return dib_indicator(q, theta0, o.steps_per_tau);
  };
  double start = -2.0 * templ.s;  // leading order at a -> 1
  if (templ.a > 1.0 && templ.a < 2.0 && templ.s < 0.0) {
    try {
      const double guess = dib_curve(templ.a, templ.b, templ.s);
      if (guess > 0.0) start = guess;
    } catch (const std::domain_error&) {
    }
  }
  if (!(start > 0.0)) return std::nullopt;
  double lo = 0.1 * start;
  double flo = ind(lo);
  for (int k = 0; k < 40 && flo > 0.0; ++k) {
    lo /= 1.2;
    flo = ind(lo);
  }
  if (!(flo < 0.0)) return std::nullopt;
  double hi = lo;
  double fhi = flo;
  while (!(fhi > 0.0) && hi < o.tau_max) {
    lo = hi;
    hi = std::min(1.2 * hi, o.tau_max);
    fhi = ind(hi);
    if (std::isnan(fhi)) return std::nullopt;
  }
  if (!(fhi > 0.0)) return std::nullopt;
  return bisect(ind, lo, hi, 1e-14 * hi);
}

}  // namespace detail

/// Delay at which small zigzags neither grow nor decay (rule 1). Bisects tau on
/// theta3/theta0 - 1 at the probe amplitude and repeats at the confirmation amplitude.
/// witness: relative disagreement of the two locations.
inline std::optional<BifPoint> find_dib(const Params& templ, const DibOptions& o = {}) {
  if (templ.rule != Rule::Rule1) throw std::invalid_argument("find_dib requires rule 1");
  const auto t1 = detail::dib_tau_for_probe(templ, o.probe, o);
  if (!t1) return std::nullopt;
  const auto t2 = detail::dib_tau_for_probe(templ, o.confirm, o);
  if (!t2) return std::nullopt;
  Params p = templ;
  p.tau = *t1;
  const double res = std::fabs(dib_indicator(p, o.probe, o.steps_per_tau));
  const double disagree = std::fabs(*t1 - *t2) / *t1;
  if (!(res <= o.residual) || !(disagree <= o.agree)) return std::nullopt;
  return detail::make_point(BifKind::DIB, p, disagree, res);
}

/// Cubic coefficient of the small-amplitude return at a DIB point p:
/// (theta3/theta0 - 1)/theta0^2. Negative means the bifurcating orbit is stable.
inline double dib_cubic_coefficient(const Params& p_at_dib, double theta0 = 0.01, double steps_per_tau = 50.0) {
  return dib_indicator(p_at_dib, theta0, steps_per_tau) / (theta0 * theta0);
}

struct CriticalityChange {
  double a = 0.0;
  double tau = 0.0;
};

/// Value of a in [a_lo, a_hi] at which the DIB changes from supercritical (stable
/// zigzag orbit born) to subcritical.
inline std::optional<CriticalityChange> find_dib_criticality(const Params& templ, double a_lo, double a_hi,
                                                             double theta0 = 0.01, double a_tol = 1e-4,
                                                             const DibOptions& o = {}) {
  auto coeff = [&](double a) -> double {
    Params q = templ;
    q.a = a;
    const auto d = find_dib(q, o);
    if (!d) return std::numeric_limits<double>::quiet_NaN();
    q.tau = d->tau;
    return dib_cubic_coefficient(q, theta0, o.steps_per_tau);
  };
  const double clo = coeff(a_lo);
  const double chi = coeff(a_hi);
  if (!(clo < 0.0 && chi > 0.0)) return std::nullopt;
  const double a = detail::bisect_predicate([&](double x) { return coeff(x) > 0.0; }, a_lo, a_hi, a_tol);
  Params q = templ;
  q.a = a;
  const auto d = find_dib(q, o);
  return CriticalityChange{a, d ? d->tau : std::numeric_limits<double>::quiet_NaN()};
}

// ---------------------------------------------------------------------------
// Zigzag periodic orbits

struct ZigzagFixedPoint {
  double theta = 0.0;
  double slope = 0.0;  // d theta3 / d theta0
  bool stable = false;
  double off_residence = 0.0;
  double residual = 0.0;
};

struct FixedPointOptions {
  double theta_lo = 0.005;
  double theta_hi = 0.7;
  double scan_step = 0.002;
  double steps_per_tau = 50.0;
  double dt = 0.0;          // overrides steps_per_tau when positive
  double residual = 1e-9;   // |theta3 - theta0| accepted at a fixed point
};

/// All fixed points of the zigzag return map found by scanning [theta_lo, theta_hi]
/// and bisecting each sign change of theta3 - theta0. Sign changes across a jump of
/// the map fail the residual test and are dropped. Stability from the central
/// difference with h = 1e-5 theta.
inline std::vector<ZigzagFixedPoint> zigzag_fixed_points(const Params& p, const FixedPointOptions& o = {}) {
  ReturnOptions ro;
  ro.dt = o.dt > 0.0 ? o.dt : p.tau / o.steps_per_tau;
  auto f = [&](double th) {
    const auto r = zigzag_return_map(th, p, ro);
    return r.ok() ? r.theta_return - th : std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<ZigzagFixedPoint> out;
  double prev_th = o.theta_lo;
  double prev_f = f(prev_th);
  const int n = static_cast<int>(std::ceil((o.theta_hi - o.theta_lo) / o.scan_step));
  for (int i = 1; i <= n; ++i) {
    const double th = std::min(o.theta_hi, o.theta_lo + i * o.scan_step);
    const double v = f(th);
    if (!std::isnan(prev_f) && !std::isnan(v) && (prev_f > 0.0) != (v > 0.0)) {
      double root = th;
      try {
        root = bisect(f, prev_th, th, 1e-13);
      } catch (const no_root_error&) {
      }
      const double res = std::fabs(f(root));
      if (res <= o.residual) {
        const double h = 1e-5 * root;
        const auto rp = zigzag_return_map(root + h, p, ro);
        const auto rm = zigzag_return_map(root - h, p, ro);
        ZigzagFixedPoint fp;
        fp.theta = root;
        fp.slope = (rp.theta_return - rm.theta_return) / (2.0 * h);
        fp.stable = rp.ok() && rm.ok() && std::fabs(fp.slope) < 1.0;
        fp.off_residence = zigzag_return_map(root, p, ro).off_residence;
        fp.residual = res;
        out.push_back(fp);
      }
    }
    prev_th = th;
    prev_f = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Saddle-node of zigzag periodic orbits

struct SaddleNodeOptions {
  int grid = 40;
  double theta_lo = 1e-3;
  double theta_hi_frac = 0.97;  // of the saddle angle (G = cos) or of pi/2
  double steps_per_tau = 50.0;
  double tol = 1e-9;            // |Delta H| at the fold
  DibOptions dib;
};

struct FoldProbe {
  double theta = 0.0;      // maximiser of theta3/theta0 - 1 over the amplitude window
  double max_rel = 0.0;    // the maximum
  double delta_H = 0.0;    // Delta H of the zigzag from theta
  double curvature = 0.0;  // second difference of theta3/theta0 - 1 at theta
  bool interior = false;   // maximiser strictly inside the window
};

/// Maximum of the relative return theta3/theta0 - 1 over the amplitude window (coarse
/// grid then golden-section refinement). The relative return is scale-free, so small
/// and large folds are found alike. Points whose zigzag does not return are skipped.
inline std::optional<FoldProbe> fold_probe(const Params& p, const SaddleNodeOptions& o = {}) {
  double hi = std::numbers::pi / 2;
  if (p.g == GKind::Cosine && p.a > 1.0) {
    const auto eq = on_equilibria(p);
    if (!eq.empty()) hi = eq.front();
  }
  hi *= o.theta_hi_frac;
  ReturnOptions ro;
  ro.dt = p.tau / o.steps_per_tau;
  auto rel = [&](double th) {
    const auto r = zigzag_return_map(th, p, ro);
    return r.ok() ? r.theta_return / th - 1.0 : -std::numeric_limits<double>::infinity();
  };
  // Geometric grid: folds near the DIB sit at small amplitude.
  std::vector<double> xs(o.grid), ys(o.grid);
  int best = -1;
  for (int i = 0; i < o.grid; ++i) {
    xs[i] = o.theta_lo * std::pow(hi / o.theta_lo, static_cast<double>(i) / (o.grid - 1));
    ys[i] = rel(xs[i]);
    if (std::isfinite(ys[i]) && (best < 0 || ys[i] > ys[best])) best = i;
  }
  if (best < 0) return std::nullopt;
  FoldProbe fp;
  fp.interior = best > 0 && best < o.grid - 1;
  double l = xs[std::max(0, best - 1)];
  double r = xs[std::min(o.grid - 1, best + 1)];
  constexpr double gr = 0.6180339887498949;
  double x1 = r - gr * (r - l), x2 = l + gr * (r - l);
  double f1 = rel(x1), f2 = rel(x2);
  for (int it = 0; it < 80 && r - l > 1e-9 * r; ++it) {
    if (f1 > f2) {
      r = x2;
      x2 = x1;
      f2 = f1;
      x1 = r - gr * (r - l);
      f1 = rel(x1);
    } else {
      l = x1;
      x1 = x2;
      f1 = f2;
      x2 = l + gr * (r - l);
      f2 = rel(x2);
    }
  }
  fp.theta = 0.5 * (l + r);
  fp.max_rel = rel(fp.theta);
  fp.delta_H = zigzag_return_map(fp.theta, p, ro).delta_H;
  const double h = 0.05 * fp.theta;
  fp.curvature = rel(fp.theta + h) - 2.0 * fp.max_rel + rel(fp.theta - h);
  return fp;
}

/// Saddle-node of zigzag periodic orbits below the DIB delay: the largest tau < tau_DIB
/// at which the maximum relative return over the amplitude window reaches zero, so
/// that theta0 -> Delta H(theta0) has a double root. witness: theta0 of the orbit at
/// the fold; residual: |Delta H| there.
inline std::optional<BifPoint> find_saddle_node(const Params& templ, const SaddleNodeOptions& o = {}) {
  if (templ.rule != Rule::Rule1) throw std::invalid_argument("find_saddle_node requires rule 1");
  const auto dib = find_dib(templ, o.dib);
  if (!dib) return std::nullopt;
  auto psi = [&](double tau) {
    Params q = templ;
    q.tau = tau;
    const auto fp = fold_probe(q, o);
    return fp ? fp->max_rel : std::numeric_limits<double>::quiet_NaN();
  };
  double hi = dib->tau * (1.0 - 1e-3);
  double fhi = psi(hi);
  if (!(fhi > 0.0)) return std::nullopt;
  double lo = hi;
  double flo = fhi;
  for (int k = 0; k < 60 && flo > 0.0; ++k) {
    hi = lo;
    lo *= 0.97;
    flo = psi(lo);
  }
  if (!(flo < 0.0)) return std::nullopt;
  const double tau = bisect(psi, lo, hi, 1e-13 * hi);
  Params q = templ;
  q.tau = tau;
  const auto fp = fold_probe(q, o);
  if (!fp || !fp->interior || !(std::fabs(fp->delta_H) <= o.tol) || !(fp->curvature < 0.0)) return std::nullopt;
  return detail::make_point(BifKind::SaddleNode, q, fp->theta, std::fabs(fp->delta_H));
}

// ---------------------------------------------------------------------------
// Homoclinic connection to the saddle (theta*_cos, 0)

struct HomoclinicOptions {
  double delta = 1e-8;
  double steps_per_tau = 50.0;
  double t_max = 200.0;
  double f_lo = 0.5, f_hi = 1.5, f_step = 0.05;  // scan window, in units of the asymptotic delay
  double rel_tol = 1e-10;
};

enum class ShotOutcome { FallsBack, Escapes, Undecided };

/// Follows the branch of the saddle's unstable manifold that points towards the origin.
/// The shot starts delta below the saddle along the unstable eigenvector, with the
/// control held on over the initial delay interval. It ends after a second entry into
/// the OFF region, a Sigma2 crossing (falls back towards the origin) or divergence
/// (escapes past the saddle).
inline ShotOutcome unstable_manifold_shot(const Params& p, const HomoclinicOptions& o = {}) {
  const auto e = saddle_eigen(p);
  SimOptions opt;
  opt.t_max = o.t_max;
  opt.dt = p.tau > 0.0 ? p.tau / o.steps_per_tau : 1e-3;
  opt.keep_trajectory = false;
  opt.history = InitialHistory::ConstantOn;
  opt.history_state = {e.theta_eq, 0.0};
  int off_entries = 0;
  opt.stop_when = [&](const Event& ev) {
    return ev.kind == EventKind::CrossSigma2 || (ev.is_crossing() && !ev.into_on && ++off_entries == 2);
  };
  const State x0{e.theta_eq - o.delta, -o.delta * e.slope_plus};
  const auto r = simulate(x0, p, std::move(opt));
  if (r.termination == Termination::Diverged) return ShotOutcome::Escapes;
  if (r.termination == Termination::Stopped || r.termination == Termination::ConvergedOrigin)
    return ShotOutcome::FallsBack;
  return ShotOutcome::Undecided;
}

/// Delay of the zigzag homoclinic connection (G = cos, a > 1), bisecting tau on the
/// outcome of the unstable-manifold shot. witness: theta*_cos.
inline std::optional<BifPoint> find_homoclinic(const Params& templ, const HomoclinicOptions& o = {}) {
  if (templ.rule != Rule::Rule1) throw std::invalid_argument("find_homoclinic requires rule 1");
  if (templ.g != GKind::Cosine || !(templ.a > 1.0)) return std::nullopt;
  if (on_equilibria(templ).empty()) return std::nullopt;
  double tau_ref;
  try {
    tau_ref = homoclinic_curve(templ.a, templ.b, templ.s);
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
  if (!(tau_ref > 0.0)) return std::nullopt;
  auto outcome = [&](double tau) {
    Params q = templ;
    q.tau = tau;
    return unstable_manifold_shot(q, o);
  };
  double prev = o.f_lo * tau_ref;
  ShotOutcome prev_out = outcome(prev);
  for (double f = o.f_lo + o.f_step; f <= o.f_hi + 1e-12; f += o.f_step) {
    const double tau = f * tau_ref;
    const ShotOutcome out = outcome(tau);
    if (prev_out != ShotOutcome::Undecided && out != ShotOutcome::Undecided && out != prev_out) {
      const ShotOutcome at_hi = out;
      const double t = detail::bisect_predicate([&](double x) { return outcome(x) == at_hi; }, prev, tau,
                                                o.rel_tol * tau);
      Params q = templ;
      q.tau = t;
      return detail::make_point(BifKind::Homoclinic, q, saddle_eigen(q).theta_eq, tau - prev);
    }
    prev = tau;
    prev_out = out;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Linearized (a, b)-plane classification

enum class ZigzagFate { In, Out, ToSpiral };
enum class SpiralFate { In, Out, ToZigzag };

inline std::string_view to_string(ZigzagFate f) {
  switch (f) {
    case ZigzagFate::In: return "zigzag_in";
    case ZigzagFate::Out: return "zigzag_out";
    case ZigzagFate::ToSpiral: return "to_spiral";
  }
  return "?";
}

inline std::string_view to_string(SpiralFate f) {
  switch (f) {
    case SpiralFate::In: return "spiral_in";
    case SpiralFate::Out: return "spiral_out";
    case SpiralFate::ToZigzag: return "to_zigzag";
  }
  return "?";
}

struct ProbeFate {
  int returned_to = 0;  // 1: Sigma1, 2: Sigma2, 0: no return
  double ratio = 0.0;   // amplitude ratio at the return
  bool trapped = false;
  bool converged = false;
  // (theta + phi) sign(theta) / |x| at the first control switch-off; the linearised OFF
  // system's stable direction is phi = -theta, so positive means the zigzag side.
  double ws_side = std::numeric_limits<double>::quiet_NaN();
};

struct PlaneRegionLabel {
  ZigzagFate zigzag = ZigzagFate::In;
  SpiralFate spiral = SpiralFate::In;
  ProbeFate zigzag_probe, spiral_probe;
  bool trapped() const { return zigzag_probe.trapped || spiral_probe.trapped; }
};

struct PlaneOptions {
  double steps_per_tau = 100.0;
  double t_max = 200.0;
};

namespace detail {

inline ProbeFate linear_probe(const State& x0, const Params& p, const PlaneOptions& o) {
  SimOptions opt;
  opt.t_max = o.t_max;
  opt.dt = p.tau / o.steps_per_tau;
  opt.keep_trajectory = false;
  opt.converge_tol = 1e-9 * x0.norm();
  opt.stop_when = [](const Event& e) { return e.is_crossing() && e.into_on && e.t > 0.0; };
  const auto r = simulate<LinearizedModel>(x0, p, std::move(opt));
  ProbeFate f;
  for (const auto& e : r.events) {
    if (e.kind == EventKind::ControlOff) {
      const double n = e.state.norm();
      const double side = e.state.theta >= 0.0 ? 1.0 : -1.0;
      f.ws_side = n > 0.0 ? side * (e.state.theta + e.state.phi) / n : 0.0;
      break;
    }
  }
  if (r.termination == Termination::Stopped) {
    const Event& last = r.events.back();
    f.returned_to = last.manifold() == Manifold::Sigma1 ? 1 : 2;
    f.ratio = last.state.norm() / x0.norm();
  } else if (r.termination == Termination::ConvergedOrigin) {
    f.converged = true;
  } else {
    f.trapped = true;
  }
  return f;
}

}  // namespace detail

/// Fate of (1, s) and (0, 1), scaled by `scale`, under the system linearised about the
/// origin (rule 1). The zigzag probe is In/Out by its amplitude ratio at the next
/// entry through Sigma1, ToSpiral if it re-enters through Sigma2; the spiral probe
/// likewise. A probe that never returns is Out with the trapped flag set.
inline PlaneRegionLabel classify_plane_point(double a, double b, double tau, double s, double scale = 1.0,
                                             const PlaneOptions& o = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("classify_plane_point requires tau > 0");
  if (!(scale > 0.0)) throw std::invalid_argument("classify_plane_point requires scale > 0");
  Params p;
  p.a = a;
  p.b = b;
  p.tau = tau;
  p.s = s;
  p.rule = Rule::Rule1;
  p.validate();
  PlaneRegionLabel lab;
  lab.zigzag_probe = detail::linear_probe({scale, s * scale}, p, o);
  lab.spiral_probe = detail::linear_probe({0.0, scale}, p, o);
  const auto& z = lab.zigzag_probe;
  if (z.converged)
    lab.zigzag = ZigzagFate::In;
  else if (z.trapped)
    lab.zigzag = ZigzagFate::Out;
  else if (z.returned_to == 2)
    lab.zigzag = ZigzagFate::ToSpiral;
  else
    lab.zigzag = z.ratio < 1.0 ? ZigzagFate::In : ZigzagFate::Out;
  const auto& sp = lab.spiral_probe;
  if (sp.converged)
    lab.spiral = SpiralFate::In;
  else if (sp.trapped)
    lab.spiral = SpiralFate::Out;
  else if (sp.returned_to == 1)
    lab.spiral = SpiralFate::ToZigzag;
  else
    lab.spiral = sp.ratio < 1.0 ? SpiralFate::In : SpiralFate::Out;
  return lab;
}

/// Value of a in [a_lo, a_hi] (b fixed) at which the chosen probe's first switch-off
/// state lands on the linearised W^s (ws_side changes sign).
inline std::optional<double> plane_ws_crossing(bool zigzag_probe, double b, double tau, double s, double a_lo,
                                               double a_hi, double a_tol = 1e-8, const PlaneOptions& o = {}) {
  auto side = [&](double a) {
    const auto lab = classify_plane_point(a, b, tau, s, 1.0, o);
    return zigzag_probe ? lab.zigzag_probe.ws_side : lab.spiral_probe.ws_side;
  };
  const double slo = side(a_lo), shi = side(a_hi);
  if (std::isnan(slo) || std::isnan(shi) || (slo > 0.0) == (shi > 0.0)) return std::nullopt;
  try {
    return bisect(side, a_lo, a_hi, a_tol);
  } catch (const no_root_error&) {
    return std::nullopt;
  }
}

enum class PlaneCurve { ZigzagNeutral, SpiralNeutral, ZigzagWs, SpiralWs };

inline std::string_view to_string(PlaneCurve c) {
  switch (c) {
    case PlaneCurve::ZigzagNeutral: return "zigzag_neutral";
    case PlaneCurve::SpiralNeutral: return "spiral_neutral";
    case PlaneCurve::ZigzagWs: return "zigzag_ws";
    case PlaneCurve::SpiralWs: return "spiral_ws";
  }
  return "?";
}

/// Signed indicator whose zero set is the given partition curve; NaN where undefined.
/// Neutral curves: return ratio 1 with the probe returning to its own manifold.
/// W^s curves: the probe's first switch-off state on the linearised stable direction.
inline double plane_indicator(PlaneCurve c, const PlaneRegionLabel& lab) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const auto& z = lab.zigzag_probe;
  const auto& sp = lab.spiral_probe;
  switch (c) {
    case PlaneCurve::ZigzagNeutral: return z.returned_to == 1 ? z.ratio - 1.0 : nan;
    case PlaneCurve::SpiralNeutral: return sp.returned_to == 2 ? sp.ratio - 1.0 : nan;
    case PlaneCurve::ZigzagWs: return z.ws_side;
    case PlaneCurve::SpiralWs: return sp.ws_side;
  }
  return nan;
}

struct PlaneCurvePoint {
  PlaneCurve curve;
  double a, b;
};

/// Crossings of the four partition curves along the a grid at fixed b, each refined by
/// bisection to a_tol. Intervals where the indicator is undefined are skipped.
inline std::vector<PlaneCurvePoint> plane_curves_at_b(double b, double tau, double s, const std::vector<double>& a_grid,
                                                      double a_tol = 1e-6, const PlaneOptions& o = {}) {
  std::vector<PlaneCurvePoint> out;
  std::vector<PlaneRegionLabel> labs;
  labs.reserve(a_grid.size());
  for (double a : a_grid) labs.push_back(classify_plane_point(a, b, tau, s, 1.0, o));
  for (PlaneCurve c : {PlaneCurve::ZigzagNeutral, PlaneCurve::SpiralNeutral, PlaneCurve::ZigzagWs, PlaneCurve::SpiralWs}) {
    auto f = [&](double a) { return plane_indicator(c, classify_plane_point(a, b, tau, s, 1.0, o)); };
    for (std::size_t k = 0; k + 1 < a_grid.size(); ++k) {
      const double f0 = plane_indicator(c, labs[k]), f1 = plane_indicator(c, labs[k + 1]);
      if (std::isnan(f0) || std::isnan(f1) || (f0 > 0.0) == (f1 > 0.0)) continue;
      double lo = a_grid[k], hi = a_grid[k + 1];
      const bool lo_pos = f0 > 0.0;
      bool ok = true;
      while (hi - lo > a_tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::isnan(fm)) {
          ok = false;
          break;
        }
        ((fm > 0.0) == lo_pos ? lo : hi) = mid;
      }
      if (ok) out.push_back({c, 0.5 * (lo + hi), b});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bursting-like attractor

enum class AttractorKind { Periodic, Aperiodic };

inline std::string_view to_string(AttractorKind k) { return k == AttractorKind::Periodic ? "periodic" : "aperiodic"; }

struct BurstOptions {
  double a_step = 0.005;           // scan step over the a range (a1, a2) and continuation step (a3)
  double a_tol = 1e-4;
  double probe = 1e-4;             // a1: theta0 of the small zigzag
  double probe_dt = 0.003;
  double shot_dt = 0.005;          // a2 and re-entry: unstable-manifold shot
  double shot_t_max = 200.0;
  double fp_dt = 0.002;            // a3: zigzag fixed points
  double fp_theta_lo = 0.05, fp_theta_hi = 0.7, fp_step = 0.002;
  double sample_a = 1.18;          // attractor diagnostics
  double run_dt = 0.002;
  double run_t_max = 3000.0;
  double transient = 2000.0;
  double period_tol = 1e-6;
  int max_period = 200;
};

struct BurstDiagnostics {
  std::optional<double> a1, a2, a3;
  double excursion_reentry_theta = std::numeric_limits<double>::quiet_NaN();
  double short_off_exit_theta = std::numeric_limits<double>::quiet_NaN();
  AttractorKind attractor_kind = AttractorKind::Aperiodic;
  int period_entries = 0;  // Sigma1 entries into ON per period (0 if aperiodic)
};

/// True when a zigzag from theta0 = probe returns to Sigma1 further from the origin.
inline bool small_zigzag_outward(const Params& p, const BurstOptions& o = {}) {
  ReturnOptions ro;
  ro.dt = o.probe_dt;
  const auto r = zigzag_return_map(o.probe, p, ro);
  return r.ok() && r.theta_return > o.probe;
}

/// First Sigma1 crossing of the saddle's unstable-manifold branch towards the origin.
inline std::optional<double> unstable_manifold_sigma1_theta(const Params& p, const BurstOptions& o = {}) {
  const auto e = saddle_eigen(p);
  SimOptions opt;
  opt.t_max = o.shot_t_max;
  opt.dt = o.shot_dt;
  opt.keep_trajectory = false;
  opt.history = InitialHistory::ConstantOn;
  opt.history_state = {e.theta_eq, 0.0};
  opt.stop_when = [](const Event& ev) { return ev.is_crossing(); };
  const double d = 1e-8;
  const auto r = simulate(State{e.theta_eq - d, -d * e.slope_plus}, p, std::move(opt));
  if (r.termination != Termination::Stopped) return std::nullopt;
  const Event& last = r.events.back();
  if (last.manifold() != Manifold::Sigma1) return std::nullopt;
  return last.state.theta;
}

/// Zigzag fixed point by secant iteration from theta_guess (continuation of a known
/// orbit). Only plain zigzags (OFF residence >= tau) are accepted.
inline std::optional<ZigzagFixedPoint> zigzag_fixed_point_near(const Params& p, double theta_guess, double dt,
                                                               double tol = 1e-11) {
  ReturnOptions ro;
  ro.dt = dt;
  auto f = [&](double th) {
    const auto r = zigzag_return_map(th, p, ro);
    return r.ok() && !r.short_off ? r.theta_return - th : std::numeric_limits<double>::quiet_NaN();
  };
  double x0 = theta_guess, x1 = theta_guess * (1.0 + 1e-3);
  double f0 = f(x0), f1 = f(x1);
  for (int it = 0; it < 40; ++it) {
    if (std::isnan(f0) || std::isnan(f1) || f1 == f0) return std::nullopt;
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f(x1);
    if (std::fabs(f1) <= tol) {
      const double h = 1e-5 * x1;
      const auto rp = zigzag_return_map(x1 + h, p, ro);
      const auto rm = zigzag_return_map(x1 - h, p, ro);
      ZigzagFixedPoint fp;
      fp.theta = x1;
      fp.slope = (rp.theta_return - rm.theta_return) / (2.0 * h);
      fp.stable = rp.ok() && rm.ok() && std::fabs(fp.slope) < 1.0;
      fp.off_residence = zigzag_return_map(x1, p, ro).off_residence;
      fp.residual = std::fabs(f1);
      return fp;
    }
  }
  return std::nullopt;
}

/// Stable zigzag periodic orbit with the largest amplitude, if any.
inline std::optional<ZigzagFixedPoint> stable_zigzag_orbit(const Params& p, const BurstOptions& o = {}) {
  FixedPointOptions fo;
  fo.theta_lo = o.fp_theta_lo;
  fo.theta_hi = o.fp_theta_hi;
  fo.scan_step = o.fp_step;
  fo.dt = o.fp_dt;
  std::optional<ZigzagFixedPoint> best;
  for (const auto& fp : zigzag_fixed_points(p, fo))
    if (fp.stable) best = fp;
  return best;
}

namespace detail {

// First a on the grid where pred flips from false to true, refined by bisection.
template <class Pred>
std::optional<double> scan_flip(Pred&& pred, double a_lo, double a_hi, double step, double tol) {
  double prev = a_lo;
  bool prev_v = pred(prev);
  if (prev_v) return std::nullopt;
  for (double a = a_lo + step; a <= a_hi + 1e-12; a += step) {
    const bool v = pred(a);
    if (v) return bisect_predicate(pred, prev, a, tol);
    prev = a;
  }
  return std::nullopt;
}

// Smallest k with |x[i+k] - x[i]| <= tol over the whole window.
inline int detect_period(const std::vector<double>& xs, int max_period, double tol) {
  const int n = static_cast<int>(xs.size());
  for (int k = 1; k <= max_period && 2 * k <= n; ++k) {
    bool ok = true;
    for (int i = 0; i + k < n && ok; ++i) ok = std::fabs(xs[i + k] - xs[i]) <= tol;
    if (ok) return k;
  }
  return 0;
}

}  // namespace detail

/// Thresholds of the bursting-like regime (rule 1, G = cos) over [a_lo, a_hi]:
/// a1, onset of outward drift of small zigzags; a2, the saddle's unstable manifold
/// starts to meet Sigma1; a3, the stable zigzag orbit spends exactly tau in the OFF
/// region. At sample_a the unstable-manifold re-entry angle, the first short OFF
/// residence and the periodicity of the attractor are recorded.
inline BurstDiagnostics burst_diagnose(const Params& templ, double a_lo, double a_hi, const BurstOptions& o = {}) {
  if (templ.rule != Rule::Rule1 || templ.g != GKind::Cosine)
    throw std::invalid_argument("burst_diagnose requires rule 1 and G = cos");
  auto at = [&](double a) {
    Params q = templ;
    q.a = a;
    return q;
  };
  BurstDiagnostics d;
  d.a1 = detail::scan_flip([&](double a) { return small_zigzag_outward(at(a), o); }, a_lo, a_hi, o.a_step, o.a_tol);
  d.a2 = detail::scan_flip([&](double a) { return unstable_manifold_sigma1_theta(at(a), o).has_value(); }, a_lo,
                           a_hi, o.a_step, o.a_tol);

  // a3: continue the stable orbit down from a_hi and secant on T_off - tau.
  if (const auto fp0 = stable_zigzag_orbit(at(a_hi), o)) {
    double a_prev = a_hi, e_prev = fp0->off_residence - templ.tau, th = fp0->theta;
    double a_last = a_prev, e_last = e_prev;
    bool have_two = false;
    for (double a = a_hi - o.a_step; a >= a_lo - 1e-12 && e_prev > 0.0; a -= o.a_step) {
      const auto fp = zigzag_fixed_point_near(at(a), th, o.fp_dt);
      if (!fp) break;
      a_last = a_prev;
      e_last = e_prev;
      a_prev = a;
      e_prev = fp->off_residence - templ.tau;
      th = fp->theta;
      have_two = true;
    }
    if (have_two) {
      // Secant through the last two continued points; the orbit ceases to be a plain
      // zigzag where its OFF residence reaches tau, so the root is not bracketed.
      const double root = a_prev - e_prev * (a_prev - a_last) / (e_prev - e_last);
      if (std::isfinite(root) && root > a_lo && root < a_hi) d.a3 = root;
    }
  }

  const Params ps = at(o.sample_a);
  if (const auto th = unstable_manifold_sigma1_theta(ps, o)) d.excursion_reentry_theta = *th;
  SimOptions opt;
  opt.t_max = o.run_t_max;
  opt.dt = o.run_dt;
  opt.keep_trajectory = false;
  const auto run = simulate(State{o.probe, ps.s * o.probe}, ps, std::move(opt));
  const auto shorts = detect_short_off(run.events, ps);
  if (!shorts.empty()) d.short_off_exit_theta = shorts.front().second;
  std::vector<double> entries;
  for (const auto& e : run.events)
    if (e.is_crossing() && e.into_on && e.t > o.transient) entries.push_back(e.state.theta);
  d.period_entries = detail::detect_period(entries, o.max_period, o.period_tol);
  d.attractor_kind = d.period_entries > 0 ? AttractorKind::Periodic : AttractorKind::Aperiodic;
  return d;
}

// ---------------------------------------------------------------------------
// Rule 2

struct Rule2FixedPoint {
  double phi0 = 0.0;
  double slope = 0.0;
  bool stable = false;
  double T_int = 0.0;
  double residual = 0.0;
};

struct Rule2Options {
  double phi_lo = 0.0, phi_hi = 0.0;  // scan window; 0 means around the asymptotic amplitude
  int grid = 24;
  double steps_per_tau = 20.0;
  double dt_max = 2e-3;
  double t_max = 400.0;
};

/// Fixed point of the rule-2 return map phi0 -> |phi| at the next entry through Sigma3
/// (orbit encircling (sigma, 0)). Scans a log grid for a +/- sign change of
/// phi_return - phi0 and bisects.
inline std::optional<Rule2FixedPoint> rule2_fixed_point(const Params& p, const Rule2Options& o = {}) {
  if (p.rule != Rule::Rule2) throw std::invalid_argument("rule2_fixed_point requires rule 2");
  double lo = o.phi_lo, hi = o.phi_hi;
  if (!(lo > 0.0 && hi > lo)) {
    lo = 1e-3;
    hi = 1.0;
    if (rule2_strength(p) > 0.0 && p.b > 0.0 && p.tau > 0.0) {
      const double g = rule2_periodic(p).phi0;
      lo = 0.3 * g;
      hi = std::min(3.0 * g, 1.5);
    }
  }
  ReturnOptions ro;
  ro.dt = p.tau > 0.0 ? std::min(o.dt_max, p.tau / o.steps_per_tau) : o.dt_max;
  ro.t_max = o.t_max;
  auto f = [&](double ph) {
    const auto r = rule2_return_map(ph, p, ro);
    return r.ok() && !r.via_opposite ? r.phi_return - ph : std::numeric_limits<double>::quiet_NaN();
  };
  double prev = lo;
  double fprev = f(prev);
  for (int i = 1; i < o.grid; ++i) {
    const double ph = lo * std::pow(hi / lo, static_cast<double>(i) / (o.grid - 1));
    const double v = f(ph);
    if (fprev > 0.0 && v <= 0.0) {
      const double root = bisect(f, prev, ph, 1e-13 * ph);
      Rule2FixedPoint fp;
      fp.phi0 = root;
      fp.residual = std::fabs(f(root));
      const double h = 1e-5 * root;
      fp.slope = (f(root + h) - f(root - h)) / (2.0 * h) + 1.0;
      fp.stable = std::fabs(fp.slope) < 1.0;
      fp.T_int = rule2_return_map(root, p, ro).T_int;
      return fp;
    }
    prev = ph;
    fprev = v;
  }
  return std::nullopt;
}

/// Least-squares exponent p of y = C x^p.
inline double fit_power_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_power_exponent needs >= 2 pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// a at which the ON equilibrium collides with Sigma3 at (sigma, 0).
inline BifPoint boundary_equilibrium(const Params& templ) {
  Params p = templ;
  const double sg = p.sigma;
  p.a = p.g == GKind::One ? std::sin(sg) / sg : std::tan(sg) / sg;
  return detail::make_point(BifKind::BoundaryEquilibrium, p, sg, p.a * sg * g_value(p.g, sg) - std::sin(sg));
}

struct Rule2HomoclinicOptions {
  double probe = 1e-3;
  double dt = 2e-3;
  double t_max = 2000.0;
  double a_tol = 1e-5;
};

/// Left end of the family of periodic orbits around (sigma, 0): below it the orbit of
/// (sigma, probe) is captured by the ON equilibrium instead of returning to Sigma3.
/// witness: return time at the upper end of the final bracket.
inline std::optional<BifPoint> find_rule2_left_homoclinic(const Params& templ, double a_lo, double a_hi,
                                                          const Rule2HomoclinicOptions& o = {}) {
  if (templ.rule != Rule::Rule2) throw std::invalid_argument("find_rule2_left_homoclinic requires rule 2");
  ReturnOptions ro;
  ro.dt = o.dt;
  ro.t_max = o.t_max;
  auto returns = [&](double a) {
    Params q = templ;
    q.a = a;
    return rule2_return_map(o.probe, q, ro).ok();
  };
  if (returns(a_lo) || !returns(a_hi)) return std::nullopt;
  double lo = a_lo, hi = a_hi;
  while (hi - lo > o.a_tol) {
    const double mid = 0.5 * (lo + hi);
    if (returns(mid))
      hi = mid;
    else
      lo = mid;
  }
  Params q = templ;
  q.a = 0.5 * (lo + hi);
  Params qh = templ;
  qh.a = hi;
  return detail::make_point(BifKind::Homoclinic, q, rule2_return_map(o.probe, qh, ro).t_return, hi - lo);
}

// ---------------------------------------------------------------------------
// Branch table

struct BranchRow {
  double a = 0.0;
  std::string branch_id;
  double theta_min = 0.0, theta_max = 0.0;
  bool stable = false;
};

namespace detail {

template <class F>
std::pair<double, double> orbit_theta_range(State x0, const Params& p, double dt, F&& stop) {
  SimOptions opt;
  opt.dt = dt;
  opt.t_max = 400.0;
  opt.stop_when = stop;
  const auto r = simulate(x0, p, std::move(opt));
  double lo = x0.theta, hi = x0.theta;
  for (const auto& seg : r.trajectory) {
    for (int k = 0; k <= 4; ++k) {
      const double th = seg.eval(seg.t_lo + seg.width() * k / 4).theta;
      lo = std::min(lo, th);
      hi = std::max(hi, th);
    }
  }
  return {lo, hi};
}

}  // namespace detail

struct AttractorOptions {
  double dt = 2e-3;
  double t_max = 600.0;
  double transient = 400.0;
  double phi_start = 0.05;  // start at (sigma, phi_start) on Sigma3
};

struct AttractorRange {
  double theta_min = 0.0, theta_max = 0.0;
  bool symmetric() const { return theta_min < 0.0; }
};

/// Theta range of the rule-2 attractor reached from (sigma, phi_start) after the transient;
/// none if the orbit diverges or settles on an equilibrium.
inline std::optional<AttractorRange> rule2_attractor(const Params& p, const AttractorOptions& o = {}) {
  SimOptions opt;
  opt.dt = o.dt;
  opt.t_max = o.t_max;
  const auto r = simulate(State{p.sigma, o.phi_start}, p, std::move(opt));
  if (r.termination != Termination::TimeLimit) return std::nullopt;
  AttractorRange out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& seg : r.trajectory) {
    if (seg.t_lo < o.transient) continue;
    out.theta_min = std::min(out.theta_min, seg.x_lo.theta);
    out.theta_max = std::max(out.theta_max, seg.x_lo.theta);
  }
  if (!(out.theta_max - out.theta_min > 1e-6)) return std::nullopt;
  return out;
}

/// Rule 2: a at which the attractor around (sigma, 0) gives way to the symmetric orbit
/// around the origin (the right-most homoclinic bifurcation), by bisection on symmetry.
inline std::optional<BifPoint> find_rule2_symmetric_transition(const Params& templ, double a_lo, double a_hi,
                                                               double a_tol = 1e-4, const AttractorOptions& o = {}) {
  auto at = [&](double a) {
    Params p = templ;
    p.a = a;
    return rule2_attractor(p, o);
  };
  auto lo = at(a_lo);
  const auto hi = at(a_hi);
  if (!lo || lo->symmetric() || !hi || !hi->symmetric()) return std::nullopt;
  auto symmetric = [&](double a) {
    const auto r = at(a);
    if (r && !r->symmetric()) lo = r;
    return r && r->symmetric();
  };
  const double a = detail::bisect_predicate(symmetric, a_lo, a_hi, a_tol);
  Params p = templ;
  p.a = a;
  // Witness: smallest theta of the orbit around (sigma, 0) just below the transition.
  return detail::make_point(BifKind::SymmetricHomoclinic, p, lo->theta_min, 0.5 * a_tol);
}

struct DiagramOptions {
  FixedPointOptions zigzag;
  Rule2Options rule2;
  AttractorOptions attractor;
};

/// Equilibria and periodic orbits (theta > 0 side) for each a in the grid.
inline std::vector<BranchRow> bif_diagram(const std::vector<double>& a_grid, const Params& templ,
                                          const DiagramOptions& o = {}) {
  std::vector<BranchRow> rows;
  for (double a : a_grid) {
    Params p = templ;
    p.a = a;
    const auto eq = on_equilibria(p);
    if (!eq.empty()) {
      const double th = eq.front();
      const bool admissible = p.rule == Rule::Rule1 || th > p.sigma;
      if (admissible) {
        const auto J = on_jacobian_at(th, p);
        const double tr = J[0] + J[3], det = J[0] * J[3] - J[1] * J[2];
        rows.push_back({a, "equilibrium", th, th, det > 0.0 && tr < 0.0});
      }
    }
    if (p.rule == Rule::Rule1) {
      if (p.tau <= 0.0) continue;
      int k = 0;
      for (const auto& fp : zigzag_fixed_points(p, o.zigzag)) {
        auto stop = [](const Event& e) { return e.is_crossing() && e.into_on && e.t > 0.0; };
        const double dt = o.zigzag.dt > 0.0 ? o.zigzag.dt : p.tau / o.zigzag.steps_per_tau;
        const auto [lo, hi] = detail::orbit_theta_range(State{fp.theta, p.s * fp.theta}, p, dt, stop);
        rows.push_back({a, "zigzag" + std::to_string(k++), lo, hi, fp.stable});
      }
    } else {
      if (const auto fp = rule2_fixed_point(p, o.rule2)) {
        const double dt = std::min(o.rule2.dt_max, p.tau / o.rule2.steps_per_tau);
        auto stop = [](const Event& e) { return e.is_crossing() && e.into_on && e.t > 0.0; };
        const auto [lo, hi] = detail::orbit_theta_range(State{p.sigma, fp->phi0}, p, dt, stop);
        rows.push_back({a, "orbit_sigma", lo, hi, fp->stable});
      }
      if (const auto at = rule2_attractor(p, o.attractor))
        rows.push_back({a, at->symmetric() ? "attractor_symmetric" : "attractor_sigma", at->theta_min, at->theta_max,
                        true});
    }
  }
  return rows;
}

}  // namespace ipswitch
