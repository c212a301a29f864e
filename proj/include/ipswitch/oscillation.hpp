#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ipswitch/engine.hpp"
#include "ipswitch/model.hpp"

namespace ipswitch {

enum class OscillationTag { Zigzag, SpiralHalf, TrappedON, WsAsymptotic };

inline std::string_view to_string(OscillationTag t) {
  switch (t) {
    case OscillationTag::Zigzag: return "Zigzag";
    case OscillationTag::SpiralHalf: return "SpiralHalf";
    case OscillationTag::TrappedON: return "TrappedON";
    case OscillationTag::WsAsymptotic: return "WsAsymptotic";
  }
  return "?";
}

/// True when x lies on the OFF-system stable manifold of the origin (H = 1). The tolerance
/// shrinks with |x|^2 near the origin, where every point has H close to 1.
inline bool on_origin_stable_manifold(const State& x, double tol = 1e-9) {
  const double r2 = x.theta * x.theta + x.phi * x.phi;
  return std::fabs(hamiltonian(x) - 1.0) <= tol * std::min(1.0, r2);
}

/// Tags each span between consecutive entries into an ON region (rule 1).
/// A span is named after the manifold it ends on: Sigma1 gives a zigzag, Sigma2 half a
/// spiral. A control switch-off on W^s tags the span WsAsymptotic. A run that ends while
/// in an ON region adds a final TrappedON tag.
inline std::vector<OscillationTag> classify_oscillation(const std::vector<Event>& events, const Params& p) {
  if (p.rule != Rule::Rule1) throw std::invalid_argument("classify_oscillation requires rule 1");
  std::vector<OscillationTag> tags;
  bool have_start = false;
  bool in_on = false;
  bool ws = false;
  bool ended_diverged = false;
  for (const auto& e : events) {
    if (e.kind == EventKind::ControlOff && on_origin_stable_manifold(e.state)) ws = true;
    if (e.kind == EventKind::Diverged) ended_diverged = true;
    if (!e.is_crossing()) continue;
    if (e.into_on) {
      if (have_start) {
        if (ws)
          tags.push_back(OscillationTag::WsAsymptotic);
        else
          tags.push_back(e.manifold() == Manifold::Sigma1 ? OscillationTag::Zigzag : OscillationTag::SpiralHalf);
      }
      have_start = true;
      ws = false;
    }
    in_on = e.into_on;
  }
  if (ws)
    tags.push_back(OscillationTag::WsAsymptotic);
  else if (have_start && (in_on || ended_diverged))
    tags.push_back(OscillationTag::TrappedON);
  return tags;
}

/// OFF-region residences shorter than tau: (duration, theta at the exit crossing).
inline std::vector<std::pair<double, double>> detect_short_off(const std::vector<Event>& events, const Params& p) {
  std::vector<std::pair<double, double>> out;
  if (p.tau <= 0.0) return out;
  std::optional<double> off_entry;
  for (const auto& e : events) {
    if (!e.is_crossing()) continue;
    if (!e.into_on) {
      off_entry = e.t;
    } else if (off_entry) {
      const double dur = e.t - *off_entry;
      if (dur < p.tau) out.emplace_back(dur, e.state.theta);
      off_entry.reset();
    }
  }
  return out;
}

enum class ReturnStatus { Ok, NotZigzag, TrappedON, Diverged };

inline std::string_view to_string(ReturnStatus s) {
  switch (s) {
    case ReturnStatus::Ok: return "Ok";
    case ReturnStatus::NotZigzag: return "NotZigzag";
    case ReturnStatus::TrappedON: return "TrappedON";
    case ReturnStatus::Diverged: return "Diverged";
  }
  return "?";
}

/// One excursion from a switching manifold back to the next entry into an ON region.
struct ReturnResult {
  ReturnStatus status = ReturnStatus::NotZigzag;
  double theta_return = 0.0;  // rule 1: theta3 on Sigma1
  double phi_return = 0.0;    // rule 2: |phi| at the re-entry on Sigma3 or Sigma4
  bool via_opposite = false;  // rule 2: re-entry through the manifold on the other side
  double delta_H = 0.0;       // H at the second switching point minus H at the first
  double H1 = 0.0;
  double H2 = 0.0;
  double T_int = 0.0;          // time of the first crossing back into the OFF region
  double t_return = 0.0;       // time of the re-entry into ON
  double off_residence = 0.0;  // t_return - T_int
  bool short_off = false;      // re-entry before the control switched off
  State switch_on, switch_off; // states at the first control toggles

  bool ok() const { return status == ReturnStatus::Ok; }
};

struct ReturnOptions {
  double dt = 1e-3;
  double t_max = 200.0;
  double event_tol = 1e-12;
};

namespace detail {

template <class Model>
ReturnResult run_one_excursion(State x0, const Params& p, const ReturnOptions& ro) {
  SimOptions opt;
  opt.dt = ro.dt;
  opt.t_max = ro.t_max;
  opt.event_tol = ro.event_tol;
  opt.keep_trajectory = false;
  opt.stop_when = [](const Event& e) { return e.is_crossing() && e.into_on && e.t > 0.0; };
  const SimResult sim = simulate<Model>(x0, p, std::move(opt));

  ReturnResult r;
  bool have_on = false, have_off = false, have_int = false;
  for (const auto& e : sim.events) {
    if (e.kind == EventKind::ControlOn && !have_on) {
      have_on = true;
      r.switch_on = e.state;
      r.H1 = hamiltonian(e.state);
    } else if (e.kind == EventKind::ControlOff && !have_off) {
      have_off = true;
      r.switch_off = e.state;
      r.H2 = hamiltonian(e.state);
    } else if (e.is_crossing() && !e.into_on && e.t > 0.0 && !have_int) {
      have_int = true;
      r.T_int = e.t;
    }
  }
  r.delta_H = have_off ? r.H2 - r.H1 : std::numeric_limits<double>::quiet_NaN();
  switch (sim.termination) {
    case Termination::Stopped: {
      const Event& last = sim.events.back();
      r.t_return = last.t;
      r.off_residence = last.t - r.T_int;
      r.short_off = !have_off;
      r.theta_return = last.state.theta;
      r.phi_return = std::fabs(last.state.phi);
      if (p.rule == Rule::Rule1) {
        r.status = last.manifold() == Manifold::Sigma1 && (last.state.theta > 0.0) == (x0.theta > 0.0)
                       ? ReturnStatus::Ok
                       : ReturnStatus::NotZigzag;
      } else {
        r.status = ReturnStatus::Ok;
        const Manifold start_side = x0.theta > 0.0 ? Manifold::Sigma3 : Manifold::Sigma4;
        r.via_opposite = last.manifold() != start_side;
      }
      break;
    }
    case Termination::Diverged: r.status = ReturnStatus::Diverged; break;
    case Termination::ConvergedOrigin: r.status = ReturnStatus::NotZigzag; break;
    default: r.status = sim.final_control ? ReturnStatus::TrappedON : ReturnStatus::NotZigzag; break;
  }
  return r;
}

}  // namespace detail

/// One zigzag from (theta0, s theta0) on Sigma1 to the next exit from the OFF region
/// (rule 1). Reports theta3, the Hamiltonian change between the two switching points and
/// the intersection time T_int.
template <class Model = NonlinearModel>
ReturnResult zigzag_return_map(double theta0, const Params& p, const ReturnOptions& ro = {}) {
  if (p.rule != Rule::Rule1) throw std::invalid_argument("zigzag_return_map requires rule 1");
  if (theta0 == 0.0) throw std::invalid_argument("zigzag_return_map requires theta0 != 0");
  return detail::run_one_excursion<Model>(State{theta0, p.s * theta0}, p, ro);
}

/// Rule 2 analogue: from (sigma, phi0), phi0 > 0, to the next entry into an ON region.
template <class Model = NonlinearModel>
ReturnResult rule2_return_map(double phi0, const Params& p, const ReturnOptions& ro = {}) {
  if (p.rule != Rule::Rule2) throw std::invalid_argument("rule2_return_map requires rule 2");
  if (!(phi0 > 0.0)) throw std::invalid_argument("rule2_return_map requires phi0 > 0");
  return detail::run_one_excursion<Model>(State{p.sigma, phi0}, p, ro);
}

}  // namespace ipswitch
