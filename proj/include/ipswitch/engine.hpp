#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ipswitch/history.hpp"
#include "ipswitch/integrate.hpp"
#include "ipswitch/model.hpp"
#include "ipswitch/params.hpp"

namespace ipswitch {

enum class EventKind {
  CrossSigma1,
  CrossSigma2,
  CrossSigma3,
  CrossSigma4,
  ControlOn,
  ControlOff,
  ShortOffWindow,
  WsCoincidence,
  Diverged,
  ConvergedOrigin,
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::CrossSigma1: return "CrossSigma1";
    case EventKind::CrossSigma2: return "CrossSigma2";
    case EventKind::CrossSigma3: return "CrossSigma3";
    case EventKind::CrossSigma4: return "CrossSigma4";
    case EventKind::ControlOn: return "ControlOn";
    case EventKind::ControlOff: return "ControlOff";
    case EventKind::ShortOffWindow: return "ShortOffWindow";
    case EventKind::WsCoincidence: return "WsCoincidence";
    case EventKind::Diverged: return "Diverged";
    case EventKind::ConvergedOrigin: return "ConvergedOrigin";
  }
  return "?";
}

inline EventKind crossing_kind(Manifold m) {
  return static_cast<EventKind>(static_cast<int>(m));
}

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::ControlOn;
  State state;
  bool into_on = false;  // crossings only: the far side is an ON region

  bool is_crossing() const { return static_cast<int>(kind) <= static_cast<int>(EventKind::CrossSigma4); }
  Manifold manifold() const { return static_cast<Manifold>(static_cast<int>(kind)); }
};

enum class Termination { TimeLimit, Diverged, ConvergedOrigin, Stopped, EventLimit };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::TimeLimit: return "TimeLimit";
    case Termination::Diverged: return "Diverged";
    case Termination::ConvergedOrigin: return "ConvergedOrigin";
    case Termination::Stopped: return "Stopped";
    case Termination::EventLimit: return "EventLimit";
  }
  return "?";
}

/// How the state is assumed to have evolved on [-tau, 0).
///  ConstantOff: resident in an OFF region for at least tau; control is OFF on [0, tau).
///  ConstantOn:  held at `history_state` with control ON (used to shoot from ON equilibria).
enum class InitialHistory { ConstantOff, ConstantOn };

struct SimOptions {
  double t_max = 100.0;
  double dt = 1e-3;
  double event_tol = 1e-12;
  bool keep_trajectory = true;
  InitialHistory history = InitialHistory::ConstantOff;
  State history_state{};
  double converge_tol = 1e-9;
  std::size_t max_events = 10'000'000;
  /// Called after each recorded event; returning true ends the run (Termination::Stopped).
  std::function<bool(const Event&)> stop_when;
};

struct SimResult {
  std::vector<HistorySegment> trajectory;
  std::vector<Event> events;
  Termination termination = Termination::TimeLimit;
  double t_end = 0.0;
  State final_state;
  bool final_control = false;
};

namespace detail {

inline int sign_of(double v, int fallback) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : fallback); }

/// Control decision on the far side of a transversal crossing of `m` at xc with manifold rate `rate`.
inline bool active_after_crossing(const State& xc, Manifold m, double rate, const Params&) {
  switch (m) {
    case Manifold::Sigma1: return (xc.theta > 0.0) == (rate > 0.0);
    case Manifold::Sigma2: {
      // Crossing theta = 0 flips the sign of theta while phi - s theta keeps the sign of phi.
      const int side = rate > 0.0 ? 1 : -1;
      return side * (xc.phi > 0.0 ? 1 : -1) > 0;
    }
    case Manifold::Sigma3: return rate > 0.0;
    case Manifold::Sigma4: return rate < 0.0;
  }
  return false;
}

struct Crossing {
  double t;
  Manifold m;
};

template <class Model>
class DdeSimulator {
 public:
  DdeSimulator(State x0, const Params& p, SimOptions opt)
      : p_(p), opt_(std::move(opt)), x_(x0), history_(x0) {}

  SimResult run() {
    p_.validate();
    if (!(opt_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!x_.finite()) throw std::invalid_argument("initial state must be finite");
    initialise();
    while (!done_ && t_ < opt_.t_max) step();
    if (!done_) result_.termination = Termination::TimeLimit;
    result_.t_end = t_;
    result_.final_state = x_;
    result_.final_control = u_;
    if (opt_.keep_trajectory) result_.trajectory = history_.take();
    return std::move(result_);
  }

 private:
  struct Toggle {
    double t;
    bool value;
  };

  double zero_tol(const State& x) const { return 1e-13 * std::max(x.norm(), 1e-300); }

  void initialise() {
    const auto mans = manifolds_for(p_.rule);
    for (std::size_t i = 0; i < mans.size(); ++i)
      sticky_[i] = detail::sign_of(manifold_value(x_, mans[i], p_), 1);

    if (opt_.history == InitialHistory::ConstantOn) {
      history_ = History(opt_.history_state);
      u_ = true;
      region_on_ = control_active(x_, p_);
      add_breakpoints(0.0);
      return;
    }

    region_on_ = false;
    if (x_.theta == 0.0 && x_.phi == 0.0) {
      check_converged();
      return;
    }
    if (control_active(x_, p_))
      throw std::invalid_argument("initial state lies inside an ON region");
    const State f = Model::off(x_, p_);
    for (std::size_t i = 0; i < mans.size(); ++i) {
      const Manifold m = mans[i];
      if (std::fabs(manifold_value(x_, m, p_)) > zero_tol(x_)) continue;
      const double rate = manifold_rate(f, m, p_);
      if (rate == 0.0) throw std::invalid_argument("initial state is tangent to a switching manifold");
      const bool into_on = active_after_crossing(x_, m, rate, p_);
      if (!into_on)
        throw std::invalid_argument("OFF vector field points away from the ON region at the initial state");
      sticky_[i] = rate > 0.0 ? 1 : -1;
      record_crossing(0.0, m, x_, true);
      if (done_) return;
    }
    check_converged();
  }

  State field(double t, const State& x) const {
    if (!u_) return Model::off(x, p_);
    const State xd = (p_.tau == 0.0) ? x : history_.at(t - p_.tau);
    return Model::on(x, xd, p_);
  }

  void add_breakpoints(double t0) {
    if (p_.tau <= 0.0) return;
    for (int k = 1; k <= 3; ++k) insert_breakpoint(t0 + k * p_.tau);
  }

  void insert_breakpoint(double tb) {
    auto it = breakpoints_.lower_bound(tb - 1e-13);
    if (it != breakpoints_.end() && std::fabs(*it - tb) <= 1e-13) return;
    breakpoints_.insert(tb);
  }

  double next_mandatory() const {
    double t_next = opt_.t_max;
    if (!toggles_.empty()) t_next = std::min(t_next, toggles_.front().t);
    auto it = breakpoints_.upper_bound(t_);
    if (it != breakpoints_.end()) t_next = std::min(t_next, *it);
    return t_next;
  }

  HistorySegment rk4(double h, State& carry) const {
    carry = carry_;
    return rk4_step([this](double t, const State& x) { return field(t, x); }, t_, x_, h, u_, &carry);
  }

  std::vector<Crossing> find_crossings(const HistorySegment& seg) const {
    constexpr int nodes = 8;
    std::vector<Crossing> out;
    const auto mans = manifolds_for(p_.rule);
    for (std::size_t i = 0; i < mans.size(); ++i) {
      const Manifold m = mans[i];
      int prev = sticky_[i];
      double t_prev = seg.t_lo;
      for (int k = 1; k <= nodes; ++k) {
        const double tk = (k == nodes) ? seg.t_hi : seg.t_lo + seg.width() * k / nodes;
        const State xk = (k == nodes) ? seg.x_hi : seg.eval(tk);
        const int sk = sign_of(manifold_value(xk, m, p_), prev);
        if (sk != prev) {
          out.push_back({localize(seg, m, prev, t_prev, tk), m});
          prev = sk;
        }
        t_prev = tk;
      }
    }
    std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) {
      if (a.t != b.t) return a.t < b.t;
      return static_cast<int>(a.m) < static_cast<int>(b.m);
    });
    return out;
  }

  double localize(const HistorySegment& seg, Manifold m, int sign_lo, double lo, double hi) const {
    return localize_sign_change([&](double t) { return manifold_value(seg.eval(t), m, p_); }, sign_lo, lo,
                                hi, opt_.event_tol);
  }

  void step() {
    const double t_next = next_mandatory();
    double h = t_next - t_;
    if (u_ && p_.tau > 0.0) h = std::min(h, p_.tau);
    h = std::min(h, opt_.dt);
    if (h <= 0.0) {
      apply_due_toggles();
      return;
    }

    HistorySegment seg;
    State carry;
    std::vector<Crossing> crossings;
    for (int attempt = 0;; ++attempt) {
      seg = rk4(h, carry);
      crossings = find_crossings(seg);
      if (crossings.empty() || attempt >= 3) break;
      const double t_toggle = crossings.front().t + p_.tau;
      if (t_toggle >= seg.t_hi - 1e-15 * std::max(1.0, std::fabs(seg.t_hi))) break;
      const double h_new = t_toggle - t_;
      if (h_new <= 0.0) break;
      h = h_new;
    }

    if (!seg.x_hi.finite() || std::fabs(seg.x_hi.theta) > Model::divergence_bound) {
      diverge(seg, crossings);
      return;
    }

    history_.push(seg);
    const auto mans = manifolds_for(p_.rule);
    for (std::size_t c = 0; c < crossings.size() && !done_; ++c) {
      const auto& cr = crossings[c];
      const State xc = seg.eval(cr.t);
      const double rate = manifold_rate(seg.derivative(cr.t), cr.m, p_);
      const bool into_on = active_after_crossing(xc, cr.m, rate, p_);
      for (std::size_t i = 0; i < mans.size(); ++i)
        if (mans[i] == cr.m) sticky_[i] = rate > 0.0 ? 1 : (rate < 0.0 ? -1 : -sticky_[i]);
      record_crossing(cr.t, cr.m, xc, into_on);
    }
    if (done_) return;

    t_ = seg.t_hi;
    x_ = seg.x_hi;
    carry_ = carry;
    breakpoints_.erase(breakpoints_.begin(), breakpoints_.upper_bound(t_));
    for (std::size_t i = 0; i < mans.size(); ++i) {
      const double v = manifold_value(x_, mans[i], p_);
      if (std::fabs(v) > zero_tol(x_)) sticky_[i] = v > 0.0 ? 1 : -1;
    }
    apply_due_toggles();
    if (done_) return;
    check_converged();
    if (!opt_.keep_trajectory && p_.tau > 0.0) history_.trim_before(t_ - p_.tau - 2.0 * opt_.dt);
    else if (!opt_.keep_trajectory) history_.trim_before(t_);
  }

  void diverge(const HistorySegment& seg, const std::vector<Crossing>& crossings) {
    const double bound = Model::divergence_bound;
    double t_div = seg.t_hi;
    if (seg.x_hi.finite()) {
      t_div = localize_sign_change([&](double t) { return std::fabs(seg.eval(t).theta) - bound; }, -1,
                                   seg.t_lo, seg.t_hi, opt_.event_tol);
    }
    HistorySegment kept = seg;
    history_.push(kept);
    for (const auto& cr : crossings) {
      if (cr.t >= t_div || done_) break;
      const State xc = seg.eval(cr.t);
      record_crossing(cr.t, cr.m, xc,
                      active_after_crossing(xc, cr.m, manifold_rate(seg.derivative(cr.t), cr.m, p_), p_));
    }
    const State xd = seg.x_hi.finite() ? seg.eval(t_div) : seg.x_lo;
    if (!done_) {
      push_event({t_div, EventKind::Diverged, xd, false});
      finish(Termination::Diverged);
    }
    t_ = t_div;
    x_ = xd;
  }

  void record_crossing(double tc, Manifold m, const State& xc, bool into_on) {
    push_event({tc, crossing_kind(m), xc, into_on});
    if (done_) return;
    if (into_on && !region_on_ && tc - last_off_entry_ < p_.tau) {
      push_event({tc, EventKind::ShortOffWindow, xc, false});
      if (done_) return;
    }
    if (!into_on && region_on_) last_off_entry_ = tc;
    region_on_ = into_on;
    const double t_toggle = std::max(tc + p_.tau, t_);
    toggles_.push_back({t_toggle, into_on});
  }

  void apply_due_toggles() {
    while (!done_ && !toggles_.empty() && toggles_.front().t <= t_ + 1e-13) {
      const Toggle tg = toggles_.front();
      toggles_.pop_front();
      if (tg.value == u_) continue;
      u_ = tg.value;
      add_breakpoints(t_);
      push_event({t_, u_ ? EventKind::ControlOn : EventKind::ControlOff, x_, false});
      if (!u_ && !done_ && !control_active(x_, p_)) {
        const double tol = 1e-9 * std::min(1.0, x_.theta * x_.theta + x_.phi * x_.phi);
        if (std::fabs(hamiltonian(x_) - 1.0) <= tol) push_event({t_, EventKind::WsCoincidence, x_, false});
      }
    }
  }

  void check_converged() {
    if (done_ || u_) return;
    for (const auto& tg : toggles_)
      if (tg.value) return;
    if (x_.norm() < opt_.converge_tol) {
      push_event({t_, EventKind::ConvergedOrigin, x_, false});
      finish(Termination::ConvergedOrigin);
    }
  }

  void push_event(const Event& e) {
    result_.events.push_back(e);
    if (opt_.stop_when && opt_.stop_when(e)) {
      finish(Termination::Stopped);
    } else if (result_.events.size() >= opt_.max_events) {
      finish(Termination::EventLimit);
    }
  }

  void finish(Termination t) {
    if (done_) return;
    done_ = true;
    result_.termination = t;
  }

  Params p_;
  SimOptions opt_;
  double t_ = 0.0;
  State x_;
  State carry_;  // compensated-summation remainder of the state update
  bool u_ = false;
  bool region_on_ = false;
  double last_off_entry_ = -std::numeric_limits<double>::infinity();
  bool done_ = false;
  std::array<int, 2> sticky_{1, 1};
  History history_;
  std::deque<Toggle> toggles_;
  std::set<double> breakpoints_;
  SimResult result_;
};

}  // namespace detail

/// Integrates the delayed switched system by the method of steps: classical RK4 with cubic
/// Hermite dense output, manifold crossings localized by bisection on the dense output, and
/// control toggles applied exactly tau after the crossing that caused them.
template <class Model = NonlinearModel>
SimResult simulate(State x0, const Params& p, SimOptions opt = {}) {
  return detail::DdeSimulator<Model>(x0, p, std::move(opt)).run();
}

template <class Model = NonlinearModel>
SimResult simulate(State x0, const Params& p, double t_max, double dt) {
  SimOptions opt;
  opt.t_max = t_max;
  opt.dt = dt;
  return simulate<Model>(x0, p, std::move(opt));
}

}  // namespace ipswitch
