// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ipswitch/ipswitch.hpp"
#include "order_harness.hpp"

using namespace ipswitch;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

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

// ---------------------------------------------------------------------------

long double hamiltonian_ld(const State& x) {
  return 0.5L * (long double)x.phi * x.phi + std::cos((long double)x.theta);
}

// worst: max over OFF stretches (longer than 0.05) of max |H - H(start)| per unit length.
// secular: |sum of end-to-end H changes| over total OFF time.
std::pair<double, double> off_drift(const SimResult& r) {
  double worst = 0.0;
  long double sum = 0.0L, t_off = 0.0L;
  const auto& tr = r.trajectory;
  for (std::size_t i = 0; i < tr.size();) {
    if (tr[i].control_on) {
      ++i;
      continue;
    }
    const long double H0 = hamiltonian_ld(tr[i].x_lo);
    long double dev = 0.0L;
    std::size_t j = i;
    for (; j < tr.size() && !tr[j].control_on; ++j) dev = std::max(dev, std::fabs(hamiltonian_ld(tr[j].x_hi) - H0));
    const double len = tr[j - 1].t_hi - tr[i].t_lo;
    sum += hamiltonian_ld(tr[j - 1].x_hi) - H0;
    t_off += len;
    if (len > 0.05) worst = std::max(worst, double(dev / len));
    i = j;
  }
  return {worst, double(std::fabs(sum) / t_off)};
}

Outcome hamiltonian_conservation() {
  // Fig-1 parameters, start on the spiral limit cycle: many long OFF arcs.
  const Params p = rule1(1.5, 4.0, 0.5, -0.3);
  const auto [w1, s1] = off_drift(simulate(State{0.0, 0.6}, p, 200.0, 1e-3));
  const double s2 = off_drift(simulate(State{0.0, 0.6}, p, 200.0, 5e-4)).second;
  const double ratio = s1 / s2;
  Outcome o;
  o.pass = w1 <= 1e-10 && s1 <= 1e-10 && order_harness::within(ratio, 16.0);
  o.detail = "max drift/time " + fmt("%.2e", w1) + ", secular " + fmt("%.2e", s1) + " at dt=1e-3; dt halving ratio " +
             fmt("%.2f", ratio) + " (16 +/- 25%)";
  return o;
}

Outcome fig4_regime() {
  const Params p = rule1(2.5, 2.0, 0.25, -0.3);
  const auto r = simulate(State{0.5, -0.15}, p, 200.0, 1e-3);
  bool decreasing = true;
  for (const auto& seg : r.trajectory)
    if (seg.width() > 0.0 && !(seg.x_hi.theta < seg.x_lo.theta)) decreasing = false;
  Outcome o;
  o.pass = decreasing && r.termination == Termination::ConvergedOrigin && r.final_state.norm() < 1e-3;
  o.detail = std::string("theta strictly decreasing: ") + (decreasing ? "yes" : "no") + ", |x| = " +
             fmt("%.2e", r.final_state.norm()) + " at t = " + fmt("%.3f", r.t_end);
  return o;
}

Outcome series_orders() {
  Outcome o;
  double lo[4] = {1e9, 1e9, 1e9, 1e9}, hi[4] = {0, 0, 0, 0};
  const double expect[4] = {8.0, 16.0, 16.0, std::pow(2.0, 1.5)};
  for (const auto& s : order_harness::samples()) {
    const auto r = order_harness::halving_ratios(s);
    const double v[4] = {r.t_int, r.delta_h, r.zigzag, r.rule2};
    for (int k = 0; k < 4; ++k) {
      lo[k] = std::min(lo[k], v[k]);
      hi[k] = std::max(hi[k], v[k]);
      o.pass = o.pass && order_harness::within(v[k], expect[k]);
    }
  }
  const char* names[4] = {"T_int", "delta_H", "zigzag", "T_int_rule2"};
  for (int k = 0; k < 4; ++k)
    o.detail += std::string(k ? "; " : "") + names[k] + " " + fmt("%.2f", lo[k]) + ".." + fmt("%.2f", hi[k]) +
                " (expect " + fmt("%.2f", expect[k]) + ")";
  return o;
}

Outcome dib_agreement() {
  Outcome o;
  for (double a : {1.3, 1.5, 1.7}) {
    const auto d = find_dib(rule1(a, 2.0, 0.0, -0.01));
    const double curve = dib_curve(a, 2.0, -0.01);
    const double rel = d ? d->tau / curve - 1.0 : NAN;
    o.pass = o.pass && std::fabs(rel) <= 0.05;
    o.detail += (a > 1.3 ? "; " : "") + fmt("a=%.1f", a) + " tau " + fmt("%.6f", d ? d->tau : NAN) + " vs " +
                fmt("%.6f", curve) + " (" + fmt("%+.1f%%", 100 * rel) + ")";
  }
  return o;
}

Outcome dib_g_independence() {
  Outcome o;
  double worst = 0.0;
  for (double a : {1.3, 1.5, 1.7}) {
    const auto c = find_dib(rule1(a, 2.0, 0.0, -0.01));
    const auto g1 = find_dib(rule1(a, 2.0, 0.0, -0.01, GKind::One));
    if (!c || !g1) {
      o.pass = false;
      continue;
    }
    worst = std::max(worst, std::fabs(g1->tau / c->tau - 1.0));
  }
  o.pass = o.pass && worst <= 1e-4;
  o.detail = "max relative difference " + fmt("%.2e", worst) + " (<= 1e-4)";
  return o;
}

Outcome criticality() {
  const auto c = find_dib_criticality(rule1(1.0, 2.0, 0.0, -0.01), 1.02, 1.3);
  Outcome o;
  o.pass = c && std::fabs(c->a - 1.09) <= 0.05;
  o.detail = "flip at a = " + fmt("%.5f", c ? c->a : NAN) + " (1.09 +/- 0.05)";
  return o;
}

Outcome homoclinic() {
  Outcome o;
  for (double a : {1.7, 2.0}) {
    const auto h = find_homoclinic(rule1(a, 2.0, 0.0, -0.01));
    const double curve = homoclinic_curve(a, 2.0, -0.01);
    const double rel = h ? h->tau / curve - 1.0 : NAN;
    o.pass = o.pass && std::fabs(rel) <= 0.1;
    o.detail += fmt("a=%.1f", a) + " tau " + fmt("%.6f", h ? h->tau : NAN) + " (" + fmt("%+.1f%%", 100 * rel) + "); ";
  }
  bool none = true;
  for (double a : {0.9, 1.3, 1.7, 2.0}) none = none && !find_homoclinic(rule1(a, 2.0, 0.0, -0.01, GKind::One));
  o.pass = o.pass && none;
  o.detail += std::string("g=one: ") + (none ? "none found" : "found");
  return o;
}

Outcome burst() {
  const auto d = burst_diagnose(rule1(1.18, 2.0, 0.3, -0.1), 1.10, 1.25);
  Outcome o;
  o.pass = d.a1 && d.a2 && d.a3 && std::fabs(*d.a1 - 1.135) <= 0.01 && std::fabs(*d.a2 - 1.161) <= 0.01 &&
           std::fabs(*d.a3 - 1.208) <= 0.01 && std::fabs(d.excursion_reentry_theta - 0.236) <= 0.01 &&
           std::fabs(d.short_off_exit_theta - 0.32) <= 0.02 && d.attractor_kind == AttractorKind::Periodic;
  o.detail = "a1 " + fmt("%.4f", d.a1.value_or(NAN)) + ", a2 " + fmt("%.4f", d.a2.value_or(NAN)) + ", a3 " +
             fmt("%.4f", d.a3.value_or(NAN)) + ", re-entry " + fmt("%.4f", d.excursion_reentry_theta) +
             ", short-off exit " + fmt("%.4f", d.short_off_exit_theta) + ", " +
             std::string(to_string(d.attractor_kind));
  return o;
}

Outcome plane() {
  Outcome o;
  for (double scale : {0.1, 1.0, 10.0}) {
    const auto a = classify_plane_point(3.0, 3.0, 0.5, 0.0, scale);
    const auto b = classify_plane_point(1.5, 3.5, 0.5, 0.0, scale);
    const bool both_out = a.zigzag != ZigzagFate::In && a.spiral == SpiralFate::Out;
    const bool mixed = b.zigzag == ZigzagFate::In && b.spiral == SpiralFate::Out;
    o.pass = o.pass && both_out && mixed;
    if (scale == 1.0)
      o.detail = "(3,3): " + std::string(to_string(a.zigzag)) + "/" + std::string(to_string(a.spiral)) +
                 "; (1.5,3.5): " + std::string(to_string(b.zigzag)) + "/" + std::string(to_string(b.spiral));
  }
  o.detail += "; same at probe scales 0.1, 1, 10: " + std::string(o.pass ? "yes" : "no");
  return o;
}

Outcome rule2_law() {
  Outcome o;
  std::vector<double> taus, amps;
  double worst_slope = 0.0;
  for (double tau : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    const auto fp = rule2_fixed_point(rule2(2.5, 0.5, tau, 0.3));
    if (!fp) {
      o.pass = false;
      continue;
    }
    worst_slope = std::max(worst_slope, std::fabs(fp->slope));
    taus.push_back(tau);
    amps.push_back(fp->phi0);
  }
  const double ex = taus.size() >= 2 ? fit_power_exponent(taus, amps) : NAN;
  const Params g1 = rule2(1.0, 0.5, 0.1, 0.3, GKind::One);
  const auto hc = find_rule2_left_homoclinic(g1, 0.97, 1.0);
  const double beb = boundary_equilibrium(g1).a;
  const double gap = hc ? std::fabs(hc->a - beb) : NAN;
  o.pass = o.pass && std::fabs(ex - 0.5) <= 0.05 && worst_slope < 1.0 && gap <= 1e-4;
  o.detail = "exponent " + fmt("%.4f", ex) + ", max |slope| " + fmt("%.4f", worst_slope) + "; g=one HC a " +
             fmt("%.6f", hc ? hc->a : NAN) + " vs BEB a " + fmt("%.6f", beb);
  return o;
}

Outcome zero_delay_sliding() {
  const Params p = rule1(1.8, 2.0, 0.0, -0.3);
  const auto r = simulate_zero_delay({0.8, -0.24}, p, 20.0, 1e-3);
  double worst = 0.0;
  bool sliding = !r.samples.empty();
  for (const auto& sm : r.samples) {
    if (sm.mode != ZeroDelayMode::Sliding) sliding = false;
    worst = std::max(worst, (sm.x - sliding_solution(0.8, p.s, sm.t)).norm());
  }
  double endpoint = 0.0;
  for (const Params& q : {p, rule1(1.5, 2.0, 0.0, -0.01), rule1(2.4, 1.0, 0.0, -0.2)})
    endpoint = std::max(endpoint, std::fabs(grazing_on_function(sliding_region(q)->hi, q)));
  const Params one = rule1(0.8, 2.0, 0.0, 0.0, GKind::One);
  endpoint = std::max(endpoint, std::fabs(grazing_on_function(sliding_region(one)->lo, one)));
  for (double s : {-0.01, -0.3, -0.7}) endpoint = std::max(endpoint, std::fabs(grazing_off_function(grazing_off(s), s)));
  const bool below = !sliding_region(rule1(1.0199 - 1e-6, 2.0, 0.0, -0.01));
  const bool above = bool(sliding_region(rule1(1.0199 + 1e-6, 2.0, 0.0, -0.01)));
  Outcome o;
  o.pass = sliding && worst <= 1e-8 && endpoint <= 1e-10 && below && above;
  o.detail = "max |x - theta0 e^{st}| " + fmt("%.2e", worst) + "; max grazing residual " + fmt("%.2e", endpoint) +
             "; onset at a = 1.0199: " + (below && above ? "yes" : "no");
  return o;
}

EventKind mirrored(EventKind k) {
  if (k == EventKind::CrossSigma3) return EventKind::CrossSigma4;
  if (k == EventKind::CrossSigma4) return EventKind::CrossSigma3;
  return k;
}

Outcome symmetry() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int ok = 0;
  for (int k = 0; k < 20; ++k) {
    const GKind g = U(rng) < 0.5 ? GKind::Cosine : GKind::One;
    Params p;
    State x0;
    if (k % 2 == 0) {
      p = rule1(1.1 + U(rng), 0.5 + 3.0 * U(rng), 0.05 + 0.4 * U(rng), -0.3 * U(rng), g);
      const double th = 0.05 + 0.45 * U(rng);
      x0 = {th, p.s * th - 0.2 * U(rng)};  // on Sigma1 or below it
    } else {
      p = rule2(1.1 + 1.5 * U(rng), 0.2 + 2.0 * U(rng), 0.01 + 0.3 * U(rng), 0.1 + 0.3 * U(rng), g);
      x0 = {p.sigma * (2.0 * U(rng) - 1.0), 0.5 * (2.0 * U(rng) - 1.0)};
    }
    const auto a = simulate(x0, p, 30.0, 2e-3);
    const auto b = simulate(-x0, p, 30.0, 2e-3);
    bool same = a.trajectory.size() == b.trajectory.size() && a.events.size() == b.events.size() &&
                a.termination == b.termination;
    for (std::size_t i = 0; same && i < a.trajectory.size(); ++i)
      same = a.trajectory[i].x_hi == -b.trajectory[i].x_hi && a.trajectory[i].t_hi == b.trajectory[i].t_hi &&
             a.trajectory[i].control_on == b.trajectory[i].control_on;
    for (std::size_t i = 0; same && i < a.events.size(); ++i)
      same = mirrored(a.events[i].kind) == b.events[i].kind && a.events[i].t == b.events[i].t &&
             a.events[i].state == -b.events[i].state && a.events[i].into_on == b.events[i].into_on;
    if (same && p.rule == Rule::Rule1) same = classify_oscillation(a.events, p) == classify_oscillation(b.events, p);
    ok += same;
  }
  Outcome o;
  o.pass = ok == 20;
  o.detail = std::to_string(ok) + "/20 configurations mirror exactly";
  return o;
}

}  // namespace

int main() {
  setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Hamiltonian conservation on OFF arcs", hamiltonian_conservation},
      {"Fig-4 orbit zigzags monotonically into the origin", fig4_regime},
      {"series-vs-engine halving orders", series_orders},
      {"DIB delay vs asymptotic curve (5%)", dib_agreement},
      {"DIB delay independent of G", dib_g_independence},
      {"DIB criticality point", criticality},
      {"homoclinic delay vs asymptotic curve (10%)", homoclinic},
      {"bursting thresholds and attractor", burst},
      {"(a,b)-plane classification", plane},
      {"rule-2 amplitude law and BEB/HC coincidence", rule2_law},
      {"zero-delay Filippov sliding", zero_delay_sliding},
      {"negation symmetry", symmetry},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
