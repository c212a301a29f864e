#pragma once

#include "ipswitch/history.hpp"
#include "ipswitch/params.hpp"

namespace ipswitch {

/// One classical RK4 step of x' = f(t, x) from (t, x) with width h, packaged with its
/// Hermite dense output. `f` is evaluated five times (four stages plus the end slope).
/// With `carry`, the increment is added with compensated (Kahan) summation: *carry holds
/// the low-order part lost by the previous addition and receives the new one.
template <class F>
HistorySegment rk4_step(F&& f, double t, const State& x, double h, bool control_on = false,
                        State* carry = nullptr) {
  const State k1 = f(t, x);
  const State k2 = f(t + 0.5 * h, x + k1 * (0.5 * h));
  const State k3 = f(t + 0.5 * h, x + k2 * (0.5 * h));
  const State k4 = f(t + h, x + k3 * h);
  HistorySegment seg;
  seg.t_lo = t;
  seg.t_hi = t + h;
  seg.x_lo = x;
  State incr = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
  if (carry) incr = incr + *carry;
  seg.x_hi = x + incr;
  if (carry) *carry = incr - (seg.x_hi - x);
  seg.f_lo = k1;
  seg.f_hi = f(t + h, seg.x_hi);
  seg.control_on = control_on;
  return seg;
}

/// Bisection for the first sign change of g along the dense output in [lo, hi], where g
/// has sign `sign_lo` at lo. Returns the right end of the final bracket, so the returned
/// time is on or just past the crossing.
template <class G>
double localize_sign_change(G&& g, int sign_lo, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) * sign_lo > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace ipswitch
