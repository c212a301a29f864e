#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

namespace ipswitch {

/// Raised when a bracketed root search has no sign change to work with.
class no_root_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bisection on [lo, hi] for f with f(lo) * f(hi) <= 0. Stops when the bracket is
/// narrower than abs_tol or cannot shrink further in floating point.
template <class F>
double bisect(F&& f, double lo, double hi, double abs_tol = 1e-12) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw no_root_error("bisect: no sign change on bracket");
  for (int it = 0; it < 400 && hi - lo > abs_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Scans [lo, hi] on n uniform cells and returns the first bracketed root.
template <class F>
std::optional<double> first_root(F&& f, double lo, double hi, int n, double abs_tol = 1e-12) {
  double x0 = lo;
  double f0 = f(x0);
  if (f0 == 0.0) return x0;
  for (int i = 1; i <= n; ++i) {
    const double x1 = (i == n) ? hi : lo + (hi - lo) * i / n;
    const double f1 = f(x1);
    if (f1 == 0.0) return x1;
    if ((f0 > 0.0) != (f1 > 0.0)) return bisect(f, x0, x1, abs_tol);
    x0 = x1;
    f0 = f1;
  }
  return std::nullopt;
}

}  // namespace ipswitch
