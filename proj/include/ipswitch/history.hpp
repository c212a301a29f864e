#pragma once

#include <algorithm>
#include <deque>
#include <iterator>
#include <vector>

#include "ipswitch/params.hpp"

namespace ipswitch {

/// One accepted integration step with its cubic Hermite dense output.
struct HistorySegment {
  double t_lo = 0.0;
  double t_hi = 0.0;
  State x_lo, x_hi;  // endpoint states
  State f_lo, f_hi;  // endpoint derivatives
  bool control_on = false;

  double width() const { return t_hi - t_lo; }

  State eval(double t) const {
    const double h = t_hi - t_lo;
    if (h <= 0.0) return x_hi;
    const double u = (t - t_lo) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return x_lo * h00 + f_lo * (h10 * h) + x_hi * h01 + f_hi * (h11 * h);
  }

  State derivative(double t) const {
    const double h = t_hi - t_lo;
    if (h <= 0.0) return f_hi;
    const double u = (t - t_lo) / h;
    const double u2 = u * u;
    const double d00 = (6 * u2 - 6 * u) / h;
    const double d10 = 3 * u2 - 4 * u + 1;
    const double d01 = (-6 * u2 + 6 * u) / h;
    const double d11 = 3 * u2 - 2 * u;
    return x_lo * d00 + f_lo * d10 + x_hi * d01 + f_hi * d11;
  }
};

/// Dense solution store for delayed lookups. Segments tile [t0, t_end] in order.
/// Queries before the first segment return the prescribed initial history state.
class History {
 public:
  explicit History(State before_start = {}) : before_(before_start) {}

  void push(const HistorySegment& seg) { segs_.push_back(seg); }

  /// Drops segments that end before t_keep (at least one segment is retained).
  void trim_before(double t_keep) {
    while (segs_.size() > 1 && segs_.front().t_hi < t_keep) {
      segs_.pop_front();
      if (hint_ > 0) --hint_;
    }
  }

  bool empty() const { return segs_.empty(); }
  std::size_t size() const { return segs_.size(); }
  const HistorySegment& back() const { return segs_.back(); }

  State at(double t) const {
    if (segs_.empty() || t < segs_.front().t_lo) return before_;
    if (t >= segs_.back().t_hi) return segs_.back().eval(std::min(t, segs_.back().t_hi));
    return segs_[locate(t)].eval(t);
  }

  std::vector<HistorySegment> take() {
    std::vector<HistorySegment> out(segs_.begin(), segs_.end());
    segs_.clear();
    return out;
  }

 private:
  std::size_t locate(double t) const {
    if (hint_ < segs_.size()) {
      const auto& s = segs_[hint_];
      if (t >= s.t_lo && t <= s.t_hi) return hint_;
      if (hint_ + 1 < segs_.size() && t >= segs_[hint_ + 1].t_lo && t <= segs_[hint_ + 1].t_hi)
        return hint_ = hint_ + 1;
    }
    auto it = std::upper_bound(segs_.begin(), segs_.end(), t,
                               [](double v, const HistorySegment& s) { return v < s.t_lo; });
    hint_ = static_cast<std::size_t>(std::distance(segs_.begin(), it)) - 1;
    return hint_;
  }

  std::deque<HistorySegment> segs_;
  State before_;
  mutable std::size_t hint_ = 0;
};

}  // namespace ipswitch
