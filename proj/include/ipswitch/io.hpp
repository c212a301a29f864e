#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipswitch/engine.hpp"
#include "ipswitch/filippov.hpp"
#include "ipswitch/model.hpp"

namespace ipswitch {

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip text is not needed; 17 significant digits always round-trips a double.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated writer with a header row. Cells are numbers or plain tokens (no quoting).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<std::string_view> header) : out_(path) {
    if (!out_) throw io_error("cannot open '" + path + "' for writing");
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
    columns_ = header.size();
  }

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    Row(const Row&) = delete;
    ~Row() { w_.out_ << '\n'; }
    Row& operator<<(double v) { return cell(format_number(v)); }
    Row& operator<<(int v) { return cell(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return cell(std::to_string(v)); }
    Row& operator<<(bool v) { return cell(v ? "1" : "0"); }
    Row& operator<<(std::string_view v) { return cell(v); }
    Row& operator<<(const char* v) { return cell(v); }

   private:
    Row& cell(std::string_view v) {
      if (n_++ > 0) w_.out_ << ',';
      w_.out_ << v;
      return *this;
    }
    CsvWriter& w_;
    std::size_t n_ = 0;
  };

  Row row() { return Row(*this); }
  std::size_t columns() const { return columns_; }

  void close() {
    out_.flush();
    if (!out_) throw io_error("write failed");
    out_.close();
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

/// One row per `stride` integration steps plus the final state. Empty trajectory -> header only.
inline void write_trajectory_csv(const std::string& path, const SimResult& r, std::size_t stride = 1) {
  CsvWriter w(path, {"t", "theta", "phi", "control_on", "H"});
  stride = std::max<std::size_t>(stride, 1);
  const auto& tr = r.trajectory;
  for (std::size_t i = 0; i < tr.size(); i += stride)
    w.row() << tr[i].t_lo << tr[i].x_lo.theta << tr[i].x_lo.phi << tr[i].control_on << hamiltonian(tr[i].x_lo);
  if (!tr.empty()) {
    const auto& last = tr.back();
    w.row() << last.t_hi << last.x_hi.theta << last.x_hi.phi << last.control_on << hamiltonian(last.x_hi);
  }
  w.close();
}

inline void write_events_csv(const std::string& path, const std::vector<Event>& events) {
  CsvWriter w(path, {"t", "kind", "theta", "phi"});
  for (const auto& e : events) w.row() << e.t << to_string(e.kind) << e.state.theta << e.state.phi;
  w.close();
}

inline std::string_view to_string(ZeroDelayMode m) {
  switch (m) {
    case ZeroDelayMode::Off: return "off";
    case ZeroDelayMode::On: return "on";
    case ZeroDelayMode::Sliding: return "sliding";
  }
  return "?";
}

/// Zero-delay samples; sliding rows carry control_on = 1 and the mode column tells them apart.
inline void write_zero_delay_csv(const std::string& path, const ZeroDelayResult& r, std::size_t stride = 1) {
  CsvWriter w(path, {"t", "theta", "phi", "control_on", "H", "mode"});
  stride = std::max<std::size_t>(stride, 1);
  const auto& sm = r.samples;
  for (std::size_t i = 0; i < sm.size(); ++i) {
    if (i % stride != 0 && i + 1 != sm.size()) continue;
    w.row() << sm[i].t << sm[i].x.theta << sm[i].x.phi << (sm[i].mode != ZeroDelayMode::Off)
            << hamiltonian(sm[i].x) << to_string(sm[i].mode);
  }
  w.close();
}

inline void write_zero_delay_events_csv(const std::string& path, const std::vector<ZeroDelayEvent>& events) {
  CsvWriter w(path, {"t", "kind", "theta", "phi"});
  for (const auto& e : events) w.row() << e.t << to_string(e.kind) << e.state.theta << e.state.phi;
  w.close();
}

// ---------------------------------------------------------------------------
// Minimal SVG plots: polylines, markers, axes with end-point labels.

struct Point2 {
  double x = 0.0, y = 0.0;
};

class SvgPlot {
 public:
  SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi, std::string x_label = "x", std::string y_label = "y")
      : x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi), xl_(std::move(x_label)), yl_(std::move(y_label)) {
    if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw std::invalid_argument("SvgPlot: empty range");
  }

  /// Polyline clipped to the plot box; breaks at non-finite points.
  void line(const std::vector<Point2>& pts, std::string_view color, bool dashed = false, double width = 1.2) {
    std::string d;
    for (const auto& p : pts) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        flush_path(d, color, dashed, width);
        continue;
      }
      d += (d.empty() ? "M" : " L") + px(p.x) + "," + py(p.y);
    }
    flush_path(d, color, dashed, width);
  }

  void point(Point2 p, std::string_view color, double r = 2.5) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return;
    body_ += "<circle cx=\"" + px(p.x) + "\" cy=\"" + py(p.y) + "\" r=\"" + format_number(r) + "\" fill=\"" +
             std::string(color) + "\"/>\n";
  }

  void text(Point2 p, std::string_view s, std::string_view color = "black") {
    body_ += "<text x=\"" + px(p.x) + "\" y=\"" + py(p.y) + "\" font-size=\"11\" fill=\"" + std::string(color) +
             "\">" + std::string(s) + "</text>\n";
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<defs><clipPath id=\"box\"><rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M
        << "\" height=\"" << H - 2 * M << "\"/></clipPath></defs>\n"
        << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    auto label = [&](double x, double y, const std::string& s, const char* anchor) {
      out << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"12\" text-anchor=\"" << anchor << "\">" << s
          << "</text>\n";
    };
    label(M, H - M + 16, short_num(x_lo_), "start");
    label(W - M, H - M + 16, short_num(x_hi_), "end");
    label(W / 2.0, H - 8, xl_, "middle");
    label(M - 4, H - M, short_num(y_lo_), "end");
    label(M - 4, M + 10, short_num(y_hi_), "end");
    label(14, H / 2.0, yl_, "middle");
    out << "<g clip-path=\"url(#box)\">\n" << body_ << "</g>\n</svg>\n";
    if (!out) throw io_error("write failed: " + path);
  }

 private:
  static constexpr int W = 640, H = 480, M = 56;

  static std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
  }
  std::string px(double x) const { return short_num(M + (x - x_lo_) / (x_hi_ - x_lo_) * (W - 2 * M)); }
  std::string py(double y) const { return short_num(H - M - (y - y_lo_) / (y_hi_ - y_lo_) * (H - 2 * M)); }

  void flush_path(std::string& d, std::string_view color, bool dashed, double width) {
    if (d.find('L') != std::string::npos) {
      body_ += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
               short_num(width) + "\"" + (dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    }
    d.clear();
  }

  double x_lo_, x_hi_, y_lo_, y_hi_;
  std::string xl_, yl_;
  std::string body_;
};

/// Switching manifolds of the rule (dashed grey) and the origin's stable/unstable set H = 1 (dotted).
inline void draw_phase_overlays(SvgPlot& plot, const Params& p, double th_max, double ph_max) {
  const std::vector<Point2> vertical{{0.0, -ph_max}, {0.0, ph_max}};
  if (p.rule == Rule::Rule1) {
    plot.line({{-th_max, -p.s * th_max}, {th_max, p.s * th_max}}, "grey", true);
    plot.line(vertical, "grey", true);
  } else {
    plot.line({{p.sigma, -ph_max}, {p.sigma, ph_max}}, "grey", true);
    plot.line({{-p.sigma, -ph_max}, {-p.sigma, ph_max}}, "grey", true);
  }
  // H = 1: phi = +-2 sin(theta / 2).
  for (int sgn : {1, -1}) {
    std::vector<Point2> ws;
    for (int k = 0; k <= 200; ++k) {
      const double th = -th_max + 2.0 * th_max * k / 200;
      ws.push_back({th, sgn * 2.0 * std::sin(th / 2.0)});
    }
    plot.line(ws, "steelblue", true, 0.8);
  }
}

/// Phase-plane polyline of a run, thinned to at most about max_points vertices.
inline std::vector<Point2> trajectory_points(const SimResult& r, std::size_t max_points = 4000) {
  std::vector<Point2> pts;
  const std::size_t n = r.trajectory.size();
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(max_points, 1));
  pts.reserve(n / stride + 2);
  for (std::size_t i = 0; i < n; i += stride) pts.push_back({r.trajectory[i].x_lo.theta, r.trajectory[i].x_lo.phi});
  if (!r.trajectory.empty()) pts.push_back({r.trajectory.back().x_hi.theta, r.trajectory.back().x_hi.phi});
  return pts;
}

}  // namespace ipswitch
