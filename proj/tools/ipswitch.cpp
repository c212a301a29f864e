// ipswitch: simulations, bifurcation scans and asymptotic curves for the delayed
// ON/OFF controlled inverted pendulum. Writes CSV (and SVG plots) into --out.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipswitch/ipswitch.hpp"

namespace fs = std::filesystem;
using namespace ipswitch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

std::string path_in(const RunConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw io_error("cannot create output directory '" + c.out + "': " + ec.message());
}

void write_bif_rows(CsvWriter& w, const std::vector<BifPoint>& pts) {
  for (const auto& bp : pts) w.row() << to_string(bp.kind) << bp.a << bp.b << bp.tau << bp.s_or_sigma << bp.witness;
}

// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& c) {
  prepare_out(c);
  double th_max = 0.6, ph_max = 0.6;
  std::vector<SimResult> runs;
  for (std::size_t k = 0; k < c.starts.size(); ++k) {
    SimOptions opt;
    opt.t_max = c.t_max;
    opt.dt = c.dt;
    auto r = simulate(c.starts[k], c.p, std::move(opt));
    write_trajectory_csv(path_in(c, "trajectory_" + std::to_string(k) + ".csv"), r, c.stride);
    write_events_csv(path_in(c, "events_" + std::to_string(k) + ".csv"), r.events);
    std::map<std::string_view, int> tags;
    if (c.p.rule == Rule::Rule1)
      for (auto t : classify_oscillation(r.events, c.p)) ++tags[to_string(t)];
    std::printf("start %zu: termination=%s t_end=%s theta=%s phi=%s", k, std::string(to_string(r.termination)).c_str(),
                format_number(r.t_end).c_str(), format_number(r.final_state.theta).c_str(),
                format_number(r.final_state.phi).c_str());
    for (const auto& [name, n] : tags) std::printf(" %s=%d", std::string(name).c_str(), n);
    std::printf("\n");
    for (const auto& seg : r.trajectory) {
      th_max = std::max(th_max, std::min(1.6, 1.1 * std::fabs(seg.x_lo.theta)));
      ph_max = std::max(ph_max, std::min(3.0, 1.1 * std::fabs(seg.x_lo.phi)));
    }
    runs.push_back(std::move(r));
  }
  if (!c.plot) return;
  SvgPlot plot(-th_max, th_max, -ph_max, ph_max, "theta", "phi");
  draw_phase_overlays(plot, c.p, th_max, ph_max);
  const char* colors[] = {"crimson", "navy", "darkgreen", "darkorange", "purple"};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    plot.line(trajectory_points(runs[k]), colors[k % 5]);
    plot.point({c.starts[k].theta, c.starts[k].phi}, colors[k % 5], 3.0);
  }
  plot.write(path_in(c, "phase.svg"));
}

void cmd_zero_delay(const RunConfig& c) {
  prepare_out(c);
  if (c.p.rule != Rule::Rule1) throw config_error("zero-delay requires rule = 1");
  Params p = c.p;
  p.tau = 0.0;
  std::vector<ZeroDelayResult> runs;
  for (std::size_t k = 0; k < c.starts.size(); ++k) {
    auto r = simulate_zero_delay(c.starts[k], p, c.t_max, c.dt);
    write_zero_delay_csv(path_in(c, "trajectory_" + std::to_string(k) + ".csv"), r, c.stride);
    write_zero_delay_events_csv(path_in(c, "events_" + std::to_string(k) + ".csv"), r.events);
    std::printf("start %zu: diverged=%d equilibrium=%d t_end=%s\n", k, int(r.diverged), int(r.reached_equilibrium),
                format_number(r.t_end).c_str());
    runs.push_back(std::move(r));
  }
  {
    CsvWriter w(path_in(c, "sliding.csv"), {"quantity", "value"});
    const auto on = grazing_on(p);
    w.row() << "grazing_off" << (p.s > -1.0 ? format_number(grazing_off(p.s)) : std::string("none"));
    w.row() << "grazing_on" << (on ? format_number(*on) : std::string("none"));
    if (const auto sr = sliding_region(p)) {
      w.row() << "sliding_lo" << sr->lo;
      w.row() << "sliding_hi" << sr->hi;
    } else {
      w.row() << "sliding_lo" << "none";
      w.row() << "sliding_hi" << "none";
    }
    w.close();
  }
  if (!c.plot) return;
  const double th_max = 1.6, ph_max = 2.2;
  SvgPlot plot(-th_max, th_max, -ph_max, ph_max, "theta", "phi");
  draw_phase_overlays(plot, p, th_max, ph_max);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::vector<Point2> pts;
    const auto& sm = runs[k].samples;
    const std::size_t stride = std::max<std::size_t>(1, sm.size() / 4000);
    for (std::size_t i = 0; i < sm.size(); i += stride) pts.push_back({sm[i].x.theta, sm[i].x.phi});
    if (!sm.empty()) pts.push_back({sm.back().x.theta, sm.back().x.phi});
    plot.line(pts, k % 2 ? "navy" : "crimson");
  }
  if (const auto sr = sliding_region(p)) {
    plot.line({{sr->lo, p.s * sr->lo}, {sr->hi, p.s * sr->hi}}, "black", false, 3.0);
    plot.line({{-sr->lo, -p.s * sr->lo}, {-sr->hi, -p.s * sr->hi}}, "black", false, 3.0);
  }
  plot.write(path_in(c, "phase.svg"));
}

// ---------------------------------------------------------------------------

void scan_set_rule1(const RunConfig& c) {
  const auto as = c.a_grid.values();
  struct Found {
    std::optional<BifPoint> dib, sn, hc;
  };
  const auto found = parallel_map(
      as.size(),
      [&](std::size_t i) {
        Params p = c.p;
        p.a = as[i];
        Found f;
        f.dib = find_dib(p);
        if (f.dib) f.sn = find_saddle_node(p);
        if (p.g == GKind::Cosine) f.hc = find_homoclinic(p);
        return f;
      },
      c.jobs);
  CsvWriter w(path_in(c, "bifset.csv"), {"kind", "a", "b", "tau", "s_or_sigma", "witness"});
  std::vector<BifPoint> all;
  for (const auto& f : found)
    for (const auto* bp : {&f.dib, &f.sn, &f.hc})
      if (*bp) all.push_back(**bp);
  write_bif_rows(w, all);
  w.close();
  std::printf("bifurcation points: %zu\n", all.size());
  if (!c.plot) return;

  // Delay scaled by -s as in the figures; dashed curves are the asymptotic predictions.
  const double scale = c.p.s < 0.0 ? -1.0 / c.p.s : 1.0;
  const double a_lo = c.a_grid.lo, a_hi = std::max(c.a_grid.hi, c.a_grid.lo + 1e-3);
  double y_max = 1.0;
  for (const auto& bp : all) y_max = std::max(y_max, 1.1 * bp.tau * scale);
  SvgPlot plot(a_lo, a_hi, 0.0, std::min(y_max, 20.0), "a", c.p.s < 0.0 ? "-tau/s" : "tau");
  auto sample = [&](auto&& curve) {
    std::vector<Point2> pts;
    for (int k = 0; k <= 400; ++k) {
      const double a = a_lo + (a_hi - a_lo) * k / 400;
      double y = std::numeric_limits<double>::quiet_NaN();
      try {
        y = curve(a) * scale;
      } catch (const std::exception&) {
      }
      pts.push_back({a, y});
    }
    return pts;
  };
  plot.line(sample([&](double a) {
              if (a <= 1.0 || a >= 2.0) throw std::domain_error("outside DIB range");
              return dib_curve(a, c.p.b, c.p.s);
            }),
            "crimson", true);
  if (c.p.g == GKind::Cosine)
    plot.line(sample([&](double a) { return homoclinic_curve(a, c.p.b, c.p.s); }), "darkgreen", true);
  for (const auto& bp : all) {
    const char* col = bp.kind == BifKind::DIB ? "crimson" : bp.kind == BifKind::SaddleNode ? "navy" : "darkgreen";
    plot.point({bp.a, bp.tau * scale}, col);
  }
  plot.write(path_in(c, "bifset.svg"));
}

void scan_set_rule2(const RunConfig& c) {
  std::vector<BifPoint> all;
  all.push_back(boundary_equilibrium(c.p));
  if (const auto hc = find_rule2_left_homoclinic(c.p, c.a_grid.lo, c.a_grid.hi)) all.push_back(*hc);
  if (c.p.g == GKind::Cosine)
    if (const auto sh = find_rule2_symmetric_transition(c.p, c.a_grid.lo, c.a_grid.hi)) all.push_back(*sh);
  CsvWriter w(path_in(c, "bifset.csv"), {"kind", "a", "b", "tau", "s_or_sigma", "witness"});
  write_bif_rows(w, all);
  w.close();
  std::printf("bifurcation points: %zu\n", all.size());
}

void scan_plane(const RunConfig& c) {
  const auto as = c.a_grid.values();
  const auto bs = c.b_grid.values();
  const auto labels = parallel_map(
      as.size() * bs.size(),
      [&](std::size_t i) { return classify_plane_point(as[i % as.size()], bs[i / as.size()], c.p.tau, c.p.s); },
      c.jobs);
  {
    CsvWriter w(path_in(c, "plane.csv"), {"a", "b", "zigzag_label", "spiral_label"});
    for (std::size_t i = 0; i < labels.size(); ++i)
      w.row() << as[i % as.size()] << bs[i / as.size()] << to_string(labels[i].zigzag) << to_string(labels[i].spiral);
    w.close();
  }
  const auto curves = parallel_map(
      bs.size(), [&](std::size_t j) { return plane_curves_at_b(bs[j], c.p.tau, c.p.s, as); }, c.jobs);
  CsvWriter w(path_in(c, "plane_curves.csv"), {"curve", "a", "b"});
  for (const auto& row : curves)
    for (const auto& pt : row) w.row() << to_string(pt.curve) << pt.a << pt.b;
  w.close();
  std::printf("plane points: %zu\n", labels.size());
  if (!c.plot || as.size() < 2 || bs.size() < 2) return;
  SvgPlot plot(as.front(), as.back(), bs.front(), bs.back(), "a", "b");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool zin = labels[i].zigzag == ZigzagFate::In, sin_ = labels[i].spiral == SpiralFate::In;
    const char* col = zin && sin_ ? "seagreen" : zin ? "gold" : sin_ ? "skyblue" : "lightcoral";
    plot.point({as[i % as.size()], bs[i / as.size()]}, col, 2.0);
  }
  const char* curve_col[] = {"black", "navy", "black", "navy"};
  for (const auto& row : curves)
    for (const auto& pt : row) plot.point({pt.a, pt.b}, curve_col[static_cast<int>(pt.curve)], 1.2);
  plot.write(path_in(c, "plane.svg"));
}

void scan_diagram(const RunConfig& c) {
  const auto as = c.a_grid.values();
  const auto parts = parallel_map(
      as.size(), [&](std::size_t i) { return bif_diagram({as[i]}, c.p); }, c.jobs);
  CsvWriter w(path_in(c, "branches.csv"), {"a", "branch_id", "theta_min", "theta_max", "stability"});
  std::size_t n = 0;
  for (const auto& rows : parts)
    for (const auto& r : rows) {
      w.row() << r.a << r.branch_id << r.theta_min << r.theta_max << (r.stable ? "stable" : "unstable");
      ++n;
    }
  w.close();
  std::printf("branch rows: %zu\n", n);
  if (!c.plot || as.size() < 2) return;
  SvgPlot plot(as.front(), as.back(), -1.6, 1.6, "a", "theta");
  for (const auto& rows : parts)
    for (const auto& r : rows) {
      const char* col = r.stable ? "black" : "crimson";
      plot.point({r.a, r.theta_max}, col, 1.8);
      if (r.theta_min != r.theta_max) plot.point({r.a, r.theta_min}, col, 1.8);
    }
  plot.write(path_in(c, "branches.svg"));
}

void cmd_scan(const RunConfig& c) {
  prepare_out(c);
  if (c.mode == "plane") {
    if (c.p.rule != Rule::Rule1) throw config_error("scan mode plane requires rule = 1");
    scan_plane(c);
  } else if (c.mode == "diagram") {
    scan_diagram(c);
  } else if (c.p.rule == Rule::Rule1) {
    scan_set_rule1(c);
  } else {
    scan_set_rule2(c);
  }
}

// ---------------------------------------------------------------------------

void cmd_asymptote(const RunConfig& c) {
  prepare_out(c);
  if (c.curve == "rule2") {
    CsvWriter w(path_in(c, "asymptote_rule2.csv"), {"tau", "phi0", "stable"});
    Params p = c.p;
    p.rule = Rule::Rule2;
    for (double tau : c.tau_grid.values()) {
      p.tau = tau;
      try {
        const auto orb = rule2_periodic(p);
        w.row() << tau << orb.phi0 << orb.stable;
      } catch (const std::domain_error&) {
        w.row() << tau << "" << "singular";
      }
    }
    w.close();
    return;
  }
  CsvWriter w(path_in(c, "asymptote_" + c.curve + ".csv"), {"a", "tau", "note"});
  for (double a : c.a_grid.values()) {
    try {
      double tau = 0.0;
      if (c.curve == "dib")
        tau = dib_curve(a, c.p.b, c.p.s);
      else if (c.curve == "criticality")
        tau = criticality_curve(a, c.p.b, c.p.s, c.p.g);
      else
        tau = homoclinic_curve(a, c.p.b, c.p.s);
      if (!std::isfinite(tau)) throw singular_input_error("non-finite value");
      w.row() << a << tau << "ok";
    } catch (const std::domain_error&) {
      std::fprintf(stderr, "warning: %s singular at a = %s, row skipped\n", c.curve.c_str(), format_number(a).c_str());
      w.row() << a << "" << "singular";
    }
  }
  w.close();
}

void cmd_burst(const RunConfig& c) {
  prepare_out(c);
  if (c.p.rule != Rule::Rule1 || c.p.g != GKind::Cosine) throw config_error("burst requires rule = 1 and g = cos");
  BurstOptions o;
  o.sample_a = c.sample_a;
  const auto d = burst_diagnose(c.p, c.a_grid.lo, c.a_grid.hi, o);
  CsvWriter w(path_in(c, "burst.csv"), {"quantity", "value"});
  auto opt = [&](const char* name, const std::optional<double>& v) {
    w.row() << name << (v ? format_number(*v) : std::string("none"));
  };
  opt("a1", d.a1);
  opt("a2", d.a2);
  opt("a3", d.a3);
  w.row() << "sample_a" << c.sample_a;
  w.row() << "excursion_reentry_theta" << d.excursion_reentry_theta;
  w.row() << "short_off_exit_theta" << d.short_off_exit_theta;
  w.row() << "attractor_kind" << to_string(d.attractor_kind);
  w.row() << "period_entries" << d.period_entries;
  w.close();
  std::printf("a1=%s a2=%s a3=%s attractor=%s\n", d.a1 ? format_number(*d.a1).c_str() : "none",
              d.a2 ? format_number(*d.a2).c_str() : "none", d.a3 ? format_number(*d.a3).c_str() : "none",
              std::string(to_string(d.attractor_kind)).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed ON/OFF control of an inverted pendulum: simulation and bifurcation analysis"};
  app.require_subcommand(1);

  // Shared flags are recorded as raw strings and applied on top of --config, in this order.
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const Flag flags[] = {
      {"--rule", "rule", "switching rule {1|2}"},  {"--g", "g", "gain profile {one|cos}"},
      {"--a", "a", "position gain"},               {"--b", "b", "velocity gain"},
      {"--tau", "tau", "delay"},                   {"--s", "s", "slope of Sigma1 (rule 1)"},
      {"--sigma", "sigma", "dead-zone half-width (rule 2)"},
      {"--theta0", "theta0", "initial theta"},     {"--phi0", "phi0", "initial phi"},
      {"--tmax", "tmax", "integration horizon"},   {"--dt", "dt", "step size"},
      {"--out", "out", "output directory"},
  };

  const char* names[] = {"simulate", "scan", "asymptote", "zero-delay", "burst"};
  const char* helps[] = {"simulate trajectories (trajectory/event CSV, phase plot)",
                         "bifurcation set, (a,b)-plane classification or branch diagram",
                         "sample asymptotic curves", "delay-free Filippov simulation", "bursting diagnostics over a range"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], helps[i]);
    sub->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& f : flags)
      sub->add_option_function<std::string>(
          f.name, [&overrides, key = std::string(f.key)](const std::string& v) { overrides[key] = v; }, f.help);
    sub->add_option("--set", sets, "extra key=value override (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + kv + "'");
      apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate(command);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kExitConfig;
  }

  try {
    if (command == "simulate") cmd_simulate(cfg);
    else if (command == "scan") cmd_scan(cfg);
    else if (command == "asymptote") cmd_asymptote(cfg);
    else if (command == "zero-delay") cmd_zero_delay(cfg);
    else cmd_burst(cfg);
  } catch (const io_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitOk;
}
