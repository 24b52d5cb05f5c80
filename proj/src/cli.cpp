#include "fracpme/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>

#include "fracpme/barriers.hpp"
#include "fracpme/config.hpp"
#include "fracpme/diagnostics.hpp"
#include "fracpme/integrated.hpp"
#include "fracpme/io.hpp"
#include "fracpme/oracles.hpp"
#include "fracpme/parallel.hpp"
#include "fracpme/solver.hpp"
#include "fracpme/svg.hpp"

namespace fracpme::cli {

using nlohmann::json;

namespace {

// ------------------------------------------------------------------ plumbing

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model.m", "model.s",
      "regularization.delta", "regularization.mu", "regularization.eps", "regularization.R",
      "grid.n", "grid.x_left", "grid.h",
      "time.T", "time.snapshot_times", "time.snapshots",
      "initial.type", "initial.amplitude", "initial.radius", "initial.center", "initial.width",
      "initial.t", "initial.M", "initial.R_prof", "initial.path",
      "solver.sigma", "solver.kappa", "solver.pressure", "solver.pad", "solver.closed_boundary",
      "solver.donor_floor", "solver.max_steps", "solver.record_steps",
      "integrated.sigma", "integrated.kappa", "integrated.max_steps", "integrated.refine",
      "sweep.delta", "sweep.mu", "sweep.eps", "sweep.R",
      "propagation.theta", "propagation.finite_factor", "propagation.infinite_factor",
      "propagation.boundary_cells",
      "barrier.a", "barrier.b", "barrier.C_max", "barrier.rel_tol", "barrier.snapshots",
      "barrier.x1", "barrier.t1", "barrier.v_snapshots", "barrier.xis", "barrier.shape_centers",
      "barrier.shape_radii", "barrier.b_count", "barrier.tau_count", "barrier.tau_min",
      "barrier.tau_max", "barrier.omega_left", "barrier.lattice_dx", "barrier.lattice_nt",
      "barrier.amplitude_fraction", "barrier.quad_X", "barrier.quad_h", "barrier.g_x0",
      "barrier.g_center", "barrier.g_radius", "barrier.g_amplitude", "barrier.g_window",
      "barrier.g_h", "barrier.g_far",
      "phase.m_list", "phase.s_list", "phase.n", "phase.R", "phase.T", "phase.snapshots",
      "oracle.name", "oracle.n", "oracle.L", "oracle.t0", "oracle.t1", "oracle.refine",
      "oracle.M", "oracle.s", "oracle.R_prof", "oracle.calibrate", "oracle.R_lo", "oracle.R_hi",
      "oracle.horizon", "oracle.bits",
  };
  return keys;
}

void check_keys(const Config& cfg) {
  std::set<std::string> sections;
  for (const auto& k : known_keys()) sections.insert(k.substr(0, k.find('.')));
  json all = cfg.resolved();
  for (auto it = all.begin(); it != all.end(); ++it) {
    if (!sections.count(it.key())) throw ConfigError("unknown section [" + it.key() + "]");
  }
  cfg.reject_unknown(known_keys(), sections);
}

// All artifacts of one command, written only once the command succeeded.
class Bundle {
 public:
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void commit(const std::string& dir) const {
    io::ensure_dir(dir);
    for (const auto& [name, content] : files_) {
      const std::string path = io::join(dir, name);
      io::ensure_dir(std::filesystem::path(path).parent_path().string());
      io::write_atomic(path, content);
    }
    std::error_code ec;
    std::filesystem::remove(io::join(dir, "error.json"), ec);
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string csv_num(double v) { return format_double(v); }

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string seq_name(const std::string& stem, size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", stem.c_str(), k);
  return buf;
}

// ------------------------------------------------------------------ builders

ModelParams model_params(const Config& c) {
  ModelParams p;
  p.m = c.get_double("model.m");
  p.s = c.get_double("model.s");
  p.delta = c.get_double("regularization.delta", 0.0);
  p.mu = c.get_double("regularization.mu", 0.0);
  p.eps = c.get_double("regularization.eps", 0.0);
  p.R = c.get_double("regularization.R", 50.0);
  try {
    p.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

Grid make_grid(const Config& c, double R) {
  const int n = c.get_int("grid.n", 4096);
  if (n < 8) throw ConfigError("grid.n must be >= 8");
  const double h = c.get_double("grid.h", 2.0 * R / n);
  const double xl = c.get_double("grid.x_left", -R);
  if (!(h > 0.0)) throw ConfigError("grid.h must be > 0");
  return Grid::make(n, h, xl, Topology::truncated_line);
}

Field initial_datum(const Config& c, const Grid& g, const ModelParams& p) {
  const std::string type = c.get_string("initial.type", "box");
  if (type == "csv") {
    std::string path = c.get_string("initial.path");
    std::filesystem::path fp(path);
    if (fp.is_relative()) fp = std::filesystem::path(c.origin()).parent_path() / fp;
    return read_field_csv(fp.string(), g, FieldKind::density);
  }
  if (type == "poisson") {
    const double t = c.get_double("initial.t", 1.0);
    if (!(t > 0.0)) throw ConfigError("initial.t must be > 0");
    return poisson_kernel(t, g);
  }
  if (type == "barenblatt") {
    const double M = c.get_double("initial.M", 1.0);
    const double R = c.get_double("initial.R_prof", barenblatt_R_analytic(M, p.s));
    const double t = c.get_double("initial.t", 1.0);
    return barenblatt_slice(BarenblattSpec::make(M, p.s, R), t, g);
  }
  const double a = c.get_double("initial.amplitude", 1.0);
  const double x0 = c.get_double("initial.center", 0.0);
  if (type == "box" || type == "cap") {
    const double r = c.get_double("initial.radius", 1.0);
    if (!(r > 0.0) || !(a >= 0.0)) throw ConfigError("initial.radius must be > 0, amplitude >= 0");
    if (type == "box")
      return Field::sample(g, [=](double x) { return std::abs(x - x0) < r ? a : 0.0; },
                           FieldKind::density);
    return Field::sample(g, [=](double x) {
      const double z = (x - x0) / r;
      return std::abs(z) < 1.0 ? a * (1.0 - z * z) : 0.0;
    }, FieldKind::density);
  }
  if (type == "gaussian") {
    const double w = c.get_double("initial.width", 1.0);
    if (!(w > 0.0) || !(a >= 0.0)) throw ConfigError("initial.width must be > 0, amplitude >= 0");
    return Field::sample(g, [=](double x) { return a * std::exp(-std::pow((x - x0) / w, 2)); },
                         FieldKind::density);
  }
  throw ConfigError("initial.type must be box, cap, gaussian, poisson, barenblatt or csv; got '" +
                    type + "'");
}

SolverOptions solver_options(const Config& c) {
  SolverOptions o;
  const std::string pr = c.get_string("solver.pressure", "automatic");
  if (pr == "automatic") o.pressure = PressureBackend::automatic;
  else if (pr == "quadrature") o.pressure = PressureBackend::quadrature;
  else if (pr == "spectral") o.pressure = PressureBackend::spectral;
  else throw ConfigError("solver.pressure must be automatic, quadrature or spectral");
  o.sigma = c.get_double("solver.sigma", o.sigma);
  o.kappa = c.get_double("solver.kappa", o.kappa);
  o.pad = c.get_int("solver.pad", o.pad);
  o.closed_boundary = c.get_bool("solver.closed_boundary", o.closed_boundary);
  o.donor_floor = c.get_double("solver.donor_floor", o.donor_floor);
  o.max_steps = c.get_int("solver.max_steps", 20'000'000);
  o.record_steps = c.get_bool("solver.record_steps", true);
  if (!(o.sigma > 0.0 && o.sigma <= 1.0)) throw ConfigError("solver.sigma must lie in (0, 1]");
  if (o.pad < 1) throw ConfigError("solver.pad must be >= 1");
  return o;
}

IntegratedOptions integrated_options(const Config& c) {
  IntegratedOptions o;
  o.sigma = c.get_double("integrated.sigma", o.sigma);
  o.kappa = c.get_double("integrated.kappa", o.kappa);
  o.max_steps = c.get_int("integrated.max_steps", 20'000'000);
  if (!(o.sigma > 0.0 && o.sigma <= 1.0)) throw ConfigError("integrated.sigma must lie in (0, 1]");
  return o;
}

double final_time(const Config& c) {
  const double T = c.get_double("time.T");
  if (!(T > 0.0)) throw ConfigError("time.T must be > 0");
  return T;
}

std::vector<double> snapshot_times(const Config& c, double T) {
  std::vector<double> ts;
  if (c.has("time.snapshot_times")) {
    ts = c.get_list("time.snapshot_times");
  } else {
    const int k = c.get_int("time.snapshots", 10);
    if (k < 1) throw ConfigError("time.snapshots must be >= 1");
    for (int i = 1; i < k; ++i) ts.push_back(T * i / k);
  }
  for (double t : ts)
    if (!(t >= 0.0 && t <= T)) throw ConfigError("snapshot times must lie in [0, T]");
  return ts;
}

PropagationOptions propagation_options(const Config& c) {
  PropagationOptions o;
  o.theta = c.get_double("propagation.theta", o.theta);
  o.finite_factor = c.get_double("propagation.finite_factor", o.finite_factor);
  o.infinite_factor = c.get_double("propagation.infinite_factor", o.infinite_factor);
  o.boundary_cells = c.get_int("propagation.boundary_cells", o.boundary_cells);
  return o;
}

json params_json(const ModelParams& p) {
  return {{"m", p.m}, {"s", p.s}, {"delta", p.delta}, {"mu", p.mu}, {"eps", p.eps}, {"R", p.R}};
}

json grid_json(const Grid& g) { return {{"n", g.n}, {"x_left", g.x_left}, {"h", g.h}}; }

std::string diagnostics_csv(const std::vector<EnergyReport>& d) {
  std::string o = "t,mass,linf,fmu,visc_accum,gradH_accum,residual,u3m\n";
  for (const auto& r : d)
    o += csv_num(r.t) + "," + csv_num(r.mass) + "," + csv_num(r.linf) + "," +
         csv_num(r.fmu_integral) + "," + csv_num(r.visc_dissip_accum) + "," +
         csv_num(r.gradH_dissip_accum) + "," + csv_num(r.identity_residual) + "," +
         csv_num(r.u3m_integral) + "\n";
  return o;
}

const char* palette(size_t k) {
  static const char* c[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return c[k % 10];
}

// at most `count` evenly spread snapshots for a profile plot
std::string profile_svg(const std::vector<Snapshot>& snaps, const std::string& title,
                        const std::string& ylabel, size_t count = 6) {
  svg::Plot plot{title, "x", ylabel, false, {}};
  const size_t n = snaps.size();
  for (size_t j = 0; j < std::min(count, n); ++j) {
    const size_t k = count >= n ? j : j * (n - 1) / (count - 1);
    svg::Series s;
    s.label = "t = " + format_double(snaps[k].t);
    s.color = palette(j);
    const Field& f = snaps[k].u;
    for (int i = 0; i < f.size(); ++i) {
      s.x.push_back(f.grid().x(i));
      s.y.push_back(f[i]);
    }
    plot.series.push_back(std::move(s));
  }
  return svg::line_plot(plot);
}

json propagation_json(const PropagationReport& r) {
  json j;
  j["classification"] = to_string(r.classification);
  j["theta"] = r.theta;
  j["r0"] = r.r0;
  j["C_lin"] = r.C_lin;
  j["domain_length"] = r.domain_length;
  j["infinite_rule"] = r.infinite_rule;
  j["finite_rule"] = r.finite_rule;
  json sr = json::array();
  for (auto [t, x] : r.support_radius_series) sr.push_back({{"t", t}, {"radius", x}});
  j["support_radius_series"] = sr;
  json mb = json::array();
  for (const auto& m : r.mass_beyond) mb.push_back({{"t", m.t}, {"R0", m.R0}, {"mass", m.mass}});
  j["mass_beyond"] = mb;
  if (r.tail_fit) {
    const auto& f = *r.tail_fit;
    j["tail_fit"] = {{"exp_rate", f.rate()},
                     {"exp_rms", f.exp_fit.rms},
                     {"alg_exponent", f.exponent()},
                     {"alg_rms", f.alg_fit.rms},
                     {"cells", f.alg_fit.cells},
                     {"exponential_better", f.exponential_better}};
  } else {
    j["tail_fit"] = nullptr;
  }
  j["options"] = {{"theta", r.options.theta},
                  {"finite_factor", r.options.finite_factor},
                  {"infinite_factor", r.options.infinite_factor},
                  {"boundary_cells", r.options.boundary_cells}};
  return j;
}

// ------------------------------------------------------------------ commands

struct Context {
  Config cfg;
  int jobs = 1;
  std::string command;
};

json header(const Context& ctx) { return {{"command", ctx.command}}; }

void finish(json& j, const Context& ctx) { j["config"] = ctx.cfg.resolved(); }

void cmd_run(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  ModelParams p = model_params(c);
  Grid g = make_grid(c, p.R);
  Field u0 = initial_datum(c, g, p);
  SolverOptions so = solver_options(c);
  const double T = final_time(c);
  auto times = snapshot_times(c, T);
  PropagationOptions po = propagation_options(c);
  Solver solver(p, g, so);
  Trajectory tr = solver.run(u0, T, times);

  json m = header(ctx);
  m["params"] = params_json(p);
  m["grid"] = grid_json(g);
  m["pressure_backend"] = solver.pressure_backend() == Backend::spectral ? "spectral" : "quadrature";
  json files = json::array();
  for (size_t k = 0; k < tr.snapshots.size(); ++k) {
    const std::string name = "snapshots/" + seq_name("u", k);
    out.add(name, field_to_csv(tr.snapshots[k].u));
    files.push_back({{"t", tr.snapshots[k].t}, {"file", name}});
  }
  m["snapshots"] = files;
  out.add("diagnostics.csv", diagnostics_csv(tr.diagnostics));
  m["diagnostics"] = "diagnostics.csv";
  std::string steps = "t,dt,mass,linf\n";
  bool linf_ok = true;
  double prev = u0.max();
  for (const auto& s : tr.steps) {
    steps += csv_num(s.t) + "," + csv_num(s.dt) + "," + csv_num(s.mass) + "," + csv_num(s.linf) + "\n";
    if (s.linf > prev * (1.0 + 1e-12)) linf_ok = false;
    prev = s.linf;
  }
  if (so.record_steps) {
    out.add("steps.csv", steps);
    m["steps_file"] = "steps.csv";
  }
  const double m0 = tr.diagnostics.front().mass;
  m["summary"] = {{"steps", tr.step_count},
                  {"rejected_steps", tr.rejected_steps},
                  {"mass_drift_rel", m0 > 0 ? std::abs(tr.diagnostics.back().mass - m0) / m0 : 0.0},
                  {"linf_nonincreasing", linf_ok},
                  {"final_time", tr.final_time()}};
  if (p.m > 1.0 && p.m < 2.0) {
    auto d = dissipation_3m(tr, p.m);
    m["summary"]["u3m_nonincreasing"] = d.u3m_nonincreasing;
    m["summary"]["dissipation_C"] = d.C;
    m["summary"]["dissipation_max_residual"] = d.max_residual;
  }
  json prop;
  try {
    prop = propagation_json(check_propagation(tr, po));
  } catch (const PreconditionError& e) {
    prop = {{"classification", "inconclusive"}, {"error", e.what()}};
  }
  finish(prop, ctx);
  out.add_json("propagation.json", prop);
  m["propagation"] = "propagation.json";
  out.add("snapshots.svg", profile_svg(tr.snapshots, "density snapshots", "u"));
  svg::Plot dp{"mass and max u", "t", "value", false, {}};
  svg::Series ms{"mass", {}, {}, palette(0), false}, ls{"max u", {}, {}, palette(1), true};
  for (const auto& r : tr.diagnostics) {
    ms.x.push_back(r.t);
    ms.y.push_back(r.mass);
    ls.x.push_back(r.t);
    ls.y.push_back(r.linf);
  }
  dp.series = {ms, ls};
  out.add("diagnostics.svg", svg::line_plot(dp));
  m["figures"] = {"snapshots.svg", "diagnostics.svg"};
  finish(m, ctx);
  out.add_json("manifest.json", m);
}

void cmd_sweep(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  ModelParams p = model_params(c);
  Grid g = make_grid(c, p.R);
  Field u0 = initial_datum(c, g, p);
  SolverOptions so = solver_options(c);
  so.record_steps = false;
  const double T = final_time(c);
  auto d = c.get_list("sweep.delta", {p.delta});
  auto mu = c.get_list("sweep.mu", {p.mu});
  auto ep = c.get_list("sweep.eps", {p.eps});
  auto Rs = c.get_list("sweep.R", {p.R});
  size_t n = std::max({d.size(), mu.size(), ep.size(), Rs.size()});
  if (n == 0) throw ConfigError("sweep ladder is empty");
  auto pick = [&](const std::vector<double>& v, size_t k, const char* name) {
    if (v.size() == 1) return v[0];
    if (v.size() != n) throw ConfigError(std::string("sweep.") + name + " has the wrong length");
    return v[k];
  };
  std::vector<Rung> ladder;
  for (size_t k = 0; k < n; ++k)
    ladder.push_back({pick(d, k, "delta"), pick(mu, k, "mu"), pick(ep, k, "eps"), pick(Rs, k, "R")});
  auto res = vanishing_sweep(p, u0, T, ladder, so, ctx.jobs);

  std::string csv = "rung,delta,mu,eps,R,status,final_mass,distance_to_next\n";
  json rungs = json::array();
  for (size_t k = 0; k < n; ++k) {
    const Rung& r = ladder[k];
    const bool ok = res.errors[k].empty();
    const double fm = ok ? mass(res.runs[k]->final()) : NAN;
    const double dist = k < res.distances.size() ? res.distances[k] : NAN;
    csv += std::to_string(k) + "," + csv_num(r.delta) + "," + csv_num(r.mu) + "," + csv_num(r.eps) +
           "," + csv_num(r.R) + "," + (ok ? "ok" : "failed") + "," + (ok ? csv_num(fm) : "") + "," +
           (k < res.distances.size() && std::isfinite(dist) ? csv_num(dist) : "") + "\n";
    json jr = {{"delta", r.delta}, {"mu", r.mu}, {"eps", r.eps}, {"R", r.R},
               {"status", ok ? "ok" : "failed"}};
    if (!ok) jr["error"] = res.errors[k];
    else {
      jr["final_mass"] = fm;
      jr["steps"] = res.runs[k]->step_count;
      out.add("rungs/" + seq_name("final", k), field_to_csv(res.runs[k]->final()));
    }
    rungs.push_back(jr);
  }
  out.add("sweep.csv", csv);
  json j = header(ctx);
  j["params"] = params_json(p);
  j["grid"] = grid_json(g);
  j["T"] = T;
  j["rungs"] = rungs;
  json dj = json::array();
  for (double x : res.distances) dj.push_back(num_or_null(x));
  j["distances"] = dj;
  j["decreasing"] = res.decreasing;
  svg::Plot pl{"distance between consecutive rungs", "rung", "L1 distance", true, {}};
  svg::Series s{"L1(u_k, u_k+1)", {}, {}, palette(0), false};
  for (size_t k = 0; k < res.distances.size(); ++k) {
    s.x.push_back(static_cast<double>(k));
    s.y.push_back(res.distances[k]);
  }
  pl.series = {s};
  out.add("sweep.svg", svg::line_plot(pl));
  finish(j, ctx);
  out.add_json("sweep.json", j);
}

void cmd_barrier_upper(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  ModelParams p = model_params(c);
  Grid g = make_grid(c, p.R);
  Field u0 = initial_datum(c, g, p);
  SpeedOptions o;
  o.solver = solver_options(c);
  o.solver.record_steps = false;
  o.C_max = c.get_double("barrier.C_max", o.C_max);
  o.rel_tol = c.get_double("barrier.rel_tol", o.rel_tol);
  o.snapshots = c.get_int("barrier.snapshots", o.snapshots);
  const double a = c.get_double("barrier.a");
  const double b = c.get_double("barrier.b");
  const double T = final_time(c);
  auto r = find_speed(p, u0, a, b, T, o);
  const auto& rep = r.report;

  std::string csv = "t,margin_min\n";
  svg::Series s{"min_x (U - u)", {}, {}, palette(0), false};
  json times = json::array();
  for (auto [t, mval] : rep.margin_curve) {
    csv += csv_num(t) + "," + csv_num(mval) + "\n";
    s.x.push_back(t);
    s.y.push_back(mval);
    times.push_back(t);
  }
  out.add("margin.csv", csv);
  out.add("margin.svg", svg::line_plot({"upper barrier margin", "t", "U - u", false, {s}}));

  json j = header(ctx);
  j["params"] = params_json(p);
  j["barrier_params"] = {{"a", a}, {"b", b}, {"C", r.C_star}};
  j["lattice"] = {{"grid", grid_json(g)}, {"times", times}};
  j["residual_max"] = -rep.margin_min;
  j["margin_min"] = rep.margin_min;
  if (rep.first_violation) {
    const auto& v = *rep.first_violation;
    j["witness_point"] = {{"x", v.x}, {"t", v.t}, {"u", v.u}, {"U", v.U}, {"kind", "violation"}};
  } else {
    // tightest snapshot
    double best = INFINITY, tb = 0.0;
    for (auto [t, mval] : rep.margin_curve)
      if (mval < best) best = mval, tb = t;
    j["witness_point"] = {{"t", tb}, {"margin", best}, {"kind", "tightest"}};
  }
  j["found"] = r.found;
  j["holds"] = rep.holds;
  j["C_star"] = r.C_star;
  j["required_speed"] = r.required;
  j["bisections"] = r.bisections;
  j["steps_checked"] = r.steps_checked;
  j["C_max"] = o.C_max;
  finish(j, ctx);
  out.add_json("barrier_upper.json", j);
}

void cmd_barrier_lower(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  ModelParams p = model_params(c);
  const double gamma = barrier_gamma(p);  // fails first for m >= 2
  Grid g = make_grid(c, p.R);
  Field u0 = initial_datum(c, g, p);
  ProbeOptions o;
  o.xis = c.get_list("barrier.xis", o.xis);
  std::vector<double> cs, rs;
  for (auto [cc, rr] : o.shapes) cs.push_back(cc), rs.push_back(rr);
  cs = c.get_list("barrier.shape_centers", cs);
  rs = c.get_list("barrier.shape_radii", rs);
  if (cs.size() != rs.size() || cs.empty())
    throw ConfigError("barrier.shape_centers and barrier.shape_radii must have equal nonzero length");
  o.shapes.clear();
  for (size_t k = 0; k < cs.size(); ++k) o.shapes.emplace_back(cs[k], rs[k]);
  o.b_count = c.get_int("barrier.b_count", o.b_count);
  o.tau_count = c.get_int("barrier.tau_count", o.tau_count);
  o.tau_min = c.get_double("barrier.tau_min", o.tau_min);
  o.tau_max = c.get_double("barrier.tau_max", o.tau_max);
  o.omega_left = c.get_double("barrier.omega_left", o.omega_left);
  o.lattice_dx = c.get_double("barrier.lattice_dx", o.lattice_dx);
  o.lattice_nt = c.get_int("barrier.lattice_nt", o.lattice_nt);
  o.amplitude_fraction = c.get_double("barrier.amplitude_fraction", o.amplitude_fraction);
  o.quad.X = c.get_double("barrier.quad_X", o.quad.X);
  o.quad.h = c.get_double("barrier.quad_h", o.quad.h);
  o.jobs = ctx.jobs;
  if (o.xis.empty() || o.b_count < 1 || o.tau_count < 1 || o.lattice_nt < 2)
    throw ConfigError("barrier search grid is empty");
  const double x1 = c.get_double("barrier.x1", 10.0);
  const double t1 = c.get_double("barrier.t1", 0.5);
  const int vs = c.get_int("barrier.v_snapshots", 20);
  GSpec gs{c.get_double("barrier.g_x0", 2.0), c.get_double("barrier.g_center", 0.0),
           c.get_double("barrier.g_radius", 1.0), c.get_double("barrier.g_amplitude", 1.0)};
  GWindow gw{c.get_double("barrier.g_window", 60.0), c.get_double("barrier.g_h", 0.01),
             c.get_double("barrier.g_far", 50.0)};
  IntegratedSolver isol(p, g, integrated_options(c));
  auto st = isol.from_density(u0);
  std::vector<double> times;
  if (t1 > 0.0)
    for (int k = 1; k < vs; ++k) times.push_back(t1 * k / vs);
  IntegratedTrajectory vt = t1 > 0.0 ? isol.run(st.v, st.M, t1, times)
                                     : IntegratedTrajectory{p, st.M, {{0.0, st.v}}, 0, 0};
  auto r = positivity_probe(x1, t1, p, vt, o);
  auto gr = check_G(gs, p.s, gw);

  json j = header(ctx);
  j["params"] = params_json(p);
  j["gamma"] = gamma;
  if (r.barrier) {
    const auto& b = *r.barrier;
    j["barrier_params"] = {{"tau", b.tau}, {"xi", b.xi}, {"eps", b.eps_level}, {"b", b.b_exp},
                           {"gamma", b.gamma},
                           {"G", {{"x0", b.G.x0}, {"center", b.G.center}, {"radius", b.G.radius},
                                  {"amplitude", b.G.amplitude}}}};
  } else {
    j["barrier_params"] = nullptr;
  }
  json lx = json::array(), lt = json::array();
  for (double x : r.lattice.x) lx.push_back(x);
  for (double t : r.lattice.t) lt.push_back(t);
  j["lattice"] = {{"x", lx}, {"t", lt}, {"omega", {o.omega_left, -r.x0}},
                  {"quadrature", {{"X", o.quad.X}, {"h", o.quad.h}}}};
  j["residual_max"] = r.trivial ? json(nullptr) : json(r.residual_max);
  j["margin_min"] = r.below_margin;
  if (r.barrier) {
    auto sub = check_subsolution(*r.barrier, p, r.lattice, o.quad);
    j["witness_point"] = {{"x", sub.x_at}, {"t", sub.t_at}, {"time_term", sub.time_term},
                          {"space_term", sub.space_term}};
  } else {
    j["witness_point"] = nullptr;
  }
  j["found"] = r.found;
  j["trivial"] = r.trivial;
  j["mirrored"] = r.mirrored;
  j["x1"] = x1;
  j["t1"] = t1;
  j["lower_bound"] = r.lower_bound;
  j["bound_quantity"] = r.mirrored ? "M - v(x1, t1)" : "v(x1, t1)";
  j["numeric_value"] = r.numeric_value;
  j["numeric_above_bound"] = r.numeric_value >= r.lower_bound;
  j["eps_low"] = r.eps_low;
  j["eps_high"] = r.eps_high;
  j["x0"] = r.x0;
  j["candidates"] = r.candidates;
  j["feasible"] = r.feasible;
  j["M"] = vt.M;
  j["G_check"] = {{"C1_observed", gr.C1_observed}, {"C2_observed", gr.C2_observed},
                  {"far_ratio", gr.far_ratio}, {"far_expected", gr.far_expected},
                  {"window", {gr.window_left, gr.window_right}}, {"pass", gr.pass},
                  {"spec", {{"x0", gs.x0}, {"center", gs.center}, {"radius", gs.radius},
                            {"amplitude", gs.amplitude}}}};
  // barrier against the numeric solution at t1
  if (r.barrier && !r.trivial) {
    const IntegratedTrajectory use = r.mirrored ? mirror(vt) : vt;
    const Field& v = use.final();
    std::string csv = "x,v,phi\n";
    svg::Series sv{r.mirrored ? "M - v(-x)" : "v", {}, {}, palette(0), false};
    svg::Series sp{"barrier", {}, {}, palette(3), true};
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x_left + (i + 1) * g.h;
      if (x < o.omega_left || x > 0.0) continue;
      const double phi = (*r.barrier)(x, t1);
      csv += csv_num(x) + "," + csv_num(v[i]) + "," + csv_num(phi) + "\n";
      sv.x.push_back(x), sv.y.push_back(v[i]);
      sp.x.push_back(x), sp.y.push_back(phi);
    }
    out.add("barrier_lower_profile.csv", csv);
    out.add("barrier_lower_profile.svg",
            svg::line_plot({"integrated solution and lower barrier at t1", "x", "value", true, {sv, sp}}));
  }
  finish(j, ctx);
  out.add_json("barrier_lower.json", j);
}

void cmd_oracle(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  const std::string name = c.get_string("oracle.name");
  json j = header(ctx);
  j["oracle"] = name;
  SolverOptions so = solver_options(c);
  so.record_steps = false;
  if (name == "poisson") {
    const int n = c.get_int("oracle.n", 8192);
    const double L = c.get_double("oracle.L", 100.0);
    const double t0 = c.get_double("oracle.t0", 1.0);
    const double t1 = c.get_double("oracle.t1", 2.0);
    const bool refine = c.get_bool("oracle.refine", true);
    if (!(t0 > 0.0 && t1 >= t0)) throw ConfigError("oracle needs 0 < t0 <= t1");
    auto r = poisson_check(n, L, t0, t1, so);
    j["params"] = {{"m", 1.0}, {"s", 0.5}, {"n", n}, {"L", L}, {"t0", t0}, {"t1", t1}};
    j["error_l1_rel"] = r.error_l1_rel;
    j["calibrated_R"] = nullptr;
    j["beta_used"] = nullptr;
    j["mass_initial"] = r.mass_initial;
    j["mass_final"] = r.mass_final;
    std::string csv = "n,error_l1_rel\n" + std::to_string(n) + "," + csv_num(r.error_l1_rel) + "\n";
    if (refine) {
      auto r2 = poisson_check(2 * n, L, t0, t1, so);
      j["refined"] = {{"n", 2 * n}, {"error_l1_rel", r2.error_l1_rel}};
      j["decreasing"] = r2.error_l1_rel < r.error_l1_rel;
      csv += std::to_string(2 * n) + "," + csv_num(r2.error_l1_rel) + "\n";
    }
    out.add("oracle.csv", csv);
  } else if (name == "barenblatt") {
    const double M = c.get_double("oracle.M", 1.0);
    const double s = c.get_double("oracle.s", 0.75);
    BarenblattSpec spec = BarenblattSpec::make(M, s, c.get_double("oracle.R_prof", 1.0));
    SelfSimilarOptions o;
    o.n = c.get_int("oracle.n", o.n);
    o.L = c.get_double("oracle.L", o.L);
    o.calibrate = c.get_bool("oracle.calibrate", o.calibrate);
    o.R_lo = c.get_double("oracle.R_lo", o.R_lo);
    o.R_hi = c.get_double("oracle.R_hi", o.R_hi);
    o.horizon = c.get_double("oracle.horizon", o.horizon);
    o.bits = c.get_int("oracle.bits", o.bits);
    o.solver = so;
    const double t0 = c.get_double("oracle.t0", 1.0);
    const double t1 = c.get_double("oracle.t1", 2.0);
    auto r = self_similar_check(spec, t0, t1, o);
    j["params"] = {{"M", M}, {"s", s}, {"N", 1}, {"m_ex", spec.m_ex}, {"n", o.n}, {"L", o.L},
                   {"t0", t0}, {"t1", t1}, {"lambda", r.spec.lambda}};
    j["error_l1_rel"] = r.drift;
    j["calibrated_R"] = r.calibrated_R;
    j["beta_used"] = r.beta_used;
    j["analytic_R"] = r.analytic_R;
    j["calibration_drift"] = r.calibration_drift;
    j["calibration_evals"] = r.calibration_evals;
    j["mass_drift_rel"] = r.mass_drift;
    j["evenness"] = r.evenness;
    j["note"] = "s > 1/2 lies outside the one-dimensional existence hypotheses (s < 1/2); "
                "this is an extrapolation test of the scheme against an explicit solution";
    out.add("oracle.csv", "t0,t1,drift,calibrated_R,beta\n" + csv_num(t0) + "," + csv_num(t1) +
                               "," + csv_num(r.drift) + "," + csv_num(r.calibrated_R) + "," +
                               csv_num(r.beta_used) + "\n");
  } else {
    throw ConfigError("oracle.name must be poisson or barenblatt, got '" + name + "'");
  }
  finish(j, ctx);
  out.add_json("oracle.json", j);
}

void cmd_phase(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  auto ms = c.get_list("phase.m_list");
  auto ss = c.get_list("phase.s_list", {0.25});
  if (ms.empty()) throw ConfigError("phase.m_list is empty");
  if (ss.empty()) throw ConfigError("phase.s_list is empty");
  const int n = c.get_int("phase.n", 4096);
  const double R = c.get_double("phase.R", 50.0);
  const double T = c.get_double("phase.T", 1.0);
  const int ns = c.get_int("phase.snapshots", 20);
  if (n < 8 || !(R > 0.0) || !(T > 0.0) || ns < 2) throw ConfigError("bad [phase] resolution");
  SolverOptions so = solver_options(c);
  so.record_steps = false;
  PropagationOptions po = propagation_options(c);
  struct Point {
    double m, s;
    std::string cls = "inconclusive", error;
    double speed = NAN, tail = NAN;
    json report;
  };
  std::vector<Point> pts;
  for (double s : ss)
    for (double m : ms) pts.push_back({m, s, "inconclusive", "", NAN, NAN, json()});
  // the datum is built once per point from the same [initial] section
  Grid g = line_grid(R, 2.0 * R / n);
  ModelParams probe;
  probe.R = R;
  probe.s = ss.front();
  Field u0 = initial_datum(c, g, probe);
  std::vector<double> times;
  for (int k = 1; k < ns; ++k) times.push_back(T * k / ns);
  parallel_for(pts.size(), ctx.jobs, [&](size_t k) {
    Point& pt = pts[k];
    try {
      ModelParams p;
      p.m = pt.m;
      p.s = pt.s;
      p.R = R;
      auto tr = Solver(p, g, so).run(u0, T, times);
      auto rep = check_propagation(tr, po);
      pt.cls = to_string(rep.classification);
      pt.speed = rep.C_lin;
      if (rep.tail_fit) pt.tail = rep.tail_fit->exponent();
      pt.report = propagation_json(rep);
    } catch (const std::exception& e) {
      pt.cls = "inconclusive";
      pt.error = e.what();
    }
  });
  std::string csv = "m,s,classification,support_speed,tail_exponent,error\n";
  json cells = json::array();
  std::vector<svg::PhaseCell> sc;
  int inconclusive = 0;
  for (const auto& pt : pts) {
    std::string err = pt.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ' ';
    csv += csv_num(pt.m) + "," + csv_num(pt.s) + "," + pt.cls + "," +
           (std::isfinite(pt.speed) ? csv_num(pt.speed) : "") + "," +
           (std::isfinite(pt.tail) ? csv_num(pt.tail) : "") + "," + err + "\n";
    json cj = {{"m", pt.m}, {"s", pt.s}, {"classification", pt.cls},
               {"support_speed", num_or_null(pt.speed)}, {"tail_exponent", num_or_null(pt.tail)}};
    if (!pt.error.empty()) cj["error"] = pt.error;
    else cj["propagation"] = pt.report;
    cells.push_back(cj);
    sc.push_back({pt.m, pt.s, pt.cls});
    if (pt.cls == "inconclusive") ++inconclusive;
  }
  out.add("phase.csv", csv);
  out.add("phase.svg", svg::phase_strip(sc, 2.0));
  json j = header(ctx);
  j["grid"] = grid_json(g);
  j["T"] = T;
  j["cells"] = cells;
  j["inconclusive"] = inconclusive;
  finish(j, ctx);
  out.add_json("phase.json", j);
}

void cmd_integrated(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  ModelParams p = model_params(c);
  Grid g = make_grid(c, p.R);
  Field u0 = initial_datum(c, g, p);
  const double T = final_time(c);
  auto times = snapshot_times(c, T);
  IntegratedSolver sol(p, g, integrated_options(c));
  auto st = sol.from_density(u0);
  auto tr = sol.run(st.v, st.M, T, times);
  json m = header(ctx);
  m["params"] = params_json(p);
  m["grid"] = grid_json(g);
  m["M"] = st.M;
  json files = json::array();
  for (size_t k = 0; k < tr.snapshots.size(); ++k) {
    const std::string name = "snapshots/" + seq_name("v", k);
    out.add(name, field_to_csv(tr.snapshots[k].u));
    files.push_back({{"t", tr.snapshots[k].t}, {"file", name}});
  }
  m["snapshots"] = files;
  m["summary"] = {{"steps", tr.step_count}, {"rejected_steps", tr.rejected_steps}};
  out.add("snapshots.svg", profile_svg(tr.snapshots, "integrated variable", "v"));
  m["figures"] = {"snapshots.svg"};
  finish(m, ctx);
  out.add_json("manifest.json", m);
}

void cmd_cross_check(const Context& ctx, Bundle& out) {
  const Config& c = ctx.cfg;
  ModelParams p = model_params(c);
  Grid g = make_grid(c, p.R);
  const double T = final_time(c);
  auto times = snapshot_times(c, T);
  SolverOptions so = solver_options(c);
  so.record_steps = false;
  IntegratedOptions io_ = integrated_options(c);
  const bool refine = c.get_bool("integrated.refine", false);
  std::vector<double> all = times;
  all.push_back(0.0);
  all.push_back(T);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  auto one = [&](const Grid& gg) {
    Field u0 = initial_datum(c, gg, p);
    auto ut = Solver(p, gg, so).run(u0, T, times);
    IntegratedSolver is(p, gg, io_);
    auto st = is.from_density(u0);
    auto vt = is.run(st.v, st.M, T, times);
    return cross_check(ut, vt, all);
  };
  std::vector<Grid> grids{g};
  if (refine) grids.push_back(Grid::make(2 * g.n, g.h / 2, g.x_left, Topology::truncated_line));
  std::vector<CrossCheckReport> reps(grids.size());
  parallel_for(grids.size(), ctx.jobs, [&](size_t k) { reps[k] = one(grids[k]); });

  std::string csv = "n,t,distance\n";
  json runs = json::array();
  svg::Plot pl{"cumulative(u) vs v", "t", "L1 / M", false, {}};
  for (size_t k = 0; k < grids.size(); ++k) {
    json pts = json::array();
    svg::Series s{"n = " + std::to_string(grids[k].n), {}, {}, palette(k), k > 0};
    for (const auto& pt : reps[k].points) {
      csv += std::to_string(grids[k].n) + "," + csv_num(pt.t) + "," + csv_num(pt.distance) + "\n";
      pts.push_back({{"t", pt.t}, {"distance", pt.distance}});
      s.x.push_back(pt.t);
      s.y.push_back(pt.distance);
    }
    runs.push_back({{"n", grids[k].n}, {"points", pts}, {"max_distance", reps[k].max_distance}});
    pl.series.push_back(s);
  }
  out.add("cross_check.csv", csv);
  out.add("cross_check.svg", svg::line_plot(pl));
  json j = header(ctx);
  j["params"] = params_json(p);
  j["runs"] = runs;
  j["max_distance"] = reps.front().max_distance;
  if (refine) j["grows_under_refinement"] = grows_under_refinement(reps[0], reps[1]);
  finish(j, ctx);
  out.add_json("cross_check.json", j);
}

using Handler = void (*)(const Context&, Bundle&);

Handler handler(const std::string& cmd) {
  if (cmd == "run") return cmd_run;
  if (cmd == "sweep") return cmd_sweep;
  if (cmd == "barrier-upper") return cmd_barrier_upper;
  if (cmd == "barrier-lower") return cmd_barrier_lower;
  if (cmd == "oracle") return cmd_oracle;
  if (cmd == "phase-diagram") return cmd_phase;
  if (cmd == "integrated") return cmd_integrated;
  if (cmd == "cross-check") return cmd_cross_check;
  return nullptr;
}

void write_error(const std::string& dir, const std::string& command, const std::string& type,
                 const std::string& msg, int code) {
  std::cerr << "fracpme: " << msg << "\n";
  json j = {{"command", command},
            {"error", {{"type", type}, {"message", msg}, {"exit_code", code}}}};
  try {
    io::ensure_dir(dir);
    io::write_atomic(io::join(dir, "error.json"), j.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "fracpme: could not write error.json: " << e.what() << "\n";
  }
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"run",           "sweep",      "barrier-upper",
                                             "barrier-lower", "oracle",     "phase-diagram",
                                             "integrated",    "cross-check"};
  return c;
}

int execute(const Invocation& inv) {
  try {
    Handler h = handler(inv.command);
    if (!h) throw ConfigError("unknown command '" + inv.command + "'");
    if (inv.jobs < 1) throw ConfigError("--jobs must be >= 1");
    Context ctx{Config::load(inv.config_path), inv.jobs, inv.command};
    for (const auto& s : inv.overrides) ctx.cfg.set(s);
    check_keys(ctx.cfg);
    Bundle out;
    h(ctx, out);
    out.commit(inv.out_dir);
    return 0;
  } catch (const ConfigError& e) {
    write_error(inv.out_dir, inv.command, "config", e.what(), 2);
    return 2;
  } catch (const PreconditionError& e) {
    write_error(inv.out_dir, inv.command, "precondition", e.what(), 3);
    return 3;
  } catch (const NumericalError& e) {
    write_error(inv.out_dir, inv.command, "numerical", e.what(), 3);
    return 3;
  } catch (const IoError& e) {
    write_error(inv.out_dir, inv.command, "io", e.what(), 4);
    return 4;
  } catch (const std::exception& e) {
    write_error(inv.out_dir, inv.command, "internal", e.what(), 1);
    return 1;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"fractional porous medium lab"};
  Invocation inv;
  app.add_option("command", inv.command, "run | sweep | barrier-upper | barrier-lower | oracle | "
                                         "phase-diagram | integrated | cross-check")
      ->required();
  app.add_option("--config", inv.config_path, "INI config file")->required();
  app.add_option("--out", inv.out_dir, "output directory");
  app.add_option("--jobs", inv.jobs, "parallel simulations");
  app.add_option("--set", inv.overrides, "section.key=value override")->take_all();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return execute(inv);
}

}  // namespace fracpme::cli
