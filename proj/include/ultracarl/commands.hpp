#pragma once

// The seven CLI commands. Each reads a RunConfig, writes its artifacts into
// an output directory and returns whether the run passed.

#include "ultracarl/config.hpp"
#include "ultracarl/report.hpp"
#include "ultracarl/verify.hpp"

#include <sstream>

namespace ultracarl {

struct CommandResult {
  bool pass = false;
  std::string summary;
};

struct RunEnv {
  RunConfig cfg;
  std::filesystem::path out;
  Parallelism par;
};

// ---------------------------------------------------------------------------
// Shared setup.

/// Metadata lines written at the top of every artifact.
inline std::vector<std::string> metadata(const RunConfig& cfg) {
  std::vector<std::string> lines = {"ultracarl " + cfg.command, "config_hash=" + config_hash(cfg),
                                    "seed=" + std::to_string(cfg.seed)};
  std::istringstream in(canonical_config(cfg));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("command=", 0) == 0 || line.rfind("seed=", 0) == 0) continue;
    lines.push_back("param " + line);
  }
  return lines;
}

inline CsvTable make_table(const RunConfig& cfg, std::vector<std::string> header) {
  CsvTable t(std::move(header));
  for (const auto& m : metadata(cfg)) t.meta(m);
  return t;
}

inline std::string summary_header(const RunConfig& cfg) {
  std::string s;
  for (const auto& m : metadata(cfg)) s += m + "\n";
  return s + "\n";
}

/// Reference point from [carleman] p_t / p_x; defaults to t = 0 and the
/// spatial centre of the domain at t1 = 0.
inline ReferencePoint reference_point(const RunConfig& cfg) {
  const DomainModel& dom = *cfg.domain;
  ReferencePoint p;
  p.t = cfg.p_t ? *cfg.p_t : Vector::Zero(dom.sig.m());
  if (cfg.p_x) {
    p.x = *cfg.p_x;
  } else if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    p.x = ball->center_at(0.0);
  } else {
    const auto& box = std::get<Box>(dom.shape);
    p.x = 0.5 * (box.lo + box.hi);
  }
  return p;
}

inline CarlemanParams carleman_params(const RunConfig& cfg, const ReferencePoint& p, double rplus, double a) {
  const double R = cfg.R.value_or(rplus);
  CarlemanParams cp;
  if (cfg.delta) {
    cp = params_from_delta(p, a, *cfg.delta, R);
  } else {
    cp.p = p;
    cp.a = a;
    cp.R = R;
    cp.b = *cfg.b;
    cp.eps = *cfg.eps;
    cp.sigma = 0.1 * R;
    cp.mu = 0.05 * R * R;
  }
  if (cfg.mu) cp.mu = *cfg.mu;
  if (cfg.sigma) cp.sigma = *cfg.sigma;
  cp.kappa1 = cfg.kappa1;
  cp.kappa2 = cfg.kappa2;
  cp.interior_factor = cfg.interior_factor;
  return cp;
}

inline double fixed_a(const RunConfig& cfg) {
  if (cfg.a_auto) {
    throw Error(ErrorCode::config, "[carleman] a = auto is only supported by absorption and uniqueness-demo");
  }
  return *cfg.a;
}

inline GridResolution grid_resolution(const RunConfig& cfg) {
  GridResolution r;
  r.time_cells = cfg.time_cells;
  r.space_cells = cfg.space_cells;
  r.surface_cells = cfg.surface_cells;
  r.node_cap = cfg.node_cap;
  return r;
}

inline VerifyOptions verify_options(const RunEnv& env, const GridResolution& res) {
  VerifyOptions o;
  o.res = res;
  o.Cprime = env.cfg.Cprime;
  o.tmp_sign = env.cfg.tmp_sign;
  o.par = env.par;
  return o;
}

inline std::uint64_t field_seed(const RunConfig& cfg) { return cfg.field_seed.value_or(cfg.seed); }

inline std::string describe_params(const CarlemanParams& cp, double rplus) {
  std::string s = "a=" + format_double(cp.a) + " b=" + format_double(cp.b) + " eps=" + format_double(cp.eps) +
                  " R=" + format_double(cp.R) + " R+=" + format_double(rplus) + " mu=" + format_double(cp.mu) +
                  " sigma=" + format_double(cp.sigma);
  if (cp.delta) s += " delta=" + format_double(*cp.delta);
  return s;
}

// ---------------------------------------------------------------------------
// verify-boundary / verify-interior: calibrate on one suite, check a
// disjoint holdout suite at res and 2 res.

inline void term_rows(CsvTable& t, const std::string& stage, std::uint64_t seed, std::size_t member,
                      const std::string& family, const std::string& res, const std::string& variant,
                      const EstimateReport& r) {
  const EstimateTerms& x = r.terms;
  const std::vector<std::pair<const char*, double>> values = {
      {"lhs_first_order", x.lhs_first_order},
      {"lhs_zeroth", x.lhs_zeroth},
      {"bulk", x.bulk},
      {"boundary", x.boundary},
      {"boundary_gamma_eps", x.boundary_gamma_eps},
      {"interior_grad_t", x.interior_grad_t},
      {"interior_grad_x", x.interior_grad_x},
      {"interior_zeroth", x.interior_zeroth},
      {"weighted_norm", x.weighted_norm},
      {"min_first_order_integrand", x.min_first_order_integrand},
      {"lhs", r.lhs},
      {"rhs_bulk", r.rhs_bulk},
      {"rhs_boundary", r.rhs_boundary},
      {"rhs_interior_first", r.rhs_interior_first},
      {"rhs_interior_zeroth", r.rhs_interior_zeroth},
      {"rhs", r.rhs},
      {"C", r.C},
      {"Cprime", r.Cprime},
      {"margin", r.margin},
      {"log_scale", r.log_scale},
      {"pass", r.pass ? 1.0 : 0.0},
  };
  for (const auto& [name, v] : values) {
    t.row() << stage << std::to_string(seed) << member << family << res << variant << name << v;
  }
}

inline CommandResult run_verify(const RunEnv& env, EstimateKind kind) {
  const RunConfig& cfg = env.cfg;
  const DomainModel& dom = *cfg.domain;
  const bool interior = kind == EstimateKind::interior;
  const ReferencePoint p = reference_point(cfg);
  const double rplus = r_plus(dom, p);
  const CarlemanParams cp = carleman_params(cfg, p, rplus, fixed_a(cfg));
  const GridResolution res = grid_resolution(cfg);

  const EstimateContext ctx1 = make_context(dom, cp, verify_options(env, res), interior);
  const EstimateContext ctx2 = make_context(dom, cp, verify_options(env, res.doubled()), interior);

  const std::uint64_t cal_seed = field_seed(cfg);
  const std::uint64_t hold_seed = cal_seed + 1;
  const auto cal_suite = make_suite(dom, cfg.family, cfg.suite_size, cal_seed);
  const auto hold_suite = make_suite(dom, cfg.family, cfg.suite_size, hold_seed);

  std::vector<EstimateTerms> cal_terms;
  for (const auto& z : cal_suite) cal_terms.push_back(compute_terms(ctx1, z));
  std::vector<EstimateTerms> hold1, hold2;
  for (const auto& z : hold_suite) {
    hold1.push_back(compute_terms(ctx1, z));
    hold2.push_back(compute_terms(ctx2, z));
  }

  std::vector<InteriorVariant> variants = {InteriorVariant::grad_t};
  if (interior) {
    if (cfg.variant == "grad_x") variants = {InteriorVariant::grad_x};
    if (cfg.variant == "both") variants = {InteriorVariant::grad_t, InteriorVariant::grad_x};
  }

  CsvTable table = make_table(cfg, {"stage", "suite_seed", "member", "family", "resolution", "variant", "term",
                                    "value"});
  std::ostringstream sum;
  sum << summary_header(cfg);
  sum << "estimate: " << to_string(kind) << "\n";
  sum << "params: " << describe_params(cp, rplus) << "\n";
  sum << "grid: res " << ctx1.volume.nodes.size() << " nodes / " << ctx1.surface.samples.size()
      << " boundary samples; 2res " << ctx2.volume.nodes.size() << " nodes / " << ctx2.surface.samples.size()
      << " boundary samples\n";
  if (interior) sum << "W_p^eps nodes: " << ctx1.w_count << " (res), " << ctx2.w_count << " (2res)\n";
  sum << "suites: family " << cfg.family << ", " << cfg.suite_size << " fields; calibration seed " << cal_seed
      << ", holdout seed " << hold_seed << "\n\n";

  bool all_pass = true;
  for (InteriorVariant var : variants) {
    const std::string vname = interior ? to_string(var) : "none";
    const Calibration cal = calibrate(ctx1, cal_terms, kind, var);
    double C = 1.0;
    if (cfg.C) {
      C = *cfg.C;
    } else if (std::isfinite(cal.C_max)) {
      C = cfg.safety * cal.C_max;
    }
    for (std::size_t i = 0; i < cal_terms.size(); ++i) {
      term_rows(table, "calibration", cal_seed, i, cal_suite[i].family, "res", vname,
                assess(ctx1, cal_terms[i], kind, var, C));
    }
    for (const auto& [name, v] : std::vector<std::pair<const char*, double>>{
             {"C_max", cal.C_max},
             {"C_closed", cal.C_closed},
             {"bisection_iterations", static_cast<double>(cal.iterations)},
             {"limiting_member", static_cast<double>(cal.limiting)},
             {"safety", cfg.safety},
             {"C_used", C}}) {
      table.row() << "constants" << std::to_string(cal_seed) << std::size_t{0} << cfg.family << "res" << vname
                  << name << v;
    }
    bool pass1 = true, pass2 = true;
    double worst1 = kInfinity, worst2 = kInfinity;
    for (std::size_t i = 0; i < hold_suite.size(); ++i) {
      const EstimateReport r1 = assess(ctx1, hold1[i], kind, var, C);
      const EstimateReport r2 = assess(ctx2, hold2[i], kind, var, C);
      term_rows(table, "holdout", hold_seed, i, hold_suite[i].family, "res", vname, r1);
      term_rows(table, "holdout", hold_seed, i, hold_suite[i].family, "2res", vname, r2);
      pass1 = pass1 && r1.pass;
      pass2 = pass2 && r2.pass;
      if (r1.lhs > 0.0) worst1 = std::min(worst1, r1.rhs / r1.lhs);
      if (r2.lhs > 0.0) worst2 = std::min(worst2, r2.rhs / r2.lhs);
    }
    const bool ok = pass1 && pass2;
    all_pass = all_pass && ok;
    sum << "[" << vname << "]\n";
    sum << "  calibrated C_max = " << format_double(cal.C_max) << " (closed form " << format_double(cal.C_closed)
        << ", " << cal.iterations << " bisection steps, limiting member " << cal.limiting << ")\n";
    sum << "  certified C = " << format_double(C) << (cfg.C ? " (override)" : "") << ", C' = "
        << format_double(cfg.Cprime) << "\n";
    sum << "  holdout min rhs/lhs: res " << format_double(worst1) << ", 2res " << format_double(worst2) << "\n";
    sum << "  holdout pass: res " << (pass1 ? "yes" : "no") << ", 2res " << (pass2 ? "yes" : "no")
        << ", status " << (pass1 == pass2 ? "stable" : "changed") << "\n";
  }
  sum << "\nresult: " << (all_pass ? "PASS" : "FAIL") << "\n";
  table.write(env.out / "report.csv");
  write_text(env.out / "summary.txt", sum.str());
  return {all_pass, sum.str()};
}

// ---------------------------------------------------------------------------
// weight-check: derivative bound over random samples, finite differences and
// the cone scan.

/// Uniform samples of U cap D_p inside the window |t - t(p)| < R+.
inline std::vector<SpaceTimePoint> sample_exterior(const DomainModel& dom, const ReferencePoint& p, double rplus,
                                                   std::size_t count, Rng& rng) {
  const auto [lo, hi] = spatial_bounds(dom);
  const int m = dom.sig.m();
  const int n = dom.sig.n();
  std::vector<SpaceTimePoint> out;
  const std::size_t max_tries = 1000 * std::max<std::size_t>(count, 1);
  for (std::size_t tries = 0; out.size() < count && tries < max_tries; ++tries) {
    SpaceTimePoint q{Vector(m), Vector(n)};
    for (int i = 0; i < m; ++i) q.t[i] = p.t[i] + rng.uniform(-rplus, rplus);
    for (int j = 0; j < n; ++j) q.x[j] = rng.uniform(lo[j], hi[j]);
    if (!in_time_cube(dom, q.t) || !contains(dom, q)) continue;
    if (!(to_null_frame(q, p, dom.sig).f > 0.0)) continue;
    out.push_back(std::move(q));
  }
  if (out.size() < count) {
    throw Error(ErrorCode::empty_region, "could not draw " + std::to_string(count) + " samples in U cap D_p");
  }
  return out;
}

/// Relative max-norm error of grad log zeta against central differences.
inline double fd_gradient_error(const SpaceTimePoint& q, const CarlemanParams& cp, const Signature& sig,
                                double h) {
  const Vector g = grad_log_zeta(q, cp, sig);
  Vector fd(sig.dim());
  for (int i = 0; i < sig.dim(); ++i) {
    SpaceTimePoint a = q, b = q;
    if (i < sig.m()) {
      a.t[i] += h;
      b.t[i] -= h;
    } else {
      a.x[i - sig.m()] += h;
      b.x[i - sig.m()] -= h;
    }
    fd[i] = (eval_zeta(a, cp, sig).log_zeta - eval_zeta(b, cp, sig).log_zeta) / (2.0 * h);
  }
  return (g - fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff();
}

struct ConeScanRow {
  double f_over_R2 = 0.0;
  double f = 0.0;
  double ratio = 0.0;  // log zeta / (2a log f)
};

/// log zeta / (2a log f) along a ray approaching the cone from outside, with
/// r = R/2 fixed and f swept from 1e-2 R^2 down to 1e-6 R^2.
inline std::vector<ConeScanRow> cone_scan(const CarlemanParams& cp, const Signature& sig, int points = 21) {
  const double r = 0.5 * cp.R;
  Vector ex = Vector::Zero(sig.n());
  ex[0] = 1.0;
  Vector et = Vector::Zero(sig.m());
  et[0] = 1.0;
  std::vector<ConeScanRow> rows;
  for (int k = 0; k < points; ++k) {
    const double frac = std::pow(10.0, -2.0 - 4.0 * k / (points - 1));
    const double f = frac * cp.R * cp.R;
    const double tau = std::sqrt(std::max(0.0, r * r - 4.0 * f));
    const SpaceTimePoint q{cp.p.t + tau * et, cp.p.x + r * ex};
    const NullFrame fr = to_null_frame(q, cp.p, sig);
    rows.push_back({frac, fr.f, eval_zeta(fr, cp).log_zeta / (2.0 * cp.a * std::log(fr.f))});
  }
  return rows;
}

inline CommandResult run_weight_check(const RunEnv& env) {
  const RunConfig& cfg = env.cfg;
  const DomainModel& dom = *cfg.domain;
  const ReferencePoint p = reference_point(cfg);
  const double rplus = r_plus(dom, p);
  const CarlemanParams cp = carleman_params(cfg, p, rplus, fixed_a(cfg));
  require_admissible(cp, dom.sig);
  validate_domain(dom);

  Rng rng(cfg.seed);
  const auto pts = sample_exterior(dom, p, rplus, cfg.samples, rng);
  std::vector<double> ratio(pts.size());
  parallel_for(pts.size(), env.par, [&](std::size_t i) { ratio[i] = derivative_bound_ratio(pts[i], cp, dom.sig); });
  const auto worst = std::max_element(ratio.begin(), ratio.end());
  const double max_ratio = *worst;

  // Finite differences away from the cone, where the step is well resolved.
  const double h = 1e-5 * cp.R;
  double fd_max = 0.0;
  std::size_t fd_count = 0;
  for (const auto& q : pts) {
    if (fd_count >= 1000) break;
    if (to_null_frame(q, p, dom.sig).f < 1e-2 * cp.R * cp.R) continue;
    fd_max = std::max(fd_max, fd_gradient_error(q, cp, dom.sig, h));
    ++fd_count;
  }

  const auto scan = cone_scan(cp, dom.sig);
  bool scan_ok = std::abs(scan.back().ratio - 1.0) <= 0.01;
  for (std::size_t k = 1; k < scan.size(); ++k) {
    if (std::abs(scan[k].ratio - 1.0) > std::abs(scan[k - 1].ratio - 1.0) * (1.0 + 1e-12)) scan_ok = false;
  }

  const bool pass = max_ratio <= 10.0 && fd_count > 0 && fd_max <= 1e-6 && scan_ok;

  CsvTable table = make_table(cfg, {"check", "index", "quantity", "value"});
  table.row() << "derivative_bound" << std::size_t{0} << "samples" << static_cast<double>(pts.size());
  table.row() << "derivative_bound" << std::size_t{0} << "max_ratio" << max_ratio;
  table.row() << "derivative_bound" << std::size_t{0} << "argmax"
              << static_cast<double>(worst - ratio.begin());
  table.row() << "finite_difference" << std::size_t{0} << "points" << static_cast<double>(fd_count);
  table.row() << "finite_difference" << std::size_t{0} << "step" << h;
  table.row() << "finite_difference" << std::size_t{0} << "max_relative_error" << fd_max;
  for (std::size_t k = 0; k < scan.size(); ++k) {
    table.row() << "cone_scan" << k << "f_over_R2" << scan[k].f_over_R2;
    table.row() << "cone_scan" << k << "log_zeta_over_2a_log_f" << scan[k].ratio;
  }
  table.write(env.out / "report.csv");

  std::ostringstream sum;
  sum << summary_header(cfg);
  sum << "params: " << describe_params(cp, rplus) << "\n";
  sum << "derivative bound: max ratio " << format_double(max_ratio) << " over " << pts.size()
      << " samples (limit 10) at " << describe(pts[static_cast<std::size_t>(worst - ratio.begin())]) << "\n";
  sum << "finite differences: max relative error " << format_double(fd_max) << " over " << fd_count
      << " points (limit 1e-6)\n";
  sum << "cone scan: log zeta / (2a log f) = " << format_double(scan.front().ratio) << " at f = 1e-2 R^2, "
      << format_double(scan.back().ratio) << " at f = 1e-6 R^2 (limit 1%, " << (scan_ok ? "ok" : "not ok")
      << ")\n";
  sum << "\nresult: " << (pass ? "PASS" : "FAIL") << "\n";
  write_text(env.out / "summary.txt", sum.str());
  return {pass, sum.str()};
}

// ---------------------------------------------------------------------------
// regions / figures.

inline bool focus_member(const RegionRow& row, const std::string& focus) {
  if (focus == "trace") return row.trace;
  if (focus == "gamma_eps") return row.gamma_eps;
  return row.gamma;
}

inline CsvTable region_table(const RunConfig& cfg, const RegionMask& mask, const Signature& sig) {
  std::vector<std::string> header = {"slice"};
  for (int i = 0; i < sig.m(); ++i) header.push_back("t" + std::to_string(i + 1));
  for (int j = 0; j < sig.n(); ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("nu_t1");
  for (int j = 0; j < sig.n(); ++j) header.push_back("nu_x" + std::to_string(j + 1));
  for (const char* h : {"weight", "f", "normal_f", "bracket", "trace", "gamma", "gamma_eps"}) header.push_back(h);
  CsvTable t = make_table(cfg, header);
  for (std::size_t i = 0; i < mask.samples.size(); ++i) {
    const auto& s = mask.samples[i];
    const auto& r = mask.rows[i];
    auto row = t.row();
    row << s.slice;
    for (int k = 0; k < sig.m(); ++k) row << s.point.t[k];
    for (int j = 0; j < sig.n(); ++j) row << s.point.x[j];
    row << s.normal_t1;
    for (int j = 0; j < sig.n(); ++j) row << s.normal_x[j];
    row << s.weight << r.f << r.normal_f << r.bracket << r.trace << r.gamma << r.gamma_eps;
  }
  return t;
}

/// slice_k.svg files: a spread of time slices that meet D_p. n = 1 draws a
/// single (x, t) diagram; n = 3 keeps the ring of samples nearest the
/// equatorial plane through the domain centre.
inline std::vector<std::string> write_slices(const RunEnv& env, const DomainModel& dom, const CarlemanParams& cp,
                                             const RegionMask& mask) {
  const RunConfig& cfg = env.cfg;
  const int n = dom.sig.n();
  SvgStyle style;
  style.size = cfg.svg_size;
  const std::string comment = "<!-- config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed) +
                              " focus=" + cfg.focus + " -->\n";
  std::vector<std::string> files;
  auto [lo, hi] = spatial_bounds(dom);
  lo = lo.cwiseMin(cp.p.x);
  hi = hi.cwiseMax(cp.p.x);

  if (n == 1) {
    std::vector<SlicePoint> pts;
    double tlo = kInfinity, thi = -kInfinity;
    for (std::size_t i = 0; i < mask.samples.size(); ++i) {
      const auto& s = mask.samples[i];
      pts.push_back({s.point.x[0], s.point.t[0], focus_member(mask.rows[i], cfg.focus)});
      tlo = std::min(tlo, s.point.t[0]);
      thi = std::max(thi, s.point.t[0]);
    }
    const std::string svg = render_slice_svg(pts, cp.p.x[0], cp.p.t[0], 0.0, lo[0], hi[0], tlo, thi,
                                             "(x, t) plane, red = " + cfg.focus, style);
    write_text(env.out / "slice_0.svg", comment + svg);
    return {"slice_0.svg"};
  }

  std::vector<std::size_t> with_trace;
  for (std::size_t i = 0; i < mask.samples.size(); ++i) {
    if (!mask.rows[i].trace) continue;
    with_trace.push_back(mask.samples[i].slice);
  }
  std::sort(with_trace.begin(), with_trace.end());
  with_trace.erase(std::unique(with_trace.begin(), with_trace.end()), with_trace.end());
  if (with_trace.empty()) return files;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.slices), with_trace.size());

  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t slice = with_trace[(2 * k + 1) * with_trace.size() / (2 * count)];
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < mask.samples.size(); ++i) {
      if (mask.samples[i].slice == slice) members.push_back(i);
    }
    const Vector t = mask.samples[members.front()].point.t;
    if (n == 3) {
      const double mid = 0.5 * (lo[2] + hi[2]);
      double best = kInfinity;
      for (std::size_t i : members) best = std::min(best, std::abs(mask.samples[i].point.x[2] - mid));
      std::erase_if(members, [&](std::size_t i) {
        return std::abs(mask.samples[i].point.x[2] - mid) > best + 1e-9 * (1.0 + std::abs(mid));
      });
    }
    std::vector<SlicePoint> pts;
    for (std::size_t i : members) {
      const auto& x = mask.samples[i].point.x;
      pts.push_back({x[0], x[1], focus_member(mask.rows[i], cfg.focus)});
    }
    std::string title = "t = (";
    for (int i = 0; i < t.size(); ++i) title += (i ? ", " : "") + format_double(t[i]);
    title += "), red = " + cfg.focus;
    const std::string name = "slice_" + std::to_string(k) + ".svg";
    write_text(env.out / name, comment + render_slice_svg(pts, cp.p.x[0], cp.p.x[1], (t - cp.p.t).norm(), lo[0],
                                                          hi[0], lo[1], hi[1], title, style));
    files.push_back(name);
  }
  return files;
}

inline RegionMask sample_regions(const DomainModel& dom, const CarlemanParams& cp, double rplus,
                                 const RunConfig& cfg) {
  BoundaryResolution br;
  br.surface_cells = cfg.surface_cells;
  br.time_grid = window_time_grid(cp.p, rplus, cfg.time_cells);
  auto samples = sample_boundary(dom, br);
  std::erase_if(samples, [&](const BoundarySample& s) { return !in_time_cube(dom, s.point.t); });
  return classify_boundary(std::move(samples), cp);
}

inline void measure_rows(CsvTable& t, const std::string& what, const RegionMeasures& m) {
  t.row() << what << "trace" << m.trace;
  t.row() << what << "gamma" << m.gamma;
  t.row() << what << "gamma_eps" << m.gamma_eps;
  t.row() << what << "symdiff" << m.symdiff;
}

inline CommandResult run_regions(const RunEnv& env, bool figures) {
  const RunConfig& cfg = env.cfg;
  const DomainModel& dom = *cfg.domain;
  validate_domain(dom);
  const ReferencePoint p = reference_point(cfg);
  const double rplus = r_plus(dom, p);
  const CarlemanParams cp = carleman_params(cfg, p, rplus, fixed_a(cfg));

  const RegionMask mask = sample_regions(dom, cp, rplus, cfg);
  region_table(cfg, mask, dom.sig).write(env.out / "regions.csv");
  const auto svgs = write_slices(env, dom, cp, mask);

  std::size_t trace = 0, gamma = 0, geps = 0, gamma_outside_trace = 0;
  for (const auto& r : mask.rows) {
    trace += r.trace;
    gamma += r.gamma;
    geps += r.gamma_eps;
    gamma_outside_trace += r.gamma && !r.trace;
  }

  CsvTable table = make_table(cfg, {"section", "quantity", "value"});
  table.row() << "samples" << "boundary" << static_cast<double>(mask.samples.size());
  table.row() << "samples" << "trace" << static_cast<double>(trace);
  table.row() << "samples" << "gamma" << static_cast<double>(gamma);
  table.row() << "samples" << "gamma_eps" << static_cast<double>(geps);
  table.row() << "samples" << "gamma_equals_trace" << (gamma == trace ? 1.0 : 0.0);
  measure_rows(table, "sampled_measure", mask.measures);

  std::ostringstream sum;
  sum << summary_header(cfg);
  sum << "params: " << describe_params(cp, rplus) << "\n";
  sum << "boundary samples " << mask.samples.size() << ": trace " << trace << ", Gamma_p " << gamma
      << ", Gamma_p^eps " << geps << "\n";
  sum << "Gamma_p " << (gamma == trace ? "covers the whole trace" : "is a proper subset of the trace") << "\n";
  sum << "svg files: " << svgs.size() << " (red = " << cfg.focus << ")\n";

  bool pass = gamma_outside_trace == 0;
  if (!figures) {
    RefinedResolution refined;
    refined.time_slices = cfg.refine_time;
    refined.bracket_samples = cfg.refine_angle;
    refined.polar_nodes = cfg.refine_polar;
    const GridResolution sampled = grid_resolution(cfg);
    const MeasureEstimate est = region_measures(dom, cp, rplus, refined, sampled, env.par);
    measure_rows(table, est.method + "_measure", est.value);
    measure_rows(table, est.method + "_error", est.error);
    sum << "measures (" << est.method << "): trace " << format_double(est.value.trace) << ", Gamma_p "
        << format_double(est.value.gamma) << ", Gamma_p^eps " << format_double(est.value.gamma_eps)
        << ", symmetric difference " << format_double(est.value.symdiff) << " +- "
        << format_double(est.error.symdiff) << "\n";

    if (!cfg.deltas.empty()) {
      const ConvergenceTable conv = convergence_scan(dom, p, cfg.deltas, cp.a, refined, sampled, env.par);
      bool all_zero = true;
      for (std::size_t k = 0; k < conv.rows.size(); ++k) {
        const auto& r = conv.rows[k];
        const std::string sec = "convergence_" + std::to_string(k);
        table.row() << sec << "delta" << r.delta;
        table.row() << sec << "eps" << r.eps;
        table.row() << sec << "b" << r.b;
        table.row() << sec << "symdiff" << r.symdiff;
        table.row() << sec << "error" << r.error;
        table.row() << sec << "admissible" << (r.admissible ? 1.0 : 0.0);
        all_zero = all_zero && r.symdiff == 0.0;
      }
      table.row() << "convergence" << "slope" << conv.slope;
      table.row() << "convergence" << "monotone" << (conv.monotone ? 1.0 : 0.0);
      const bool conv_ok = conv.monotone && (all_zero || conv.slope >= 1.8);
      pass = pass && conv_ok;
      sum << "convergence over delta:";
      for (const auto& r : conv.rows) sum << " " << format_double(r.delta) << "->" << format_double(r.symdiff);
      sum << "\n  slope " << format_double(conv.slope) << " (need >= 1.8 unless identically 0), monotone "
          << (conv.monotone ? "yes" : "no") << (all_zero ? ", identically 0" : "") << "\n";
    }

    // Interior observation nodes, when the window fits in the time cube.
    if (dom.T > rplus + p.t.cwiseAbs().maxCoeff()) {
      const VolumeRule rule = build_volume_rule(dom, p, rplus, sampled, env.par);
      BoundaryResolution br;
      br.surface_cells = cfg.surface_cells;
      br.time_grid = rule.time_grid;
      auto samples = sample_boundary(dom, br);
      std::erase_if(samples, [&](const BoundarySample& s) { return !in_time_cube(dom, s.point.t); });
      const RegionMask on_rule = classify_boundary(std::move(samples), cp);
      const SliceIndex w_idx = index_gamma_eps(on_rule, rule.time_grid.slice_count());
      std::vector<std::string> header = {"slice"};
      for (int i = 0; i < dom.sig.m(); ++i) header.push_back("t" + std::to_string(i + 1));
      for (int j = 0; j < dom.sig.n(); ++j) header.push_back("x" + std::to_string(j + 1));
      header.push_back("f");
      CsvTable w = make_table(cfg, header);
      std::size_t w_count = 0;
      for (const auto& node : rule.nodes) {
        if (!w_eps_indicator(node, w_idx, cp.sigma)) continue;
        ++w_count;
        auto row = w.row();
        row << node.slice;
        for (int i = 0; i < dom.sig.m(); ++i) row << node.point.t[i];
        for (int j = 0; j < dom.sig.n(); ++j) row << node.point.x[j];
        row << to_null_frame(node.point, p, dom.sig).f;
      }
      w.write(env.out / "w_nodes.csv");
      table.row() << "interior" << "volume_nodes" << static_cast<double>(rule.nodes.size());
      table.row() << "interior" << "w_nodes" << static_cast<double>(w_count);
      sum << "W_p^eps: " << w_count << " of " << rule.nodes.size() << " volume nodes\n";
    }
  }
  if (gamma_outside_trace) sum << "error: " << gamma_outside_trace << " Gamma_p samples lie off the trace\n";
  sum << "\nresult: " << (pass ? "PASS" : "FAIL") << "\n";
  table.write(env.out / "report.csv");
  write_text(env.out / "summary.txt", sum.str());
  return {pass, sum.str()};
}

// ---------------------------------------------------------------------------
// absorption / uniqueness-demo.

struct AbsorptionSetup {
  ReferencePoint p;
  double rplus = 0.0;
  CoefficientSet coeffs;
  CoefficientBounds bounds;
  CarlemanParams cp;
  EstimateContext ctx;
};

inline AbsorptionSetup absorption_setup(const RunEnv& env) {
  const RunConfig& cfg = env.cfg;
  const DomainModel& dom = *cfg.domain;
  if (!cfg.delta) throw Error(ErrorCode::config, "[carleman] absorption runs need delta");
  const ReferencePoint p = reference_point(cfg);
  const double rplus = r_plus(dom, p);
  const double mu = cfg.mu.value_or(0.05 * rplus * rplus);
  Vector dir = Vector::Zero(dom.sig.dim());
  dir[dom.sig.m()] = 1.0;
  if (cfg.collar_direction) dir = *cfg.collar_direction;
  CoefficientSet coeffs = make_cone_collar_coeffs(p, dom.sig, mu, cfg.potential, cfg.collar_amplitude, dir);

  const GridResolution res = grid_resolution(cfg);
  require_temporal_clearance(dom, p, rplus);
  const CoefficientBounds bounds = coefficient_bounds(build_volume_rule(dom, p, rplus, res, env.par), coeffs);
  const double a =
      cfg.a_auto ? absorption_a(dom.sig, rplus, *cfg.delta, bounds.M0, bounds.M1, mu, cfg.separation) : *cfg.a;
  CarlemanParams cp = carleman_params(cfg, p, rplus, a);
  cp.mu = mu;
  EstimateContext ctx = make_context(dom, cp, verify_options(env, res), false);
  return {p, rplus, std::move(coeffs), bounds, cp, std::move(ctx)};
}

inline CommandResult run_absorption(const RunEnv& env) {
  const RunConfig& cfg = env.cfg;
  const AbsorptionSetup s = absorption_setup(env);
  const auto suite = make_suite(*cfg.domain, cfg.family, cfg.suite_size, field_seed(cfg));

  CsvTable table = make_table(cfg, {"member", "family", "quantity", "value"});
  std::ostringstream sum;
  sum << summary_header(cfg);
  sum << "params: " << describe_params(s.cp, s.rplus) << (cfg.a_auto ? " (a chosen automatically)" : "") << "\n";
  sum << "coefficients: " << s.coeffs.description << "; sampled bounds M0=" << format_double(s.bounds.M0)
      << " M1=" << format_double(s.bounds.M1) << "\n";
  sum << "grid: " << s.ctx.volume.nodes.size() << " nodes, log scale " << format_double(s.ctx.log_scale)
      << "\n\n";
  bool pass = true;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const AbsorptionReport r = verify_absorption(s.ctx, s.coeffs, suite[i], s.bounds);
    for (const auto& [name, v] : std::vector<std::pair<const char*, double>>{{"I0", r.I0},
                                                                             {"I1", r.I1},
                                                                             {"lhs_zeroth_scaled", r.lhs_zeroth_scaled},
                                                                             {"lhs_first_mu", r.lhs_first_mu},
                                                                             {"ratio0", r.ratio0},
                                                                             {"ratio1", r.ratio1},
                                                                             {"a", r.a},
                                                                             {"delta", r.delta},
                                                                             {"mu", r.mu},
                                                                             {"rplus", r.rplus},
                                                                             {"M0", r.M0},
                                                                             {"M1", r.M1},
                                                                             {"log_scale", r.log_scale},
                                                                             {"pass", r.pass ? 1.0 : 0.0}}) {
      table.row() << i << suite[i].family << name << v;
    }
    sum << "member " << i << " (" << suite[i].family << "): ratio0 " << format_double(r.ratio0) << ", ratio1 "
        << format_double(r.ratio1) << (r.pass ? "" : "  FAIL") << "\n";
    pass = pass && r.pass;
  }
  sum << "\nresult: " << (pass ? "PASS" : "FAIL") << "\n";
  table.write(env.out / "report.csv");
  write_text(env.out / "summary.txt", sum.str());
  return {pass, sum.str()};
}

inline CommandResult run_uniqueness(const RunEnv& env) {
  const RunConfig& cfg = env.cfg;
  const AbsorptionSetup s = absorption_setup(env);
  const ScalarField base = make_suite(*cfg.domain, cfg.family, 1, field_seed(cfg)).front();

  CsvTable table = make_table(cfg, {"k", "scale", "quantity", "value"});
  std::ostringstream sum;
  sum << summary_header(cfg);
  sum << "params: " << describe_params(s.cp, s.rplus) << (cfg.a_auto ? " (a chosen automatically)" : "") << "\n";
  sum << "base field: " << base.description << "\n\n";

  auto emit = [&](const std::string& k, double scale, const UniquenessResult& u) {
    for (const auto& [name, v] : std::vector<std::pair<const char*, double>>{
             {"weighted_norm", u.weighted_norm},
             {"bound", u.bound},
             {"residual_term", u.residual_term},
             {"boundary_term", u.boundary_term},
             {"C", u.C},
             {"certified", u.certified ? 1.0 : 0.0}}) {
      table.row() << k << scale << name << v;
    }
  };

  const UniquenessResult zero = uniqueness_bound(s.ctx, s.coeffs, zero_field(cfg.domain->sig), s.bounds);
  emit("zero", 0.0, zero);
  bool pass = zero.certified && zero.bound == 0.0 && zero.weighted_norm == 0.0;
  sum << "z = 0: weighted norm " << format_double(zero.weighted_norm) << ", bound " << format_double(zero.bound)
      << "\n";

  double prev = kInfinity, first = 0.0, last = 0.0;
  for (int k = 0; k <= cfg.k_max; ++k) {
    const double scale = std::ldexp(1.0, -k);
    const UniquenessResult u = uniqueness_bound(s.ctx, s.coeffs, scaled(base, scale), s.bounds);
    emit(std::to_string(k), scale, u);
    const bool consistent = u.certified && u.weighted_norm <= u.bound * (1.0 + 1e-12);
    const bool shrinking = u.bound < prev;
    pass = pass && consistent && shrinking;
    if (k == 0) first = u.bound;
    last = u.bound;
    prev = u.bound;
    sum << "k=" << k << ": weighted norm " << format_double(u.weighted_norm) << " <= bound "
        << format_double(u.bound) << (u.certified ? "" : "  (uncertified: " + u.reason + ")")
        << (consistent ? "" : "  FAIL") << "\n";
  }
  sum << "bound ratio last/first " << format_double(last / first) << " (z scaled by 2^-" << cfg.k_max << ")\n";
  sum << "\nresult: " << (pass ? "PASS" : "FAIL") << "\n";
  table.write(env.out / "report.csv");
  write_text(env.out / "summary.txt", sum.str());
  return {pass, sum.str()};
}

// ---------------------------------------------------------------------------

inline CommandResult run_command(const RunEnv& env) {
  std::filesystem::create_directories(env.out);
  const std::string& c = env.cfg.command;
  if (c == "verify-boundary") return run_verify(env, EstimateKind::boundary);
  if (c == "verify-interior") return run_verify(env, EstimateKind::interior);
  if (c == "weight-check") return run_weight_check(env);
  if (c == "regions") return run_regions(env, false);
  if (c == "figures") return run_regions(env, true);
  if (c == "absorption") return run_absorption(env);
  if (c == "uniqueness-demo") return run_uniqueness(env);
  throw Error(ErrorCode::config, "unknown command '" + c + "'");
}

}  // namespace ultracarl
