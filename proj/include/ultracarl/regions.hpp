#pragma once

// Observation regions on the boundary (Gamma_p, Gamma_p^eps), the interior
// neighbourhood W_p^eps, their measures, and the eps -> 0 convergence scan.

#include "ultracarl/quadrature.hpp"
#include "ultracarl/weight.hpp"

#include <array>

namespace ultracarl {

/// (1 - eps r) N f + eps f N r at a boundary sample.
inline double gamma_bracket(const BoundarySample& s, const CarlemanParams& cp) {
  const NullFrame fr = frame_from_radii((s.point.x - cp.p.x).norm(), (s.point.t - cp.p.t).norm());
  return (1.0 - cp.eps * fr.r) * normal_f(s, cp.p) + cp.eps * fr.f * normal_r(s, cp.p);
}

inline bool gamma_indicator(const BoundarySample& s, const ReferencePoint& p) {
  const double f = frame_from_radii((s.point.x - p.x).norm(), (s.point.t - p.t).norm()).f;
  return f > 0.0 && normal_f(s, p) > 0.0;
}

inline bool gamma_eps_indicator(const BoundarySample& s, const CarlemanParams& cp) {
  const double f = frame_from_radii((s.point.x - cp.p.x).norm(), (s.point.t - cp.p.t).norm()).f;
  return f > 0.0 && gamma_bracket(s, cp) > 0.0;
}

namespace detail {
inline BoundarySample sample_at(const DomainModel& dom, const SpaceTimePoint& q) {
  const Normal nu = outward_normal(dom, q);
  return {q, nu.t1, nu.x, 0.0, 0};
}
}  // namespace detail

/// Membership of a boundary point q in Gamma_p.
inline bool gamma_indicator(const DomainModel& dom, const SpaceTimePoint& q, const ReferencePoint& p) {
  check_dims(p, dom.sig, "p");
  return gamma_indicator(detail::sample_at(dom, q), p);
}

inline bool gamma_eps_indicator(const DomainModel& dom, const SpaceTimePoint& q, const CarlemanParams& cp) {
  check_dims(cp.p, dom.sig, "p");
  return gamma_eps_indicator(detail::sample_at(dom, q), cp);
}

struct RegionRow {
  double f = 0.0;
  double normal_f = 0.0;
  double bracket = 0.0;
  bool trace = false;  // on the boundary trace inside D_p
  bool gamma = false;
  bool gamma_eps = false;
};

struct RegionMeasures {
  double trace = 0.0;
  double gamma = 0.0;
  double gamma_eps = 0.0;
  double symdiff = 0.0;  // Gamma_p^eps symmetric difference Gamma_p
};

struct RegionMask {
  std::vector<BoundarySample> samples;
  std::vector<RegionRow> rows;
  RegionMeasures measures;  // sums of sample weights over members
};

inline RegionMask classify_boundary(std::vector<BoundarySample> samples, const CarlemanParams& cp) {
  RegionMask mask;
  mask.rows.resize(samples.size());
  std::vector<double> w_trace(samples.size()), w_gamma(samples.size()), w_eps(samples.size()),
      w_sym(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    RegionRow& row = mask.rows[i];
    const NullFrame fr = frame_from_radii((s.point.x - cp.p.x).norm(), (s.point.t - cp.p.t).norm());
    row.f = fr.f;
    row.trace = fr.f > 0.0;
    row.normal_f = normal_f(s, cp.p);
    if (row.trace) {
      row.bracket = (1.0 - cp.eps * fr.r) * row.normal_f + cp.eps * fr.f * normal_r(s, cp.p);
    }
    row.gamma = row.trace && row.normal_f > 0.0;
    row.gamma_eps = row.trace && row.bracket > 0.0;
    w_trace[i] = row.trace ? s.weight : 0.0;
    w_gamma[i] = row.gamma ? s.weight : 0.0;
    w_eps[i] = row.gamma_eps ? s.weight : 0.0;
    w_sym[i] = row.gamma != row.gamma_eps ? s.weight : 0.0;
  }
  mask.measures = {pairwise_sum(w_trace), pairwise_sum(w_gamma), pairwise_sum(w_eps), pairwise_sum(w_sym)};
  mask.samples = std::move(samples);
  return mask;
}

// ---------------------------------------------------------------------------
// W_p^eps: Gamma_p^eps thickened by sigma in x on each time slice.

/// Gamma_p^eps member positions grouped by time slice.
struct SliceIndex {
  std::vector<std::vector<Vector>> members;

  bool empty() const {
    return std::all_of(members.begin(), members.end(), [](const auto& v) { return v.empty(); });
  }
};

inline SliceIndex index_gamma_eps(const RegionMask& mask, std::size_t slices) {
  SliceIndex idx;
  idx.members.resize(slices);
  for (std::size_t i = 0; i < mask.samples.size(); ++i) {
    if (!mask.rows[i].gamma_eps) continue;
    const auto s = mask.samples[i].slice;
    if (s >= slices) throw Error(ErrorCode::invalid_params, "boundary sample slice outside time grid");
    idx.members[s].push_back(mask.samples[i].point.x);
  }
  return idx;
}

/// Node membership in W_p^eps by exact slice identity.
inline bool w_eps_indicator(const VolumeNode& node, const SliceIndex& idx, double sigma) {
  if (node.slice >= idx.members.size()) return false;
  const double s2 = sigma * sigma;
  for (const auto& y : idx.members[node.slice]) {
    if ((node.point.x - y).squaredNorm() < s2) return true;
  }
  return false;
}

/// Membership of an arbitrary point: q must lie in U and D_p and within sigma
/// (in x) of a Gamma_p^eps sample on the same time slice, with times matched
/// to time_tol in the max norm.
inline bool w_eps_indicator(const SpaceTimePoint& q, const CarlemanParams& cp, const DomainModel& dom,
                            const RegionMask& gamma_samples, double time_tol = 1e-12) {
  if (!contains(dom, q) || !(to_null_frame(q, cp.p, dom.sig).f > 0.0)) return false;
  for (std::size_t i = 0; i < gamma_samples.samples.size(); ++i) {
    if (!gamma_samples.rows[i].gamma_eps) continue;
    const auto& y = gamma_samples.samples[i].point;
    if ((y.t - q.t).cwiseAbs().maxCoeff() > time_tol) continue;
    if ((q.x - y.x).norm() < cp.sigma) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Refined measures for ball boundaries in n = 2, 3: per time slice the
// angular roots of f, N f and the bracket are located by bisection, and the
// surface density is integrated exactly between consecutive roots with
// Gauss-Legendre points.

struct RefinedResolution {
  int time_slices = 256;   // per time axis over t(p) +- R+
  int bracket_samples = 512;  // sign sampling in the azimuth before bisection
  int polar_nodes = 128;   // n = 3 only
};

namespace detail {

struct AngularEval {
  double f, nf, bracket;
  double density;  // rho^{n-1} sqrt(1 - s^2) without the polar sine
};

inline AngularEval eval_ball_boundary(const Ball& ball, const Vector& t, const Vector& omega,
                                      const CarlemanParams& cp) {
  const auto b = ball_boundary_point(ball, t[0], omega);
  if (!(std::abs(b.speed) < 1.0)) throw Error(ErrorCode::not_timelike, "boundary is not timelike");
  const Vector xp = b.x - cp.p.x;
  const double r = xp.norm();
  const NullFrame fr = frame_from_radii(r, (t - cp.p.t).norm());
  const double nf = 0.5 * (b.normal_x.dot(xp) - b.normal_t1 * (t[0] - cp.p.t[0]));
  const double nr = r > 0.0 ? b.normal_x.dot(xp) / r : 0.0;
  return {fr.f, nf, (1.0 - cp.eps * r) * nf + cp.eps * fr.f * nr, b.density};
}

inline constexpr std::array<double, 4> kGaussX = {-0.8611363115940526, -0.3399810435848563,
                                                  0.3399810435848563, 0.8611363115940526};
inline constexpr std::array<double, 4> kGaussW = {0.3478548451374538, 0.6521451548625461,
                                                  0.6521451548625461, 0.3478548451374538};

/// Azimuthal integral of the region indicators on one circle. omega(theta)
/// maps the azimuth to a unit vector; polar_sine scales the density.
template <class OmegaFn>
RegionMeasures circle_measures(const Ball& ball, const Vector& t, const CarlemanParams& cp, OmegaFn omega,
                               int samples) {
  auto at = [&](double th) { return eval_ball_boundary(ball, t, omega(th), cp); };
  std::vector<double> cuts{0.0};
  const double step = 2.0 * M_PI / samples;
  AngularEval prev = at(0.0);
  for (int k = 1; k <= samples; ++k) {
    const double th = k * step;
    const AngularEval cur = at(th);
    const std::array<std::pair<double, double>, 3> sign_pairs = {
        std::pair{prev.f, cur.f}, std::pair{prev.nf, cur.nf}, std::pair{prev.bracket, cur.bracket}};
    for (std::size_t which = 0; which < 3; ++which) {
      const auto [ga, gb] = sign_pairs[which];
      if ((ga > 0.0) == (gb > 0.0)) continue;
      double lo = th - step, hi = th;
      const bool lo_pos = ga > 0.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const AngularEval e = at(mid);
        const double g = which == 0 ? e.f : which == 1 ? e.nf : e.bracket;
        ((g > 0.0) == lo_pos ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev = cur;
  }
  cuts.push_back(2.0 * M_PI);
  std::sort(cuts.begin(), cuts.end());

  RegionMeasures m;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    const AngularEval mid = at(0.5 * (a + b));
    const bool trace = mid.f > 0.0;
    if (!trace) continue;
    const bool gamma = mid.nf > 0.0;
    const bool geps = mid.bracket > 0.0;
    double len = 0.0;
    for (std::size_t g = 0; g < kGaussX.size(); ++g) {
      len += kGaussW[g] * at(0.5 * (a + b) + 0.5 * (b - a) * kGaussX[g]).density;
    }
    len *= 0.5 * (b - a);
    m.trace += len;
    if (gamma) m.gamma += len;
    if (geps) m.gamma_eps += len;
    if (gamma != geps) m.symdiff += len;
  }
  return m;
}

inline void accumulate(RegionMeasures& into, const RegionMeasures& m, double w) {
  into.trace += w * m.trace;
  into.gamma += w * m.gamma;
  into.gamma_eps += w * m.gamma_eps;
  into.symdiff += w * m.symdiff;
}

}  // namespace detail

/// Region measures of a ball boundary by angular root refinement.
inline RegionMeasures refined_region_measures(const DomainModel& dom, const CarlemanParams& cp,
                                              double rplus, const RefinedResolution& res,
                                              const Parallelism& par = {}) {
  const auto* ball = std::get_if<Ball>(&dom.shape);
  const int n = dom.sig.n();
  if (!ball || (n != 2 && n != 3)) {
    throw Error(ErrorCode::unsupported_shape, "refined region measures need a ball with n = 2 or 3");
  }
  const TimeGrid grid = window_time_grid(cp.p, rplus, res.time_slices);
  const double dt = grid.cell_volume();
  const std::size_t slices = grid.slice_count();
  std::vector<RegionMeasures> per(slices);
  parallel_for(slices, par, [&](std::size_t s) {
    const Vector t = grid.node(s);
    if (!in_time_cube(dom, t)) return;
    if (n == 2) {
      per[s] = detail::circle_measures(
          *ball, t, cp, [](double th) { Vector w(2); w << std::cos(th), std::sin(th); return w; },
          res.bracket_samples);
      return;
    }
    const double dphi = M_PI / res.polar_nodes;
    for (int j = 0; j < res.polar_nodes; ++j) {
      const double phi = (j + 0.5) * dphi;
      const double sp = std::sin(phi), cp_ = std::cos(phi);
      const auto ring = detail::circle_measures(
          *ball, t, cp,
          [sp, cp_](double th) { Vector w(3); w << sp * std::cos(th), sp * std::sin(th), cp_; return w; },
          res.bracket_samples);
      detail::accumulate(per[s], ring, sp * dphi);
    }
  });
  RegionMeasures total;
  std::vector<double> c0(slices), c1(slices), c2(slices), c3(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    c0[s] = dt * per[s].trace;
    c1[s] = dt * per[s].gamma;
    c2[s] = dt * per[s].gamma_eps;
    c3[s] = dt * per[s].symdiff;
  }
  return {pairwise_sum(c0), pairwise_sum(c1), pairwise_sum(c2), pairwise_sum(c3)};
}

struct MeasureEstimate {
  RegionMeasures value;
  RegionMeasures error;  // |m(res) - m(res / 2)|
  std::string method;    // "refined" or "sampled"
};

/// Region measures with a refinement error bar. Balls in n = 2, 3 use root
/// refinement; other shapes count boundary samples.
inline MeasureEstimate region_measures(const DomainModel& dom, const CarlemanParams& cp, double rplus,
                                       const RefinedResolution& refined, const GridResolution& sampled,
                                       const Parallelism& par = {}) {
  MeasureEstimate out;
  RegionMeasures coarse;
  if (dom.is_ball() && (dom.sig.n() == 2 || dom.sig.n() == 3)) {
    out.method = "refined";
    out.value = refined_region_measures(dom, cp, rplus, refined, par);
    RefinedResolution half = refined;
    half.time_slices = std::max(2, refined.time_slices / 2);
    half.bracket_samples = std::max(8, refined.bracket_samples / 2);
    half.polar_nodes = std::max(2, refined.polar_nodes / 2);
    coarse = refined_region_measures(dom, cp, rplus, half, par);
  } else {
    out.method = "sampled";
    auto sample = [&](int tcells, int scells) {
      BoundaryResolution br;
      br.surface_cells = scells;
      br.time_grid = window_time_grid(cp.p, rplus, tcells);
      auto samples = sample_boundary(dom, br);
      std::erase_if(samples, [&](const BoundarySample& s) { return !in_time_cube(dom, s.point.t); });
      return classify_boundary(std::move(samples), cp).measures;
    };
    out.value = sample(sampled.time_cells, sampled.surface_cells);
    coarse = sample(std::max(2, sampled.time_cells / 2), std::max(1, sampled.surface_cells / 2));
  }
  out.error = {std::abs(out.value.trace - coarse.trace), std::abs(out.value.gamma - coarse.gamma),
               std::abs(out.value.gamma_eps - coarse.gamma_eps), std::abs(out.value.symdiff - coarse.symdiff)};
  return out;
}

struct ConvergenceRow {
  double delta = 0.0;
  double eps = 0.0;
  double b = 0.0;
  double symdiff = 0.0;
  double error = 0.0;
  double gamma = 0.0;
  double gamma_eps = 0.0;
  bool admissible = false;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;     // least squares slope of log symdiff vs log delta; NaN if < 2 positive rows
  bool monotone = false;  // nonincreasing within error bars
  std::string method;
};

/// Symmetric difference of Gamma_p^eps(delta) and Gamma_p for each delta, with
/// eps = delta^2 / R+ and b = delta / R+.
inline ConvergenceTable convergence_scan(const DomainModel& dom, const ReferencePoint& p,
                                         const std::vector<double>& deltas, double a,
                                         const RefinedResolution& refined, const GridResolution& sampled,
                                         const Parallelism& par = {}) {
  if (deltas.empty()) throw Error(ErrorCode::invalid_params, "delta list is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw Error(ErrorCode::invalid_params, "delta values must be positive");
    if (i && !(deltas[i] < deltas[i - 1])) throw Error(ErrorCode::invalid_params, "delta list must decrease");
  }
  const double rplus = r_plus(dom, p);
  ConvergenceTable table;
  for (double d : deltas) {
    CarlemanParams cp = params_from_delta(p, a, d, rplus);
    if (!(cp.eps * rplus < 1.0)) {
      throw Error(ErrorCode::invalid_params, "delta=" + std::to_string(d) + " gives eps R+ >= 1");
    }
    const auto est = region_measures(dom, cp, rplus, refined, sampled, par);
    table.method = est.method;
    table.rows.push_back({d, cp.eps, cp.b, est.value.symdiff, est.error.symdiff, est.value.gamma,
                          est.value.gamma_eps, validate(cp, dom.sig).empty()});
  }
  table.monotone = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& prev = table.rows[i - 1];
    const auto& cur = table.rows[i];
    if (cur.symdiff > prev.symdiff + cur.error + prev.error) table.monotone = false;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (const auto& row : table.rows) {
    if (!(row.symdiff > 0.0)) continue;
    const double x = std::log(row.delta), y = std::log(row.symdiff);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  table.slope = k >= 2 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();
  return table;
}

}  // namespace ultracarl
