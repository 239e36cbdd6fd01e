#pragma once

// Both sides of the boundary and interior Carleman estimates, calibration of
// the constant C with holdout checking, and the absorption chain behind the
// uniqueness argument.

#include "ultracarl/fields.hpp"
#include "ultracarl/regions.hpp"

namespace ultracarl {

enum class EstimateKind { boundary, interior };
enum class InteriorVariant { grad_t, grad_x };

inline const char* to_string(EstimateKind k) { return k == EstimateKind::boundary ? "boundary" : "interior"; }
inline const char* to_string(InteriorVariant v) { return v == InteriorVariant::grad_t ? "grad_t" : "grad_x"; }

struct VerifyOptions {
  GridResolution res;
  double Cprime = 1.0;
  double tmp_sign = 1.0;     // sign of the f q_tmp term on the left side
  double zero_tol = 1e-12;   // boundary-vanishing precheck
  Parallelism par;
};

/// Geometry, weights and region flags shared by every field evaluated on one
/// rule. Weights are stored as zeta * exp(-log_scale).
struct EstimateContext {
  DomainModel dom;
  CarlemanParams cp;
  VerifyOptions opts;
  bool interior = false;
  double rplus = 0.0;
  VolumeRule volume;
  SurfaceRule surface;
  std::vector<NullFrame> node_frame;
  std::vector<double> node_weight;
  std::vector<NullFrame> sample_frame;
  std::vector<double> sample_weight;
  std::vector<double> sample_bracket;
  std::vector<char> in_w;  // interior observation region flags per volume node
  std::size_t w_count = 0;
  double log_scale = 0.0;
};

/// Factor pulled out of every weight when zeta would over- or underflow.
inline double choose_log_scale(double max_log_zeta) {
  return std::abs(max_log_zeta) > 500.0 ? max_log_zeta : 0.0;
}

inline EstimateContext make_context(const DomainModel& dom, const CarlemanParams& cp,
                                    const VerifyOptions& opts, bool interior) {
  validate_domain(dom);
  check_dims(cp.p, dom.sig, "p");
  require_admissible(cp, dom.sig, interior);
  EstimateContext ctx{dom, cp, opts, interior, 0.0, {}, {}, {}, {}, {}, {}, {}, {}, 0, 0.0};
  ctx.rplus = r_plus(dom, cp.p);
  if (cp.R < ctx.rplus * (1.0 - 1e-12)) {
    throw Error(ErrorCode::invalid_params,
                "R=" + std::to_string(cp.R) + " is below R+=" + std::to_string(ctx.rplus));
  }
  require_temporal_clearance(dom, cp.p, ctx.rplus);
  ctx.volume = build_volume_rule(dom, cp.p, ctx.rplus, opts.res, opts.par);
  ctx.surface = build_surface_rule(dom, cp.p, ctx.volume, opts.res.surface_cells);

  const auto& nodes = ctx.volume.nodes;
  ctx.node_frame.resize(nodes.size());
  std::vector<double> node_log(nodes.size());
  parallel_for(nodes.size(), opts.par, [&](std::size_t i) {
    ctx.node_frame[i] = to_null_frame(nodes[i].point, cp.p, dom.sig);
    node_log[i] = eval_zeta(ctx.node_frame[i], cp).log_zeta;
  });
  const auto& samples = ctx.surface.samples;
  ctx.sample_frame.resize(samples.size());
  ctx.sample_bracket.resize(samples.size());
  std::vector<double> sample_log(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ctx.sample_frame[i] = to_null_frame(samples[i].point, cp.p, dom.sig);
    sample_log[i] = eval_zeta(ctx.sample_frame[i], cp).log_zeta;
    ctx.sample_bracket[i] = gamma_bracket(samples[i], cp);
  }
  double max_log = -kInfinity;
  for (double v : node_log) max_log = std::max(max_log, v);
  for (double v : sample_log) max_log = std::max(max_log, v);
  ctx.log_scale = choose_log_scale(max_log);
  ctx.node_weight.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) ctx.node_weight[i] = std::exp(node_log[i] - ctx.log_scale);
  ctx.sample_weight.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) ctx.sample_weight[i] = std::exp(sample_log[i] - ctx.log_scale);

  if (interior) {
    const RegionMask mask = classify_boundary(ctx.surface.samples, cp);
    const SliceIndex idx = index_gamma_eps(mask, ctx.volume.time_grid.slice_count());
    ctx.in_w.resize(nodes.size());
    parallel_for(nodes.size(), opts.par, [&](std::size_t i) {
      ctx.in_w[i] = w_eps_indicator(nodes[i], idx, cp.sigma) ? 1 : 0;
    });
    ctx.w_count = static_cast<std::size_t>(std::count(ctx.in_w.begin(), ctx.in_w.end(), 1));
    if (ctx.w_count == 0) throw Error(ErrorCode::empty_region, "no observation nodes in W_p^eps");
  }
  return ctx;
}

/// Raw integrals for one field, before the a, b, eps, R prefactors.
struct EstimateTerms {
  double lhs_first_order = 0.0;  // int zeta r^-1 (|u d_u z|^2 + |v d_v z|^2 + f q_sph + f q_tmp)
  double lhs_zeroth = 0.0;       // int zeta f^-1/2 z^2
  double bulk = 0.0;             // int zeta f |box z|^2
  double boundary = 0.0;         // int over the trace of zeta bracket |N z|^2
  double boundary_gamma_eps = 0.0;  // same, restricted to Gamma_p^eps
  double interior_grad_t = 0.0;  // int_W zeta f^-1 |grad_t z|^2
  double interior_grad_x = 0.0;  // int_W zeta f^-1 |grad_x z|^2
  double interior_zeroth = 0.0;  // int_W zeta f^-3 z^2
  double weighted_norm = 0.0;    // int zeta z^2
  double min_first_order_integrand = 0.0;
  std::string field;
};

namespace detail {
inline constexpr std::size_t kVolumeTerms = 7;
}

/// The boundary term's normal derivative N z = nu^t1 d_t1 z + nu^x . grad_x z.
inline double normal_derivative(const BoundarySample& s, const Jet& z, int m) {
  return s.normal_t1 * z.grad[0] + s.normal_x.dot(z.grad.tail(z.grad.size() - m));
}

inline void require_boundary_vanishing(const EstimateContext& ctx, const ScalarField& z) {
  double worst = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < ctx.surface.samples.size(); ++i) {
    const double v = std::abs(z(ctx.surface.samples[i].point).value);
    if (v > worst) {
      worst = v;
      at = i;
    }
  }
  if (worst > ctx.opts.zero_tol) {
    throw Error(ErrorCode::boundary_nonvanishing,
                "field '" + z.description + "' has |z| = " + std::to_string(worst) + " at boundary point " +
                    describe(ctx.surface.samples[at].point));
  }
}

inline EstimateTerms compute_terms(const EstimateContext& ctx, const ScalarField& z) {
  require_boundary_vanishing(ctx, z);
  const Signature& sig = ctx.dom.sig;
  const int m = sig.m();
  const int n = sig.n();
  const auto& nodes = ctx.volume.nodes;
  std::vector<double> min_first(nodes.size(), 0.0);

  // Index-aligned view so integrate_many can reach the context arrays.
  struct Item {
    std::size_t index;
    const SpaceTimePoint& point;
    double weight;
  };
  std::vector<Item> items;
  items.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) items.push_back({i, nodes[i].point, nodes[i].weight});

  const auto vol = integrate_many(
      items, detail::kVolumeTerms,
      [&](const Item& it, std::span<double> out) {
        const NullFrame& fr = ctx.node_frame[it.index];
        const double w = ctx.node_weight[it.index];
        const Jet j = z(it.point);
        const Vector gt = j.grad.head(m);
        const Vector gx = j.grad.tail(n);
        const GradientSplit s = split_gradient(gt, gx, it.point, ctx.cp.p, sig);
        const double first = fr.u * fr.u * s.du * s.du + fr.v * fr.v * s.dv * s.dv + fr.f * s.q_sph +
                             ctx.opts.tmp_sign * fr.f * s.q_tmp;
        min_first[it.index] = first;
        const double box = box_op(j, sig);
        const double z2 = j.value * j.value;
        out[0] = w * first / fr.r;
        out[1] = w * z2 / std::sqrt(fr.f);
        out[2] = w * fr.f * box * box;
        const bool in_w = ctx.interior && ctx.in_w[it.index];
        out[3] = in_w ? w * gt.squaredNorm() / fr.f : 0.0;
        out[4] = in_w ? w * gx.squaredNorm() / fr.f : 0.0;
        out[5] = in_w ? w * z2 / (fr.f * fr.f * fr.f) : 0.0;
        out[6] = w * z2;
      },
      ctx.opts.par);

  const auto& samples = ctx.surface.samples;
  std::vector<double> full(samples.size()), restricted(samples.size());
  parallel_for(samples.size(), ctx.opts.par, [&](std::size_t i) {
    const double nz = normal_derivative(samples[i], z(samples[i].point), m);
    const double v = samples[i].weight * ctx.sample_weight[i] * ctx.sample_bracket[i] * nz * nz;
    detail::require_finite(v, i, samples[i].point);
    full[i] = v;
    restricted[i] = ctx.sample_bracket[i] > 0.0 ? v : 0.0;
  });

  EstimateTerms t;
  t.field = z.description;
  t.lhs_first_order = vol[0];
  t.lhs_zeroth = vol[1];
  t.bulk = vol[2];
  t.interior_grad_t = vol[3];
  t.interior_grad_x = vol[4];
  t.interior_zeroth = vol[5];
  t.weighted_norm = vol[6];
  t.boundary = pairwise_sum(full);
  t.boundary_gamma_eps = pairwise_sum(restricted);
  t.min_first_order_integrand =
      min_first.empty() ? 0.0 : *std::min_element(min_first.begin(), min_first.end());
  return t;
}

struct EstimateReport {
  EstimateKind kind = EstimateKind::boundary;
  InteriorVariant variant = InteriorVariant::grad_t;
  EstimateTerms terms;
  double lhs = 0.0;  // eps * lhs_first_order + b a^2 * lhs_zeroth (without C)
  double rhs_bulk = 0.0;      // bulk / a
  double rhs_boundary = 0.0;  // C' * boundary
  double rhs_interior_first = 0.0;   // a R^2 * interior gradient term
  double rhs_interior_zeroth = 0.0;  // a^4 R^4 * interior_zeroth
  double rhs = 0.0;
  double C = 0.0;
  double Cprime = 1.0;
  double margin = 0.0;
  bool pass = false;
  double log_scale = 0.0;
};

inline EstimateReport assess(const EstimateContext& ctx, const EstimateTerms& t, EstimateKind kind,
                             InteriorVariant variant, double C) {
  const auto& cp = ctx.cp;
  EstimateReport r;
  r.kind = kind;
  r.variant = variant;
  r.terms = t;
  r.C = C;
  r.Cprime = ctx.opts.Cprime;
  r.log_scale = ctx.log_scale;
  r.lhs = cp.eps * t.lhs_first_order + cp.b * cp.a * cp.a * t.lhs_zeroth;
  r.rhs_bulk = t.bulk / cp.a;
  if (kind == EstimateKind::boundary) {
    r.rhs_boundary = ctx.opts.Cprime * t.boundary;
    r.rhs = r.rhs_bulk + r.rhs_boundary;
  } else {
    const double grad = variant == InteriorVariant::grad_t ? t.interior_grad_t : t.interior_grad_x;
    r.rhs_interior_first = cp.a * cp.R * cp.R * grad;
    r.rhs_interior_zeroth = std::pow(cp.a * cp.R, 4.0) * t.interior_zeroth;
    r.rhs = r.rhs_bulk + r.rhs_interior_first + r.rhs_interior_zeroth;
  }
  r.margin = r.rhs - C * r.lhs;
  r.pass = r.margin >= 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Calibration.

struct Calibration {
  double C_max = kInfinity;    // largest C with margin >= 0 on every suite member
  double C_closed = kInfinity; // min over members of rhs / lhs, as a cross-check
  int iterations = 0;
  std::size_t limiting = 0;    // suite index attaining the minimum
};

inline Calibration calibrate(const EstimateContext& ctx, const std::vector<EstimateTerms>& suite,
                             EstimateKind kind, InteriorVariant variant = InteriorVariant::grad_t) {
  Calibration cal;
  std::vector<EstimateReport> base;
  for (const auto& t : suite) base.push_back(assess(ctx, t, kind, variant, 0.0));
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].lhs > 0.0) {
      const double ratio = base[i].rhs / base[i].lhs;
      if (ratio < cal.C_closed) {
        cal.C_closed = ratio;
        cal.limiting = i;
      }
    }
  }
  auto all_pass = [&](double C) {
    return std::all_of(base.begin(), base.end(), [C](const EstimateReport& r) { return r.rhs - C * r.lhs >= 0.0; });
  };
  if (!all_pass(0.0) || !(cal.C_closed > 0.0)) {
    throw Error(ErrorCode::calibration_failure,
                "no positive C satisfies the estimate on the suite (member " + std::to_string(cal.limiting) +
                    "); the right side must dominate for small C");
  }
  if (!std::isfinite(cal.C_closed)) return cal;  // every lhs is zero

  // Bisection in log C.
  double lo = cal.C_closed, hi = cal.C_closed;
  while (!all_pass(lo)) lo *= 0.5;
  while (all_pass(hi)) hi *= 2.0;
  for (; cal.iterations < 200 && hi / lo > 1.0 + 1e-15; ++cal.iterations) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (all_pass(mid) ? lo : hi) = mid;
  }
  cal.C_max = lo;
  return cal;
}

// ---------------------------------------------------------------------------
// Absorption chain and the quantitative uniqueness bound.

struct AbsorptionReport {
  double I0 = 0.0;  // (2/a) int zeta f |V z|^2
  double I1 = 0.0;  // (2/a) int zeta f |X . grad z|^2
  double lhs_zeroth_scaled = 0.0;  // (delta a^2 / R+^2) int zeta z^2
  double lhs_first_mu = 0.0;       // (mu delta^2 / R+^3) int over f > mu of zeta (-u du^2 + v dv^2 + v q_sph + v q_tmp)
  double ratio0 = kInfinity;       // lhs_zeroth_scaled / I0
  double ratio1 = kInfinity;       // lhs_first_mu / I1
  double M0 = 0.0;
  double M1 = 0.0;
  double a = 0.0;
  double delta = 0.0;
  double mu = 0.0;
  double rplus = 0.0;
  double log_scale = 0.0;
  bool pass = false;
};

struct CoefficientBounds {
  double M0 = 0.0;
  double M1 = 0.0;
};

/// Sampled sup |V| and sup |X| over the rule's nodes, inflated by 5%.
inline CoefficientBounds coefficient_bounds(const VolumeRule& rule, const CoefficientSet& c) {
  CoefficientBounds b;
  for (const auto& node : rule.nodes) {
    if (c.V) b.M0 = std::max(b.M0, std::abs(c.V(node.point)));
    if (c.X) b.M1 = std::max(b.M1, c.X(node.point).norm());
  }
  b.M0 *= 1.05;
  b.M1 *= 1.05;
  return b;
}

/// Throws collar_violation when X is nonzero on any node with f_p <= mu.
inline void require_collar(const EstimateContext& ctx, const CoefficientSet& c) {
  if (!c.X) return;
  std::size_t bad = 0;
  std::string first;
  for (std::size_t i = 0; i < ctx.volume.nodes.size(); ++i) {
    if (ctx.node_frame[i].f > c.mu) continue;
    if (c.X(ctx.volume.nodes[i].point).cwiseAbs().maxCoeff() != 0.0) {
      if (bad++ < 5) first += " " + describe(ctx.volume.nodes[i].point);
    }
  }
  if (bad) {
    throw Error(ErrorCode::collar_violation,
                std::to_string(bad) + " nodes with f_p <= mu have X != 0, e.g." + first);
  }
}

inline AbsorptionReport verify_absorption(const EstimateContext& ctx, const CoefficientSet& c,
                                          const ScalarField& z, const CoefficientBounds& bounds) {
  require_collar(ctx, c);
  require_boundary_vanishing(ctx, z);
  const auto& cp = ctx.cp;
  if (!cp.delta) throw Error(ErrorCode::invalid_params, "absorption needs delta");
  const double delta = *cp.delta;
  const double R = ctx.rplus;
  const Signature& sig = ctx.dom.sig;
  const int m = sig.m();
  const int n = sig.n();
  struct Item {
    std::size_t index;
    const SpaceTimePoint& point;
    double weight;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < ctx.volume.nodes.size(); ++i) {
    items.push_back({i, ctx.volume.nodes[i].point, ctx.volume.nodes[i].weight});
  }
  const auto vals = integrate_many(
      items, 4,
      [&](const Item& it, std::span<double> out) {
        const NullFrame& fr = ctx.node_frame[it.index];
        const double w = ctx.node_weight[it.index];
        const Jet j = z(it.point);
        const double V = c.V ? c.V(it.point) : 0.0;
        const double xz = c.X ? c.X(it.point).dot(j.grad) : 0.0;
        out[0] = w * fr.f * V * V * j.value * j.value;
        out[1] = w * fr.f * xz * xz;
        out[2] = w * j.value * j.value;
        out[3] = 0.0;
        if (fr.f > c.mu) {
          const GradientSplit s = split_gradient(j.grad.head(m), j.grad.tail(n), it.point, cp.p, sig);
          out[3] = w * (-fr.u * s.du * s.du + fr.v * s.dv * s.dv + fr.v * s.q_sph +
                        ctx.opts.tmp_sign * fr.v * s.q_tmp);
        }
      },
      ctx.opts.par);
  AbsorptionReport r;
  r.I0 = 2.0 / cp.a * vals[0];
  r.I1 = 2.0 / cp.a * vals[1];
  r.lhs_zeroth_scaled = delta * cp.a * cp.a / (R * R) * vals[2];
  r.lhs_first_mu = c.mu * delta * delta / (R * R * R) * vals[3];
  r.ratio0 = r.I0 > 0.0 ? r.lhs_zeroth_scaled / r.I0 : kInfinity;
  r.ratio1 = r.I1 > 0.0 ? r.lhs_first_mu / r.I1 : kInfinity;
  r.M0 = bounds.M0;
  r.M1 = bounds.M1;
  r.a = cp.a;
  r.delta = delta;
  r.mu = c.mu;
  r.rplus = R;
  r.log_scale = ctx.log_scale;
  r.pass = r.ratio0 >= 1.0 && r.ratio1 >= 1.0;
  return r;
}

struct UniquenessResult {
  double weighted_norm = 0.0;  // int zeta z^2
  double bound = kInfinity;
  double residual_term = 0.0;  // (2/a) int zeta f |F|^2, F the full-operator residual
  double boundary_term = 0.0;  // C' int over Gamma_p^eps of zeta bracket |N z|^2
  double C = 0.0;
  bool certified = false;      // the absorption conditions held, so bound is finite
  std::string reason;
};

/// Bound on int zeta z^2 from the Carleman estimate with constant C:
///   |box z|^2 <= 2|F|^2 + 4|X.grad z|^2 + 4|V z|^2 with F = box z + X.grad z + V z,  b a^2 int zeta f^-1/2 z^2 >= 2 (delta a^2 / R+^2) int zeta z^2,
/// so when C eps L1 >= 2 I1 and C > 1/ratio0,
///   int zeta z^2 <= (I_F + C' B) / (2 (delta a^2 / R+^2) (C - 1/ratio0)).
/// C defaults to the largest constant for which the estimate holds for z on this rule.
inline UniquenessResult uniqueness_bound(const EstimateContext& ctx, const CoefficientSet& c,
                                         const ScalarField& z, const CoefficientBounds& bounds,
                                         std::optional<double> C = std::nullopt) {
  const auto& cp = ctx.cp;
  const EstimateTerms t = compute_terms(ctx, z);
  const AbsorptionReport ab = verify_absorption(ctx, c, z, bounds);
  UniquenessResult u;
  u.weighted_norm = t.weighted_norm;
  u.residual_term = 2.0 / cp.a * integrate(ctx.volume, [&](const VolumeNode& node) {
                      const std::size_t i = static_cast<std::size_t>(&node - ctx.volume.nodes.data());
                      const double F = full_op(z, c, node.point, ctx.dom.sig);
                      return ctx.node_weight[i] * ctx.node_frame[i].f * F * F;
                    }, ctx.opts.par);
  u.boundary_term = ctx.opts.Cprime * t.boundary_gamma_eps;
  const EstimateReport est = assess(ctx, t, EstimateKind::boundary, InteriorVariant::grad_t, 0.0);
  const double C_field = est.lhs > 0.0 ? est.rhs / est.lhs : kInfinity;
  u.C = C ? *C : C_field;
  if (t.weighted_norm == 0.0 && u.residual_term == 0.0 && u.boundary_term == 0.0) {
    u.bound = 0.0;
    u.certified = true;
    return u;
  }
  if (!std::isfinite(u.C)) {
    u.reason = "left side vanishes; no constant to use";
    return u;
  }
  if (u.C > C_field) {
    u.reason = "the estimate itself fails for this field at C";
    return u;
  }
  if (!(u.C * cp.eps * t.lhs_first_order >= 2.0 * ab.I1)) {
    u.reason = "first-order term does not absorb I1 at this C";
    return u;
  }
  if (!(u.C * ab.ratio0 > 1.0)) {
    u.reason = "zeroth-order term does not absorb I0 at this C";
    return u;
  }
  const double scale = *cp.delta * cp.a * cp.a / (ctx.rplus * ctx.rplus);
  const double c0 = ab.I0 > 0.0 ? u.C - 1.0 / ab.ratio0 : u.C;
  u.bound = (u.residual_term + u.boundary_term) / (2.0 * scale * c0);
  u.certified = true;
  return u;
}

}  // namespace ultracarl
