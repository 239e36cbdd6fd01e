#pragma once

// The Carleman weight
//   zeta = { f / D * exp(2 b sqrt(f / D)) }^{2a},   D = 1 - eps r + eps^2 f,
// evaluated in log space, with its gradient and parameter admissibility.

#include "ultracarl/geometry.hpp"

#include <optional>

namespace ultracarl {

struct CarlemanParams {
  ReferencePoint p;
  double a = 0.0;
  double b = 0.0;
  double eps = 0.0;
  double R = 1.0;
  std::optional<double> delta;
  double mu = 0.0;
  double sigma = 0.1;
  // Separation factors standing in for the "much less than" relations.
  double kappa1 = 0.1;  // eps <= kappa1 * b
  double kappa2 = 0.1;  // b <= kappa2 / R
  double interior_factor = 10.0;  // a >= interior_factor * R for the interior estimate
};

/// Fills eps = delta^2 / R and b = delta / R.
inline CarlemanParams params_from_delta(ReferencePoint p, double a, double delta, double R) {
  CarlemanParams cp;
  cp.p = std::move(p);
  cp.a = a;
  cp.R = R;
  cp.delta = delta;
  cp.eps = delta * delta / R;
  cp.b = delta / R;
  cp.sigma = 0.1 * R;
  cp.mu = 0.05 * R * R;
  return cp;
}

namespace detail {
// Comparisons at the edge of the regime (a = (m+n)^2, eps = kappa1 b) must
// not fail because of the rounding in delta^2 / R.
inline bool at_most(double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-12) + 1e-300; }
}  // namespace detail

/// Violated admissibility conditions; empty when admissible.
inline std::vector<std::string> validate(const CarlemanParams& cp, const Signature& sig,
                                         bool interior = false) {
  std::vector<std::string> out;
  const double amin = static_cast<double>(sig.dim() * sig.dim());
  if (cp.p.t.size() != sig.m() || cp.p.x.size() != sig.n()) out.push_back("p dimensions match signature");
  if (!std::isfinite(cp.a) || !std::isfinite(cp.b) || !std::isfinite(cp.eps) || !std::isfinite(cp.R)) {
    out.push_back("parameters finite");
    return out;
  }
  if (!(cp.a >= amin)) out.push_back("a >= " + std::to_string(static_cast<int>(amin)));
  if (!(cp.R > 0.0)) out.push_back("R > 0");
  if (!(cp.b > 0.0)) out.push_back("b > 0");
  if (!(cp.eps >= 0.0)) out.push_back("eps >= 0");
  if (!detail::at_most(cp.eps, cp.kappa1 * cp.b)) out.push_back("eps <= kappa1 * b");
  if (cp.R > 0.0 && !detail::at_most(cp.b, cp.kappa2 / cp.R)) out.push_back("b <= kappa2 / R");
  if (cp.delta) {
    const double d = *cp.delta;
    if (!(d > 0.0)) out.push_back("delta > 0");
    if (std::abs(cp.eps - d * d / cp.R) > 1e-14 * std::max(1.0, cp.eps)) out.push_back("eps = delta^2 / R");
    if (std::abs(cp.b - d / cp.R) > 1e-14 * std::max(1.0, cp.b)) out.push_back("b = delta / R");
  }
  if (!(cp.mu >= 0.0)) out.push_back("mu >= 0");
  if (!(cp.sigma > 0.0)) out.push_back("sigma > 0");
  if (interior && !(cp.a >= cp.interior_factor * cp.R)) {
    out.push_back("a >= " + format_double(cp.interior_factor) + " * R");
  }
  return out;
}

inline void require_admissible(const CarlemanParams& cp, const Signature& sig, bool interior = false) {
  const auto v = validate(cp, sig, interior);
  if (v.empty()) return;
  std::string msg = "inadmissible Carleman parameters, violated:";
  for (const auto& s : v) msg += " [" + s + "]";
  throw Error(ErrorCode::invalid_params, msg);
}

struct WeightValue {
  double log_zeta = -kInfinity;
  double zeta = 0.0;
  double base = 0.0;  // the bracket before the 2a power
};

/// D = 1 - eps r + eps^2 f.
inline double weight_denominator(const NullFrame& fr, double eps) {
  return 1.0 - eps * fr.r + eps * eps * fr.f;
}

/// (1 + eps u)(1 - eps v); equals weight_denominator analytically.
inline double weight_denominator_product(const NullFrame& fr, double eps) {
  return (1.0 + eps * fr.u) * (1.0 - eps * fr.v);
}

/// log of the bracket for a frame with f > 0.
inline double log_weight_base(const NullFrame& fr, const CarlemanParams& cp) {
  const double D = weight_denominator(fr, cp.eps);
  if (!(D > 0.0)) {
    throw Error(ErrorCode::invalid_params,
                "weight denominator nonpositive (1 - eps r + eps^2 f = " + std::to_string(D) + ")");
  }
  const double ratio = fr.f / D;
  return std::log(fr.f) - std::log(D) + 2.0 * cp.b * std::sqrt(ratio);
}

inline WeightValue eval_zeta(const NullFrame& fr, const CarlemanParams& cp) {
  WeightValue w;
  if (!(fr.f > 0.0)) return w;  // zeta vanishes on and inside the cone
  const double lb = log_weight_base(fr, cp);
  w.base = std::exp(lb);
  w.log_zeta = 2.0 * cp.a * lb;
  w.zeta = std::exp(w.log_zeta);
  return w;
}

inline WeightValue eval_zeta(const SpaceTimePoint& q, const CarlemanParams& cp, const Signature& sig) {
  return eval_zeta(to_null_frame(q, cp.p, sig), cp);
}

/// Cartesian gradient of log zeta in stacked (t, x) order.
inline Vector grad_log_zeta(const SpaceTimePoint& q, const CarlemanParams& cp, const Signature& sig) {
  const NullFrame fr = to_null_frame(q, cp.p, sig);
  if (!(fr.f > 0.0)) {
    throw Error(ErrorCode::degenerate_frame, "gradient undefined on cone at " + describe(q));
  }
  const int m = sig.m();
  const int n = sig.n();
  const Vector tp = q.t - cp.p.t;
  const Vector xp = q.x - cp.p.x;

  Vector df(m + n), dr = Vector::Zero(m + n);
  df << -0.5 * tp, 0.5 * xp;
  dr.tail(n) = xp / fr.r;

  const double D = weight_denominator(fr, cp.eps);
  if (!(D > 0.0)) {
    throw Error(ErrorCode::invalid_params,
                "weight denominator nonpositive (1 - eps r + eps^2 f = " + std::to_string(D) + ")");
  }
  const Vector dD = -cp.eps * dr + cp.eps * cp.eps * df;
  const double ratio = fr.f / D;
  const Vector dratio = (df * D - fr.f * dD) / (D * D);
  // d log(f/D) + d(2b sqrt(f/D)).
  return 2.0 * cp.a * (df / fr.f - dD / D + (cp.b / std::sqrt(ratio)) * dratio);
}

inline Vector grad_zeta(const SpaceTimePoint& q, const CarlemanParams& cp, const Signature& sig) {
  return eval_zeta(q, cp, sig).zeta * grad_log_zeta(q, cp, sig);
}

/// max_alpha |d_alpha zeta| * f / (a R zeta), computed without forming zeta.
inline double derivative_bound_ratio(const SpaceTimePoint& q, const CarlemanParams& cp,
                                     const Signature& sig) {
  const Vector g = grad_log_zeta(q, cp, sig);
  const double f = to_null_frame(q, cp.p, sig).f;
  return g.cwiseAbs().maxCoeff() * f / (cp.a * cp.R);
}

/// a = s * max{(m+n)^2, R+, delta^{-1/3} M0^{2/3} R+^{4/3}, mu^{-1} delta^{-2} M1^2 R+^4}.
inline double absorption_a(const Signature& sig, double rplus, double delta, double M0, double M1,
                           double mu, double separation = 10.0) {
  if (!(delta > 0.0) || !(rplus > 0.0) || !(mu > 0.0)) {
    throw Error(ErrorCode::invalid_params, "absorption_a needs delta, R+, mu > 0");
  }
  double m = static_cast<double>(sig.dim() * sig.dim());
  m = std::max(m, rplus);
  m = std::max(m, std::cbrt(M0 * M0 / delta) * std::pow(rplus, 4.0 / 3.0));
  m = std::max(m, M1 * M1 * std::pow(rplus, 4.0) / (mu * delta * delta));
  return separation * m;
}

}  // namespace ultracarl
