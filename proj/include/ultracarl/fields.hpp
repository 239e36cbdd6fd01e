#pragma once

// Analytic test fields with exact first and second derivatives, lower-order
// coefficients with a cone collar, and the ultrahyperbolic operator.

#include "ultracarl/domain.hpp"

#include <functional>
#include <memory>

namespace ultracarl {

/// Value, gradient and Hessian in stacked (t, x) coordinates.
struct Jet {
  double value = 0.0;
  Vector grad;
  Matrix hess;

  static Jet zero(int dim) { return {0.0, Vector::Zero(dim), Matrix::Zero(dim, dim)}; }
  static Jet constant(double c, int dim) { return {c, Vector::Zero(dim), Matrix::Zero(dim, dim)}; }
};

inline Jet operator+(const Jet& a, const Jet& b) { return {a.value + b.value, a.grad + b.grad, a.hess + b.hess}; }
inline Jet operator*(double s, const Jet& a) { return {s * a.value, s * a.grad, s * a.hess}; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet out;
  out.value = a.value * b.value;
  out.grad = a.grad * b.value + a.value * b.grad;
  out.hess = a.hess * b.value + a.value * b.hess + a.grad * b.grad.transpose() + b.grad * a.grad.transpose();
  return out;
}

/// phi(a) given phi, phi', phi'' evaluated at a.value.
inline Jet compose(const Jet& a, double phi, double dphi, double ddphi) {
  return {phi, dphi * a.grad, ddphi * a.grad * a.grad.transpose() + dphi * a.hess};
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return compose(a, s, c, -s);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return compose(a, c, -s, -c);
}

/// Affine function w . y + c of the stacked coordinates.
inline Jet affine(const Vector& w, double c, const Vector& y) {
  return {w.dot(y) + c, w, Matrix::Zero(y.size(), y.size())};
}

/// c0 + g . y + y^T H y / 2 of the stacked coordinates.
inline Jet quadratic(double c0, const Vector& g, const Matrix& H, const Vector& y) {
  return {c0 + g.dot(y) + 0.5 * y.dot(H * y), g + H * y, H};
}

/// Scalar field z(t, x) with analytic derivatives.
struct ScalarField {
  std::function<Jet(const SpaceTimePoint&)> eval;
  std::string family = "custom";
  std::string description;
  bool boundary_vanishing = false;

  Jet operator()(const SpaceTimePoint& q) const { return eval(q); }
};

inline ScalarField scaled(const ScalarField& z, double lambda) {
  ScalarField out = z;
  out.eval = [inner = z.eval, lambda](const SpaceTimePoint& q) { return lambda * inner(q); };
  out.description = z.description + " scaled " + std::to_string(lambda);
  return out;
}

inline ScalarField zero_field(const Signature& sig) {
  const int d = sig.dim();
  return {[d](const SpaceTimePoint&) { return Jet::zero(d); }, "zero", "z = 0", true};
}

/// Box operator: -trace of the time block plus trace of the space block.
inline double box_op(const Jet& z, const Signature& sig) {
  const int m = sig.m();
  return -z.hess.topLeftCorner(m, m).trace() + z.hess.bottomRightCorner(sig.n(), sig.n()).trace();
}

inline double box_op(const ScalarField& z, const SpaceTimePoint& q, const Signature& sig) {
  check_dims(q, sig, "q");
  return box_op(z(q), sig);
}

// ---------------------------------------------------------------------------
// Boundary factors: smooth functions vanishing exactly on the spatial boundary.

/// rho(t1)^2 - |x - c(t1)|^2 for balls; prod (x_j - lo_j)(hi_j - x_j) / h_j^2
/// for boxes, with h_j the half width so the factor peaks at 1.
inline Jet boundary_factor(const DomainModel& dom, const SpaceTimePoint& q) {
  const int m = dom.sig.m();
  const int n = dom.sig.n();
  const int d = m + n;
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    const double t1 = q.t[0];
    const double rho = ball->radius(t1);
    const double drho = ball->radius.derivative(t1);
    const double ddrho = ball->radius.second_derivative(t1);
    const Vector dc = ball->center_rate(t1);
    const Vector ddc = ball->center_accel(t1);
    const Vector rel = q.x - ball->center_at(t1);
    Jet B = Jet::zero(d);
    B.value = rho * rho - rel.squaredNorm();
    B.grad[0] = 2.0 * rho * drho + 2.0 * rel.dot(dc);
    B.grad.tail(n) = -2.0 * rel;
    B.hess(0, 0) = 2.0 * (drho * drho + rho * ddrho) + 2.0 * (rel.dot(ddc) - dc.squaredNorm());
    B.hess.block(m, 0, n, 1) = 2.0 * dc;
    B.hess.block(0, m, 1, n) = 2.0 * dc.transpose();
    B.hess.bottomRightCorner(n, n) = -2.0 * Matrix::Identity(n, n);
    return B;
  }
  const auto& box = std::get<Box>(dom.shape);
  Jet B = Jet::constant(1.0, d);
  for (int j = 0; j < n; ++j) {
    const double h = 0.5 * (box.hi[j] - box.lo[j]);
    const double x = q.x[j];
    Jet g = Jet::zero(d);
    g.value = (x - box.lo[j]) * (box.hi[j] - x) / (h * h);
    g.grad[m + j] = (box.hi[j] + box.lo[j] - 2.0 * x) / (h * h);
    g.hess(m + j, m + j) = -2.0 / (h * h);
    B = B * g;
  }
  return B;
}

/// Boundary factor times c0 + g . y + y^T H y / 2.
inline ScalarField make_bump(const DomainModel& dom, double c0, const Vector& g, const Matrix& H) {
  const int d = dom.sig.dim();
  if (g.size() != d || H.rows() != d || H.cols() != d) {
    throw Error(ErrorCode::dimension_mismatch, "bump polynomial must have m+n coefficients");
  }
  ScalarField z;
  z.family = "bump";
  z.description = "boundary factor x quadratic polynomial";
  z.boundary_vanishing = true;
  z.eval = [dom, c0, g, H](const SpaceTimePoint& q) {
    return boundary_factor(dom, q) * quadratic(c0, g, H, q.stacked());
  };
  return z;
}

inline ScalarField make_bump(const DomainModel& dom) {
  const int d = dom.sig.dim();
  return make_bump(dom, 1.0, Vector::Zero(d), Matrix::Zero(d, d));
}

/// sin(k . x + l . t + phase); null when |k| = |l|.
inline ScalarField make_plane_wave(const Signature& sig, const Vector& l, const Vector& k, double phase) {
  if (l.size() != sig.m() || k.size() != sig.n()) {
    throw Error(ErrorCode::dimension_mismatch, "plane wave needs l in R^m and k in R^n");
  }
  Vector w(sig.dim());
  w << l, k;
  ScalarField z;
  z.family = "planewave";
  z.description = "sin(k.x + l.t + phase)";
  z.eval = [w, phase](const SpaceTimePoint& q) { return sin(affine(w, phase, q.stacked())); };
  return z;
}

/// Boundary factor times a null plane wave.
inline ScalarField make_planewave_bump(const DomainModel& dom, const Vector& l, const Vector& k,
                                       double phase) {
  const ScalarField wave = make_plane_wave(dom.sig, l, k, phase);
  ScalarField z;
  z.family = "planewave_bump";
  z.description = "boundary factor x plane wave";
  z.boundary_vanishing = true;
  z.eval = [dom, wave](const SpaceTimePoint& q) { return boundary_factor(dom, q) * wave(q); };
  return z;
}

struct TrigTerm {
  double amplitude;
  Vector wavevector;  // stacked (t, x)
  double phase;
};

/// Boundary factor times sum_j A_j sin(w_j . y + phase_j).
inline ScalarField make_trig_sum(const DomainModel& dom, std::vector<TrigTerm> terms) {
  for (const auto& t : terms) {
    if (t.wavevector.size() != dom.sig.dim()) {
      throw Error(ErrorCode::dimension_mismatch, "trig_sum wavevectors must have m+n components");
    }
  }
  ScalarField z;
  z.family = "trig_sum";
  z.description = "boundary factor x sum of " + std::to_string(terms.size()) + " sines";
  z.boundary_vanishing = true;
  const int d = dom.sig.dim();
  z.eval = [dom, terms = std::move(terms), d](const SpaceTimePoint& q) {
    const Vector y = q.stacked();
    Jet s = Jet::zero(d);
    for (const auto& t : terms) s = s + t.amplitude * sin(affine(t.wavevector, t.phase, y));
    return boundary_factor(dom, q) * s;
  };
  return z;
}

/// (radius^2 - |x - center|^2)_+^3: C^2, supported strictly inside the
/// spatial ball of the given radius.
inline ScalarField make_compact(const Signature& sig, const Vector& center, double radius) {
  if (center.size() != sig.n()) throw Error(ErrorCode::dimension_mismatch, "compact center needs n components");
  if (!(radius > 0.0)) throw Error(ErrorCode::invalid_params, "compact support radius must be positive");
  ScalarField z;
  z.family = "compact";
  z.description = "compactly supported cubic";
  z.boundary_vanishing = true;
  const int m = sig.m();
  const int n = sig.n();
  z.eval = [center, radius, m, n](const SpaceTimePoint& q) {
    const Vector rel = q.x - center;
    Jet s = Jet::zero(m + n);
    s.value = radius * radius - rel.squaredNorm();
    if (s.value <= 0.0) return Jet::zero(m + n);
    s.grad.tail(n) = -2.0 * rel;
    s.hess.bottomRightCorner(n, n) = -2.0 * Matrix::Identity(n, n);
    return compose(s, s.value * s.value * s.value, 3.0 * s.value * s.value, 6.0 * s.value);
  };
  return z;
}

// ---------------------------------------------------------------------------
// Seeded random families.

inline ScalarField random_bump(const DomainModel& dom, Rng& rng) {
  const int d = dom.sig.dim();
  const double c0 = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  Vector g(d);
  for (int i = 0; i < d; ++i) g[i] = rng.normal();
  Matrix H(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) H(i, j) = H(j, i) = 0.5 * rng.normal();
  }
  return make_bump(dom, c0, g, H);
}

inline Vector random_direction(int size, Rng& rng) {
  Vector v(size);
  do {
    for (int i = 0; i < size; ++i) v[i] = rng.normal();
  } while (v.norm() < 1e-6);
  return v / v.norm();
}

inline ScalarField random_planewave_bump(const DomainModel& dom, Rng& rng) {
  const double kappa = rng.uniform(0.5, 3.0);
  const Vector k = kappa * random_direction(dom.sig.n(), rng);
  const Vector l = kappa * random_direction(dom.sig.m(), rng);
  return make_planewave_bump(dom, l, k, rng.uniform(0.0, 2.0 * M_PI));
}

inline ScalarField random_trig_sum(const DomainModel& dom, Rng& rng, int terms = 3) {
  std::vector<TrigTerm> ts;
  for (int j = 0; j < terms; ++j) {
    ts.push_back({rng.uniform(0.2, 1.0), rng.uniform(0.5, 3.0) * random_direction(dom.sig.dim(), rng),
                  rng.uniform(0.0, 2.0 * M_PI)});
  }
  return make_trig_sum(dom, std::move(ts));
}

/// Compact bump centred at a random point of Omega with its support kept a
/// fixed fraction away from the boundary at every time.
inline ScalarField random_compact(const DomainModel& dom, Rng& rng) {
  const int n = dom.sig.n();
  Vector center(n);
  double clearance = kInfinity;
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    const Vector c0 = ball->center_at(0.0);
    const double rho0 = ball->radius(0.0);
    center = c0 + rng.uniform(0.0, 0.3 * rho0) * random_direction(n, rng);
    constexpr int kScan = 1024;
    for (int k = 0; k <= kScan; ++k) {
      const double t1 = -dom.T + 2.0 * dom.T * k / kScan;
      clearance = std::min(clearance, ball->radius(t1) - (center - ball->center_at(t1)).norm());
    }
  } else {
    const auto& box = std::get<Box>(dom.shape);
    for (int j = 0; j < n; ++j) {
      const double mid = 0.5 * (box.lo[j] + box.hi[j]);
      const double h = 0.5 * (box.hi[j] - box.lo[j]);
      center[j] = mid + rng.uniform(-0.3, 0.3) * h;
      clearance = std::min({clearance, center[j] - box.lo[j], box.hi[j] - center[j]});
    }
  }
  if (!(clearance > 0.0)) {
    throw Error(ErrorCode::invalid_domain, "no room for a compactly supported field inside the domain");
  }
  ScalarField z = make_compact(dom.sig, center, rng.uniform(0.5, 0.8) * clearance);
  return scaled(z, rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0));
}

/// Family names accepted by make_suite.
inline bool is_suite_family(const std::string& f) {
  return f == "bump" || f == "planewave_bump" || f == "trig_sum" || f == "compact" || f == "mixed";
}

/// count fields of the family from a seeded generator. "mixed" cycles
/// bump, planewave_bump, trig_sum.
inline std::vector<ScalarField> make_suite(const DomainModel& dom, const std::string& family,
                                           std::size_t count, std::uint64_t seed) {
  if (!is_suite_family(family)) {
    throw Error(ErrorCode::invalid_params, "unknown field family '" + family + "'");
  }
  Rng rng(seed);
  std::vector<ScalarField> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string f = family;
    if (f == "mixed") f = i % 3 == 0 ? "bump" : i % 3 == 1 ? "planewave_bump" : "trig_sum";
    ScalarField z = f == "bump"             ? random_bump(dom, rng)
                    : f == "planewave_bump" ? random_planewave_bump(dom, rng)
                    : f == "compact"        ? random_compact(dom, rng)
                                            : random_trig_sum(dom, rng);
    z.description += " (seed " + std::to_string(seed) + ", member " + std::to_string(i) + ")";
    out.push_back(std::move(z));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lower-order coefficients.

/// C^2 ramp: 0 for s <= 0, 1 for s >= 1, 6s^5 - 15s^4 + 10s^3 between.
inline double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// chi(f) = smoothstep((f - mu) / mu): zero on f <= mu, one on f >= 2 mu.
inline double collar_cutoff(double f, double mu) { return smoothstep((f - mu) / mu); }

struct CoefficientSet {
  std::function<double(const SpaceTimePoint&)> V;
  std::function<Vector(const SpaceTimePoint&)> X;  // stacked (t, x) components
  std::function<double(const SpaceTimePoint&)> F;  // source; empty means 0
  double mu = 0.0;
  std::string description;
};

/// X = chi(f_p) * amplitude * direction, V = potential. direction is
/// normalised, so |X| = amplitude wherever f_p >= 2 mu.
inline CoefficientSet make_cone_collar_coeffs(const ReferencePoint& p, const Signature& sig, double mu,
                                              double potential, double amplitude, Vector direction) {
  if (!(mu > 0.0)) throw Error(ErrorCode::invalid_params, "collar width mu must be positive");
  if (direction.size() != sig.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "collar direction needs m+n components");
  }
  if (!(direction.norm() > 0.0)) throw Error(ErrorCode::invalid_params, "collar direction must be nonzero");
  direction /= direction.norm();
  CoefficientSet c;
  c.mu = mu;
  c.V = [potential](const SpaceTimePoint&) { return potential; };
  c.X = [p, sig, mu, amplitude, direction](const SpaceTimePoint& q) -> Vector {
    const double f = to_null_frame(q, p, sig).f;
    const double chi = collar_cutoff(f, mu);
    if (chi == 0.0) return Vector::Zero(sig.dim());
    return (chi * amplitude) * direction;
  };
  c.description = "V=" + format_double(potential) + ", |X|=" + format_double(amplitude) +
                  " outside f_p >= 2mu";
  return c;
}

inline CoefficientSet zero_coeffs(const Signature& sig) {
  CoefficientSet c;
  c.V = [](const SpaceTimePoint&) { return 0.0; };
  c.X = [d = sig.dim()](const SpaceTimePoint&) -> Vector { return Vector::Zero(d); };
  c.description = "V=0, X=0";
  return c;
}

/// box z + X^alpha d_alpha z + V z.
inline double full_op(const Jet& z, const CoefficientSet& c, const SpaceTimePoint& q, const Signature& sig) {
  double out = box_op(z, sig);
  if (c.X) out += c.X(q).dot(z.grad);
  if (c.V) out += c.V(q) * z.value;
  return out;
}

inline double full_op(const ScalarField& z, const CoefficientSet& c, const SpaceTimePoint& q,
                      const Signature& sig) {
  check_dims(q, sig, "q");
  return full_op(z(q), c, q, sig);
}

}  // namespace ultracarl
