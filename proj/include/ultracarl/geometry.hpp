#pragma once

// p-centred null-coordinate geometry of R^{m+n} with the flat metric
// g = -|dt|^2 + |dx|^2.

#include "ultracarl/core.hpp"

namespace ultracarl {

/// Null-frame scalars of a point relative to a reference point p.
struct NullFrame {
  double u = 0.0;    // (tau - r) / 2
  double v = 0.0;    // (tau + r) / 2
  double r = 0.0;    // |x - x(p)|
  double tau = 0.0;  // |t - t(p)|
  double f = 0.0;    // -u v = (r^2 - tau^2) / 4
};

/// Gradient of a scalar split into null derivatives and angular remainders.
struct GradientSplit {
  double du = 0.0;
  double dv = 0.0;
  double dr = 0.0;
  double dtau = 0.0;
  double q_sph = 0.0;  // |tangential part of grad_x|^2
  double q_tmp = 0.0;  // |tangential part of grad_t|^2
  Vector grad_t;
  Vector grad_x;
};

/// Time and space blocks of a gradient.
struct BlockGradient {
  Vector t;
  Vector x;
};

/// Displacements t - t(p) and x - x(p).
inline SpaceTimePoint centred(const SpaceTimePoint& q, const ReferencePoint& p) {
  return {q.t - p.t, q.x - p.x};
}

inline NullFrame frame_from_radii(double r, double tau) {
  NullFrame fr;
  fr.r = r;
  fr.tau = tau;
  fr.u = 0.5 * (tau - r);
  fr.v = 0.5 * (tau + r);
  fr.f = -fr.u * fr.v;
  return fr;
}

inline NullFrame to_null_frame(const SpaceTimePoint& q, const ReferencePoint& p,
                               const Signature& sig) {
  check_dims(q, sig, "q");
  check_dims(p, sig, "p");
  return frame_from_radii((q.x - p.x).norm(), (q.t - p.t).norm());
}

/// (r^2 - tau^2) / 4 evaluated with an fma-compensated difference of squares.
/// Second route to f, independent of the null-coordinate product.
inline double quarter_difference_of_squares(double r, double tau) {
  const double tt = tau * tau;
  const double tt_err = std::fma(tau, tau, -tt);
  const double diff = std::fma(r, r, -tt);
  return 0.25 * (diff - tt_err);
}

inline bool in_exterior(const SpaceTimePoint& q, const ReferencePoint& p, const Signature& sig) {
  return to_null_frame(q, p, sig).f > 0.0;
}

/// Gradient of f_p = (|x_p|^2 - |t_p|^2) / 4.
inline BlockGradient grad_f(const SpaceTimePoint& q, const ReferencePoint& p,
                            const Signature& sig) {
  check_dims(q, sig, "q");
  check_dims(p, sig, "p");
  return {-0.5 * (q.t - p.t), 0.5 * (q.x - p.x)};
}

inline GradientSplit split_gradient(const Vector& grad_t, const Vector& grad_x,
                                    const SpaceTimePoint& q, const ReferencePoint& p,
                                    const Signature& sig) {
  check_dims(q, sig, "q");
  check_dims(p, sig, "p");
  if (grad_t.size() != sig.m()) {
    throw Error(ErrorCode::dimension_mismatch, "grad_t has length " +
                                                   std::to_string(grad_t.size()) + ", expected m");
  }
  if (grad_x.size() != sig.n()) {
    throw Error(ErrorCode::dimension_mismatch, "grad_x has length " +
                                                   std::to_string(grad_x.size()) + ", expected n");
  }
  const Vector tp = q.t - p.t;
  const Vector xp = q.x - p.x;
  const double tau = tp.norm();
  const double r = xp.norm();
  if (!(tau > 0.0) || !(r > 0.0)) {
    throw Error(ErrorCode::degenerate_frame,
                "degenerate angular frame at " + describe(q) + " (tau_p=" + std::to_string(tau) +
                    ", r_p=" + std::to_string(r) + ")");
  }
  const Vector t_hat = tp / tau;
  const Vector x_hat = xp / r;

  GradientSplit s;
  s.grad_t = grad_t;
  s.grad_x = grad_x;
  s.dr = x_hat.dot(grad_x);
  s.dtau = t_hat.dot(grad_t);
  s.du = s.dtau - s.dr;
  s.dv = s.dtau + s.dr;
  s.q_sph = (grad_x - s.dr * x_hat).squaredNorm();
  s.q_tmp = (grad_t - s.dtau * t_hat).squaredNorm();
  return s;
}

/// g(V, W) for stacked (t, x) vectors.
inline double metric_inner(const Vector& V, const Vector& W, const Signature& sig) {
  if (V.size() != sig.dim() || W.size() != sig.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "metric_inner expects vectors of length m+n");
  }
  const int m = sig.m();
  return -V.head(m).dot(W.head(m)) + V.tail(sig.n()).dot(W.tail(sig.n()));
}

}  // namespace ultracarl
