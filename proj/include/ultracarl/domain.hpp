#pragma once

// Domains U = G x Omega (static) and U = union over t1 of {t1} x G' x Omega_{t1}
// (moving along t1), boundary sampling, outward normals and the radius R+.

#include "ultracarl/geometry.hpp"

#include <optional>
#include <variant>

namespace ultracarl {

/// Polynomial in t1 with ascending coefficients.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }
  static Polynomial constant(double c) { return Polynomial({c}); }

  double operator()(double t) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  double derivative(double t) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * coeffs_[k];
    return acc;
  }

  double second_derivative(double t) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 2;) {
      acc = acc * t + static_cast<double>(k * (k - 1)) * coeffs_[k];
    }
    return acc;
  }

  bool is_constant() const {
    return std::all_of(coeffs_.begin() + 1, coeffs_.end(), [](double c) { return c == 0.0; });
  }

  const std::vector<double>& coefficients() const { return coeffs_; }

 private:
  std::vector<double> coeffs_;
};

/// Ball whose centre and radius may depend on t1.
struct Ball {
  std::vector<Polynomial> center;  // one polynomial per spatial axis
  Polynomial radius;

  Vector center_at(double t1) const {
    Vector c(static_cast<Eigen::Index>(center.size()));
    for (std::size_t j = 0; j < center.size(); ++j) c[static_cast<Eigen::Index>(j)] = center[j](t1);
    return c;
  }
  Vector center_rate(double t1) const {
    Vector c(static_cast<Eigen::Index>(center.size()));
    for (std::size_t j = 0; j < center.size(); ++j) {
      c[static_cast<Eigen::Index>(j)] = center[j].derivative(t1);
    }
    return c;
  }
  Vector center_accel(double t1) const {
    Vector c(static_cast<Eigen::Index>(center.size()));
    for (std::size_t j = 0; j < center.size(); ++j) {
      c[static_cast<Eigen::Index>(j)] = center[j].second_derivative(t1);
    }
    return c;
  }
  bool moving() const {
    return !radius.is_constant() ||
           std::any_of(center.begin(), center.end(), [](const Polynomial& p) { return !p.is_constant(); });
  }
};

/// Axis-aligned box, static only.
struct Box {
  Vector lo;
  Vector hi;
};

using SpatialShape = std::variant<Ball, Box>;

struct DomainModel {
  Signature sig;
  double T;  // temporal half side: G = (-T, T)^m
  SpatialShape shape;

  bool moving() const {
    if (const auto* ball = std::get_if<Ball>(&shape)) return ball->moving();
    return false;
  }
  bool is_ball() const { return std::holds_alternative<Ball>(shape); }
};

inline void validate_domain(const DomainModel& dom) {
  if (!(dom.T > 0.0) || !std::isfinite(dom.T)) {
    throw Error(ErrorCode::invalid_domain, "T must be positive and finite");
  }
  const int n = dom.sig.n();
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    if (static_cast<int>(ball->center.size()) != n) {
      throw Error(ErrorCode::dimension_mismatch, "ball center has " +
                                                     std::to_string(ball->center.size()) +
                                                     " components, expected n=" + std::to_string(n));
    }
    // Radius positivity on [-T, T], checked on a dense grid including endpoints.
    constexpr int kChecks = 4096;
    for (int k = 0; k <= kChecks; ++k) {
      const double t1 = -dom.T + 2.0 * dom.T * k / kChecks;
      if (!(ball->radius(t1) > 0.0)) {
        throw Error(ErrorCode::invalid_domain,
                    "ball radius must stay positive; radius(" + std::to_string(t1) +
                        ") = " + std::to_string(ball->radius(t1)));
      }
    }
  } else {
    const auto& box = std::get<Box>(dom.shape);
    if (box.lo.size() != n || box.hi.size() != n) {
      throw Error(ErrorCode::dimension_mismatch, "box extents must have n components");
    }
    for (int j = 0; j < n; ++j) {
      if (!(box.lo[j] < box.hi[j])) {
        throw Error(ErrorCode::invalid_domain, "box requires lo < hi on axis " + std::to_string(j));
      }
    }
  }
}

inline DomainModel make_static_ball(Signature sig, double T, const Vector& center, double radius) {
  Ball ball;
  for (Eigen::Index j = 0; j < center.size(); ++j) ball.center.push_back(Polynomial::constant(center[j]));
  ball.radius = Polynomial::constant(radius);
  DomainModel dom{sig, T, ball};
  validate_domain(dom);
  return dom;
}

inline DomainModel make_moving_ball(Signature sig, double T, std::vector<Polynomial> center,
                                    Polynomial radius) {
  DomainModel dom{sig, T, Ball{std::move(center), std::move(radius)}};
  validate_domain(dom);
  return dom;
}

inline DomainModel make_box(Signature sig, double T, const Vector& lo, const Vector& hi) {
  DomainModel dom{sig, T, Box{lo, hi}};
  validate_domain(dom);
  return dom;
}

inline bool in_time_cube(const DomainModel& dom, const Vector& t) {
  return (t.array().abs() < dom.T).all();
}

inline bool contains(const DomainModel& dom, const SpaceTimePoint& q) {
  check_dims(q, dom.sig, "q");
  if (!in_time_cube(dom, q.t)) return false;
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    const double t1 = q.t[0];
    return (q.x - ball->center_at(t1)).norm() < ball->radius(t1);
  }
  const auto& box = std::get<Box>(dom.shape);
  return ((q.x.array() > box.lo.array()) && (q.x.array() < box.hi.array())).all();
}

/// Spatial bounding box of Omega_{t1} over all t1 in [-T, T].
inline std::pair<Vector, Vector> spatial_bounds(const DomainModel& dom) {
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    const int n = dom.sig.n();
    Vector lo = Vector::Constant(n, kInfinity);
    Vector hi = Vector::Constant(n, -kInfinity);
    const int samples = ball->moving() ? 4096 : 0;
    for (int k = 0; k <= samples; ++k) {
      const double t1 = samples ? -dom.T + 2.0 * dom.T * k / samples : 0.0;
      const Vector c = ball->center_at(t1);
      const double rho = ball->radius(t1);
      lo = lo.cwiseMin((c.array() - rho).matrix());
      hi = hi.cwiseMax((c.array() + rho).matrix());
    }
    if (samples) {
      // Slack for motion between scan points.
      const double slack = 0.01 * (hi - lo).maxCoeff();
      lo.array() -= slack;
      hi.array() += slack;
    }
    return {lo, hi};
  }
  const auto& box = std::get<Box>(dom.shape);
  return {box.lo, box.hi};
}

// ---------------------------------------------------------------------------
// Time grids shared between boundary sampling and volume quadrature.

struct GridAxis {
  double lo = 0.0;
  double step = 1.0;
  int count = 0;

  double node(int k) const { return lo + (k + 0.5) * step; }
};

/// Tensor grid of midpoints over the time axes. Slices are enumerated in
/// row-major order, first axis slowest.
struct TimeGrid {
  std::vector<GridAxis> axes;

  std::size_t slice_count() const {
    std::size_t c = 1;
    for (const auto& a : axes) c *= static_cast<std::size_t>(a.count);
    return c;
  }
  double cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes) v *= a.step;
    return v;
  }
  Vector node(std::size_t slice) const {
    Vector t(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t i = axes.size(); i-- > 0;) {
      const auto c = static_cast<std::size_t>(axes[i].count);
      t[static_cast<Eigen::Index>(i)] = axes[i].node(static_cast<int>(slice % c));
      slice /= c;
    }
    return t;
  }
};

/// Uniform midpoint grid over G = (-T, T)^m.
inline TimeGrid uniform_time_grid(const DomainModel& dom, int cells) {
  if (cells < 1) throw Error(ErrorCode::invalid_params, "time_cells must be positive");
  TimeGrid grid;
  for (int i = 0; i < dom.sig.m(); ++i) grid.axes.push_back({-dom.T, 2.0 * dom.T / cells, cells});
  return grid;
}

struct BoundarySample {
  SpaceTimePoint point;
  double normal_t1 = 0.0;  // nu^{t1}; zero for static domains
  Vector normal_x;         // nu^x
  double weight = 0.0;     // surface measure of the sample's patch
  std::size_t slice = 0;   // index into the time grid the sample was built on
};

struct BoundaryResolution {
  int time_cells = 64;      // per time axis over (-T, T); ignored when time_grid is set
  int surface_cells = 256;  // angular cells (ball) or cells per face axis (box)
  std::optional<TimeGrid> time_grid;
};

namespace detail {

struct SphereNode {
  Vector omega;
  double measure;
};

inline std::vector<SphereNode> sphere_nodes(int n, int cells) {
  std::vector<SphereNode> nodes;
  if (cells < 1) throw Error(ErrorCode::invalid_params, "surface_cells must be positive");
  if (n == 1) {
    Vector plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    nodes.push_back({minus, 1.0});
    nodes.push_back({plus, 1.0});
  } else if (n == 2) {
    const double dth = 2.0 * M_PI / cells;
    for (int k = 0; k < cells; ++k) {
      const double th = (k + 0.5) * dth;
      Vector w(2);
      w << std::cos(th), std::sin(th);
      nodes.push_back({w, dth});
    }
  } else if (n == 3) {
    const int nphi = std::max(1, cells / 2);
    const double dphi = M_PI / nphi;
    const double dth = 2.0 * M_PI / cells;
    for (int j = 0; j < nphi; ++j) {
      const double phi = (j + 0.5) * dphi;
      for (int k = 0; k < cells; ++k) {
        const double th = (k + 0.5) * dth;
        Vector w(3);
        w << std::sin(phi) * std::cos(th), std::sin(phi) * std::sin(th), std::cos(phi);
        nodes.push_back({w, std::sin(phi) * dphi * dth});
      }
    }
  } else {
    throw Error(ErrorCode::unsupported_shape,
                "ball boundary sampling supports n <= 3, got n=" + std::to_string(n));
  }
  return nodes;
}

/// Boundary point, g-unit outward normal and surface density of a ball at
/// time t1 in direction omega. Returns false when the boundary is not timelike.
struct BallBoundaryPoint {
  Vector x;
  double normal_t1;
  Vector normal_x;
  double density;  // rho^{n-1} sqrt(1 - s^2)
  double speed;    // s = rho' + c' . omega
};

inline BallBoundaryPoint ball_boundary_point(const Ball& ball, double t1, const Vector& omega) {
  const Vector c = ball.center_at(t1);
  const double rho = ball.radius(t1);
  const double s = ball.radius.derivative(t1) + ball.center_rate(t1).dot(omega);
  BallBoundaryPoint b;
  b.x = c + rho * omega;
  b.speed = s;
  const double lorentz = std::sqrt(std::max(0.0, 1.0 - s * s));
  b.normal_t1 = lorentz > 0.0 ? s / lorentz : kInfinity;
  b.normal_x = lorentz > 0.0 ? Vector(omega / lorentz) : Vector(omega);
  b.density = std::pow(rho, static_cast<double>(omega.size() - 1)) * lorentz;
  return b;
}

}  // namespace detail

inline std::vector<BoundarySample> sample_boundary(const DomainModel& dom,
                                                   const BoundaryResolution& res) {
  validate_domain(dom);
  const TimeGrid tgrid = res.time_grid ? *res.time_grid : uniform_time_grid(dom, res.time_cells);
  const double dt = tgrid.cell_volume();
  const int n = dom.sig.n();
  std::vector<BoundarySample> out;

  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    const auto dirs = detail::sphere_nodes(n, res.surface_cells);
    std::size_t violations = 0;
    std::string first_violation;
    for (std::size_t s = 0; s < tgrid.slice_count(); ++s) {
      const Vector t = tgrid.node(s);
      for (const auto& d : dirs) {
        const auto b = detail::ball_boundary_point(*ball, t[0], d.omega);
        if (!(std::abs(b.speed) < 1.0)) {
          if (violations++ == 0) {
            first_violation = "t1=" + std::to_string(t[0]) + " boundary speed " + std::to_string(b.speed);
          }
          continue;
        }
        out.push_back({{t, b.x}, b.normal_t1, b.normal_x, dt * b.density * d.measure, s});
      }
    }
    if (violations) {
      throw Error(ErrorCode::not_timelike, std::to_string(violations) +
                                               " boundary samples violate |nu^t1| < |nu^x|; first at " +
                                               first_violation);
    }
    return out;
  }

  const auto& box = std::get<Box>(dom.shape);
  const int cells = res.surface_cells;
  if (cells < 1) throw Error(ErrorCode::invalid_params, "surface_cells must be positive");
  for (std::size_t s = 0; s < tgrid.slice_count(); ++s) {
    const Vector t = tgrid.node(s);
    for (int axis = 0; axis < n; ++axis) {
      // Tangential axes of this face pair.
      std::vector<int> tang;
      for (int j = 0; j < n; ++j) {
        if (j != axis) tang.push_back(j);
      }
      std::size_t face_nodes = 1;
      double patch = 1.0;
      for (int j : tang) {
        face_nodes *= static_cast<std::size_t>(cells);
        patch *= (box.hi[j] - box.lo[j]) / cells;
      }
      for (int side = 0; side < 2; ++side) {
        for (std::size_t k = 0; k < face_nodes; ++k) {
          Vector x(n);
          x[axis] = side ? box.hi[axis] : box.lo[axis];
          std::size_t idx = k;
          for (std::size_t a = tang.size(); a-- > 0;) {
            const int j = tang[a];
            const int c = static_cast<int>(idx % static_cast<std::size_t>(cells));
            idx /= static_cast<std::size_t>(cells);
            x[j] = box.lo[j] + (c + 0.5) * (box.hi[j] - box.lo[j]) / cells;
          }
          Vector nx = Vector::Zero(n);
          nx[axis] = side ? 1.0 : -1.0;
          out.push_back({{t, x}, 0.0, nx, dt * patch, s});
        }
      }
    }
  }
  return out;
}

struct Normal {
  double t1 = 0.0;
  Vector x;
};

/// Unit outward normal (with respect to g) at a point of the spatial boundary.
inline Normal outward_normal(const DomainModel& dom, const SpaceTimePoint& q) {
  check_dims(q, dom.sig, "q");
  if (!in_time_cube(dom, q.t)) {
    throw Error(ErrorCode::not_on_boundary, describe(q) + " lies outside the time cube G");
  }
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    const double t1 = q.t[0];
    const Vector rel = q.x - ball->center_at(t1);
    const double rho = ball->radius(t1);
    const double dist = rel.norm() - rho;
    if (std::abs(dist) > 1e-9 * std::max(1.0, rho)) {
      throw Error(ErrorCode::not_on_boundary,
                  describe(q) + " is at distance " + std::to_string(dist) + " from the boundary");
    }
    const auto b = detail::ball_boundary_point(*ball, t1, rel / rel.norm());
    if (!(std::abs(b.speed) < 1.0)) {
      throw Error(ErrorCode::not_timelike, "boundary is not timelike at " + describe(q));
    }
    return {b.normal_t1, b.normal_x};
  }
  const auto& box = std::get<Box>(dom.shape);
  const int n = dom.sig.n();
  const double scale = std::max(1.0, (box.hi - box.lo).maxCoeff());
  const double tol = 1e-9 * scale;
  int hits = 0;
  Vector nx = Vector::Zero(n);
  double outside = 0.0;
  double inside_gap = kInfinity;
  for (int j = 0; j < n; ++j) {
    const double dlo = q.x[j] - box.lo[j];
    const double dhi = box.hi[j] - q.x[j];
    outside = std::max({outside, -dlo, -dhi});
    inside_gap = std::min({inside_gap, std::abs(dlo), std::abs(dhi)});
    if (std::abs(dlo) <= tol) {
      ++hits;
      nx[j] = -1.0;
    } else if (std::abs(dhi) <= tol) {
      ++hits;
      nx[j] = 1.0;
    }
  }
  if (outside > tol || hits == 0) {
    const double dist = outside > tol ? outside : inside_gap;
    throw Error(ErrorCode::not_on_boundary,
                describe(q) + " is at distance " + std::to_string(dist) + " from the boundary");
  }
  if (hits > 1) {
    throw Error(ErrorCode::not_on_boundary, describe(q) + " is on a box corner or edge");
  }
  return {0.0, nx};
}

/// N f_p = (nu^x . x_p - nu^{t1} t_{p,1}) / 2.
inline double normal_f(double normal_t1, const Vector& normal_x, const SpaceTimePoint& q,
                       const ReferencePoint& p) {
  return 0.5 * (normal_x.dot(q.x - p.x) - normal_t1 * (q.t[0] - p.t[0]));
}

inline double normal_f(const BoundarySample& s, const ReferencePoint& p) {
  return normal_f(s.normal_t1, s.normal_x, s.point, p);
}

inline double normal_f(const DomainModel& dom, const SpaceTimePoint& q, const ReferencePoint& p) {
  check_dims(p, dom.sig, "p");
  const Normal nu = outward_normal(dom, q);
  return normal_f(nu.t1, nu.x, q, p);
}

/// N r_p = nu^x . x_p / r_p. r_p does not depend on t, so the time component
/// of the normal never enters.
inline double normal_r(const BoundarySample& s, const ReferencePoint& p) {
  const Vector xp = s.point.x - p.x;
  const double r = xp.norm();
  if (!(r > 0.0)) {
    throw Error(ErrorCode::degenerate_frame, "r_p = 0 at boundary point " + describe(s.point));
  }
  return s.normal_x.dot(xp) / r;
}

/// Euclidean distance from t(p) to the closed time cube.
inline double distance_to_time_cube(const DomainModel& dom, const Vector& tp) {
  return (tp.array().abs() - dom.T).max(0.0).matrix().norm();
}

/// R+ = sup of r_p over U intersected with D_p. Closed form for static balls
/// and boxes; for moving balls a dense t1 scan inflated by a Lipschitz bound.
inline double r_plus(const DomainModel& dom, const ReferencePoint& p) {
  validate_domain(dom);
  check_dims(p, dom.sig, "p");
  const auto empty = [] {
    return Error(ErrorCode::empty_region, "domain does not meet exterior region");
  };
  if (const auto* ball = std::get_if<Ball>(&dom.shape); ball && ball->moving()) {
    constexpr int kScan = 4096;
    const double dt = 2.0 * dom.T / kScan;
    // Offsets of the other time axes from the cube.
    double other = 0.0;
    for (int i = 1; i < dom.sig.m(); ++i) {
      const double e = std::max(0.0, std::abs(p.t[i]) - dom.T);
      other += e * e;
    }
    double best = -1.0;
    double lipschitz = 0.0;
    for (int k = 0; k <= kScan; ++k) {
      const double t1 = -dom.T + k * dt;
      const double reach = (ball->center_at(t1) - p.x).norm() + ball->radius(t1);
      lipschitz = std::max(lipschitz, ball->center_rate(t1).norm() + std::abs(ball->radius.derivative(t1)));
      const double gap = std::sqrt((t1 - p.t[0]) * (t1 - p.t[0]) + other);
      if (gap < reach) best = std::max(best, reach);
    }
    if (best < 0.0) throw empty();
    return best + 2.0 * lipschitz * dt;
  }
  double reach = 0.0;
  if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
    reach = (ball->center_at(0.0) - p.x).norm() + ball->radius(0.0);
  } else {
    const auto& box = std::get<Box>(dom.shape);
    const Vector far = (p.x - box.lo).cwiseAbs().cwiseMax((box.hi - p.x).cwiseAbs());
    reach = far.norm();
  }
  if (!(distance_to_time_cube(dom, p.t) < reach)) throw empty();
  return reach;
}

/// The window t(p) +- R+ must sit inside G so that U intersected with D_p
/// never reaches the temporal faces. Reduces to T > R+ when t(p) = 0.
inline void require_temporal_clearance(const DomainModel& dom, const ReferencePoint& p,
                                       double rplus) {
  const double offset = p.t.cwiseAbs().maxCoeff();
  if (!(dom.T > rplus + offset)) {
    throw Error(ErrorCode::invalid_domain,
                "T=" + std::to_string(dom.T) + " must exceed R+ + max|t(p)| = " +
                    std::to_string(rplus + offset) + " (T > R+ required)");
  }
}

// ---------------------------------------------------------------------------
// Reparametrisation of a moving ball onto the static cylinder over Omega_0.

struct Reparametrization {
  DomainModel reference;  // static ball at t1 = 0
  Ball moving;

  SpaceTimePoint map(const SpaceTimePoint& q) const {
    const double t1 = q.t[0];
    const double scale = moving.radius(t1) / moving.radius(0.0);
    return {q.t, moving.center_at(t1) + scale * (q.x - moving.center_at(0.0))};
  }

  /// Jacobian of map() in stacked (t, x) coordinates.
  Matrix jacobian(const SpaceTimePoint& q) const {
    const int m = reference.sig.m();
    const int n = reference.sig.n();
    const double t1 = q.t[0];
    const double rho0 = moving.radius(0.0);
    Matrix J = Matrix::Identity(m + n, m + n);
    J.block(m, m, n, n) *= moving.radius(t1) / rho0;
    J.block(m, 0, n, 1) =
        moving.center_rate(t1) + (moving.radius.derivative(t1) / rho0) * (q.x - moving.center_at(0.0));
    return J;
  }

  double jacobian_det(const SpaceTimePoint& q) const {
    return std::pow(moving.radius(q.t[0]) / moving.radius(0.0), reference.sig.n());
  }
};

inline Reparametrization static_reparametrize(const DomainModel& dom) {
  const auto* ball = std::get_if<Ball>(&dom.shape);
  if (!ball) throw Error(ErrorCode::unsupported_shape, "reparametrisation needs a ball domain");
  validate_domain(dom);  // rejects radius <= 0 anywhere on [-T, T]
  DomainModel ref = make_static_ball(dom.sig, dom.T, ball->center_at(0.0), ball->radius(0.0));
  return {ref, *ball};
}

}  // namespace ultracarl
