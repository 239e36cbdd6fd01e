#include "ultracarl/domain.hpp"

#include <gtest/gtest.h>

using namespace ultracarl;

namespace {

DomainModel unit_disc(double T = 3.0) { return make_static_ball(Signature(1, 2), T, Vector::Zero(2), 1.0); }

DomainModel growing_disc(double T = 3.0) {
  return make_moving_ball(Signature(1, 2), T, {Polynomial::constant(0.0), Polynomial::constant(0.0)},
                          Polynomial({1.0, 0.1}));
}

DomainModel drifting_disc(double T = 3.0) {
  return make_moving_ball(Signature(1, 2), T, {Polynomial({0.0, 0.2}), Polynomial({0.0, 0.0, 0.02})},
                          Polynomial({1.0, 0.05}));
}

double total(const std::vector<BoundarySample>& s) {
  double w = 0.0;
  for (const auto& b : s) w += b.weight;
  return w;
}

}  // namespace

TEST(Domain, PolynomialEvaluation) {
  const Polynomial p({1.0, -2.0, 3.0});
  EXPECT_EQ(p(2.0), 9.0);
  EXPECT_EQ(p.derivative(2.0), 10.0);
  EXPECT_EQ(p.second_derivative(2.0), 6.0);
  EXPECT_TRUE(Polynomial::constant(4.0).is_constant());
  EXPECT_FALSE(p.is_constant());
}

TEST(Domain, ValidationErrors) {
  EXPECT_THROW(make_static_ball(Signature(1, 2), 0.0, Vector::Zero(2), 1.0), Error);
  EXPECT_THROW(make_static_ball(Signature(1, 2), 1.0, Vector::Zero(3), 1.0), Error);
  EXPECT_THROW(make_static_ball(Signature(1, 2), 1.0, Vector::Zero(2), -1.0), Error);
  // Radius 1 - 0.5 t vanishes at t = 2 inside (-3, 3).
  EXPECT_THROW(make_moving_ball(Signature(1, 2), 3.0, {Polynomial::constant(0), Polynomial::constant(0)},
                                Polynomial({1.0, -0.5})),
               Error);
  EXPECT_THROW(make_box(Signature(1, 2), 1.0, Vector::Ones(2), Vector::Zero(2)), Error);
}

TEST(Domain, BallBoundaryAreaIsCylinderArea) {
  BoundaryResolution res;
  res.time_cells = 8;
  res.surface_cells = 256;
  const double area = total(sample_boundary(unit_disc(), res));
  EXPECT_NEAR(area / (12.0 * M_PI), 1.0, 1e-3);
}

TEST(Domain, BoxBoundaryAreaIsExact) {
  const auto box = make_box(Signature(1, 2), 1.0, -Vector::Ones(2), Vector::Ones(2));
  BoundaryResolution res;
  res.time_cells = 4;
  res.surface_cells = 16;
  EXPECT_NEAR(total(sample_boundary(box, res)), 16.0, 1e-13);
}

TEST(Domain, SphereBoundaryArea) {
  const auto ball = make_static_ball(Signature(1, 3), 1.0, Vector::Zero(3), 2.0);
  BoundaryResolution res;
  res.time_cells = 2;
  res.surface_cells = 256;
  // 2T * 4 pi rho^2 with midpoint error O(h^2) in the polar angle.
  EXPECT_NEAR(total(sample_boundary(ball, res)) / (2.0 * 4.0 * M_PI * 4.0), 1.0, 1e-4);
}

TEST(Domain, MovingBallIsTimelikeAndGUnit) {
  for (const auto& dom : {growing_disc(), drifting_disc()}) {
    BoundaryResolution res;
    res.time_cells = 32;
    res.surface_cells = 64;
    for (const auto& s : sample_boundary(dom, res)) {
      EXPECT_LT(std::abs(s.normal_t1), s.normal_x.norm());
      EXPECT_NEAR(-s.normal_t1 * s.normal_t1 + s.normal_x.squaredNorm(), 1.0, 1e-12);
    }
  }
}

TEST(Domain, FastBallIsRejected) {
  const auto dom = make_moving_ball(Signature(1, 2), 1.0, {Polynomial::constant(0), Polynomial::constant(0)},
                                    Polynomial({3.0, 1.5}));
  BoundaryResolution res;
  res.time_cells = 4;
  res.surface_cells = 8;
  EXPECT_THROW(sample_boundary(dom, res), Error);
}

TEST(Domain, FourSpaceDimensionsUnsupportedForBalls) {
  const auto dom = make_static_ball(Signature(1, 4), 1.0, Vector::Zero(4), 1.0);
  try {
    sample_boundary(dom, BoundaryResolution{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_shape);
  }
}

TEST(Domain, StaticNormals) {
  const auto nu = outward_normal(unit_disc(), make_point({0.2}, {1.0, 0.0}));
  EXPECT_EQ(nu.t1, 0.0);
  EXPECT_NEAR(nu.x[0], 1.0, 1e-15);
  EXPECT_NEAR(nu.x[1], 0.0, 1e-15);

  const auto box = make_box(Signature(1, 2), 1.0, -Vector::Ones(2), 2.0 * Vector::Ones(2));
  const auto face = outward_normal(box, make_point({0}, {2.0, 0.5}));
  EXPECT_EQ(face.x, (Vector(2) << 1.0, 0.0).finished());
  EXPECT_THROW(outward_normal(box, make_point({0}, {2.0, 2.0})), Error);
  EXPECT_THROW(outward_normal(box, make_point({0}, {0.0, 0.0})), Error);
  EXPECT_THROW(outward_normal(unit_disc(), make_point({0}, {0.5, 0.0})), Error);
  EXPECT_THROW(outward_normal(unit_disc(), make_point({5}, {1.0, 0.0})), Error);
}

// The normal of a moving ball is the g-dual of the gradient of the level set
// phi = |x - c(t)| - rho(t), scaled to g-unit length.
TEST(Domain, MovingNormalMatchesLevelSetGradient) {
  const auto dom = drifting_disc();
  const auto& ball = std::get<Ball>(dom.shape);
  auto phi = [&](const SpaceTimePoint& q) { return (q.x - ball.center_at(q.t[0])).norm() - ball.radius(q.t[0]); };
  for (double t1 : {-2.0, -0.3, 0.7, 2.5}) {
    for (double th : {0.1, 1.9, 3.5, 5.0}) {
      const Vector w = (Vector(2) << std::cos(th), std::sin(th)).finished();
      const SpaceTimePoint q{(Vector(1) << t1).finished(), ball.center_at(t1) + ball.radius(t1) * w};
      const double h = 1e-6;
      Vector dphi(3);
      for (int i = 0; i < 3; ++i) {
        auto a = q, b = q;
        if (i == 0) {
          a.t[0] += h;
          b.t[0] -= h;
        } else {
          a.x[i - 1] += h;
          b.x[i - 1] -= h;
        }
        dphi[i] = (phi(a) - phi(b)) / (2 * h);
      }
      // Raise the index: the time component changes sign.
      Vector vec = dphi;
      vec[0] = -vec[0];
      vec /= std::sqrt(-vec[0] * vec[0] + vec.tail(2).squaredNorm());
      const auto nu = outward_normal(dom, q);
      EXPECT_NEAR(nu.t1, vec[0], 1e-8);
      EXPECT_NEAR(nu.x[0], vec[1], 1e-8);
      EXPECT_NEAR(nu.x[1], vec[2], 1e-8);
    }
  }
}

TEST(Domain, NormalDerivativeOfF) {
  const auto dom = unit_disc();
  const auto q = make_point({0}, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(normal_f(dom, q, make_point({0}, {0, 0})), 0.5);
  EXPECT_DOUBLE_EQ(normal_f(dom, q, make_point({0}, {2, 0})), -0.5);
}

TEST(Domain, NormalDerivativeOfFIsDirectional) {
  const auto dom = drifting_disc();
  const auto p = make_point({0.4}, {1.7, -0.3});
  BoundaryResolution res;
  res.time_cells = 8;
  res.surface_cells = 16;
  for (const auto& s : sample_boundary(dom, res)) {
    const double h = 1e-6;
    SpaceTimePoint a = s.point, b = s.point;
    a.t[0] += h * s.normal_t1;
    b.t[0] -= h * s.normal_t1;
    a.x += h * s.normal_x;
    b.x -= h * s.normal_x;
    auto f = [&](const SpaceTimePoint& q) {
      return 0.25 * ((q.x - p.x).squaredNorm() - (q.t - p.t).squaredNorm());
    };
    EXPECT_NEAR(normal_f(s, p), (f(a) - f(b)) / (2 * h), 1e-7);
  }
}

TEST(Domain, RPlus) {
  EXPECT_DOUBLE_EQ(r_plus(unit_disc(), make_point({0}, {0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(r_plus(unit_disc(), make_point({0}, {2, 0})), 3.0);
  const auto box = make_box(Signature(1, 2), 3.0, -Vector::Ones(2), Vector::Ones(2));
  EXPECT_DOUBLE_EQ(r_plus(box, make_point({0}, {0, 0})), std::sqrt(2.0));
  // p far in time from G: the region is empty.
  EXPECT_THROW(r_plus(unit_disc(1.0), make_point({5}, {0, 0})), Error);
}

TEST(Domain, RPlusMovingBallBoundsSampledDistances) {
  const auto dom = drifting_disc();
  const auto p = make_point({0}, {0.5, 0});
  const double rp = r_plus(dom, p);
  BoundaryResolution res;
  res.time_cells = 64;
  res.surface_cells = 128;
  double seen = 0.0;
  for (const auto& s : sample_boundary(dom, res)) {
    const double r = (s.point.x - p.x).norm();
    if (r > std::abs(s.point.t[0] - p.t[0])) seen = std::max(seen, r);
  }
  EXPECT_GE(rp, seen);
  EXPECT_LT(rp, seen * 1.02);
}

TEST(Domain, TemporalClearance) {
  EXPECT_NO_THROW(require_temporal_clearance(unit_disc(3.0), make_point({0}, {0, 0}), 1.0));
  EXPECT_THROW(require_temporal_clearance(unit_disc(3.0), make_point({2.5}, {0, 0}), 1.0), Error);
}

TEST(Domain, Reparametrization) {
  const auto dom = growing_disc();
  const auto rep = static_reparametrize(dom);
  const auto& ball = std::get<Ball>(dom.shape);
  for (double t1 : {-2.0, 0.0, 1.5}) {
    for (double th = 0.0; th < 6.28; th += 0.7) {
      const SpaceTimePoint q{(Vector(1) << t1).finished(), (Vector(2) << std::cos(th), std::sin(th)).finished()};
      const auto img = rep.map(q);
      EXPECT_NEAR((img.x - ball.center_at(t1)).norm(), ball.radius(t1), 1e-10);
      EXPECT_NEAR(rep.jacobian_det(q), std::pow(1.0 + 0.1 * t1, 2), 1e-14);
      EXPECT_NEAR(rep.jacobian(q).determinant(), rep.jacobian_det(q), 1e-12);
    }
  }
  const auto ident = static_reparametrize(unit_disc());
  const auto q = make_point({0.3}, {0.2, -0.4});
  EXPECT_EQ(ident.map(q).x, q.x);
  EXPECT_THROW(static_reparametrize(make_box(Signature(1, 2), 1.0, -Vector::Ones(2), Vector::Ones(2))), Error);
}
