#include "ultracarl/fields.hpp"

#include <gtest/gtest.h>

using namespace ultracarl;

namespace {

const Signature s12(1, 2);

DomainModel unit_disc() { return make_static_ball(s12, 3.0, Vector::Zero(2), 1.0); }

DomainModel drifting_disc() {
  return make_moving_ball(s12, 3.0, {Polynomial({0.0, 0.1}), Polynomial::constant(0.0)}, Polynomial({1.0, 0.05}));
}

SpaceTimePoint random_point(const Signature& sig, Rng& rng, double span = 1.0) {
  SpaceTimePoint q{Vector(sig.m()), Vector(sig.n())};
  for (int i = 0; i < sig.m(); ++i) q.t[i] = rng.uniform(-span, span);
  for (int j = 0; j < sig.n(); ++j) q.x[j] = rng.uniform(-span, span);
  return q;
}

ScalarField squared_norm_field(const Signature& sig, bool time_block) {
  const int d = sig.dim();
  Matrix H = Matrix::Zero(d, d);
  if (time_block) {
    H.topLeftCorner(sig.m(), sig.m()) = 2.0 * Matrix::Identity(sig.m(), sig.m());
  } else {
    H.bottomRightCorner(sig.n(), sig.n()) = 2.0 * Matrix::Identity(sig.n(), sig.n());
  }
  return {[H, d](const SpaceTimePoint& q) { return quadratic(0.0, Vector::Zero(d), H, q.stacked()); }, "custom",
          "", false};
}

// Central differences of value and gradient against the analytic jet.
void expect_jet_consistent(const ScalarField& z, const SpaceTimePoint& q, const Signature& sig) {
  const Jet j = z(q);
  const double h = 1e-5;
  const double scale = 1.0 + j.grad.cwiseAbs().maxCoeff() + j.hess.cwiseAbs().maxCoeff();
  for (int i = 0; i < sig.dim(); ++i) {
    auto a = q, b = q;
    if (i < sig.m()) {
      a.t[i] += h;
      b.t[i] -= h;
    } else {
      a.x[i - sig.m()] += h;
      b.x[i - sig.m()] -= h;
    }
    const Jet ja = z(a), jb = z(b);
    EXPECT_NEAR(j.grad[i], (ja.value - jb.value) / (2 * h), 1e-7 * scale);
    const Vector col = (ja.grad - jb.grad) / (2 * h);
    EXPECT_LE((j.hess.col(i) - col).cwiseAbs().maxCoeff(), 1e-6 * scale);
  }
}

}  // namespace

TEST(Fields, BoxOfQuadratics) {
  Rng rng(1);
  for (const Signature sig : {Signature(1, 2), Signature(2, 3), Signature(3, 1)}) {
    const auto q = random_point(sig, rng);
    EXPECT_EQ(box_op(squared_norm_field(sig, false), q, sig), 2.0 * sig.n());
    EXPECT_EQ(box_op(squared_norm_field(sig, true), q, sig), -2.0 * sig.m());
  }
}

TEST(Fields, NullPlaneWavesAreAnnihilated) {
  Rng rng(2);
  for (const Signature sig : {Signature(1, 2), Signature(2, 2), Signature(2, 3)}) {
    for (int k = 0; k < 50; ++k) {
      const double kappa = rng.uniform(0.1, 10.0);
      const Vector kv = kappa * random_direction(sig.n(), rng);
      const Vector lv = kappa * random_direction(sig.m(), rng);
      const auto z = make_plane_wave(sig, lv, kv, rng.uniform(0, 6.28));
      const auto q = random_point(sig, rng, 3.0);
      EXPECT_LE(std::abs(box_op(z, q, sig)), 1e-10 * (1.0 + kappa * kappa));
    }
  }
}

TEST(Fields, NonNullPlaneWaveIsEigenfunction) {
  const auto z = make_plane_wave(s12, make_vector(std::vector<double>{1.0}),
                                 make_vector(std::vector<double>{2.0, 0.0}), 0.3);
  const auto q = make_point({0.2}, {0.4, -1.0});
  // box sin(w.y) = -(|k|^2 - |l|^2) sin(w.y).
  EXPECT_NEAR(box_op(z, q, s12), -3.0 * z(q).value, 1e-13);
}

TEST(Fields, FullOperatorAddsLowerOrderTerms) {
  const auto z = squared_norm_field(s12, false);
  CoefficientSet c = zero_coeffs(s12);
  c.V = [](const SpaceTimePoint&) { return 1.0; };
  const auto q = make_point({0.5}, {0.6, 0.8});
  EXPECT_NEAR(full_op(z, c, q, s12), 4.0 + 1.0, 1e-15);
  c.X = [](const SpaceTimePoint&) { return make_vector(std::vector<double>{0.0, 1.0, 0.0}); };
  EXPECT_NEAR(full_op(z, c, q, s12), 5.0 + 2 * 0.6, 1e-15);
}

TEST(Fields, BumpIsOneAtCentreAndFlat) {
  const auto z = make_bump(unit_disc());
  const Jet j = z(make_point({0.7}, {0.0, 0.0}));
  EXPECT_EQ(j.value, 1.0);
  EXPECT_EQ(j.grad.tail(2).norm(), 0.0);
  EXPECT_TRUE(z.boundary_vanishing);
}

TEST(Fields, SuiteMembersVanishOnBoundary) {
  for (const auto& dom : {unit_disc(), drifting_disc(), make_box(s12, 2.0, -Vector::Ones(2), Vector::Ones(2))}) {
    BoundaryResolution res;
    res.time_cells = 6;
    res.surface_cells = 32;
    const auto samples = sample_boundary(dom, res);
    for (const auto& family : {"bump", "planewave_bump", "trig_sum", "compact"}) {
      for (const auto& z : make_suite(dom, family, 3, 11)) {
        for (const auto& s : samples) EXPECT_NEAR(z(s.point).value, 0.0, 1e-12) << family;
      }
    }
  }
}

TEST(Fields, JetsMatchFiniteDifferences) {
  Rng rng(5);
  const auto dom = drifting_disc();
  const auto suite = make_suite(dom, "mixed", 6, 9);
  for (const auto& z : suite) {
    for (int k = 0; k < 40; ++k) expect_jet_consistent(z, random_point(s12, rng, 1.2), s12);
  }
  const auto box = make_box(Signature(2, 2), 1.0, -Vector::Ones(2), 2 * Vector::Ones(2));
  for (const auto& z : make_suite(box, "mixed", 3, 4)) {
    for (int k = 0; k < 40; ++k) expect_jet_consistent(z, random_point(Signature(2, 2), rng, 1.0), Signature(2, 2));
  }
}

TEST(Fields, CompactFieldHasCompactSupport) {
  const auto z = make_compact(s12, make_vector(std::vector<double>{0.1, 0.0}), 0.5);
  EXPECT_EQ(z(make_point({0.0}, {0.7, 0.0})).value, 0.0);
  EXPECT_NEAR(z(make_point({2.0}, {0.1, 0.0})).value, std::pow(0.25, 3), 1e-15);
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    auto q = random_point(s12, rng, 0.7);
    expect_jet_consistent(z, q, s12);
  }
  EXPECT_THROW(make_compact(s12, Vector::Zero(3), 0.5), Error);
  EXPECT_THROW(make_compact(s12, Vector::Zero(2), 0.0), Error);
}

TEST(Fields, SuiteIsDeterministic) {
  const auto a = make_suite(unit_disc(), "mixed", 5, 17);
  const auto b = make_suite(unit_disc(), "mixed", 5, 17);
  const auto c = make_suite(unit_disc(), "mixed", 5, 18);
  const auto q = make_point({0.3}, {0.2, -0.1});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i](q).value, b[i](q).value);
    EXPECT_NE(a[i](q).value, c[i](q).value);
  }
  EXPECT_EQ(a[0].family, "bump");
  EXPECT_EQ(a[1].family, "planewave_bump");
  EXPECT_EQ(a[2].family, "trig_sum");
  EXPECT_THROW(make_suite(unit_disc(), "sawtooth", 1, 1), Error);
}

TEST(Fields, ScalingIsLinear) {
  const auto z = make_suite(unit_disc(), "trig_sum", 1, 2)[0];
  const auto q = make_point({0.1}, {0.3, 0.4});
  const Jet a = z(q), b = scaled(z, -2.5)(q);
  EXPECT_DOUBLE_EQ(b.value, -2.5 * a.value);
  EXPECT_LE((b.hess + 2.5 * a.hess).norm(), 1e-14 * (1 + a.hess.norm()));
}

TEST(Fields, CollarCutoff) {
  const double mu = 0.05;
  EXPECT_EQ(collar_cutoff(0.5 * mu, mu), 0.0);
  EXPECT_EQ(collar_cutoff(mu, mu), 0.0);
  EXPECT_EQ(collar_cutoff(2 * mu, mu), 1.0);
  EXPECT_EQ(collar_cutoff(3 * mu, mu), 1.0);
  EXPECT_DOUBLE_EQ(collar_cutoff(1.5 * mu, mu), 0.5);
  // Continuity and monotonicity across the ramp.
  double prev = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double v = collar_cutoff(mu + mu * k / 1000.0, mu);
    EXPECT_GE(v, prev);
    EXPECT_LE(v - prev, 0.002);
    prev = v;
  }
}

TEST(Fields, CollarCoefficients) {
  const auto p = make_point({0.0}, {0.0, 0.0});
  const double mu = 0.05;
  const auto c = make_cone_collar_coeffs(p, s12, mu, 2.0, 3.0, make_vector(std::vector<double>{0.0, 0.0, 2.0}));
  // f = r^2 / 4 at t = 0.
  const auto inside = make_point({0.0}, {std::sqrt(4 * 0.5 * mu), 0.0});
  const auto outside = make_point({0.0}, {std::sqrt(4 * 3.0 * mu), 0.0});
  EXPECT_EQ(c.X(inside).norm(), 0.0);
  EXPECT_NEAR((c.X(outside) - make_vector(std::vector<double>{0.0, 0.0, 3.0})).norm(), 0.0, 1e-15);
  EXPECT_EQ(c.V(inside), 2.0);
  EXPECT_THROW(make_cone_collar_coeffs(p, s12, 0.0, 1, 1, Vector::Ones(3)), Error);
  EXPECT_THROW(make_cone_collar_coeffs(p, s12, mu, 1, 1, Vector::Zero(3)), Error);
  EXPECT_THROW(make_cone_collar_coeffs(p, s12, mu, 1, 1, Vector::Ones(2)), Error);
}
