#include "ultracarl/regions.hpp"

#include <gtest/gtest.h>

using namespace ultracarl;

namespace {

const Signature s12(1, 2);

DomainModel unit_disc(double T = 4.0) { return make_static_ball(s12, T, Vector::Zero(2), 1.0); }

DomainModel drifting_disc() {
  return make_moving_ball(s12, 3.5, {Polynomial({0.0, 0.1}), Polynomial::constant(0.0)}, Polynomial::constant(1.0));
}

std::vector<BoundarySample> window_samples(const DomainModel& dom, const ReferencePoint& p, int tcells, int scells) {
  BoundaryResolution br;
  br.surface_cells = scells;
  br.time_grid = window_time_grid(p, r_plus(dom, p), tcells);
  auto s = sample_boundary(dom, br);
  std::erase_if(s, [&](const BoundarySample& b) { return !in_time_cube(dom, b.point.t); });
  return s;
}

// Composite Simpson on [a, b] with an even number of panels.
template <class Fn>
double simpson(Fn f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Regions, CentredPointSeesWholeTrace) {
  const auto dom = unit_disc();
  const auto p = make_point({0}, {0, 0});
  const auto cp = params_from_delta(p, 9, 0.1, r_plus(dom, p));
  const auto mask = classify_boundary(window_samples(dom, p, 32, 64), cp);
  for (std::size_t i = 0; i < mask.rows.size(); ++i) {
    const auto& r = mask.rows[i];
    if (!r.trace) continue;
    EXPECT_NEAR(r.normal_f, 0.5, 1e-15);
    EXPECT_TRUE(r.gamma);
    EXPECT_TRUE(r.gamma_eps);
  }
  EXPECT_EQ(mask.measures.gamma, mask.measures.trace);
  EXPECT_EQ(mask.measures.symdiff, 0.0);
  const auto m = refined_region_measures(dom, cp, r_plus(dom, p), RefinedResolution{});
  EXPECT_NEAR(m.trace / (4.0 * M_PI), 1.0, 1e-3);
  EXPECT_EQ(m.symdiff, 0.0);
}

TEST(Regions, OutsidePointFarSideIsHidden) {
  const auto dom = unit_disc();
  const auto p = make_point({0}, {2.5, 0});
  const auto cp = params_from_delta(p, 9, 0.1, r_plus(dom, p));
  EXPECT_FALSE(gamma_indicator(dom, make_point({0}, {1, 0}), p));
  EXPECT_TRUE(gamma_indicator(dom, make_point({0}, {-1, 0}), p));
  EXPECT_FALSE(gamma_eps_indicator(dom, make_point({0}, {1, 0}), cp));
  EXPECT_TRUE(gamma_eps_indicator(dom, make_point({0}, {-1, 0}), cp));
  // Inside the cone: not on the trace at all.
  EXPECT_FALSE(gamma_indicator(dom, make_point({3.6}, {-1, 0}), p));
}

// Static disc, p = (0; 2.5, 0): N f > 0 iff 1 - 2.5 cos(theta) > 0, and the
// trace at azimuth theta is |t| < |x(theta) - x(p)|.
TEST(Regions, OutsidePointMeasuresMatchAzimuthalIntegral) {
  const auto dom = unit_disc();
  const auto p = make_point({0}, {2.5, 0});
  const double rp = r_plus(dom, p);
  EXPECT_NEAR(rp, 3.5, 1e-12);
  const auto cp = params_from_delta(p, 9, 0.1, rp);
  auto dist = [](double th) { return std::sqrt(1.0 + 6.25 - 5.0 * std::cos(th)); };
  const double trace = simpson([&](double th) { return 2.0 * dist(th); }, 0.0, 2.0 * M_PI);
  const double cut = std::acos(0.4);
  const double gamma = 2.0 * simpson([&](double th) { return 2.0 * dist(th); }, cut, M_PI);
  const auto m = refined_region_measures(dom, cp, rp, RefinedResolution{});
  EXPECT_NEAR(m.trace / trace, 1.0, 1e-4);
  EXPECT_NEAR(m.gamma / gamma, 1.0, 1e-4);
  // For static balls the bracket is N r times a positive factor.
  EXPECT_EQ(m.symdiff, 0.0);
  const auto mask = classify_boundary(window_samples(dom, p, 32, 128), cp);
  for (const auto& r : mask.rows) EXPECT_EQ(r.gamma, r.gamma_eps);
  EXPECT_NEAR(mask.measures.gamma / gamma, 1.0, 0.02);
}

TEST(Regions, ZeroEpsilonReproducesGamma) {
  const auto dom = drifting_disc();
  const auto p = make_point({0}, {1.5, 0});
  CarlemanParams cp = params_from_delta(p, 9, 0.1, r_plus(dom, p));
  cp.eps = 0.0;
  const auto mask = classify_boundary(window_samples(dom, p, 32, 128), cp);
  std::size_t members = 0;
  for (const auto& r : mask.rows) {
    EXPECT_EQ(r.gamma, r.gamma_eps);
    members += r.gamma;
  }
  EXPECT_GT(members, 0u);
  EXPECT_EQ(mask.measures.symdiff, 0.0);
}

TEST(Regions, MovingBoundaryHasNonzeroSymmetricDifference) {
  const auto dom = drifting_disc();
  const auto p = make_point({0}, {1.5, 0});
  const auto cp = params_from_delta(p, 9, 0.1, r_plus(dom, p));
  const auto m = refined_region_measures(dom, cp, r_plus(dom, p), RefinedResolution{});
  EXPECT_GT(m.symdiff, 0.0);
  EXPECT_LT(m.symdiff, 0.01 * m.gamma);
  EXPECT_LE(m.gamma, m.trace);
  const auto sampled = classify_boundary(window_samples(dom, p, 64, 256), cp).measures;
  EXPECT_NEAR(sampled.gamma / m.gamma, 1.0, 0.02);
}

TEST(Regions, WMembershipBySliceDistance) {
  SliceIndex idx;
  idx.members.resize(2);
  idx.members[0].push_back(make_vector(std::vector<double>{1.0, 0.0}));
  VolumeNode node{make_point({0}, {0.95, 0.0}), 1.0, 0};
  EXPECT_TRUE(w_eps_indicator(node, idx, 0.1));
  node.point.x[0] = 0.8;
  EXPECT_FALSE(w_eps_indicator(node, idx, 0.1));
  node.point.x[0] = 0.95;
  node.slice = 1;
  EXPECT_FALSE(w_eps_indicator(node, idx, 0.1));
  node.slice = 7;
  EXPECT_FALSE(w_eps_indicator(node, idx, 0.1));
}

TEST(Regions, WGrowsWithSigma) {
  const auto dom = drifting_disc();
  const auto p = make_point({0}, {1.5, 0});
  const double rp = r_plus(dom, p);
  const auto cp = params_from_delta(p, 9, 0.1, rp);
  GridResolution res;
  res.time_cells = 16;
  res.space_cells = 24;
  const auto rule = build_volume_rule(dom, p, rp, res);
  BoundaryResolution br;
  br.surface_cells = 128;
  br.time_grid = rule.time_grid;
  const auto mask = classify_boundary(sample_boundary(dom, br), cp);
  const auto idx = index_gamma_eps(mask, rule.time_grid.slice_count());
  std::size_t prev = 0;
  for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
    std::size_t count = 0;
    for (const auto& n : rule.nodes) {
      const bool in = w_eps_indicator(n, idx, sigma);
      if (in) ++count;
      if (w_eps_indicator(n, idx, sigma / 2)) {
        EXPECT_TRUE(in);
      }
    }
    EXPECT_GT(count, prev);
    prev = count;
  }
  EXPECT_LT(prev, rule.nodes.size());
}

TEST(Regions, PointwiseWMembership) {
  const auto dom = unit_disc();
  const auto p = make_point({0}, {0, 0});
  const auto cp = params_from_delta(p, 9, 0.1, 1.0);
  BoundaryResolution br;
  br.surface_cells = 64;
  br.time_grid = window_time_grid(p, 1.0, 8);
  const auto mask = classify_boundary(sample_boundary(dom, br), cp);
  const double t = br.time_grid->node(3)[0];
  const double th = 2.0 * M_PI * 0.5 / 64;  // first azimuthal midpoint
  const Vector y = make_vector(std::vector<double>{std::cos(th), std::sin(th)});
  EXPECT_TRUE(w_eps_indicator(SpaceTimePoint{Vector::Constant(1, t), 0.95 * y}, cp, dom, mask));
  EXPECT_FALSE(w_eps_indicator(SpaceTimePoint{Vector::Constant(1, t), 0.8 * y}, cp, dom, mask));
  EXPECT_FALSE(w_eps_indicator(SpaceTimePoint{Vector::Constant(1, t + 0.01), 0.95 * y}, cp, dom, mask));
}

TEST(Regions, ConvergenceScanDecreasesQuadratically) {
  const auto dom = drifting_disc();
  const auto p = make_point({0}, {1.5, 0});
  RefinedResolution rr;
  rr.time_slices = 128;
  const auto table = convergence_scan(dom, p, {0.2, 0.1, 0.05, 0.025}, 9, rr, GridResolution{});
  EXPECT_EQ(table.method, "refined");
  EXPECT_TRUE(table.monotone);
  EXPECT_NEAR(table.slope, 2.0, 0.2);
  EXPECT_FALSE(table.rows[0].admissible);
  EXPECT_TRUE(table.rows[1].admissible);
  EXPECT_THROW(convergence_scan(dom, p, {0.1, 0.2}, 9, rr, GridResolution{}), Error);
  EXPECT_THROW(convergence_scan(dom, p, {}, 9, rr, GridResolution{}), Error);
}

TEST(Regions, ConvergenceScanAtCentreIsExactlyZero) {
  const auto dom = unit_disc();
  const auto p = make_point({0}, {0, 0});
  RefinedResolution rr;
  rr.time_slices = 64;
  const auto table = convergence_scan(dom, p, {0.1, 0.05, 0.025}, 9, rr, GridResolution{});
  for (const auto& r : table.rows) EXPECT_EQ(r.symdiff, 0.0);
  EXPECT_TRUE(table.monotone);
  EXPECT_TRUE(std::isnan(table.slope));
}

TEST(Regions, SampledMethodForBoxes) {
  const auto box = make_box(s12, 4.0, -Vector::Ones(2), Vector::Ones(2));
  const auto p = make_point({0}, {0, 0});
  const double rp = r_plus(box, p);
  const auto cp = params_from_delta(p, 9, 0.1, rp);
  const auto est = region_measures(box, cp, rp, RefinedResolution{}, GridResolution{});
  EXPECT_EQ(est.method, "sampled");
  // Every face point has x . nu = 1 > 0.
  EXPECT_EQ(est.value.gamma, est.value.trace);
  EXPECT_GT(est.value.trace, 0.0);
}
