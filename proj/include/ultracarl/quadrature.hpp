#pragma once

// Midpoint tensor rules over U intersected with D_p and over its boundary
// trace, and deterministic summation.

#include "ultracarl/domain.hpp"

namespace ultracarl {

struct GridResolution {
  int time_cells = 32;       // per time axis over t(p) +- R+; rounded up to even
  int space_cells = 32;      // per spatial axis over the bounding box
  int surface_cells = 128;   // boundary angular cells (ball) or cells per face axis (box)
  std::size_t node_cap = 10'000'000;

  GridResolution doubled() const {
    GridResolution r = *this;
    r.time_cells *= 2;
    r.space_cells *= 2;
    r.surface_cells *= 2;
    return r;
  }
};

struct VolumeNode {
  SpaceTimePoint point;
  double weight = 0.0;
  std::size_t slice = 0;  // index into the rule's time grid
};

struct VolumeRule {
  std::vector<VolumeNode> nodes;
  TimeGrid time_grid;
  std::vector<GridAxis> space_axes;
  std::size_t excluded = 0;  // cells dropped by the U or D_p test
  double rplus = 0.0;
};

struct SurfaceRule {
  std::vector<BoundarySample> samples;  // all with f_p > 0
};

/// Time grid over t(p) +- R+ with an even cell count per axis, so no node
/// sits on tau_p = 0.
inline TimeGrid window_time_grid(const ReferencePoint& p, double rplus, int cells) {
  if (cells < 2) throw Error(ErrorCode::invalid_params, "time_cells must be at least 2");
  if (cells % 2) ++cells;
  TimeGrid grid;
  for (Eigen::Index i = 0; i < p.t.size(); ++i) grid.axes.push_back({p.t[i] - rplus, 2.0 * rplus / cells, cells});
  return grid;
}

/// Spatial axes covering the bounding box of Omega within x(p) +- R+, with
/// x(p) on cell vertices so no node sits on r_p = 0.
inline std::vector<GridAxis> window_space_axes(const DomainModel& dom, const ReferencePoint& p,
                                               double rplus, int cells) {
  if (cells < 1) throw Error(ErrorCode::invalid_params, "space_cells must be positive");
  auto [lo, hi] = spatial_bounds(dom);
  std::vector<GridAxis> axes;
  for (int j = 0; j < dom.sig.n(); ++j) {
    const double a = std::max(lo[j], p.x[j] - rplus);
    const double b = std::min(hi[j], p.x[j] + rplus);
    if (!(b > a)) throw Error(ErrorCode::empty_region, "domain does not meet exterior region");
    const double h = (b - a) / cells;
    const double start = p.x[j] + std::floor((a - p.x[j]) / h) * h;
    const int count = static_cast<int>(std::ceil((b - start) / h - 1e-9));
    axes.push_back({start, h, std::max(count, 1)});
  }
  return axes;
}

inline VolumeRule build_volume_rule(const DomainModel& dom, const ReferencePoint& p, double rplus,
                                    const GridResolution& res, const Parallelism& par = {}) {
  check_dims(p, dom.sig, "p");
  require_temporal_clearance(dom, p, rplus);
  VolumeRule rule;
  rule.rplus = rplus;
  rule.time_grid = window_time_grid(p, rplus, res.time_cells);
  rule.space_axes = window_space_axes(dom, p, rplus, res.space_cells);

  std::size_t space_count = 1;
  double space_cell = 1.0;
  for (const auto& a : rule.space_axes) {
    space_count *= static_cast<std::size_t>(a.count);
    space_cell *= a.step;
  }
  const std::size_t slices = rule.time_grid.slice_count();
  const double total = static_cast<double>(slices) * static_cast<double>(space_count);
  if (total > static_cast<double>(res.node_cap)) {
    throw Error(ErrorCode::node_cap_exceeded,
                "grid has " + std::to_string(static_cast<long long>(total)) + " cells, cap is " +
                    std::to_string(res.node_cap) + "; lower time_cells/space_cells or raise node_cap");
  }
  const double weight = rule.time_grid.cell_volume() * space_cell;
  const int n = dom.sig.n();

  std::vector<std::vector<VolumeNode>> per_slice(slices);
  std::vector<std::size_t> dropped(slices, 0);
  parallel_for(slices, par, [&](std::size_t s) {
    const Vector t = rule.time_grid.node(s);
    const double tau2 = (t - p.t).squaredNorm();
    Vector x(n);
    for (std::size_t k = 0; k < space_count; ++k) {
      std::size_t idx = k;
      for (int j = n; j-- > 0;) {
        const auto c = static_cast<std::size_t>(rule.space_axes[j].count);
        x[j] = rule.space_axes[j].node(static_cast<int>(idx % c));
        idx /= c;
      }
      const SpaceTimePoint q{t, x};
      const double r2 = (x - p.x).squaredNorm();
      if (r2 > tau2 && contains(dom, q) && to_null_frame(q, p, dom.sig).f > 0.0) {
        per_slice[s].push_back({q, weight, s});
      } else {
        ++dropped[s];
      }
    }
  });
  for (std::size_t s = 0; s < slices; ++s) {
    rule.excluded += dropped[s];
    for (auto& node : per_slice[s]) rule.nodes.push_back(std::move(node));
  }
  if (rule.nodes.empty()) throw Error(ErrorCode::empty_region, "volume rule has no nodes in U and D_p");
  return rule;
}

/// Boundary samples on the volume rule's time grid, restricted to f_p > 0.
inline SurfaceRule build_surface_rule(const DomainModel& dom, const ReferencePoint& p,
                                      const VolumeRule& volume, int surface_cells) {
  BoundaryResolution br;
  br.surface_cells = surface_cells;
  br.time_grid = volume.time_grid;
  SurfaceRule out;
  for (auto& s : sample_boundary(dom, br)) {
    if (in_time_cube(dom, s.point.t) && to_null_frame(s.point, p, dom.sig).f > 0.0) {
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

namespace detail {
inline void require_finite(double value, std::size_t index, const SpaceTimePoint& q) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::non_finite, "integrand is " + std::to_string(value) + " at node " +
                                           std::to_string(index) + " " + describe(q));
  }
}
}  // namespace detail

/// Sum of weight * integrand(node) with a fixed pairwise tree, independent of
/// the worker count.
template <class Fn>
double integrate(const VolumeRule& rule, Fn&& integrand, const Parallelism& par = {}) {
  std::vector<double> terms(rule.nodes.size());
  parallel_for(rule.nodes.size(), par, [&](std::size_t i) {
    const double v = integrand(rule.nodes[i]);
    detail::require_finite(v, i, rule.nodes[i].point);
    terms[i] = rule.nodes[i].weight * v;
  });
  return pairwise_sum(terms);
}

template <class Fn>
double integrate(const SurfaceRule& rule, Fn&& integrand, const Parallelism& par = {}) {
  std::vector<double> terms(rule.samples.size());
  parallel_for(rule.samples.size(), par, [&](std::size_t i) {
    const double v = integrand(rule.samples[i]);
    detail::require_finite(v, i, rule.samples[i].point);
    terms[i] = rule.samples[i].weight * v;
  });
  return pairwise_sum(terms);
}

/// Several integrals in one pass. fn(item, out) writes k values into out.
template <class Rule, class Fn>
std::vector<double> integrate_many(const Rule& items, std::size_t k, Fn&& fn, const Parallelism& par = {}) {
  const std::size_t count = items.size();
  std::vector<double> table(count * k);
  parallel_for(count, par, [&](std::size_t i) {
    std::span<double> row(table.data() + i * k, k);
    fn(items[i], row);
    for (double& v : row) {
      detail::require_finite(v, i, items[i].point);
      v *= items[i].weight;
    }
  });
  std::vector<double> out(k);
  std::vector<double> column(count);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < count; ++i) column[i] = table[i * k + j];
    out[j] = pairwise_sum(column);
  }
  return out;
}

inline double total_weight(const VolumeRule& rule) {
  return integrate(rule, [](const VolumeNode&) { return 1.0; });
}

}  // namespace ultracarl
