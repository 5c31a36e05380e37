// Copyright 2026 The carleson-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"

namespace carleson_lab {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
  if (order < 1) throw Error(ErrorKind::argument, "Gauss-Legendre order must be positive");
  std::vector<double> nodes(order), weights(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      derivative = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[order - 1 - i] = x;
    weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * derivative * derivative);
  }
  return {nodes, weights};
}

inline constexpr std::size_t default_max_cells = std::size_t{1} << 23;

/// Cell cap: CARLESON_LAB_MAX_CELLS when set, otherwise default_max_cells.
inline std::size_t configured_max_cells() {
  if (const char* env = std::getenv("CARLESON_LAB_MAX_CELLS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return default_max_cells;
}

struct QuadratureOptions {
  int depth = 8;
  /// Minimum angular cell count per stratum (power of two, at least 4).
  int angular_base = 16;
  /// Gauss-Legendre points per stratum in the radial direction; 1 is the
  /// polar midpoint rule.
  int radial_order = 1;
  /// Multiplies every angular count (power of two).
  int angular_oversample = 1;
  /// 0 selects configured_max_cells().
  std::size_t max_cells = 0;
};

/// One radial sub-ring of a stratum; its nodes are equally spaced in angle
/// at the centres of angular cells [a/n, (a+1)/n) (turns).
struct QuadratureRing {
  int stratum = 0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double radius = 0.0;
  double cell_area = 0.0;
  std::int64_t angular_count = 0;
  std::size_t offset = 0;
};

/// Polar quadrature of the unit disk (normalized to area 1) whose strata
/// [1 - 2^-j, 1 - 2^-(j+1)) line up with the radii of dyadic Carleson boxes,
/// so every box Q_I of grid 0 with |I| >= 2^-depth is a union of cells. Boxes
/// of the shifted grid cut some cells; integrals over them split those cells
/// by angular overlap.
class DiskQuadrature {
 public:
  DiskQuadrature() = default;

  int depth() const { return options_.depth; }
  const QuadratureOptions& options() const { return options_; }
  std::size_t size() const { return points_.size(); }

  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& areas() const { return areas_; }
  const std::vector<QuadratureRing>& rings() const { return rings_; }

  Point point(std::size_t i) const { return points_[i]; }
  double area(std::size_t i) const { return areas_[i]; }
  int ring_of(std::size_t i) const { return ring_index_[i]; }
  int stratum_of(std::size_t i) const { return rings_[ring_index_[i]].stratum; }

  std::int64_t angular_index(std::size_t i) const {
    return static_cast<std::int64_t>(i - rings_[ring_index_[i]].offset);
  }
  std::int64_t angular_count(std::size_t i) const { return rings_[ring_index_[i]].angular_count; }

  /// Angle of node i in turns.
  double node_turns(std::size_t i) const {
    return (static_cast<double>(angular_index(i)) + 0.5) / static_cast<double>(angular_count(i));
  }

  /// Values of f at every node.
  template <class F>
  auto sample(F&& f) const {
    using R = decltype(f(Point{}));
    std::vector<R> out(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) out[i] = f(points_[i]);
    return out;
  }

  /// Elementwise value * cell area, the per-node contribution to an integral.
  template <class T>
  std::vector<T> weighted(std::span<const T> values) const {
    std::vector<T> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * areas_[i];
    return out;
  }

  template <class T>
  T integrate(std::span<const T> values) const {
    T sum{};
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * areas_[i];
    return sum;
  }

  friend DiskQuadrature build_quadrature(const QuadratureOptions& options);

 private:
  QuadratureOptions options_;
  std::vector<QuadratureRing> rings_;
  std::vector<Point> points_;
  std::vector<double> areas_;
  std::vector<int> ring_index_;
};

inline bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

inline double stratum_inner_radius(int stratum) {
  return stratum == 0 ? 0.0 : 1.0 - std::ldexp(1.0, -stratum);
}

inline double stratum_outer_radius(int stratum, int depth) {
  return stratum >= depth ? 1.0 : 1.0 - std::ldexp(1.0, -stratum - 1);
}

inline std::int64_t stratum_angular_count(const QuadratureOptions& o, int stratum) {
  const std::int64_t base = o.angular_base;
  const std::int64_t dyadic = std::int64_t{1} << stratum;
  return o.angular_oversample * (dyadic > base ? dyadic : base);
}

inline DiskQuadrature build_quadrature(const QuadratureOptions& options) {
  if (options.depth < 1 || options.depth > 40) {
    throw Error(ErrorKind::argument, "quadrature depth must lie in [1, 40]");
  }
  if (options.angular_base < 4 || !is_power_of_two(options.angular_base)) {
    throw Error(ErrorKind::argument, "angular_base must be a power of two >= 4");
  }
  if (options.angular_oversample < 1 || !is_power_of_two(options.angular_oversample)) {
    throw Error(ErrorKind::argument, "angular_oversample must be a power of two");
  }
  if (options.radial_order < 1 || options.radial_order > 32) {
    throw Error(ErrorKind::argument, "radial_order must lie in [1, 32]");
  }
  const std::size_t cap = options.max_cells == 0 ? configured_max_cells() : options.max_cells;
  std::size_t total = 0;
  for (int k = 0; k <= options.depth; ++k) {
    total += static_cast<std::size_t>(stratum_angular_count(options, k)) *
             static_cast<std::size_t>(options.radial_order);
    if (total > cap) {
      throw Error(ErrorKind::memory_guard, "quadrature would need more than " +
                                               std::to_string(cap) + " cells");
    }
  }

  DiskQuadrature quad;
  quad.options_ = options;
  quad.points_.reserve(total);
  quad.areas_.reserve(total);
  quad.ring_index_.reserve(total);
  const auto [gl_nodes, gl_weights] = gauss_legendre(options.radial_order);

  for (int k = 0; k <= options.depth; ++k) {
    const double a = stratum_inner_radius(k);
    const double b = stratum_outer_radius(k, options.depth);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const std::int64_t n = stratum_angular_count(options, k);
    double lo = a;
    for (int g = 0; g < options.radial_order; ++g) {
      const double r = mid + half * gl_nodes[g];
      // int r dr over the sub-ring; its boundaries follow the cumulative weight.
      const double radial_weight = half * gl_weights[g] * r;
      const double hi = g + 1 == options.radial_order
                            ? b
                            : std::sqrt(lo * lo + 2.0 * radial_weight);
      QuadratureRing ring;
      ring.stratum = k;
      ring.r_lo = lo;
      ring.r_hi = hi;
      ring.radius = r;
      ring.cell_area = 2.0 * radial_weight / static_cast<double>(n);
      ring.angular_count = n;
      ring.offset = quad.points_.size();
      const int ring_id = static_cast<int>(quad.rings_.size());
      quad.rings_.push_back(ring);
      for (std::int64_t j = 0; j < n; ++j) {
        const double turns = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
        quad.points_.push_back(std::polar(r, two_pi * turns));
        quad.areas_.push_back(ring.cell_area);
        quad.ring_index_.push_back(ring_id);
      }
      lo = hi;
    }
  }
  return quad;
}

inline DiskQuadrature build_quadrature(int depth, int angular_base, int radial_order = 1,
                                       int angular_oversample = 1) {
  QuadratureOptions o;
  o.depth = depth;
  o.angular_base = angular_base;
  o.radial_order = radial_order;
  o.angular_oversample = angular_oversample;
  return build_quadrature(o);
}

// ---------------------------------------------------------------------------
// Box integrals
// ---------------------------------------------------------------------------

/// Calls fn(position, fraction) for the (at most two) level-L arcs of grid g
/// that overlap angular cell [a/n, (a+1)/n); requires n >= 2^L.
template <class Fn>
void for_each_cell_overlap(Grid g, int level, std::int64_t a, std::int64_t n, Fn&& fn) {
  const double scale = std::ldexp(1.0, level);
  const std::int64_t count = level_count(level);
  const double u0 =
      wrap_turns(static_cast<double>(a) / static_cast<double>(n) - grid_shift_turns(g)) * scale;
  const double width = scale / static_cast<double>(n);
  auto m = static_cast<std::int64_t>(std::floor(u0));
  if (m >= count) m = count - 1;
  const double first = std::min(1.0, (static_cast<double>(m + 1) - u0) / width);
  if (first >= 1.0 - 1e-12) {
    fn(m, 1.0);
    return;
  }
  fn(m, first);
  fn((m + 1) % count, 1.0 - first);
}

/// Integrals over every box Q_I of one grid at levels 0..depth.
template <class T>
struct BoxSums {
  Grid grid = Grid::zero;
  int depth = 0;
  std::vector<std::vector<T>> levels;

  const T& operator()(int level, std::int64_t position) const {
    return levels[static_cast<std::size_t>(level)][static_cast<std::size_t>(position)];
  }
  const T& operator()(const DyadicIndex& d) const { return (*this)(d.level, d.position); }
};

/// Bottom-up aggregation: box(j, m) = ring_j(m) + box(j+1, 2m) + box(j+1, 2m+1)
/// where ring_j collects the stratum-j cells. cell_values must already carry
/// the cell areas. Cost is O(cells + boxes).
template <class T>
BoxSums<T> box_sums(const DiskQuadrature& quad, Grid grid, int depth,
                    std::span<const T> cell_values) {
  if (depth < 0 || depth > quad.depth()) {
    throw Error(ErrorKind::resolution, "box depth " + std::to_string(depth) +
                                           " exceeds quadrature depth " +
                                           std::to_string(quad.depth()));
  }
  BoxSums<T> sums;
  sums.grid = grid;
  sums.depth = depth;
  sums.levels.resize(static_cast<std::size_t>(depth) + 1);
  for (int j = 0; j <= depth; ++j) {
    sums.levels[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(level_count(j)), T{});
  }
  for (const QuadratureRing& ring : quad.rings()) {
    const int level = std::min(ring.stratum, depth);
    auto& target = sums.levels[static_cast<std::size_t>(level)];
    for (std::int64_t a = 0; a < ring.angular_count; ++a) {
      const T& v = cell_values[ring.offset + static_cast<std::size_t>(a)];
      for_each_cell_overlap(grid, level, a, ring.angular_count,
                            [&](std::int64_t m, double frac) {
                              target[static_cast<std::size_t>(m)] += v * frac;
                            });
    }
  }
  for (int j = depth - 1; j >= 0; --j) {
    auto& here = sums.levels[static_cast<std::size_t>(j)];
    const auto& below = sums.levels[static_cast<std::size_t>(j) + 1];
    for (std::size_t m = 0; m < here.size(); ++m) here[m] += below[2 * m] + below[2 * m + 1];
  }
  return sums;
}

/// Integral over the sector {inner_radius <= |z| < 1, angle in arc} of a
/// cell-constant quantity (cell_values already carry the cell areas). Cells
/// cut by the sector contribute by area fraction.
template <class T>
T sector_integral(const DiskQuadrature& quad, std::span<const T> cell_values,
                  double inner_radius, const Arc& arc) {
  T total{};
  const double s = arc.start_turns();
  for (const QuadratureRing& ring : quad.rings()) {
    if (ring.r_hi <= inner_radius) continue;
    const double lo = std::max(ring.r_lo, inner_radius);
    const double radial = (ring.r_hi * ring.r_hi - lo * lo) / (ring.r_hi * ring.r_hi - ring.r_lo * ring.r_lo);
    const auto n = ring.angular_count;
    const double nd = static_cast<double>(n);
    if (arc.is_full()) {
      T sum{};
      for (std::int64_t a = 0; a < n; ++a) sum += cell_values[ring.offset + static_cast<std::size_t>(a)];
      total += sum * radial;
      continue;
    }
    const double begin = s * nd;
    const double end = (s + arc.length) * nd;
    const auto first = static_cast<std::int64_t>(std::floor(begin));
    const auto last = static_cast<std::int64_t>(std::ceil(end));
    T sum{};
    for (std::int64_t c = first; c < last; ++c) {
      const double overlap = std::min(static_cast<double>(c + 1), end) - std::max(static_cast<double>(c), begin);
      if (overlap <= 0.0) continue;
      sum += cell_values[ring.offset + static_cast<std::size_t>(((c % n) + n) % n)] * overlap;
    }
    total += sum * radial;
  }
  return total;
}

}  // namespace carleson_lab
