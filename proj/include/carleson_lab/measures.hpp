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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/random.hpp"
#include "carleson_lab/weights.hpp"

namespace carleson_lab {

/// Mass of the annulus {1 - h <= |z| < 1} under (1 - |z|)^a dA_norm:
/// 2 int_0^h s^a (1 - s) ds.
inline double radial_shell_mass(double a, double h) {
  if (!(a > -1.0)) throw Error(ErrorKind::infinite_mass, "radial exponent <= -1 has infinite mass");
  return 2.0 * (std::pow(h, a + 1.0) / (a + 1.0) - std::pow(h, a + 2.0) / (a + 2.0));
}

/// Closed-form box mass for radial weights: l * shell(l) for Q, l * shell(l/2) for B.
inline double radial_box_mass(double a, double length, BoxKind kind) {
  return length * radial_shell_mass(a, kind == BoxKind::full ? length : 0.5 * length);
}

/// Per-cell masses density(z_i) * area_i of a weight on a quadrature.
inline std::vector<double> cell_masses(const Weight& w, const DiskQuadrature& quad) {
  std::vector<double> out(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) out[i] = w.density(quad.point(i)) * quad.area(i);
  return out;
}

inline void check_resolution(const CarlesonBox& box, const DiskQuadrature& quad) {
  if (box.arc.length < dyadic_length(quad.depth()) * (1.0 - arc_tolerance)) {
    throw Error(ErrorKind::resolution, "box of length " + std::to_string(box.arc.length) +
                                           " is finer than quadrature depth " +
                                           std::to_string(quad.depth()));
  }
}

/// Box mass from precomputed cell masses.
inline double box_mass(std::span<const double> cell_mass, const CarlesonBox& box,
                       const DiskQuadrature& quad) {
  check_resolution(box, quad);
  return sector_integral(quad, cell_mass, box.inner_radius(), box.arc);
}

/// |box|_w. Radial families use the closed form and ignore quad.
inline double box_mass(const Weight& w, const CarlesonBox& box, const DiskQuadrature* quad = nullptr) {
  if (const auto a = w.radial_exponent()) return radial_box_mass(*a, box.arc.length, box.kind);
  if (quad == nullptr) {
    throw Error(ErrorKind::resolution, "weight '" + w.spec() + "' needs a quadrature for box masses");
  }
  const auto masses = cell_masses(w, *quad);
  return box_mass(std::span<const double>(masses), box, *quad);
}

inline double total_mass(const Weight& w, const DiskQuadrature* quad = nullptr) {
  return box_mass(w, CarlesonBox{Arc{0.0, 1.0}, BoxKind::full}, quad);
}

/// Masses of Q_I and B_I for every arc of one grid at levels 0..depth.
class BoxMassTable {
 public:
  static BoxMassTable build(const Weight& w, Grid grid, int depth,
                            const DiskQuadrature* quad = nullptr) {
    if (depth < 0) throw Error(ErrorKind::argument, "depth must be >= 0");
    BoxMassTable t;
    t.grid_ = grid;
    t.depth_ = depth;
    t.tag_ = w.spec();
    t.full_.resize(static_cast<std::size_t>(depth) + 1);
    t.top_.resize(static_cast<std::size_t>(depth) + 1);
    if (const auto a = w.radial_exponent()) {
      t.closed_form_ = true;
      for (int j = 0; j <= depth; ++j) {
        const double l = dyadic_length(j);
        t.full_[j].assign(static_cast<std::size_t>(level_count(j)), radial_box_mass(*a, l, BoxKind::full));
        t.top_[j].assign(static_cast<std::size_t>(level_count(j)), radial_box_mass(*a, l, BoxKind::top_half));
      }
      return t;
    }
    if (quad == nullptr) {
      throw Error(ErrorKind::resolution, "weight '" + w.spec() + "' needs a quadrature for box masses");
    }
    const auto masses = cell_masses(w, *quad);
    return build_from_cells(masses, *quad, grid, depth, w.spec());
  }

  static BoxMassTable build_from_cells(std::span<const double> masses, const DiskQuadrature& quad,
                                       Grid grid, int depth, std::string tag) {
    if (depth > quad.depth()) {
      throw Error(ErrorKind::resolution, "table depth exceeds quadrature depth");
    }
    BoxMassTable t;
    t.grid_ = grid;
    t.depth_ = depth;
    t.tag_ = std::move(tag);
    const int sum_depth = std::min(depth + 1, quad.depth());
    BoxSums<double> sums = box_sums(quad, grid, sum_depth, masses);
    t.full_.assign(sums.levels.begin(), sums.levels.begin() + depth + 1);
    t.top_.resize(static_cast<std::size_t>(depth) + 1);
    for (int j = 0; j <= depth; ++j) {
      auto& top = t.top_[j];
      top.resize(static_cast<std::size_t>(level_count(j)));
      for (std::int64_t m = 0; m < level_count(j); ++m) {
        if (j + 1 <= sum_depth) {
          top[m] = sums(j + 1, 2 * m) + sums(j + 1, 2 * m + 1);
        } else {
          const Arc arc = dyadic_interval(grid, j, m);
          top[m] = sector_integral(quad, masses, 1.0 - 0.5 * arc.length, arc);
        }
      }
    }
    return t;
  }

  Grid grid() const { return grid_; }
  int depth() const { return depth_; }
  const std::string& weight_tag() const { return tag_; }
  bool closed_form() const { return closed_form_; }

  double full(int level, std::int64_t m) const { return full_[level][static_cast<std::size_t>(m)]; }
  double top(int level, std::int64_t m) const { return top_[level][static_cast<std::size_t>(m)]; }
  double full(const DyadicIndex& d) const { return full(d.level, d.position); }
  double top(const DyadicIndex& d) const { return top(d.level, d.position); }
  /// Mass of Q_I \ B_I.
  double inner_ring(const DyadicIndex& d) const { return full(d) - top(d); }

  const std::vector<double>& level(int j) const { return full_[j]; }

 private:
  Grid grid_ = Grid::zero;
  int depth_ = 0;
  std::string tag_;
  bool closed_form_ = false;
  std::vector<std::vector<double>> full_;
  std::vector<std::vector<double>> top_;
};

// ---------------------------------------------------------------------------
// Reverse doubling
// ---------------------------------------------------------------------------

struct ReverseDoublingOptions {
  double margin = 1e-6;
  std::uint64_t seed = Rng::default_seed;
  /// Quadrature for non-radial weights; when null one is built at the
  /// requested depth with default_quadrature settings.
  const DiskQuadrature* quad = nullptr;
  QuadratureOptions default_quadrature{};
};

struct ReverseDoublingReport {
  double delta_hat = 0.0;
  Arc worst_arc;
  bool verdict = false;
  std::size_t arcs_tested = 0;
  int depth = 0;
  bool closed_form = false;
};

/// Largest |B_I|_w / |Q_I|_w over every arc of both grids at levels
/// 0..depth and random_arcs random arcs (uniform start, log-uniform length
/// in [2^-depth, 1]).
inline ReverseDoublingReport reverse_doubling_report(const Weight& w, int depth,
                                                     std::size_t random_arcs,
                                                     const ReverseDoublingOptions& options = {}) {
  if (!w.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + w.spec() + "' has infinite mass");
  if (depth < 0) throw Error(ErrorKind::argument, "depth must be >= 0");
  ReverseDoublingReport report;
  report.depth = depth;
  report.delta_hat = -1.0;

  const auto consider = [&](double top, double full, const Arc& arc) {
    if (!(full > 0.0)) {
      throw Error(ErrorKind::degenerate_weight, "zero mass box over arc starting at " +
                                                    std::to_string(arc.start) + " of length " +
                                                    std::to_string(arc.length));
    }
    const double ratio = top / full;
    ++report.arcs_tested;
    if (ratio > report.delta_hat) {
      report.delta_hat = ratio;
      report.worst_arc = arc;
    }
  };

  Rng rng(options.seed);
  const auto random_arc = [&]() {
    const double len = std::exp(std::log(dyadic_length(depth)) * rng.uniform());
    return Arc::from_turns(rng.uniform(), len);
  };

  if (const auto a = w.radial_exponent()) {
    report.closed_form = true;
    // Radial masses depend on the length only, so one arc per level stands
    // for the whole level of each grid.
    for (int j = 0; j <= depth; ++j) {
      const double l = dyadic_length(j);
      const double full = radial_box_mass(*a, l, BoxKind::full);
      const double top = radial_box_mass(*a, l, BoxKind::top_half);
      for (Grid g : both_grids) {
        consider(top, full, dyadic_interval(g, j, 0));
        report.arcs_tested += static_cast<std::size_t>(level_count(j)) - 1;
      }
    }
    for (std::size_t i = 0; i < random_arcs; ++i) {
      const Arc arc = random_arc();
      consider(radial_box_mass(*a, arc.length, BoxKind::top_half),
               radial_box_mass(*a, arc.length, BoxKind::full), arc);
    }
  } else {
    DiskQuadrature owned;
    const DiskQuadrature* quad = options.quad;
    if (quad == nullptr) {
      QuadratureOptions qo = options.default_quadrature;
      qo.depth = std::max(depth, 1);
      owned = build_quadrature(qo);
      quad = &owned;
    }
    if (depth > quad->depth()) {
      throw Error(ErrorKind::resolution, "reverse doubling depth exceeds quadrature depth");
    }
    const auto masses = cell_masses(w, *quad);
    for (Grid g : both_grids) {
      const BoxMassTable table = BoxMassTable::build_from_cells(masses, *quad, g, depth, w.spec());
      for (int j = 0; j <= depth; ++j) {
        for (std::int64_t m = 0; m < level_count(j); ++m) {
          consider(table.top(j, m), table.full(j, m), dyadic_interval(g, j, m));
        }
      }
    }
    for (std::size_t i = 0; i < random_arcs; ++i) {
      const Arc arc = random_arc();
      consider(sector_integral(*quad, std::span<const double>(masses), 1.0 - 0.5 * arc.length, arc),
               sector_integral(*quad, std::span<const double>(masses), 1.0 - arc.length, arc), arc);
    }
  }
  report.verdict = report.delta_hat < 1.0 - options.margin;
  return report;
}

// ---------------------------------------------------------------------------
// Doubling
// ---------------------------------------------------------------------------

struct DoublingOptions {
  std::uint64_t seed = Rng::default_seed;
  int angular_nodes = 128;
  int radial_nodes = 16;
  /// Radii are log-uniform in [min_radius, 1].
  double min_radius = 1e-3;
};

struct DoublingReport {
  double c_hat = 0.0;
  Point worst_center{};
  double worst_radius = 0.0;
  std::size_t samples = 0;
};

/// w-mass of B(z, r) intersected with the disk, by a polar rule centred at z:
/// trapezoid in the direction, Gauss-Legendre in the distance up to the
/// first exit from the disk.
inline double ball_mass(const Weight& w, Point z, double r, int angular_nodes = 128,
                        int radial_nodes = 16) {
  static thread_local std::pair<int, std::pair<std::vector<double>, std::vector<double>>> cache{0, {}};
  if (cache.first != radial_nodes) cache = {radial_nodes, gauss_legendre(radial_nodes)};
  const auto& [nodes, weights] = cache.second;
  const double rz2 = std::norm(z);
  double total = 0.0;
  for (int k = 0; k < angular_nodes; ++k) {
    const Point dir = std::polar(1.0, two_pi * (k + 0.5) / angular_nodes);
    const double b = std::real(std::conj(z) * dir);
    const double s_exit = -b + std::sqrt(std::max(0.0, b * b + 1.0 - rz2));
    const double s_max = std::min(r, s_exit);
    double ray = 0.0;
    for (int i = 0; i < radial_nodes; ++i) {
      const double s = 0.5 * s_max * (nodes[i] + 1.0);
      Point u = z + s * dir;
      if (std::abs(u) >= 1.0) u *= (1.0 - 1e-15) / std::abs(u);
      ray += weights[i] * s * w.density(u);
    }
    total += 0.5 * s_max * ray;
  }
  // (1/pi) * (2 pi / n) * sum
  return 2.0 * total / angular_nodes;
}

/// Largest sampled w(B(z, 2r) ∩ D) / w(B(z, r) ∩ D) over z uniform in the
/// disk and log-uniform r.
inline DoublingReport doubling_report(const Weight& w, std::size_t samples,
                                      const DoublingOptions& options = {}) {
  if (!w.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + w.spec() + "' has infinite mass");
  DoublingReport report;
  Rng rng(options.seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const Point z = rng.disk_point(1.0 - 1e-9);
    const double r = std::exp(std::log(options.min_radius) * rng.uniform());
    const double inner = ball_mass(w, z, r, options.angular_nodes, options.radial_nodes);
    if (!(inner > 0.0)) {
      throw Error(ErrorKind::degenerate_weight, "zero mass ball at |z| = " + std::to_string(std::abs(z)) +
                                                    ", r = " + std::to_string(r));
    }
    const double outer = ball_mass(w, z, 2.0 * r, options.angular_nodes, options.radial_nodes);
    const double ratio = outer / inner;
    if (ratio > report.c_hat) {
      report.c_hat = ratio;
      report.worst_center = z;
      report.worst_radius = r;
    }
    ++report.samples;
  }
  return report;
}

}  // namespace carleson_lab
