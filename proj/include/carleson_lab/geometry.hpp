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

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>

#include "carleson_lab/errors.hpp"

namespace carleson_lab {

using Point = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Slack, in turns, for arc-in-arc containment. Point membership is exact.
inline constexpr double arc_tolerance = 1e-12;

/// Reduces an angle measured in turns (fractions of the circle) to [0, 1).
inline double wrap_turns(double t) {
  t -= std::floor(t);
  return t >= 1.0 ? 0.0 : t;
}

/// Angle of z in turns; the angle of 0 is taken to be 0.
inline double angle_turns(Point z) {
  if (z == Point{}) return 0.0;
  return wrap_turns(std::arg(z) / two_pi);
}

// ---------------------------------------------------------------------------
// Arcs
// ---------------------------------------------------------------------------

/// Half-open arc [start, start + 2*pi*length) of the unit circle, taken
/// modulo 2*pi. start is in radians, length is the fraction of the circle.
struct Arc {
  double start = 0.0;
  double length = 1.0;

  static Arc from_turns(double start_turns, double length) {
    return Arc{two_pi * wrap_turns(start_turns), length};
  }

  double start_turns() const { return wrap_turns(start / two_pi); }
  bool is_full() const { return length >= 1.0; }
  bool wraps() const { return start_turns() + length > 1.0; }

  /// Exact half-open membership of an angle given in turns.
  bool contains_turns(double t) const {
    if (is_full()) return true;
    return wrap_turns(t - start_turns()) < length;
  }

  bool contains_point_angle(Point z) const { return contains_turns(angle_turns(z)); }

  /// True when other is a sub-arc of this one, up to arc_tolerance.
  bool contains(const Arc& other) const {
    if (is_full()) return true;
    if (other.length > length + arc_tolerance) return false;
    double offset = wrap_turns(other.start_turns() - start_turns());
    if (offset > 1.0 - arc_tolerance) offset -= 1.0;
    return offset >= -arc_tolerance && offset + other.length <= length + arc_tolerance;
  }
};

/// Validating constructor: length must lie in (0, 1]; start is wrapped.
inline Arc make_arc(double start, double length) {
  if (!(length > 0.0) || length > 1.0 || !std::isfinite(start)) {
    throw Error(ErrorKind::argument, "arc length must lie in (0, 1] and start must be finite");
  }
  return Arc{two_pi * wrap_turns(start / two_pi), length};
}

// ---------------------------------------------------------------------------
// Dyadic grids
// ---------------------------------------------------------------------------

/// The standard binary grid and its copy rotated by a third of a turn.
enum class Grid { zero, third };

inline constexpr std::array<Grid, 2> both_grids{Grid::zero, Grid::third};

inline double grid_shift_turns(Grid g) { return g == Grid::zero ? 0.0 : 1.0 / 3.0; }

inline const char* to_string(Grid g) { return g == Grid::zero ? "0" : "1/3"; }

struct GeometryLimits {
  int max_depth = 24;
};

struct DyadicIndex {
  Grid grid = Grid::zero;
  int level = 0;
  std::int64_t position = 0;

  friend bool operator==(const DyadicIndex&, const DyadicIndex&) = default;
};

inline std::string to_string(const DyadicIndex& d) {
  return std::string("(") + to_string(d.grid) + ", " + std::to_string(d.level) + ", " +
         std::to_string(d.position) + ")";
}

inline double dyadic_length(int level) { return std::ldexp(1.0, -level); }

inline std::int64_t level_count(int level) { return std::int64_t{1} << level; }

/// Position of the level-j arc of the grid that contains the angle t (turns).
inline std::int64_t dyadic_position(Grid g, int level, double t) {
  const double u = wrap_turns(t - grid_shift_turns(g)) * std::ldexp(1.0, level);
  const auto m = static_cast<std::int64_t>(std::floor(u));
  return std::clamp<std::int64_t>(m, 0, level_count(level) - 1);
}

inline double dyadic_start_turns(Grid g, int level, std::int64_t position) {
  return wrap_turns(std::ldexp(static_cast<double>(position), -level) + grid_shift_turns(g));
}

/// The arc [2*pi*m/2^j + shift, 2*pi*(m+1)/2^j + shift) mod 2*pi.
inline Arc dyadic_interval(Grid g, int level, std::int64_t position) {
  if (level < 0 || level > 62) throw Error(ErrorKind::argument, "dyadic level out of range");
  if (position < 0 || position >= level_count(level)) {
    throw Error(ErrorKind::argument, "dyadic position must satisfy 0 <= m < 2^level");
  }
  return Arc::from_turns(dyadic_start_turns(g, level, position), dyadic_length(level));
}

inline Arc dyadic_interval(const DyadicIndex& d) {
  return dyadic_interval(d.grid, d.level, d.position);
}

inline std::pair<DyadicIndex, DyadicIndex> box_children(const DyadicIndex& d,
                                                        const GeometryLimits& limits = {}) {
  if (d.level >= limits.max_depth) {
    throw Error(ErrorKind::depth, "cannot split a box at the maximum depth " +
                                      std::to_string(limits.max_depth));
  }
  return {DyadicIndex{d.grid, d.level + 1, 2 * d.position},
          DyadicIndex{d.grid, d.level + 1, 2 * d.position + 1}};
}

// ---------------------------------------------------------------------------
// Carleson boxes
// ---------------------------------------------------------------------------

enum class BoxKind { full, top_half };

/// Q_I = {1 - l <= |z| < 1, z/|z| in I}; the top half B_I uses 1 - l/2 < |z|.
struct CarlesonBox {
  Arc arc;
  BoxKind kind = BoxKind::full;

  double inner_radius() const {
    return kind == BoxKind::full ? 1.0 - arc.length : 1.0 - 0.5 * arc.length;
  }

  bool contains(Point z) const {
    const double r = std::abs(z);
    if (r >= 1.0) return false;
    const bool radial_ok = kind == BoxKind::full ? r >= inner_radius() : r > inner_radius();
    return radial_ok && arc.contains_point_angle(z);
  }
};

/// Normalized area (the disk has area 1) of a box over an arc of length l.
inline double box_area(double length, BoxKind kind) {
  if (kind == BoxKind::full) return length * length * (2.0 - length);
  const double inner = 1.0 - 0.5 * length;
  return length * (1.0 - inner * inner);
}

inline double box_area(const CarlesonBox& box) { return box_area(box.arc.length, box.kind); }

inline CarlesonBox dyadic_box(const DyadicIndex& d, BoxKind kind = BoxKind::full) {
  return CarlesonBox{dyadic_interval(d), kind};
}

// ---------------------------------------------------------------------------
// Covering lemmas
// ---------------------------------------------------------------------------

namespace detail {

/// Finest level whose arcs are at least as long as l, capped at max_depth.
inline int covering_start_level(double length, int max_depth) {
  int level = 0;
  while (level < max_depth && dyadic_length(level + 1) >= length * (1.0 - arc_tolerance)) {
    ++level;
  }
  return level;
}

/// Scans levels from coarse_start downwards over both grids (grid 0 first)
/// and returns the first index whose arc contains j and satisfies accept.
template <class Accept>
DyadicIndex scan_cover(const Arc& j, int start_level, Accept&& accept) {
  for (int level = start_level; level >= 0; --level) {
    for (Grid g : both_grids) {
      const std::int64_t m = dyadic_position(g, level, j.start_turns());
      // The neighbour matters only when j starts within tolerance of a breakpoint.
      for (std::int64_t candidate : {m, (m + 1) % level_count(level)}) {
        const DyadicIndex index{g, level, candidate};
        if (dyadic_interval(index).contains(j) && accept(index)) return index;
      }
    }
  }
  return DyadicIndex{Grid::zero, 0, 0};
}

}  // namespace detail

/// Smallest arc L of either grid with J inside L; |L| <= 6|J| whenever the
/// search does not hit the depth cap. Ties go to grid 0.
inline DyadicIndex mei_cover(const Arc& j, const GeometryLimits& limits = {}) {
  if (!(j.length > 0.0) || j.length > 1.0) {
    throw Error(ErrorKind::argument, "arc length must lie in (0, 1]");
  }
  if (j.is_full()) return DyadicIndex{Grid::zero, 0, 0};
  const int start = detail::covering_start_level(j.length, limits.max_depth);
  return detail::scan_cover(j, start, [](const DyadicIndex&) { return true; });
}

struct BridgeBox {
  DyadicIndex index;
  /// |1 - z conj(w)| / area(Q_L)^{1/2}
  double ratio = 0.0;
  /// Arc handed to the covering search.
  Arc hull;
};

/// Shortest closed arc through the angles of z and w, widened symmetrically
/// to length at least 1 - min(|z|, |w|) so that both points can sit in a box.
inline Arc bridge_hull(Point z, Point w) {
  const double tz = angle_turns(z);
  const double tw = angle_turns(w);
  const double ccw = wrap_turns(tw - tz);
  double start = ccw <= 0.5 ? tz : tw;
  double length = ccw <= 0.5 ? ccw : 1.0 - ccw;
  const double min_length = 1.0 - std::min(std::abs(z), std::abs(w));
  if (length < min_length) {
    start = wrap_turns(start - 0.5 * (min_length - length));
    length = min_length;
  }
  if (length >= 1.0) return Arc{0.0, 1.0};
  return Arc::from_turns(start, length);
}

/// A box of either grid containing both z and w whose area is comparable to
/// |1 - z conj(w)|^2. The arc search follows mei_cover; boxes that contain the
/// hull but not both points (endpoints of the closed hull) are skipped.
inline BridgeBox bridge_box(Point z, Point w, const GeometryLimits& limits = {}) {
  if (!(std::abs(z) < 1.0) || !(std::abs(w) < 1.0)) {
    throw Error(ErrorKind::argument, "bridge_box needs points strictly inside the disk");
  }
  const Arc hull = bridge_hull(z, w);
  DyadicIndex index{Grid::zero, 0, 0};
  if (!hull.is_full()) {
    const int start = detail::covering_start_level(hull.length, limits.max_depth);
    index = detail::scan_cover(hull, start, [&](const DyadicIndex& d) {
      const CarlesonBox box = dyadic_box(d);
      return box.contains(z) && box.contains(w);
    });
  }
  const double area = box_area(dyadic_length(index.level), BoxKind::full);
  return BridgeBox{index, std::abs(1.0 - z * std::conj(w)) / std::sqrt(area), hull};
}

}  // namespace carleson_lab
