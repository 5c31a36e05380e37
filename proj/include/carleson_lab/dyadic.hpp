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
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"
#include "carleson_lab/kernels.hpp"
#include "carleson_lab/measures.hpp"
#include "carleson_lab/operators.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/random.hpp"
#include "carleson_lab/weights.hpp"

namespace carleson_lab {

// ---------------------------------------------------------------------------
// Exponents
// ---------------------------------------------------------------------------

struct ExponentConfig {
  double p = 2.0;
  double q = 2.0;
  double alpha = 1.0;

  static ExponentConfig make(double p, double q, double alpha) {
    if (!(p > 1.0) || !(q >= p) || !std::isfinite(q)) {
      throw Error(ErrorKind::argument, "exponents must satisfy 1 < p <= q < inf");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::argument, "alpha must be positive");
    return ExponentConfig{p, q, alpha};
  }

  double p_conjugate() const { return p / (p - 1.0); }
  double q_conjugate() const { return q / (q - 1.0); }
  double t() const { return q / p; }
};

/// Values on every box of one grid at levels 0..depth.
struct TreeFunction {
  Grid grid = Grid::zero;
  int depth = 0;
  std::vector<std::vector<double>> values;

  double operator()(int level, std::int64_t m) const {
    return values[static_cast<std::size_t>(level)][static_cast<std::size_t>(m)];
  }
  double operator()(const DyadicIndex& d) const { return (*this)(d.level, d.position); }
};

inline std::size_t grid_slot(Grid g) { return g == Grid::zero ? 0 : 1; }

// ---------------------------------------------------------------------------
// The dyadic model operator
// ---------------------------------------------------------------------------

/// Deepest level j <= depth whose boxes reach |z|, i.e. 1 - 2^-j <= |z|.
inline int box_level_of_radius(double r, int depth) {
  int level = 0;
  while (level < depth && 1.0 - dyadic_length(level + 1) <= r) ++level;
  return level;
}

/// K^beta_alpha acting on cell integrals c_j = f_j a_j:
///   out_i = sum over boxes Q ∋ z_i, level <= depth, of area(Q)^{-alpha/2} sum_j frac(j, Q) c_j.
/// Box integrals are aggregated bottom-up, then pushed down as prefix sums.
class DyadicOperator {
 public:
  DyadicOperator(Grid grid, double alpha, const DiskQuadrature& quad, int depth)
      : quad_(&quad), grid_(grid), alpha_(alpha), depth_(depth) {
    if (!(alpha > 0.0)) throw Error(ErrorKind::argument, "alpha must be positive");
    if (depth < 0 || depth > quad.depth()) {
      throw Error(ErrorKind::depth, "dyadic depth " + std::to_string(depth) + " exceeds quadrature depth " +
                                        std::to_string(quad.depth()));
    }
    for (int j = 0; j <= depth; ++j) {
      scale_.push_back(std::pow(box_area(dyadic_length(j), BoxKind::full), -0.5 * alpha));
    }
    node_level_.resize(quad.size());
    node_position_.resize(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const int level = std::min(quad.stratum_of(i), depth);
      node_level_[i] = level;
      node_position_[i] = dyadic_position(grid, level, quad.node_turns(i));
    }
  }

  Grid grid() const { return grid_; }
  double alpha() const { return alpha_; }
  int depth() const { return depth_; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(quad_->size()); }
  Eigen::Index cols() const { return rows(); }

  ComplexVector apply(const ComplexVector& c) const {
    const auto out = apply_cells<Complex>(std::span<const Complex>(c.data(), static_cast<std::size_t>(c.size())));
    return Eigen::Map<const ComplexVector>(out.data(), c.size());
  }

  ComplexVector apply_adjoint(const ComplexVector& y) const {
    const auto out = adjoint_nodes<Complex>(std::span<const Complex>(y.data(), static_cast<std::size_t>(y.size())));
    return Eigen::Map<const ComplexVector>(out.data(), y.size());
  }

  /// Prefix tables P(j, m) = sum over ancestors A of (j, m), itself included,
  /// of area(A)^{-alpha/2} times the integral over A.
  template <class T>
  std::vector<std::vector<T>> prefix_tables(std::span<const T> cell_integrals) const {
    BoxSums<T> sums = box_sums(*quad_, grid_, depth_, cell_integrals);
    return push_down(std::move(sums.levels));
  }

  template <class T>
  std::vector<T> apply_cells(std::span<const T> cell_integrals) const {
    const auto prefix = prefix_tables(cell_integrals);
    std::vector<T> out(quad_->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = prefix[static_cast<std::size_t>(node_level_[i])][static_cast<std::size_t>(node_position_[i])];
    }
    return out;
  }

  /// Value at an arbitrary point of the disk from prefix tables.
  template <class T>
  T evaluate(const std::vector<std::vector<T>>& prefix, Point z) const {
    const int level = box_level_of_radius(std::abs(z), depth_);
    return prefix[static_cast<std::size_t>(level)][static_cast<std::size_t>(dyadic_position(grid_, level, angle_turns(z)))];
  }

  /// Transpose: out_j = sum_Q frac(j, Q) area(Q)^{-alpha/2} sum_{z_i in Q} y_i.
  template <class T>
  std::vector<T> adjoint_nodes(std::span<const T> y) const {
    std::vector<std::vector<T>> levels(static_cast<std::size_t>(depth_) + 1);
    for (int j = 0; j <= depth_; ++j) levels[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(level_count(j)), T{});
    for (std::size_t i = 0; i < y.size(); ++i) {
      levels[static_cast<std::size_t>(node_level_[i])][static_cast<std::size_t>(node_position_[i])] += y[i];
    }
    for (int j = depth_ - 1; j >= 0; --j) {
      auto& here = levels[static_cast<std::size_t>(j)];
      const auto& below = levels[static_cast<std::size_t>(j) + 1];
      for (std::size_t m = 0; m < here.size(); ++m) here[m] += below[2 * m] + below[2 * m + 1];
    }
    const auto prefix = push_down(std::move(levels));
    std::vector<T> out(quad_->size(), T{});
    for (const QuadratureRing& ring : quad_->rings()) {
      const int level = std::min(ring.stratum, depth_);
      const auto& row = prefix[static_cast<std::size_t>(level)];
      for (std::int64_t a = 0; a < ring.angular_count; ++a) {
        T& target = out[ring.offset + static_cast<std::size_t>(a)];
        for_each_cell_overlap(grid_, level, a, ring.angular_count, [&](std::int64_t m, double frac) {
          target += row[static_cast<std::size_t>(m)] * frac;
        });
      }
    }
    return out;
  }

 private:
  template <class T>
  std::vector<std::vector<T>> push_down(std::vector<std::vector<T>> levels) const {
    for (int j = 0; j <= depth_; ++j) {
      auto& here = levels[static_cast<std::size_t>(j)];
      const double s = scale_[static_cast<std::size_t>(j)];
      for (std::size_t m = 0; m < here.size(); ++m) {
        here[m] *= s;
        if (j > 0) here[m] += levels[static_cast<std::size_t>(j) - 1][m / 2];
      }
    }
    return levels;
  }

  const DiskQuadrature* quad_;
  Grid grid_;
  double alpha_;
  int depth_;
  std::vector<double> scale_;
  std::vector<int> node_level_;
  std::vector<std::int64_t> node_position_;
};

template <class T>
std::vector<T> dyadic_apply_impl(Grid grid, double alpha, std::span<const T> f, const DiskQuadrature& quad,
                                 int depth) {
  if (f.size() != quad.size()) throw Error(ErrorKind::argument, "function is not sampled on this quadrature");
  const DyadicOperator op(grid, alpha, quad, depth);
  const auto c = quad.weighted(f);
  return op.apply_cells<T>(c);
}

/// (K^beta_alpha f)(z_i) at every node.
inline std::vector<double> dyadic_apply(Grid grid, double alpha, std::span<const double> f,
                                        const DiskQuadrature& quad, int depth) {
  return dyadic_apply_impl<double>(grid, alpha, f, quad, depth);
}

inline std::vector<Complex> dyadic_apply(Grid grid, double alpha, std::span<const Complex> f,
                                         const DiskQuadrature& quad, int depth) {
  return dyadic_apply_impl<Complex>(grid, alpha, f, quad, depth);
}

/// (K^beta_alpha f)(z) at arbitrary points.
inline std::vector<double> dyadic_apply_at(Grid grid, double alpha, std::span<const double> f,
                                           const DiskQuadrature& quad, int depth,
                                           std::span<const Point> points) {
  if (f.size() != quad.size()) throw Error(ErrorKind::argument, "function is not sampled on this quadrature");
  const DyadicOperator op(grid, alpha, quad, depth);
  const auto c = quad.weighted(f);
  const auto prefix = op.prefix_tables<double>(c);
  std::vector<double> out;
  out.reserve(points.size());
  for (const Point z : points) {
    if (!(std::abs(z) < 1.0)) throw Error(ErrorKind::argument, "evaluation points must lie inside the disk");
    out.push_back(op.evaluate(prefix, z));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel domination
// ---------------------------------------------------------------------------

struct DominationReport {
  double alpha = 1.0;
  int depth = 0;
  double c_hat = 0.0;
  std::int64_t failures = 0;
  std::int64_t samples = 0;
  Point worst_z{};
  Point worst_w{};
  DyadicIndex worst_box;
};

/// Point with 1 - |z| log-uniform in [2^-depth, 1] and uniform angle.
inline Point sample_boundary_weighted_point(Rng& rng, int depth) {
  const double gap = std::exp(std::log(dyadic_length(depth)) * rng.uniform());
  return std::polar(1.0 - gap, two_pi * rng.uniform());
}

/// Pairs for the domination sweep: half independent, half with w at a
/// log-uniform angular distance from z.
inline std::pair<Point, Point> sample_domination_pair(Rng& rng, int depth) {
  const Point z = sample_boundary_weighted_point(rng, depth);
  if (rng.uniform() < 0.5) return {z, sample_boundary_weighted_point(rng, depth)};
  const double gap = 0.5 * std::exp(std::log(dyadic_length(depth)) * rng.uniform());
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double radius = 1.0 - std::exp(std::log(dyadic_length(depth)) * rng.uniform());
  return {z, std::polar(radius, std::arg(z) + sign * two_pi * gap)};
}

struct PairDomination {
  /// (area(Q_L)^{1/2} / |1 - z conj(w)|)^alpha
  double constant = 0.0;
  DyadicIndex box;
};

inline PairDomination pair_domination(Point z, Point w, double alpha) {
  const BridgeBox b = bridge_box(z, w);
  return PairDomination{std::pow(b.ratio, -alpha), b.index};
}

/// Smallest c with 1/|1 - z conj(w)|^alpha <= c area(Q_L)^{-alpha/2}, Q_L the
/// bridging box of each sampled pair; pairs without a box of level <= depth
/// count as failures.
inline DominationReport domination_check(double alpha, std::int64_t sample_pairs, int depth,
                                         std::uint64_t seed = Rng::default_seed) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::argument, "alpha must be positive");
  if (depth < 0) throw Error(ErrorKind::argument, "depth must be >= 0");
  DominationReport report;
  report.alpha = alpha;
  report.depth = depth;
  report.samples = sample_pairs;
  Rng rng(seed);
  auto consider = [&](Point z, Point w) {
    const PairDomination d = pair_domination(z, w, alpha);
    if (d.box.level > depth) {
      ++report.failures;
      return;
    }
    if (d.constant > report.c_hat) {
      report.c_hat = d.constant;
      report.worst_z = z;
      report.worst_w = w;
      report.worst_box = d.box;
    }
  };
  for (std::int64_t s = 0; s < sample_pairs; ++s) {
    const auto [z, w] = sample_domination_pair(rng, depth);
    consider(z, w);
  }
  return report;
}

struct PointwiseDominationReport {
  double constant = 0.0;
  /// max over nodes of |K_alpha f| / (K^0 f + K^{1/3} f)
  double max_ratio = 0.0;
  /// same with the positive kernel 1/|1 - z conj(w)|^alpha
  double max_majorant_ratio = 0.0;
  std::int64_t violations = 0;
  std::size_t nodes = 0;
};

/// Checks |K_alpha f| <= c (K^0_alpha f + K^{1/3}_alpha f) at every node for f >= 0.
inline PointwiseDominationReport pointwise_domination_check(double alpha, double c, std::span<const double> f,
                                                            const DiskQuadrature& quad, int depth) {
  if (f.size() != quad.size()) throw Error(ErrorKind::argument, "function is not sampled on this quadrature");
  for (const double v : f) {
    if (!(v >= 0.0)) throw Error(ErrorKind::argument, "domination needs a nonnegative function");
  }
  PointwiseDominationReport report;
  report.constant = c;
  report.nodes = quad.size();
  const auto cells = quad.weighted(f);
  ComplexVector cv(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t j = 0; j < cells.size(); ++j) cv(static_cast<Eigen::Index>(j)) = cells[j];
  const ComplexVector k = PolarKernelOperator(KernelSpec::k_alpha(alpha), quad).apply(cv);
  const ComplexVector m = PolarKernelOperator(KernelSpec::modulus_alpha(alpha), quad).apply(cv);
  const auto d0 = DyadicOperator(Grid::zero, alpha, quad, depth).apply_cells<double>(cells);
  const auto d3 = DyadicOperator(Grid::third, alpha, quad, depth).apply_cells<double>(cells);
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const double lhs = std::abs(k(static_cast<Eigen::Index>(i)));
    const double rhs = d0[i] + d3[i];
    if (lhs == 0.0) continue;
    const double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    report.max_ratio = std::max(report.max_ratio, ratio);
    report.max_majorant_ratio = std::max(report.max_majorant_ratio, m(static_cast<Eigen::Index>(i)).real() / rhs);
    if (lhs > c * rhs) ++report.violations;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Tree mapping
// ---------------------------------------------------------------------------

/// Box masses and box integrals of f sigma for one grid, from the same cells.
struct TreeSums {
  BoxSums<double> mass;
  BoxSums<double> integral;
};

inline TreeSums tree_sums(const Weight& w, std::span<const double> f, const DiskQuadrature& quad, Grid grid,
                          int depth) {
  if (f.size() != quad.size()) throw Error(ErrorKind::argument, "function is not sampled on this quadrature");
  if (!w.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + w.spec() + "' has infinite mass");
  const auto masses = cell_masses(w, quad);
  std::vector<double> weighted(masses.size());
  for (std::size_t j = 0; j < masses.size(); ++j) weighted[j] = f[j] * masses[j];
  return TreeSums{box_sums<double>(quad, grid, depth, masses), box_sums<double>(quad, grid, depth, weighted)};
}

/// E^sigma_Q f on every box of the grid.
inline TreeFunction tree_expectations(const Weight& w, std::span<const double> f, const DiskQuadrature& quad,
                                      Grid grid, int depth) {
  const TreeSums s = tree_sums(w, f, quad, grid, depth);
  TreeFunction out{grid, depth, s.integral.levels};
  for (int j = 0; j <= depth; ++j) {
    for (std::size_t m = 0; m < out.values[static_cast<std::size_t>(j)].size(); ++m) {
      const double mass = s.mass(j, static_cast<std::int64_t>(m));
      if (!(mass > 0.0)) {
        throw Error(ErrorKind::degenerate_weight,
                    "box " + to_string(DyadicIndex{grid, j, static_cast<std::int64_t>(m)}) + " has zero mass");
      }
      out.values[static_cast<std::size_t>(j)][m] /= mass;
    }
  }
  return out;
}

/// (1 / |Q_I|_sigma) integral over Q_I of f sigma.
inline double tree_expectation(const Weight& w, std::span<const double> f, const DiskQuadrature& quad,
                               const DyadicIndex& index) {
  const TreeSums s = tree_sums(w, f, quad, index.grid, index.level);
  const double mass = s.mass(index);
  if (!(mass > 0.0)) throw Error(ErrorKind::degenerate_weight, "box " + to_string(index) + " has zero mass");
  return s.integral(index) / mass;
}

// ---------------------------------------------------------------------------
// Carleson embedding condition
// ---------------------------------------------------------------------------

struct EmbeddingReport {
  double t = 1.0;
  int depth = 0;
  int max_top_level = 0;
  double c1_hat = 0.0;
  DyadicIndex worst_box;
  /// Estimated contribution of levels beyond depth to the worst ratio.
  double tail_estimate = 0.0;
  std::array<double, 2> per_grid{0.0, 0.0};
  bool closed_form = false;
};

namespace detail {

struct SubtreeResult {
  double c1 = 0.0;
  DyadicIndex worst;
  double last_level = 0.0;
  double previous_level = 0.0;
};

/// max over K with level <= top of sum_{Q in subtree(K)} m(Q)^t / m(K)^t.
inline SubtreeResult subtree_ratios(const std::vector<std::vector<double>>& masses, Grid grid, double t, int top) {
  const int depth = static_cast<int>(masses.size()) - 1;
  std::vector<std::vector<double>> sums(masses.size());
  for (int j = depth; j >= 0; --j) {
    const auto& m = masses[static_cast<std::size_t>(j)];
    auto& s = sums[static_cast<std::size_t>(j)];
    s.resize(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
      s[k] = std::pow(m[k], t);
      if (j < depth) s[k] += sums[static_cast<std::size_t>(j) + 1][2 * k] + sums[static_cast<std::size_t>(j) + 1][2 * k + 1];
    }
  }
  SubtreeResult r;
  r.c1 = -1.0;
  for (int j = 0; j <= std::min(top, depth); ++j) {
    const auto& m = masses[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (!(m[k] > 0.0)) {
        throw Error(ErrorKind::degenerate_weight,
                    "box " + to_string(DyadicIndex{grid, j, static_cast<std::int64_t>(k)}) + " has zero mass");
      }
      const double ratio = sums[static_cast<std::size_t>(j)][k] / std::pow(m[k], t);
      if (ratio > r.c1) {
        r.c1 = ratio;
        r.worst = DyadicIndex{grid, j, static_cast<std::int64_t>(k)};
      }
    }
  }
  // Per-level contributions inside the worst box, for the tail estimate.
  auto level_sum = [&](int level) {
    if (level < r.worst.level) return 0.0;
    const std::int64_t width = std::int64_t{1} << (level - r.worst.level);
    double s = 0.0;
    for (std::int64_t k = r.worst.position * width; k < (r.worst.position + 1) * width; ++k) {
      s += std::pow(masses[static_cast<std::size_t>(level)][static_cast<std::size_t>(k)], t);
    }
    return s;
  };
  r.last_level = level_sum(depth) / std::pow(masses[static_cast<std::size_t>(r.worst.level)][static_cast<std::size_t>(r.worst.position)], t);
  r.previous_level = depth > r.worst.level ? level_sum(depth - 1) / std::pow(masses[static_cast<std::size_t>(r.worst.level)][static_cast<std::size_t>(r.worst.position)], t) : 0.0;
  return r;
}

}  // namespace detail

/// Carleson embedding constant from explicit per-grid box masses.
inline EmbeddingReport carleson_embedding_from_masses(const std::array<std::vector<std::vector<double>>, 2>& masses,
                                                      double t, int max_top_level) {
  if (!(t >= 1.0)) throw Error(ErrorKind::argument, "t must be >= 1");
  EmbeddingReport report;
  report.t = t;
  report.depth = static_cast<int>(masses[0].size()) - 1;
  report.max_top_level = max_top_level;
  double last = 0.0, previous = 0.0;
  for (const Grid g : both_grids) {
    const auto r = detail::subtree_ratios(masses[grid_slot(g)], g, t, max_top_level);
    report.per_grid[grid_slot(g)] = r.c1;
    if (r.c1 > report.c1_hat) {
      report.c1_hat = r.c1;
      report.worst_box = r.worst;
      last = r.last_level;
      previous = r.previous_level;
    }
  }
  const double rho = previous > 0.0 ? last / previous : 0.0;
  report.tail_estimate = rho < 1.0 ? last * rho / (1.0 - rho) : std::numeric_limits<double>::infinity();
  return report;
}

/// max over boxes K of level <= max_top_level (default depth / 2) of
/// sum_{Q subset K, level <= depth} |Q|_sigma^t / |K|_sigma^t over both grids.
/// With a quadrature the masses come from its cells; otherwise the weight
/// must have closed-form box masses, and the tail is summed exactly.
inline EmbeddingReport carleson_embedding_constant(const Weight& w, double t, int depth,
                                                   const DiskQuadrature* quad = nullptr,
                                                   std::optional<int> max_top_level = std::nullopt) {
  if (!w.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + w.spec() + "' has infinite mass");
  if (depth < 0) throw Error(ErrorKind::argument, "depth must be >= 0");
  const int top = max_top_level.value_or(depth / 2);
  std::array<std::vector<std::vector<double>>, 2> masses;
  std::optional<double> exponent;
  if (quad != nullptr) {
    const auto cells = cell_masses(w, *quad);
    for (const Grid g : both_grids) masses[grid_slot(g)] = box_sums<double>(*quad, g, depth, cells).levels;
  } else {
    exponent = w.radial_exponent();
    if (!exponent) throw Error(ErrorKind::resolution, "weight '" + w.spec() + "' needs a quadrature for box masses");
    for (const Grid g : both_grids) {
      const BoxMassTable table = BoxMassTable::build(w, g, depth);
      auto& levels = masses[grid_slot(g)];
      levels.resize(static_cast<std::size_t>(depth) + 1);
      for (int j = 0; j <= depth; ++j) {
        levels[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(level_count(j)));
        for (std::int64_t m = 0; m < level_count(j); ++m) levels[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] = table.full(j, m);
      }
    }
  }
  EmbeddingReport report = carleson_embedding_from_masses(masses, t, top);
  report.closed_form = exponent.has_value();
  if (exponent) {
    // Radial masses depend only on the level: the tail is an explicit series.
    const int j = report.worst_box.level;
    const double base = std::pow(radial_box_mass(*exponent, dyadic_length(j), BoxKind::full), t);
    double tail = 0.0;
    for (int n = depth + 1; n < 1000; ++n) {
      const double term =
          std::ldexp(std::pow(radial_box_mass(*exponent, dyadic_length(n), BoxKind::full), t), n - j) / base;
      tail += term;
      if (term < 1e-17 * (report.c1_hat + tail)) break;
    }
    report.tail_estimate = tail;
  }
  return report;
}

/// sum_{Q subset K, level <= depth} |Q|_sigma^t / |K|_sigma^t for one box K.
/// Radial weights need no tables, so depth may be large.
inline double embedding_ratio(const Weight& w, double t, int depth, const DyadicIndex& k,
                              const DiskQuadrature* quad = nullptr) {
  if (!(t >= 1.0)) throw Error(ErrorKind::argument, "t must be >= 1");
  if (k.level > depth) throw Error(ErrorKind::argument, "box level exceeds depth");
  if (const auto a = w.radial_exponent(); a && quad == nullptr) {
    const double base = std::pow(radial_box_mass(*a, dyadic_length(k.level), BoxKind::full), t);
    double sum = 0.0;
    for (int n = k.level; n <= depth; ++n) {
      sum += std::ldexp(std::pow(radial_box_mass(*a, dyadic_length(n), BoxKind::full), t), n - k.level);
    }
    return sum / base;
  }
  if (quad == nullptr) throw Error(ErrorKind::resolution, "weight '" + w.spec() + "' needs a quadrature for box masses");
  const BoxSums<double> m = box_sums<double>(*quad, k.grid, depth, cell_masses(w, *quad));
  const double base = m(k);
  if (!(base > 0.0)) throw Error(ErrorKind::degenerate_weight, "box " + to_string(k) + " has zero mass");
  double sum = 0.0;
  for (int n = k.level; n <= depth; ++n) {
    const std::int64_t width = std::int64_t{1} << (n - k.level);
    for (std::int64_t pos = k.position * width; pos < (k.position + 1) * width; ++pos) sum += std::pow(m(n, pos), t);
  }
  return sum / std::pow(base, t);
}

// ---------------------------------------------------------------------------
// Weak and strong embedding norms
// ---------------------------------------------------------------------------

struct WeakTypeReport {
  double value = 0.0;
  std::array<double, 2> per_grid{0.0, 0.0};
  /// integral of f sigma
  double l1_norm = 0.0;
};

/// sup over lambda of lambda (sum over boxes with E^sigma_Q f > lambda of |Q|_sigma^t)^{1/t},
/// evaluated at each attained expectation from the left; max over the grids.
inline WeakTypeReport weak_type_report(const Weight& w, double t, std::span<const double> f,
                                       const DiskQuadrature& quad, int depth) {
  if (!(t >= 1.0)) throw Error(ErrorKind::argument, "t must be >= 1");
  for (const double v : f) {
    if (!(v >= 0.0)) throw Error(ErrorKind::argument, "weak-type norm needs a nonnegative function");
  }
  WeakTypeReport report;
  for (const Grid g : both_grids) {
    const TreeSums s = tree_sums(w, f, quad, g, depth);
    std::vector<std::pair<double, double>> boxes;  // (expectation, mass^t)
    for (int j = 0; j <= depth; ++j) {
      for (std::int64_t m = 0; m < level_count(j); ++m) {
        const double mass = s.mass(j, m);
        if (!(mass > 0.0)) {
          throw Error(ErrorKind::degenerate_weight, "box " + to_string(DyadicIndex{g, j, m}) + " has zero mass");
        }
        boxes.emplace_back(s.integral(j, m) / mass, std::pow(mass, t));
      }
    }
    std::sort(boxes.begin(), boxes.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double acc = 0.0, best = 0.0;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      acc += boxes[k].second;
      if (k + 1 < boxes.size() && boxes[k + 1].first == boxes[k].first) continue;
      best = std::max(best, boxes[k].first * std::pow(acc, 1.0 / t));
    }
    report.per_grid[grid_slot(g)] = best;
    report.value = std::max(report.value, best);
  }
  const auto masses = cell_masses(w, quad);
  for (std::size_t j = 0; j < masses.size(); ++j) report.l1_norm += f[j] * masses[j];
  return report;
}

inline double weak_type_norm(const Weight& w, double t, std::span<const double> f, const DiskQuadrature& quad,
                             int depth) {
  return weak_type_report(w, t, f, quad, depth).value;
}

/// (sum_Q |Q|_sigma^t (E^sigma_Q f)^q)^{1/q} / (integral f^p sigma)^{1/p}, max over the grids.
inline double strong_embedding_check(const Weight& w, const ExponentConfig& cfg, std::span<const double> f,
                                     const DiskQuadrature& quad, int depth) {
  for (const double v : f) {
    if (!(v >= 0.0)) throw Error(ErrorKind::argument, "strong embedding needs a nonnegative function");
  }
  const auto masses = cell_masses(w, quad);
  double rhs = 0.0;
  for (std::size_t j = 0; j < masses.size(); ++j) rhs += std::pow(f[j], cfg.p) * masses[j];
  if (rhs == 0.0) return 0.0;
  rhs = std::pow(rhs, 1.0 / cfg.p);
  const double t = cfg.t();
  double best = 0.0;
  for (const Grid g : both_grids) {
    const TreeSums s = tree_sums(w, f, quad, g, depth);
    double lhs = 0.0;
    for (int j = 0; j <= depth; ++j) {
      for (std::int64_t m = 0; m < level_count(j); ++m) {
        const double mass = s.mass(j, m);
        if (!(mass > 0.0)) {
          throw Error(ErrorKind::degenerate_weight, "box " + to_string(DyadicIndex{g, j, m}) + " has zero mass");
        }
        lhs += std::pow(mass, t) * std::pow(s.integral(j, m) / mass, cfg.q);
      }
    }
    best = std::max(best, std::pow(lhs, 1.0 / cfg.q) / rhs);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Two-weight testing constant and norms
// ---------------------------------------------------------------------------

struct TestingReport {
  double sup_value = 0.0;
  DyadicIndex worst_box;
  /// Set when a random arc beat every dyadic box.
  std::optional<Arc> worst_arc;
  std::array<double, 2> per_grid{0.0, 0.0};
  double random_arc_sup = 0.0;
  std::string dual_weight;
};

/// sup over boxes of |Q|_nu^{1/q} |Q|_{mu^{1-p'}}^{1/p'} / |Q|^{alpha/2}: every
/// dyadic box of both grids up to depth, plus seeded random arcs.
inline TestingReport two_weight_testing_constant(const Weight& nu, const Weight& mu, const ExponentConfig& cfg,
                                                 int depth, const DiskQuadrature* quad = nullptr,
                                                 int random_arcs = 1000, std::uint64_t seed = Rng::default_seed) {
  if (depth < 0) throw Error(ErrorKind::argument, "depth must be >= 0");
  const Weight dual = dual_weight(mu, cfg.p);
  if (!dual.finite()) throw Error(ErrorKind::infinite_mass, "dual weight '" + dual.spec() + "' has infinite mass");
  if (!nu.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + nu.spec() + "' has infinite mass");
  const double a = 1.0 / cfg.q;
  const double b = 1.0 / cfg.p_conjugate();
  auto value = [&](double m_nu, double m_dual, double length) {
    return std::pow(m_nu, a) * std::pow(m_dual, b) / std::pow(box_area(length, BoxKind::full), 0.5 * cfg.alpha);
  };
  TestingReport report;
  report.dual_weight = dual.spec();
  for (const Grid g : both_grids) {
    const BoxMassTable tn = BoxMassTable::build(nu, g, depth, quad);
    const BoxMassTable td = BoxMassTable::build(dual, g, depth, quad);
    double best = 0.0;
    for (int j = 0; j <= depth; ++j) {
      for (std::int64_t m = 0; m < level_count(j); ++m) {
        const double v = value(tn.full(j, m), td.full(j, m), dyadic_length(j));
        if (v > best) best = v;
        if (v > report.sup_value) {
          report.sup_value = v;
          report.worst_box = DyadicIndex{g, j, m};
        }
      }
    }
    report.per_grid[grid_slot(g)] = best;
  }
  Rng rng(seed);
  const bool closed = nu.radial_exponent() && dual.radial_exponent();
  const int finest = closed ? depth : std::min(depth, quad != nullptr ? quad->depth() : depth);
  for (int k = 0; k < random_arcs; ++k) {
    const double start = rng.uniform();
    const double length = std::exp(std::log(dyadic_length(finest)) * rng.uniform());
    const CarlesonBox box{Arc::from_turns(start, length), BoxKind::full};
    const double v = value(box_mass(nu, box, quad), box_mass(dual, box, quad), length);
    report.random_arc_sup = std::max(report.random_arc_sup, v);
    if (v > report.sup_value) {
      report.sup_value = v;
      report.worst_arc = box.arc;
    }
  }
  return report;
}

struct NormLevel {
  int depth = 0;
  std::size_t nodes = 0;
  /// K_alpha from L^p(mu) to L^q(nu)
  double kernel_norm = 0.0;
  /// K^0_alpha and K^{1/3}_alpha
  std::array<double, 2> dyadic_norm{0.0, 0.0};
  bool converged = true;
};

struct TwoWeightNormReport {
  std::vector<NormLevel> levels;
  /// true when p != q: the numbers are sampled lower bounds only.
  bool lower_bound_only = false;
  bool verdict = false;
  double relative_change = 0.0;
};

struct TwoWeightNormOptions {
  std::vector<int> depths{8, 10, 12};
  int angular_base = 16;
  int radial_order = 4;
  double stabilization = 0.05;
  PowerIterationOptions power{1e-7, 2000, Rng::default_seed};
  /// Random functions tried for p != q.
  int samples = 64;
  std::uint64_t seed = Rng::default_seed;
};

namespace detail {

inline double weighted_lq(std::span<const Complex> g, std::span<const double> w, const DiskQuadrature& quad,
                          double q) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(std::abs(g[i]), q) * w[i] * quad.area(i);
  return std::pow(s, 1.0 / q);
}

/// sup of ||A f||_{L^q(nu)} / ||f||_{L^p(mu)} over seeded nonnegative random
/// functions and box indicators; A acts on cell integrals.
template <class Inner>
double sampled_norm(const Inner& inner, const DiskQuadrature& quad, std::span<const double> mu,
                    std::span<const double> nu, const ExponentConfig& cfg, int samples, std::uint64_t seed) {
  Rng rng(seed);
  double best = 0.0;
  auto try_f = [&](const std::vector<double>& f) {
    double norm = 0.0;
    ComplexVector c(static_cast<Eigen::Index>(f.size()));
    for (std::size_t j = 0; j < f.size(); ++j) {
      norm += std::pow(f[j], cfg.p) * mu[j] * quad.area(j);
      c(static_cast<Eigen::Index>(j)) = f[j] * quad.area(j);
    }
    if (!(norm > 0.0)) return;
    const ComplexVector out = inner.apply(c);
    const double lq = weighted_lq(std::span<const Complex>(out.data(), f.size()), nu, quad, cfg.q);
    best = std::max(best, lq / std::pow(norm, 1.0 / cfg.p));
  };
  std::vector<double> f(quad.size());
  for (int s = 0; s < samples; ++s) {
    for (auto& v : f) v = rng.uniform();
    try_f(f);
  }
  for (int level = 0; level <= quad.depth(); level += 2) {
    for (std::size_t j = 0; j < quad.size(); ++j) {
      f[j] = (quad.stratum_of(j) >= level && dyadic_position(Grid::zero, level, quad.node_turns(j)) == 0) ? 1.0 : 0.0;
    }
    try_f(f);
  }
  return best;
}

}  // namespace detail

/// Measured norms of K_alpha and K^beta_alpha from L^p(mu) to L^q(nu) on
/// successive refinements; the verdict asks the last two to agree within the
/// stabilization threshold.
inline TwoWeightNormReport two_weight_norm_check(const Weight& nu, const Weight& mu, const ExponentConfig& cfg,
                                                 const TwoWeightNormOptions& options = {}) {
  if (options.depths.empty()) throw Error(ErrorKind::argument, "two_weight_norm_check needs refinement depths");
  TwoWeightNormReport report;
  report.lower_bound_only = cfg.p != cfg.q;
  for (const int depth : options.depths) {
    const DiskQuadrature quad = build_quadrature(depth, options.angular_base, options.radial_order);
    NormLevel level;
    level.depth = depth;
    level.nodes = quad.size();
    const PolarKernelOperator kernel(KernelSpec::k_alpha(cfg.alpha), quad);
    const DyadicOperator d0(Grid::zero, cfg.alpha, quad, depth);
    const DyadicOperator d3(Grid::third, cfg.alpha, quad, depth);
    if (!report.lower_bound_only && cfg.p == 2.0) {
      const auto scalings = weighted_scalings(quad, mu, nu);
      auto norm = [&](const auto& inner) {
        const auto est = operator_norm(ScaledOperator(inner, scalings.first, scalings.second), options.power);
        level.converged = level.converged && est.converged;
        return est.value;
      };
      level.kernel_norm = norm(kernel);
      level.dyadic_norm[0] = norm(d0);
      level.dyadic_norm[1] = norm(d3);
    } else {
      report.lower_bound_only = true;
      const auto mu_v = quad.sample([&](Point z) { return mu.density(z); });
      const auto nu_v = quad.sample([&](Point z) { return nu.density(z); });
      auto norm = [&](const auto& inner) {
        return detail::sampled_norm(inner, quad, mu_v, nu_v, cfg, options.samples, options.seed);
      };
      level.kernel_norm = norm(kernel);
      level.dyadic_norm[0] = norm(d0);
      level.dyadic_norm[1] = norm(d3);
    }
    report.levels.push_back(level);
  }
  if (report.levels.size() >= 2) {
    const auto& a = report.levels[report.levels.size() - 2];
    const auto& b = report.levels.back();
    auto rel = [](double x, double y) {
      const double scale = std::max(std::abs(x), std::abs(y));
      return scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
    };
    report.relative_change =
        std::max({rel(a.kernel_norm, b.kernel_norm), rel(a.dyadic_norm[0], b.dyadic_norm[0]),
                  rel(a.dyadic_norm[1], b.dyadic_norm[1])});
    report.verdict = report.relative_change <= options.stabilization &&
                     std::isfinite(b.kernel_norm);
  } else {
    report.verdict = std::isfinite(report.levels.back().kernel_norm);
  }
  return report;
}

}  // namespace carleson_lab
