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
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "carleson_lab/dyadic.hpp"
#include "carleson_lab/errors.hpp"
#include "carleson_lab/kernels.hpp"
#include "carleson_lab/measures.hpp"
#include "carleson_lab/operators.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/random.hpp"
#include "carleson_lab/weights.hpp"

namespace carleson_lab {

inline constexpr int default_degree_cap = 64;

class AnalyticPolynomial {
 public:
  AnalyticPolynomial() : coefficients_{Complex(0.0)} {}

  explicit AnalyticPolynomial(std::vector<Complex> coefficients, int degree_cap = default_degree_cap)
      : coefficients_(std::move(coefficients)) {
    if (coefficients_.empty()) coefficients_.push_back(0.0);
    if (degree() > degree_cap) {
      throw Error(ErrorKind::argument, "polynomial degree " + std::to_string(degree()) + " exceeds cap " +
                                           std::to_string(degree_cap));
    }
  }

  static AnalyticPolynomial monomial(int n, int degree_cap = default_degree_cap) {
    if (n < 0) throw Error(ErrorKind::argument, "monomial degree must be >= 0");
    std::vector<Complex> c(static_cast<std::size_t>(n) + 1, 0.0);
    c.back() = 1.0;
    return AnalyticPolynomial(std::move(c), degree_cap);
  }

  /// Coefficients i.i.d. complex Gaussian scaled by 1 / sqrt(n + 1).
  static AnalyticPolynomial random(Rng& rng, int degree) {
    std::vector<Complex> c(static_cast<std::size_t>(degree) + 1);
    for (std::size_t n = 0; n < c.size(); ++n) c[n] = rng.complex_normal() / std::sqrt(static_cast<double>(n + 1));
    return AnalyticPolynomial(std::move(c), degree);
  }

  int degree() const { return static_cast<int>(coefficients_.size()) - 1; }
  const std::vector<Complex>& coefficients() const { return coefficients_; }

  Complex operator()(Complex z) const {
    Complex v = 0.0;
    for (std::size_t n = coefficients_.size(); n-- > 0;) v = v * z + coefficients_[n];
    return v;
  }

 private:
  std::vector<Complex> coefficients_;
};

/// |a_0|^2 + sum n |a_n|^2, i.e. |f(0)|^2 + (1/pi) integral |f'|^2 dA.
inline double dirichlet_norm(const AnalyticPolynomial& f) {
  const auto& a = f.coefficients();
  double s = std::norm(a[0]);
  for (std::size_t n = 1; n < a.size(); ++n) s += static_cast<double>(n) * std::norm(a[n]);
  return s;
}

/// sum (n + 1) |a_n|^2, the norm reproduced by k_D.
inline double kernel_norm(const AnalyticPolynomial& f) {
  const auto& a = f.coefficients();
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += static_cast<double>(n + 1) * std::norm(a[n]);
  return s;
}

// ---------------------------------------------------------------------------
// Carleson constant
// ---------------------------------------------------------------------------

enum class CarlesonMethod { operator_norm, polynomial_sampling };

inline const char* to_string(CarlesonMethod m) {
  return m == CarlesonMethod::operator_norm ? "operator-norm" : "polynomial-sampling";
}

struct CarlesonOptions {
  std::vector<int> depths{8, 10, 12};
  int angular_base = 16;
  int radial_order = 4;
  int degree_cap = default_degree_cap;
  /// Random polynomials per refinement for the sampling method.
  int samples = 200;
  double stabilization = 0.05;
  std::uint64_t seed = Rng::default_seed;
  PowerIterationOptions power{1e-9, 5000, Rng::default_seed};
};

struct CarlesonVerdict {
  double constant_estimate = 0.0;
  CarlesonMethod method = CarlesonMethod::operator_norm;
  /// (depth, estimate) per refinement.
  std::vector<std::pair<int, double>> trace;
  double relative_change = 0.0;
  bool verdict = false;
};

/// integral |f|^2 w dA_norm / dirichlet_norm(f) by quadrature.
inline double polynomial_ratio(const Weight& w, const AnalyticPolynomial& f, const DiskQuadrature& quad) {
  const double d = dirichlet_norm(f);
  if (d == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const Point z = quad.point(i);
    s += std::norm(f(z)) * w.density(z) * quad.area(i);
  }
  return s / d;
}

/// Operator-norm method: ||T_{k_D, w}|| on L^2(w), the squared embedding norm
/// for sum (n + 1)|a_n|^2. Polynomial sampling: max of polynomial_ratio over
/// 1, the monomials and a seeded random ensemble, a lower bound for C.
inline CarlesonVerdict carleson_constant(const Weight& w, CarlesonMethod method, const CarlesonOptions& options = {}) {
  if (!w.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + w.spec() + "' has infinite mass");
  if (options.depths.empty()) throw Error(ErrorKind::argument, "carleson_constant needs refinement depths");
  CarlesonVerdict out;
  out.method = method;
  for (const int depth : options.depths) {
    const DiskQuadrature quad = build_quadrature(depth, options.angular_base, options.radial_order);
    double estimate = 0.0;
    if (method == CarlesonMethod::operator_norm) {
      const auto n = static_cast<Eigen::Index>(quad.size());
      RealVector s(n);
      double mass = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double m = w.density(quad.point(k)) * quad.area(k);
        mass += m;
        s(i) = std::sqrt(m);
      }
      if (!(mass > 0.0)) throw Error(ErrorKind::degenerate_weight, "weight '" + w.spec() + "' has zero mass");
      const PolarKernelOperator kernel(KernelSpec::dirichlet(), quad);
      estimate = operator_norm(ScaledOperator(kernel, s, s), options.power).value;
    } else {
      if (!(total_mass(w, &quad) > 0.0)) {
        throw Error(ErrorKind::degenerate_weight, "weight '" + w.spec() + "' has zero mass");
      }
      Rng rng(options.seed);
      for (int k = 0; k <= options.degree_cap; ++k) {
        estimate = std::max(estimate, polynomial_ratio(w, AnalyticPolynomial::monomial(k, options.degree_cap), quad));
      }
      for (int k = 0; k < options.samples; ++k) {
        const int degree = static_cast<int>(rng.next() % static_cast<std::uint64_t>(options.degree_cap + 1));
        estimate = std::max(estimate, polynomial_ratio(w, AnalyticPolynomial::random(rng, degree), quad));
      }
    }
    out.trace.emplace_back(depth, estimate);
  }
  out.constant_estimate = out.trace.back().second;
  if (out.trace.size() >= 2) {
    const double a = out.trace[out.trace.size() - 2].second;
    const double b = out.trace.back().second;
    const double scale = std::max(std::abs(a), std::abs(b));
    out.relative_change = scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
  }
  out.verdict = std::isfinite(out.constant_estimate) && out.relative_change <= options.stabilization;
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

struct StageResult {
  std::string name;
  /// Hypothesis stages feed the theorem; conclusion stages measure its claim.
  bool hypothesis = true;
  std::vector<std::pair<std::string, double>> constants;
  bool verdict = false;
  std::string witness;
  std::string error;
};

struct PipelineReport {
  std::string weight;
  int depth = 0;
  std::vector<StageResult> stages;
  bool hypotheses_hold = false;
  bool conclusions_hold = false;
  bool verdict = false;

  const StageResult* stage(const std::string& name) const {
    for (const auto& s : stages) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

struct PipelineOptions {
  std::size_t random_arcs = 2000;
  int testing_random_arcs = 1000;
  std::uint64_t seed = Rng::default_seed;
  /// Refinements are depth - 4, depth - 2, depth (clamped at 2).
  int angular_base = 16;
  int radial_order = 4;
};

inline std::vector<int> refinement_schedule(int depth) {
  std::vector<int> out;
  for (const int d : {depth - 4, depth - 2, depth}) {
    const int v = std::max(2, d);
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

/// Finiteness, reverse doubling, the testing constant against Lebesgue measure
/// (p = q = 2, alpha = 1), the two-weight norm of K_1 and the Carleson
/// constant. Stage errors are recorded, never thrown.
inline PipelineReport theorem_pipeline(const Weight& w, int depth, const PipelineOptions& options = {}) {
  PipelineReport report;
  report.weight = w.spec();
  report.depth = depth;
  if (depth < 2) throw Error(ErrorKind::argument, "pipeline depth must be >= 2");
  const DiskQuadrature quad = build_quadrature(depth, options.angular_base, options.radial_order);
  const auto schedule = refinement_schedule(depth);

  auto run = [&](const std::string& name, bool hypothesis, auto&& body) {
    StageResult s;
    s.name = name;
    s.hypothesis = hypothesis;
    try {
      body(s);
    } catch (const std::exception& e) {
      s.verdict = false;
      s.error = e.what();
    }
    report.stages.push_back(std::move(s));
  };

  run("finiteness", true, [&](StageResult& s) {
    if (!w.finite()) throw Error(ErrorKind::infinite_mass, "weight '" + w.spec() + "' has infinite mass");
    const double mass = w.radial_exponent() ? total_mass(w) : total_mass(w, &quad);
    s.constants.emplace_back("total_mass", mass);
    s.verdict = std::isfinite(mass) && mass > 0.0;
    if (!(mass > 0.0)) s.witness = "zero total mass";
  });

  run("reverse-doubling", true, [&](StageResult& s) {
    ReverseDoublingOptions o;
    o.seed = options.seed;
    o.quad = &quad;
    const auto r = reverse_doubling_report(w, depth, options.random_arcs, o);
    s.constants.emplace_back("delta_hat", r.delta_hat);
    s.constants.emplace_back("arcs_tested", static_cast<double>(r.arcs_tested));
    s.verdict = r.verdict;
    s.witness = "arc start " + Weight::format_number(r.worst_arc.start_turns()) + " turns, length " +
                Weight::format_number(r.worst_arc.length);
  });

  const auto cfg = ExponentConfig::make(2.0, 2.0, 1.0);
  run("testing-constant", true, [&](StageResult& s) {
    const auto r = two_weight_testing_constant(w, Weight::lebesgue(), cfg, depth, &quad,
                                               options.testing_random_arcs, options.seed);
    s.constants.emplace_back("sup_value", r.sup_value);
    s.constants.emplace_back("grid_0", r.per_grid[0]);
    s.constants.emplace_back("grid_1/3", r.per_grid[1]);
    s.verdict = std::isfinite(r.sup_value);
    s.witness = r.worst_arc ? "random arc of length " + Weight::format_number(r.worst_arc->length)
                            : "box " + to_string(r.worst_box);
  });

  run("two-weight-norm", false, [&](StageResult& s) {
    TwoWeightNormOptions o;
    o.depths = schedule;
    o.angular_base = options.angular_base;
    o.radial_order = options.radial_order;
    o.seed = options.seed;
    const auto r = two_weight_norm_check(w, Weight::lebesgue(), cfg, o);
    for (const auto& l : r.levels) {
      const std::string d = std::to_string(l.depth);
      s.constants.emplace_back("kernel_norm_depth_" + d, l.kernel_norm);
      s.constants.emplace_back("dyadic_0_norm_depth_" + d, l.dyadic_norm[0]);
      s.constants.emplace_back("dyadic_1/3_norm_depth_" + d, l.dyadic_norm[1]);
    }
    s.constants.emplace_back("relative_change", r.relative_change);
    s.verdict = r.verdict;
    s.witness = r.lower_bound_only ? "sampled lower bounds" : "power iteration";
  });

  run("carleson-constant", false, [&](StageResult& s) {
    CarlesonOptions o;
    o.depths = schedule;
    o.angular_base = options.angular_base;
    o.radial_order = options.radial_order;
    o.seed = options.seed;
    const auto op = carleson_constant(w, CarlesonMethod::operator_norm, o);
    const auto poly = carleson_constant(w, CarlesonMethod::polynomial_sampling, o);
    s.constants.emplace_back("operator_norm", op.constant_estimate);
    s.constants.emplace_back("polynomial_lower_bound", poly.constant_estimate);
    s.constants.emplace_back("operator_relative_change", op.relative_change);
    s.constants.emplace_back("polynomial_relative_change", poly.relative_change);
    s.verdict = op.verdict && poly.verdict && poly.constant_estimate <= 2.0 * op.constant_estimate * (1.0 + 1e-9);
    s.witness = "refinements " + std::to_string(schedule.front()) + ".." + std::to_string(schedule.back());
  });

  report.hypotheses_hold = true;
  report.conclusions_hold = true;
  for (const auto& s : report.stages) {
    (s.hypothesis ? report.hypotheses_hold : report.conclusions_hold) &= s.verdict;
  }
  report.verdict = report.hypotheses_hold && report.conclusions_hold;
  return report;
}

}  // namespace carleson_lab
