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
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carleson_lab/bergman.hpp"
#include "carleson_lab/dirichlet.hpp"
#include "carleson_lab/dyadic.hpp"
#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"
#include "carleson_lab/operators.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/random.hpp"

namespace carleson_lab {

struct LemmaOptions {
  /// Suite-specific count (arcs, measures, pairs, functions); each suite has its own default.
  std::optional<std::int64_t> samples;
  std::optional<int> depth;
  std::uint64_t seed = Rng::default_seed;
};

struct LemmaReport {
  std::string name;
  std::int64_t cases = 0;
  std::int64_t failures = 0;
  std::vector<std::pair<std::string, double>> constants;
  std::string witness;
  bool verdict = false;
};

inline const std::vector<std::string>& lemma_names() {
  static const std::vector<std::string> names{"mei-cover",     "sandwich",      "gram-psd",  "domination",
                                              "k1-projection", "factorization", "weak-type"};
  return names;
}

/// Nonnegative test functions on the nodes: uniform, sparse spikes, a single
/// spike, and a heavy-tailed power, by kind mod 4.
inline std::vector<double> sample_positive_function(Rng& rng, std::size_t n, int kind) {
  std::vector<double> f(n, 0.0);
  if (n == 0) return f;
  switch (kind % 4) {
    case 0:
      for (auto& v : f) v = rng.uniform();
      break;
    case 1:
      for (auto& v : f) v = rng.uniform() < 0.01 ? rng.uniform(0.5, 2.0) : 0.0;
      break;
    case 2:
      f[rng.next() % n] = 1.0;
      break;
    default:
      for (auto& v : f) v = std::pow(rng.uniform(), 8);
  }
  return f;
}

/// Atoms in the disk of radius 0.98 with masses in [0.01, 1).
inline DiscreteMeasure sample_discrete_measure(Rng& rng, std::size_t atoms) {
  std::vector<Point> pts;
  std::vector<double> ms;
  for (std::size_t i = 0; i < atoms; ++i) {
    pts.push_back(rng.disk_point(0.98));
    ms.push_back(rng.uniform(0.01, 1.0));
  }
  return make_discrete_measure(std::move(pts), std::move(ms));
}

namespace detail {

inline LemmaReport mei_cover_suite(const LemmaOptions& o) {
  LemmaReport r;
  const std::int64_t n = o.samples.value_or(100000);
  Rng rng(o.seed);
  double worst = 0.0;
  auto check = [&](const Arc& j) {
    const DyadicIndex l = mei_cover(j);
    const Arc cover = dyadic_interval(l);
    const double ratio = cover.length / j.length;
    ++r.cases;
    if (!cover.contains(j) || ratio > 6.0 * (1.0 + arc_tolerance)) {
      if (r.failures++ == 0) {
        r.witness = "arc start " + std::to_string(j.start_turns()) + " length " + std::to_string(j.length);
      }
    }
    worst = std::max(worst, ratio);
  };
  for (std::int64_t i = 0; i < n; ++i) {
    const double len = std::exp(std::log(1e-6) * rng.uniform());
    check(Arc::from_turns(rng.uniform(), len));
  }
  // Arcs longer than 1/6 may only fit in the whole circle.
  const Arc fallback = Arc::from_turns(0.32, 0.2);
  check(fallback);
  const bool fallback_ok = mei_cover(fallback).level == 0;
  if (!fallback_ok) ++r.failures;
  r.constants = {{"max_cover_ratio", worst}, {"fallback_level", static_cast<double>(mei_cover(fallback).level)}};
  r.verdict = r.failures == 0;
  if (r.witness.empty()) r.witness = "all covers within 6|J|";
  return r;
}

inline LemmaReport sandwich_suite(const LemmaOptions& o) {
  LemmaReport r;
  const std::int64_t n = o.samples.value_or(50);
  Rng rng(o.seed);
  double lower = 0.0;
  double upper = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto m = sample_discrete_measure(rng, 1 + rng.next() % 200);
    for (const auto& spec : {KernelSpec::dirichlet(), KernelSpec::k_alpha(1.0)}) {
      const auto s = norm_sandwich_check(spec, m);
      ++r.cases;
      lower = std::max(lower, s.lower_ratio);
      upper = std::max(upper, s.upper_ratio);
      if (!s.lower_ok || !s.upper_ok) {
        if (r.failures++ == 0) r.witness = spec.name() + " on " + std::to_string(m.size()) + " atoms";
      }
    }
  }
  r.constants = {{"max_re_over_k", lower}, {"max_k_over_re", upper}};
  r.verdict = r.failures == 0;
  if (r.witness.empty()) r.witness = "dirichlet and k_alpha(1)";
  return r;
}

inline LemmaReport gram_psd_suite(const LemmaOptions& o) {
  LemmaReport r;
  const std::int64_t n = o.samples.value_or(100);
  Rng rng(o.seed);
  double worst = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<Point> pts(1 + rng.next() % 100);
    for (auto& z : pts) z = rng.disk_point(0.999);
    const auto g = gram_psd_check(pts, KernelSpec::dirichlet());
    ++r.cases;
    worst = std::min(worst, g.min_eigenvalue / g.trace);
    if (!g.positive && r.failures++ == 0) r.witness = std::to_string(pts.size()) + " points";
  }
  r.constants = {{"min_eigenvalue_over_trace", worst}};
  r.verdict = r.failures == 0;
  if (r.witness.empty()) r.witness = "dirichlet kernel";
  return r;
}

inline LemmaReport domination_suite(const LemmaOptions& o) {
  LemmaReport r;
  const std::int64_t pairs = o.samples.value_or(10000);
  const int depth = o.depth.value_or(12);
  const DiskQuadrature quad = build_quadrature(8, 16);
  for (const double alpha : {1.0, 2.0}) {
    const auto d = domination_check(alpha, pairs, depth, o.seed);
    r.cases += d.samples;
    r.failures += d.failures;
    const std::string a = Weight::format_number(alpha);
    r.constants.emplace_back("c_hat_alpha_" + a, d.c_hat);
    Rng rng(o.seed + 1);
    double ratio = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto f = sample_positive_function(rng, quad.size(), k);
      const auto p = pointwise_domination_check(alpha, d.c_hat, f, quad, 8);
      ++r.cases;
      r.failures += p.violations;
      ratio = std::max(ratio, p.max_ratio);
    }
    r.constants.emplace_back("max_pointwise_ratio_alpha_" + a, ratio);
    if (alpha == 1.0) r.witness = "worst box " + to_string(d.worst_box);
  }
  r.verdict = r.failures == 0;
  return r;
}

inline LemmaReport k1_projection_suite(const LemmaOptions& o) {
  LemmaReport r;
  const int depth = o.depth.value_or(12);
  const DiskQuadrature q = build_quadrature(depth, 4, 2, 16);
  const std::vector<std::pair<std::string, std::function<Complex(Point)>>> fs{
      {"conj(z)", [](Point z) { return std::conj(z); }},
      {"|z|^2", [](Point z) { return Complex(std::norm(z)); }},
      {"conj(z) z^2", [](Point z) { return std::conj(z) * z * z; }}};
  for (const auto& [label, fn] : fs) {
    const auto f = q.sample(fn);
    const auto pf = sample_polynomial(bergman_project(f, q, 64), q);
    const auto a = apply_k1(f, q);
    const auto b = apply_k1(pf, q);
    double err = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    ++r.cases;
    if (err > 1e-4) ++r.failures;
    r.constants.emplace_back("discrepancy " + label, err);
  }
  r.witness = "depth " + std::to_string(depth) + ", " + std::to_string(q.size()) + " nodes";
  r.verdict = r.failures == 0;
  return r;
}

inline LemmaReport factorization_suite(const LemmaOptions& o) {
  LemmaReport r;
  const std::int64_t n = o.samples.value_or(3);
  const int depth = o.depth.value_or(12);
  const std::vector<int> depths = refinement_schedule(depth);
  Rng rng(o.seed);
  double worst = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<Point> pts;
    for (int k = 0; k < 5; ++k) {
      const double gap = std::exp(std::log(dyadic_length(depth)) * rng.uniform());
      pts.push_back(std::polar(1.0 - gap, two_pi * rng.uniform()));
    }
    const auto m = make_discrete_measure(pts, std::vector<double>(5, 1.0));
    std::vector<double> errors;
    for (const int d : depths) errors.push_back(factorization_check(m, build_quadrature(d, 16, 4, 32)).max_error);
    bool ok = errors.back() <= 1e-3;
    for (std::size_t k = 1; k < errors.size(); ++k) ok = ok && errors[k] <= errors[k - 1];
    if (errors.size() > 1) ok = ok && errors.back() < errors.front();
    ++r.cases;
    worst = std::max(worst, errors.back());
    if (!ok && r.failures++ == 0) r.witness = "measure " + std::to_string(i);
  }
  r.constants = {{"max_error_finest", worst}};
  r.verdict = r.failures == 0;
  if (r.witness.empty()) {
    r.witness = "refinements " + std::to_string(depths.front()) + ".." + std::to_string(depths.back());
  }
  return r;
}

inline LemmaReport weak_type_suite(const LemmaOptions& o) {
  LemmaReport r;
  const std::int64_t n = o.samples.value_or(100);
  const int depth = o.depth.value_or(8);
  const DiskQuadrature q = build_quadrature(depth, 16);
  Rng rng(o.seed);
  const std::vector<std::pair<Weight, double>> cases{
      {Weight::lebesgue(), 1.0}, {Weight::lebesgue(), 2.0}, {Weight::radial_power(1.0), 1.0}};
  for (const auto& [w, t] : cases) {
    const double c1 = carleson_embedding_constant(w, t, depth, &q, depth).c1_hat;
    double worst = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      const auto f = sample_positive_function(rng, q.size(), static_cast<int>(k));
      const auto wt = weak_type_report(w, t, f, q, depth);
      const double bound = std::pow(c1, 1.0 / t) * wt.l1_norm;
      ++r.cases;
      if (bound > 0.0) worst = std::max(worst, wt.value / bound);
      if (wt.value > bound * (1.0 + 1e-12) && r.failures++ == 0) {
        r.witness = w.spec() + " t=" + Weight::format_number(t) + " function " + std::to_string(k);
      }
    }
    r.constants.emplace_back("max_ratio " + w.spec() + " t=" + Weight::format_number(t), worst);
  }
  r.verdict = r.failures == 0;
  if (r.witness.empty()) r.witness = "weak norm / (c1^{1/t} L1)";
  return r;
}

}  // namespace detail

/// Runs the named invariant suite; unknown names are argument errors.
inline LemmaReport verify_lemma(const std::string& name, const LemmaOptions& options = {}) {
  LemmaReport r;
  if (name == "mei-cover") {
    r = detail::mei_cover_suite(options);
  } else if (name == "sandwich") {
    r = detail::sandwich_suite(options);
  } else if (name == "gram-psd") {
    r = detail::gram_psd_suite(options);
  } else if (name == "domination") {
    r = detail::domination_suite(options);
  } else if (name == "k1-projection") {
    r = detail::k1_projection_suite(options);
  } else if (name == "factorization") {
    r = detail::factorization_suite(options);
  } else if (name == "weak-type") {
    r = detail::weak_type_suite(options);
  } else {
    throw Error(ErrorKind::argument, "unknown lemma '" + name + "'");
  }
  r.name = name;
  return r;
}

}  // namespace carleson_lab
