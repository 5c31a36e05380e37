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

#include <chrono>
#include <cmath>
#include <vector>

#include "carleson_lab/dyadic.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/report.hpp"

namespace carleson_lab {

namespace detail {

/// Milliseconds per call, repeating until at least min_ms has elapsed.
template <class Fn>
double time_ms(Fn&& fn, double min_ms = 50.0) {
  using clock = std::chrono::steady_clock;
  int calls = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    fn();
    ++calls;
    elapsed = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  } while (elapsed < min_ms);
  return elapsed / calls;
}

/// Direct O(N^2) sum of |1 - z conj(w)|^{-alpha} f(w) dA(w) at every node.
inline std::vector<double> dense_kernel_apply(double alpha, std::span<const double> f, const DiskQuadrature& quad) {
  const std::size_t n = quad.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point z = quad.point(i);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s += f[j] * quad.area(j) * std::pow(std::abs(1.0 - z * std::conj(quad.point(j))), -alpha);
    }
    out[i] = s;
  }
  return out;
}

}  // namespace detail

/// Quadrature with depth levels and about n nodes: the angular base is the
/// power of two nearest n / (depth + 1), at least 2^depth.
inline DiskQuadrature bench_quadrature(std::size_t n, int depth) {
  const double target = static_cast<double>(n) / (depth + 1);
  int e = static_cast<int>(std::lround(std::log2(std::max(target, 1.0))));
  e = std::max(e, depth);
  return build_quadrature(depth, 1 << e);
}

/// Dense kernel apply against the dyadic model operator K^0_alpha on the same nodes.
inline std::vector<BenchRow> bench(const std::vector<std::size_t>& sizes, int depth, double alpha = 1.0) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] < sizes[i - 1]) throw Error(ErrorKind::argument, "bench sizes must be ascending");
  }
  std::vector<BenchRow> rows;
  for (const std::size_t n : sizes) {
    const DiskQuadrature quad = bench_quadrature(n, depth);
    const std::vector<double> f(quad.size(), 1.0);
    const DyadicOperator op(Grid::zero, alpha, quad, depth);
    const auto cells = quad.weighted(std::span<const double>(f));
    volatile double sink = 0.0;
    BenchRow row;
    row.n = quad.size();
    row.dense_ms = detail::time_ms([&] { sink = sink + detail::dense_kernel_apply(alpha, f, quad)[0]; }, 0.0);
    row.dyadic_ms = detail::time_ms([&] { sink = sink + op.apply_cells<double>(cells)[0]; });
    row.ratio = row.dyadic_ms > 0.0 ? row.dense_ms / row.dyadic_ms : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace carleson_lab
