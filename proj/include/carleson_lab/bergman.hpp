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
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/kernels.hpp"
#include "carleson_lab/operators.hpp"
#include "carleson_lab/parallel.hpp"
#include "carleson_lab/quadrature.hpp"

namespace carleson_lab {

/// Values of a function at the nodes of a quadrature.
using SampledFunction = std::vector<Complex>;

inline constexpr int default_max_projection_degree = 64;

inline ComplexVector cell_integrals(std::span<const Complex> f, const DiskQuadrature& quad) {
  if (f.size() != quad.size()) throw Error(ErrorKind::argument, "function is not sampled on this quadrature");
  ComplexVector c(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) c(static_cast<Eigen::Index>(i)) = f[i] * quad.area(i);
  return c;
}

/// (K_1 f)(z_i) = sum_j f(z_j) / (1 - z_i conj(z_j)) * area_j at every node.
inline SampledFunction apply_k1(std::span<const Complex> f, const DiskQuadrature& quad) {
  const PolarKernelOperator k1(KernelSpec::k_alpha(1.0), quad);
  const ComplexVector out = k1.apply(cell_integrals(f, quad));
  return SampledFunction(out.data(), out.data() + out.size());
}

/// K_1 f evaluated at arbitrary points inside the disk.
inline SampledFunction apply_k1_at(std::span<const Point> points, std::span<const Complex> f,
                                   const DiskQuadrature& quad) {
  const ComplexVector c = cell_integrals(f, quad);
  SampledFunction out(points.size());
  parallel_for(0, points.size(), [&](std::size_t i) {
    Complex sum = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j) {
      sum += c(static_cast<Eigen::Index>(j)) / (1.0 - points[i] * std::conj(quad.point(j)));
    }
    out[i] = sum;
  });
  return out;
}

/// Coefficients c_n = (n + 1) <f, z^n> of the Bergman projection, n <= degree.
inline std::vector<Complex> bergman_project(std::span<const Complex> f, const DiskQuadrature& quad,
                                            int degree, int max_degree = default_max_projection_degree) {
  if (degree < 0 || degree > max_degree) {
    throw Error(ErrorKind::argument, "projection degree must lie in [0, " + std::to_string(max_degree) + "]");
  }
  if (f.size() != quad.size()) throw Error(ErrorKind::argument, "function is not sampled on this quadrature");
  std::vector<Complex> c(static_cast<std::size_t>(degree) + 1);
  for (std::size_t j = 0; j < quad.size(); ++j) {
    const Complex wbar = std::conj(quad.point(j));
    Complex power = f[j] * quad.area(j);
    for (int n = 0; n <= degree; ++n) {
      c[static_cast<std::size_t>(n)] += power;
      power *= wbar;
    }
  }
  for (int n = 0; n <= degree; ++n) c[static_cast<std::size_t>(n)] *= static_cast<double>(n + 1);
  return c;
}

inline Complex eval_polynomial(std::span<const Complex> coefficients, Complex z) {
  Complex sum = 0.0;
  for (std::size_t n = coefficients.size(); n-- > 0;) sum = sum * z + coefficients[n];
  return sum;
}

inline SampledFunction sample_polynomial(std::span<const Complex> coefficients, const DiskQuadrature& quad) {
  SampledFunction out(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) out[i] = eval_polynomial(coefficients, quad.point(i));
  return out;
}

struct FactorizationReport {
  double max_error = 0.0;
  /// Quadrature values of int 1 / ((1 - z_a conj(u)) (1 - u conj(z_b))) dA(u).
  ComplexMatrix product_kernel;
  ComplexMatrix dirichlet_kernel;
};

/// Compares the kernel of K1 K1^* computed by quadrature in u with k_D on
/// the atoms of m; returns the largest entry discrepancy.
inline FactorizationReport factorization_check(const DiscreteMeasure& m, const DiskQuadrature& quad) {
  const auto n = static_cast<Eigen::Index>(m.size());
  FactorizationReport r;
  r.product_kernel = ComplexMatrix::Zero(n, n);
  r.dirichlet_kernel = assemble_operator(KernelSpec::dirichlet(), m).kernel;
  parallel_for(0, static_cast<std::size_t>(n * n), [&](std::size_t idx) {
    const auto a = static_cast<Eigen::Index>(idx) / n;
    const auto b = static_cast<Eigen::Index>(idx) % n;
    const Point z = m.points[static_cast<std::size_t>(a)];
    const Point w = m.points[static_cast<std::size_t>(b)];
    Complex sum = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j) {
      const Point u = quad.point(j);
      sum += quad.area(j) / ((1.0 - z * std::conj(u)) * (1.0 - u * std::conj(w)));
    }
    r.product_kernel(a, b) = sum;
  });
  r.max_error = (r.product_kernel - r.dirichlet_kernel).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace carleson_lab
