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
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"

namespace carleson_lab {

using Complex = std::complex<double>;

/// Kernels of the form k(z, w) = g(z conj(w)).
struct KernelSpec {
  enum class Kind { k_alpha, dirichlet, custom_series, modulus_alpha };

  Kind kind = Kind::dirichlet;
  double alpha = 1.0;
  std::vector<Complex> coefficients;

  static constexpr std::size_t max_series_terms = 10000;

  /// 1 / (1 - z conj(w))^alpha, principal branch.
  static KernelSpec k_alpha(double a) {
    if (!(a > 0.0)) throw Error(ErrorKind::argument, "k_alpha needs alpha > 0");
    return KernelSpec{Kind::k_alpha, a, {}};
  }

  /// 1 / |1 - z conj(w)|^alpha, the positive majorant of k_alpha.
  static KernelSpec modulus_alpha(double a) {
    if (!(a > 0.0)) throw Error(ErrorKind::argument, "modulus_alpha needs alpha > 0");
    return KernelSpec{Kind::modulus_alpha, a, {}};
  }

  /// (1 / x) log(1 / (1 - x)) with x = z conj(w), equal to sum x^n / (n + 1).
  static KernelSpec dirichlet() { return KernelSpec{Kind::dirichlet, 1.0, {}}; }

  /// sum_n c_n x^n, truncated at max_series_terms.
  static KernelSpec custom_series(std::vector<Complex> c) {
    if (c.empty()) throw Error(ErrorKind::argument, "custom series needs at least one coefficient");
    if (c.size() > max_series_terms) c.resize(max_series_terms);
    return KernelSpec{Kind::custom_series, 1.0, std::move(c)};
  }

  /// k(z, w) = conj(k(w, z)); holds when g has real Taylor coefficients.
  bool hermitian() const {
    if (kind != Kind::custom_series) return true;
    for (const Complex& c : coefficients) {
      if (c.imag() != 0.0) return false;
    }
    return true;
  }

  std::string name() const {
    switch (kind) {
      case Kind::k_alpha: return "k_alpha(" + std::to_string(alpha) + ")";
      case Kind::modulus_alpha: return "modulus_alpha(" + std::to_string(alpha) + ")";
      case Kind::dirichlet: return "dirichlet";
      case Kind::custom_series: return "custom-series(" + std::to_string(coefficients.size()) + ")";
    }
    return "unknown";
  }
};

/// -log(1 - x) / x with the removable singularity at 0 filled by 1.
inline Complex dirichlet_kernel_of(Complex x) {
  if (std::abs(x) < 0.25) {
    Complex sum = 0.0, power = 1.0;
    for (int n = 0; n < 64; ++n) {
      const Complex term = power / static_cast<double>(n + 1);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      power *= x;
    }
    return sum;
  }
  return -std::log(1.0 - x) / x;
}

/// g(x) for the kernel k(z, w) = g(z conj(w)).
inline Complex kernel_of_product(const KernelSpec& spec, Complex x) {
  switch (spec.kind) {
    case KernelSpec::Kind::k_alpha:
      if (spec.alpha == 1.0) return 1.0 / (1.0 - x);
      return std::exp(-spec.alpha * std::log(1.0 - x));
    case KernelSpec::Kind::modulus_alpha: return std::pow(std::abs(1.0 - x), -spec.alpha);
    case KernelSpec::Kind::dirichlet: return dirichlet_kernel_of(x);
    case KernelSpec::Kind::custom_series: {
      Complex sum = 0.0;
      for (std::size_t n = spec.coefficients.size(); n-- > 0;) sum = sum * x + spec.coefficients[n];
      return sum;
    }
  }
  return 0.0;
}

inline Complex eval_kernel(const KernelSpec& spec, Point z, Point w) {
  return kernel_of_product(spec, z * std::conj(w));
}

/// Bound |x|^(N+1) / (1 - |x|) * max|c_n| on the omitted tail of a custom
/// series whose coefficients are assumed to stay bounded.
inline double series_tail_bound(const KernelSpec& spec, Complex x) {
  if (spec.kind != KernelSpec::Kind::custom_series) return 0.0;
  double cmax = 0.0;
  for (const Complex& c : spec.coefficients) cmax = std::max(cmax, std::abs(c));
  const double r = std::abs(x);
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  return cmax * std::pow(r, static_cast<double>(spec.coefficients.size())) / (1.0 - r);
}

}  // namespace carleson_lab
