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

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"
#include "carleson_lab/kernels.hpp"
#include "carleson_lab/parallel.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/random.hpp"
#include "carleson_lab/weights.hpp"

namespace carleson_lab {

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Discrete measures and dense operators
// ---------------------------------------------------------------------------

struct DiscreteMeasure {
  std::vector<Point> points;
  std::vector<double> masses;

  std::size_t size() const { return points.size(); }
};

inline DiscreteMeasure make_discrete_measure(std::vector<Point> points, std::vector<double> masses) {
  if (points.size() != masses.size()) throw Error(ErrorKind::argument, "points and masses differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(std::abs(points[i]) < 1.0)) throw Error(ErrorKind::argument, "atoms must lie strictly inside the disk");
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) {
      throw Error(ErrorKind::argument, "atom masses must be positive and finite");
    }
  }
  return DiscreteMeasure{std::move(points), std::move(masses)};
}

/// Atoms at the quadrature nodes with masses density * cell area; zero-mass
/// nodes are dropped.
inline DiscreteMeasure discretize(const Weight& w, const DiskQuadrature& quad) {
  DiscreteMeasure m;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const double mass = w.density(quad.point(i)) * quad.area(i);
    if (mass > 0.0) {
      m.points.push_back(quad.point(i));
      m.masses.push_back(mass);
    }
  }
  return m;
}

/// Kernel matrix A[i][j] = k(z_i, z_j) with the atom masses; the operator
/// is f -> sum_j A[i][j] f_j m_j on L^2(m).
struct OperatorMatrix {
  ComplexMatrix kernel;
  RealVector masses;
  bool hermitian = false;

  Eigen::Index size() const { return kernel.rows(); }

  ComplexVector apply(const ComplexVector& f) const {
    return kernel * (masses.cast<Complex>().cwiseProduct(f));
  }

  /// The same operator in orthonormal coordinates: D^{1/2} A D^{1/2}.
  ComplexMatrix l2_matrix() const {
    const ComplexVector s = masses.cwiseSqrt().cast<Complex>();
    return s.asDiagonal() * kernel * s.asDiagonal();
  }
};

inline OperatorMatrix assemble_operator(const KernelSpec& spec, const DiscreteMeasure& m) {
  if (m.size() == 0) throw Error(ErrorKind::argument, "assemble_operator needs at least one atom");
  const auto n = static_cast<Eigen::Index>(m.size());
  OperatorMatrix op;
  op.kernel.resize(n, n);
  op.masses.resize(n);
  op.hermitian = spec.hermitian();
  for (Eigen::Index i = 0; i < n; ++i) op.masses(i) = m.masses[static_cast<std::size_t>(i)];
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      op.kernel(static_cast<Eigen::Index>(i), j) = eval_kernel(spec, m.points[i], m.points[static_cast<std::size_t>(j)]);
    }
  });
  return op;
}

inline OperatorMatrix real_part_operator(const OperatorMatrix& a) {
  OperatorMatrix out;
  out.kernel = a.kernel.real().cast<Complex>();
  out.masses = a.masses;
  out.hermitian = a.hermitian;
  return out;
}

// ---------------------------------------------------------------------------
// Linear operators in orthonormal coordinates
// ---------------------------------------------------------------------------

template <class Op>
concept LinearOperator = requires(const Op& op, const ComplexVector& v) {
  { op.rows() } -> std::convertible_to<Eigen::Index>;
  { op.cols() } -> std::convertible_to<Eigen::Index>;
  { op.apply(v) } -> std::convertible_to<ComplexVector>;
  { op.apply_adjoint(v) } -> std::convertible_to<ComplexVector>;
};

struct DenseOperator {
  ComplexMatrix matrix;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
  ComplexVector apply(const ComplexVector& v) const { return matrix * v; }
  ComplexVector apply_adjoint(const ComplexVector& v) const { return matrix.adjoint() * v; }
};

/// diag(left) * inner * diag(right).
template <LinearOperator Inner>
class ScaledOperator {
 public:
  ScaledOperator(const Inner& inner, RealVector left, RealVector right)
      : inner_(&inner), left_(std::move(left)), right_(std::move(right)) {}

  Eigen::Index rows() const { return inner_->rows(); }
  Eigen::Index cols() const { return inner_->cols(); }

  ComplexVector apply(const ComplexVector& v) const {
    const ComplexVector u = right_.cast<Complex>().cwiseProduct(v);
    return left_.cast<Complex>().cwiseProduct(inner_->apply(u));
  }
  ComplexVector apply_adjoint(const ComplexVector& v) const {
    const ComplexVector u = left_.cast<Complex>().cwiseProduct(v);
    return right_.cast<Complex>().cwiseProduct(inner_->apply_adjoint(u));
  }

 private:
  const Inner* inner_;
  RealVector left_;
  RealVector right_;
};

/// Scalings that turn an operator acting on cell integrals (f_j * a_j) into
/// the map L^2(mu) -> L^2(nu) in orthonormal coordinates: left sqrt(nu a),
/// right sqrt(a / mu). Cells where mu vanishes are outside L^2(mu) and get 0.
inline std::pair<RealVector, RealVector> weighted_scalings(const DiskQuadrature& quad, const Weight& mu,
                                                           const Weight& nu) {
  const auto n = static_cast<Eigen::Index>(quad.size());
  RealVector left(n), right(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point z = quad.point(static_cast<std::size_t>(i));
    const double a = quad.area(static_cast<std::size_t>(i));
    left(i) = std::sqrt(nu.density(z) * a);
    const double m = mu.density(z);
    right(i) = m > 0.0 ? std::sqrt(a / m) : 0.0;
  }
  return {left, right};
}

/// out_i = sum_j k(z_i, z_j) c_j over all quadrature nodes, without storing
/// the N x N matrix. Nodes of ring p sit at angles (2a + 1) / (2 n_p) turns,
/// so for a ring pair (p, q) the kernel depends only on an integer phase
/// difference modulo P = 2 max(n_p, n_q): each block is a circular
/// convolution, applied by FFT with the kernel spectrum precomputed.
class PolarKernelOperator {
 public:
  PolarKernelOperator(const KernelSpec& spec, const DiskQuadrature& quad) {
    const auto& rings = quad.rings();
    ring_count_ = rings.size();
    size_ = static_cast<Eigen::Index>(quad.size());
    for (const auto& r : rings) {
      offset_.push_back(r.offset);
      count_.push_back(r.angular_count);
      radius_.push_back(r.radius);
    }
    spectra_.resize(ring_count_ * ring_count_);
    Eigen::FFT<double> fft;
    std::vector<Complex> table;
    for (std::size_t p = 0; p < ring_count_; ++p) {
      for (std::size_t q = 0; q < ring_count_; ++q) {
        const std::int64_t period = period_of(p, q);
        table.resize(static_cast<std::size_t>(period));
        const double rr = radius_[p] * radius_[q];
        for (std::int64_t d = 0; d < period; ++d) {
          table[static_cast<std::size_t>(d)] = kernel_of_product(
              spec, std::polar(rr, two_pi * static_cast<double>(d) / static_cast<double>(period)));
        }
        fft.fwd(spectra_[p * ring_count_ + q], table);
      }
    }
  }

  Eigen::Index rows() const { return size_; }
  Eigen::Index cols() const { return size_; }

  ComplexVector apply(const ComplexVector& c) const { return multiply(c, false); }
  /// out_j = sum_i conj(k(z_i, z_j)) c_i
  ComplexVector apply_adjoint(const ComplexVector& c) const { return multiply(c, true); }

 private:
  std::int64_t period_of(std::size_t p, std::size_t q) const {
    return 2 * std::max(count_[p], count_[q]);
  }

  // Phase of node a of ring p in units of 1 / period.
  std::int64_t phase(std::size_t p, std::int64_t a, std::int64_t period) const {
    return (2 * a + 1) * (period / (2 * count_[p]));
  }

  ComplexVector multiply(const ComplexVector& c, bool adjoint) const {
    // Spectra of every source ring embedded at each period it is paired with.
    std::vector<std::map<std::int64_t, std::vector<Complex>>> source(ring_count_);
    parallel_for(0, ring_count_, [&](std::size_t q) {
      Eigen::FFT<double> fft;
      std::vector<Complex> buffer;
      for (std::size_t p = 0; p < ring_count_; ++p) {
        const std::int64_t period = period_of(p, q);
        if (source[q].count(period)) continue;
        buffer.assign(static_cast<std::size_t>(period), Complex{});
        for (std::int64_t b = 0; b < count_[q]; ++b) {
          buffer[static_cast<std::size_t>(phase(q, b, period))] = c(static_cast<Eigen::Index>(offset_[q]) + b);
        }
        fft.fwd(source[q][period], buffer);
      }
    });
    ComplexVector out = ComplexVector::Zero(size_);
    parallel_for(0, ring_count_, [&](std::size_t p) {
      Eigen::FFT<double> fft;
      std::map<std::int64_t, std::vector<Complex>> accumulated;
      for (std::size_t q = 0; q < ring_count_; ++q) {
        const std::int64_t period = period_of(p, q);
        // Forward: block (p, q) of k. Adjoint: conj of block (q, p) transposed,
        // whose spectrum is the conjugate of the (q, p) kernel spectrum.
        const auto& spectrum = adjoint ? spectra_[q * ring_count_ + p] : spectra_[p * ring_count_ + q];
        const auto& src = source[q].at(period);
        auto& acc = accumulated[period];
        if (acc.empty()) acc.assign(static_cast<std::size_t>(period), Complex{});
        for (std::size_t k = 0; k < acc.size(); ++k) {
          acc[k] += (adjoint ? std::conj(spectrum[k]) : spectrum[k]) * src[k];
        }
      }
      std::vector<Complex> values;
      for (auto& [period, acc] : accumulated) {
        fft.inv(values, acc);
        for (std::int64_t a = 0; a < count_[p]; ++a) {
          out(static_cast<Eigen::Index>(offset_[p]) + a) += values[static_cast<std::size_t>(phase(p, a, period))];
        }
      }
    });
    return out;
  }

  std::size_t ring_count_ = 0;
  Eigen::Index size_ = 0;
  std::vector<std::size_t> offset_;
  std::vector<std::int64_t> count_;
  std::vector<double> radius_;
  std::vector<std::vector<Complex>> spectra_;
};

// ---------------------------------------------------------------------------
// Norm estimation
// ---------------------------------------------------------------------------

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  /// Relative change of the estimate in the last iteration.
  double residual = 0.0;
  bool converged = false;
};

struct PowerIterationOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  std::uint64_t seed = Rng::default_seed;
};

/// Power iteration on B^H B. Every iterate is a lower bound for the norm.
template <LinearOperator Op>
NormEstimate operator_norm(const Op& op, const PowerIterationOptions& options = {}) {
  NormEstimate est;
  if (op.cols() == 0) {
    est.converged = true;
    return est;
  }
  Rng rng(options.seed);
  ComplexVector v(op.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.complex_normal();
  v.normalize();
  double previous = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const ComplexVector w = op.apply(v);
    const double value = w.norm();
    est.iterations = it;
    est.value = std::max(est.value, value);
    if (value == 0.0) {
      est.residual = 0.0;
      est.converged = true;
      return est;
    }
    est.residual = std::abs(value - previous) / value;
    if (it > 1 && est.residual <= options.tolerance) {
      est.converged = true;
      return est;
    }
    previous = value;
    v = op.apply_adjoint(w);
    const double vn = v.norm();
    if (vn == 0.0) {
      est.converged = true;
      return est;
    }
    v /= vn;
  }
  return est;
}

/// Exact spectral norm by singular value decomposition (for small matrices).
inline double dense_norm(const ComplexMatrix& b) {
  if (b.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(b);
  return svd.singularValues()(0);
}

/// Largest |eigenvalue| of the Hermitian part of b; the norm when b is Hermitian.
inline double hermitian_norm(const ComplexMatrix& b) {
  if (b.size() == 0) return 0.0;
  const ComplexMatrix h = 0.5 * (b + b.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Operator norm of T on L^2(masses).
inline NormEstimate operator_norm(const OperatorMatrix& a, const PowerIterationOptions& options = {}) {
  return operator_norm(DenseOperator{a.l2_matrix()}, options);
}

/// sup over real unit vectors x of |B x|: x^T Re(B^H B) x for real x.
inline double real_restricted_norm(const ComplexMatrix& b) {
  const RealMatrix g = (b.adjoint() * b).real();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// sup over unit vectors of |<B x, x>| for Hermitian B: the spectral radius.
inline double quadratic_form_sup(const ComplexMatrix& b) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(b, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Same supremum over real unit vectors only.
inline double real_quadratic_form_sup(const ComplexMatrix& b) {
  const RealMatrix s = 0.5 * (b.real() + b.real().transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct SandwichReport {
  double norm_k = 0.0;
  double norm_re = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  /// norm_re / norm_k and norm_k / norm_re.
  double lower_ratio = 0.0;
  double upper_ratio = 0.0;
};

/// Checks |T_Re(k)| <= |T_k| <= 2 |T_Re(k)| with multiplicative slack.
inline SandwichReport norm_sandwich_check(const KernelSpec& spec, const DiscreteMeasure& m,
                                          double slack = 1e-9) {
  if (!spec.hermitian()) throw Error(ErrorKind::argument, "norm sandwich needs a Hermitian kernel");
  const OperatorMatrix a = assemble_operator(spec, m);
  const OperatorMatrix re = real_part_operator(a);
  SandwichReport r;
  if (m.size() <= 200) {
    r.norm_k = hermitian_norm(a.l2_matrix());
    r.norm_re = hermitian_norm(re.l2_matrix());
  } else {
    PowerIterationOptions o;
    o.tolerance = 1e-13;
    const NormEstimate ek = operator_norm(a, o);
    const NormEstimate er = operator_norm(re, o);
    if (!ek.converged || !er.converged) throw Error(ErrorKind::argument, "power iteration did not converge");
    r.norm_k = ek.value;
    r.norm_re = er.value;
  }
  r.lower_ratio = r.norm_re / r.norm_k;
  r.upper_ratio = r.norm_k / r.norm_re;
  r.lower_ok = r.norm_re <= (1.0 + slack) * r.norm_k;
  r.upper_ok = r.norm_k <= 2.0 * (1.0 + slack) * r.norm_re;
  return r;
}

struct GramReport {
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  bool positive = false;
};

/// Smallest eigenvalue of [k(z_i, z_j)]; positive when it is at least
/// -1e-10 * trace.
inline GramReport gram_psd_check(std::span<const Point> points, const KernelSpec& spec) {
  if (!spec.hermitian()) throw Error(ErrorKind::argument, "Gram check needs a Hermitian kernel");
  const auto n = static_cast<Eigen::Index>(points.size());
  ComplexMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = eval_kernel(spec, points[i], points[j]);
  }
  GramReport r;
  if (n == 0) {
    r.positive = true;
    return r;
  }
  r.trace = g.diagonal().real().sum();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.positive = r.min_eigenvalue >= -1e-10 * r.trace;
  return r;
}

}  // namespace carleson_lab
