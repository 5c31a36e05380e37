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
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"

namespace carleson_lab {

/// Density tabulated on a polar grid, looked up by nearest node (periodic in
/// angle). Rows are stored r-major: values[i * angles.size() + k].
struct GridDensity {
  std::vector<double> radii;
  std::vector<double> angles;
  std::vector<double> values;

  bool empty() const { return values.empty(); }

  double at(Point z) const {
    if (values.empty()) return 0.0;
    const double r = std::abs(z);
    auto it = std::lower_bound(radii.begin(), radii.end(), r);
    std::size_t i = static_cast<std::size_t>(it - radii.begin());
    if (i == radii.size() || (i > 0 && r - radii[i - 1] <= radii[i] - r)) --i;

    const double theta = std::fmod(std::arg(z) + two_pi, two_pi);
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    auto ang = std::lower_bound(angles.begin(), angles.end(), theta);
    const std::size_t k = static_cast<std::size_t>(ang - angles.begin());
    const std::size_t n = angles.size();
    for (std::size_t cand : {(k + n - 1) % n, k % n}) {
      double gap = std::abs(theta - angles[cand]);
      gap = std::min(gap, two_pi - gap);
      if (gap < best_gap) {
        best_gap = gap;
        best = cand;
      }
    }
    return values[i * n + best];
  }

  double min_value() const {
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  }
};

/// Reads "r_count theta_count" followed by r_count * theta_count rows
/// "r theta density" with r varying slowest.
inline GridDensity read_grid_density(std::istream& in) {
  long long r_count = 0, theta_count = 0;
  if (!(in >> r_count >> theta_count)) {
    throw Error(ErrorKind::parse, "grid header must be 'r_count theta_count'");
  }
  if (r_count < 0 || theta_count < 0 || (r_count == 0) != (theta_count == 0)) {
    throw Error(ErrorKind::parse, "grid counts must both be zero or both positive");
  }
  GridDensity grid;
  grid.radii.resize(static_cast<std::size_t>(r_count));
  grid.angles.resize(static_cast<std::size_t>(theta_count));
  grid.values.resize(static_cast<std::size_t>(r_count * theta_count));
  for (long long i = 0; i < r_count; ++i) {
    for (long long k = 0; k < theta_count; ++k) {
      double r = 0, theta = 0, density = 0;
      if (!(in >> r >> theta >> density)) {
        throw Error(ErrorKind::parse, "grid file ended early at row " +
                                          std::to_string(i * theta_count + k + 2));
      }
      if (!std::isfinite(density) || density < 0.0) {
        throw Error(ErrorKind::parse, "grid densities must be finite and >= 0");
      }
      if (!(r >= 0.0 && r < 1.0) || !std::isfinite(theta)) {
        throw Error(ErrorKind::parse, "grid radii must lie in [0, 1) and angles be finite");
      }
      theta = std::fmod(std::fmod(theta, two_pi) + two_pi, two_pi);
      if (k == 0) grid.radii[static_cast<std::size_t>(i)] = r;
      if (i == 0) grid.angles[static_cast<std::size_t>(k)] = theta;
      if (std::abs(r - grid.radii[static_cast<std::size_t>(i)]) > 1e-12 ||
          std::abs(theta - grid.angles[static_cast<std::size_t>(k)]) > 1e-12) {
        throw Error(ErrorKind::parse, "grid rows are not in r-major tensor order");
      }
      grid.values[static_cast<std::size_t>(i * theta_count + k)] = density;
    }
  }
  if (!std::is_sorted(grid.radii.begin(), grid.radii.end()) ||
      !std::is_sorted(grid.angles.begin(), grid.angles.end())) {
    throw Error(ErrorKind::parse, "grid radii and angles must be ascending");
  }
  return grid;
}

inline GridDensity load_grid_density(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open grid file '" + path + "'");
  return read_grid_density(in);
}

inline void write_grid_density(std::ostream& out, const GridDensity& grid) {
  out.precision(17);
  out << grid.radii.size() << ' ' << grid.angles.size() << '\n';
  for (std::size_t i = 0; i < grid.radii.size(); ++i) {
    for (std::size_t k = 0; k < grid.angles.size(); ++k) {
      out << grid.radii[i] << ' ' << grid.angles[k] << ' '
          << grid.values[i * grid.angles.size() + k] << '\n';
    }
  }
}

/// A density on the disk together with integrability metadata.
class Weight {
 public:
  enum class Family { lebesgue, radial_power, product, sampled_grid };

  static Weight lebesgue() {
    Weight w;
    w.spec_ = "lebesgue";
    return w;
  }

  /// Density (1 - |z|)^a; the total mass is finite iff a > -1.
  static Weight radial_power(double a) {
    if (!std::isfinite(a)) throw Error(ErrorKind::argument, "radial-power exponent must be finite");
    Weight w;
    w.family_ = Family::radial_power;
    w.exponent_ = a;
    w.finite_ = a > -1.0;
    w.spec_ = "radial-power:" + format_number(a);
    return w;
  }

  static Weight product(const Weight& lhs, const Weight& rhs) {
    Weight w;
    w.family_ = Family::product;
    w.lhs_ = std::make_shared<const Weight>(lhs);
    w.rhs_ = std::make_shared<const Weight>(rhs);
    if (const auto a = w.radial_exponent()) {
      w.finite_ = *a > -1.0;
    } else {
      w.finite_ = lhs.finite_ && rhs.finite_;
    }
    w.positive_ = lhs.positive_ && rhs.positive_;
    w.spec_ = "product:" + lhs.spec_ + "," + rhs.spec_;
    return w;
  }

  static Weight sampled_grid(GridDensity grid, std::string label) {
    Weight w;
    w.family_ = Family::sampled_grid;
    w.positive_ = !grid.empty() && grid.min_value() > 0.0;
    w.grid_ = std::make_shared<const GridDensity>(std::move(grid));
    w.spec_ = "grid:" + label;
    return w;
  }

  Family family() const { return family_; }
  double exponent() const { return exponent_; }
  const Weight& left() const { return *lhs_; }
  const Weight& right() const { return *rhs_; }
  const GridDensity& grid() const { return *grid_; }

  bool finite() const { return finite_; }
  bool strictly_positive() const { return positive_; }
  const std::string& spec() const { return spec_; }

  /// Exponent a when the density is (1 - |z|)^a (lebesgue is a = 0).
  std::optional<double> radial_exponent() const {
    switch (family_) {
      case Family::lebesgue: return 0.0;
      case Family::radial_power: return exponent_;
      case Family::product: {
        const auto a = lhs_->radial_exponent();
        const auto b = rhs_->radial_exponent();
        if (a && b) return *a + *b;
        return std::nullopt;
      }
      case Family::sampled_grid: return std::nullopt;
    }
    return std::nullopt;
  }

  double density(Point z) const {
    switch (family_) {
      case Family::lebesgue: return 1.0;
      case Family::radial_power: return std::pow(1.0 - std::abs(z), exponent_);
      case Family::product: return lhs_->density(z) * rhs_->density(z);
      case Family::sampled_grid: return grid_->at(z);
    }
    return 0.0;
  }

  static std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    std::string s = os.str();
    // Prefer the shortest representation that parses back to v.
    for (int digits = 1; digits < 17; ++digits) {
      std::ostringstream shorter;
      shorter.precision(digits);
      shorter << v;
      if (std::stod(shorter.str()) == v) return shorter.str();
    }
    return s;
  }

 private:
  friend Weight dual_weight(const Weight& w, double p);

  Family family_ = Family::lebesgue;
  double exponent_ = 0.0;
  std::shared_ptr<const Weight> lhs_;
  std::shared_ptr<const Weight> rhs_;
  std::shared_ptr<const GridDensity> grid_;
  bool finite_ = true;
  bool positive_ = true;
  std::string spec_;
};

namespace detail {

inline Weight parse_weight_at(std::string_view text, std::size_t& pos) {
  const auto rest = text.substr(pos);
  const auto take_token = [&](std::size_t from) {
    std::size_t end = text.find(',', from);
    if (end == std::string_view::npos) end = text.size();
    return std::pair{text.substr(from, end - from), end};
  };
  if (rest.starts_with("lebesgue")) {
    pos += 8;
    return Weight::lebesgue();
  }
  if (rest.starts_with("radial-power:")) {
    const auto [token, end] = take_token(pos + 13);
    double a = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), a);
    if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
      throw Error(ErrorKind::parse, "bad radial-power exponent '" + std::string(token) + "'");
    }
    pos = end;
    return Weight::radial_power(a);
  }
  if (rest.starts_with("product:")) {
    pos += 8;
    const Weight lhs = parse_weight_at(text, pos);
    if (pos >= text.size() || text[pos] != ',') {
      throw Error(ErrorKind::parse, "product needs two comma-separated weights");
    }
    ++pos;
    const Weight rhs = parse_weight_at(text, pos);
    return Weight::product(lhs, rhs);
  }
  if (rest.starts_with("grid:")) {
    const auto [token, end] = take_token(pos + 5);
    if (token.empty()) throw Error(ErrorKind::parse, "grid weight needs a file path");
    pos = end;
    const std::string path(token);
    return Weight::sampled_grid(load_grid_density(path), path);
  }
  throw Error(ErrorKind::parse, "unknown weight spec '" + std::string(rest) + "'");
}

}  // namespace detail

/// Parses lebesgue | radial-power:<a> | product:<spec>,<spec> | grid:<path>.
inline Weight parse_weight(std::string_view text) {
  std::size_t pos = 0;
  Weight w = detail::parse_weight_at(text, pos);
  if (pos != text.size()) {
    throw Error(ErrorKind::parse, "trailing characters in weight spec '" + std::string(text) + "'");
  }
  return w;
}

/// The weight w^(1 - p') with p' = p / (p - 1). A result that is not
/// integrable is returned with finite() == false.
inline Weight dual_weight(const Weight& w, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::argument, "dual_weight needs 1 < p < inf");
  if (!w.strictly_positive()) {
    throw Error(ErrorKind::domain, "dual weight of '" + w.spec() + "' needs a strictly positive density");
  }
  const double s = 1.0 - p / (p - 1.0);
  switch (w.family()) {
    case Weight::Family::lebesgue: return Weight::lebesgue();
    case Weight::Family::radial_power: return Weight::radial_power(w.exponent() * s);
    case Weight::Family::product:
      return Weight::product(dual_weight(w.left(), p), dual_weight(w.right(), p));
    case Weight::Family::sampled_grid: {
      GridDensity g = w.grid();
      for (double& v : g.values) v = std::pow(v, s);
      Weight out = Weight::sampled_grid(std::move(g), "");
      out.spec_ = "dual(" + w.spec() + ";" + Weight::format_number(p) + ")";
      return out;
    }
  }
  return w;
}

}  // namespace carleson_lab
