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
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "carleson_lab/errors.hpp"
#include "json.hpp"

namespace carleson_lab {

inline constexpr int report_schema_version = 1;

using Json = nlohmann::ordered_json;

struct StageRecord {
  std::string name;
  std::vector<std::pair<std::string, double>> constants;
  bool verdict = false;
  std::string witness;
  /// (depth, value) per refinement, when the stage refines.
  std::vector<std::pair<int, double>> trace;
  std::string error;

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct Report {
  int schema_version = report_schema_version;
  std::string command;
  Json config = Json::object();
  std::vector<StageRecord> stages;
  std::vector<std::pair<std::string, double>> timings_ms;

  bool verdict() const {
    for (const auto& s : stages) {
      if (!s.verdict) return false;
    }
    return true;
  }

  friend bool operator==(const Report&, const Report&) = default;
};

namespace detail {

// JSON has no inf / nan; they travel as strings.
inline Json encode_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double decode_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorKind::parse, "report: expected a number, got " + j.dump());
}

inline Json encode_pairs(const std::vector<std::pair<std::string, double>>& v) {
  Json o = Json::object();
  for (const auto& [k, x] : v) o[k] = encode_number(x);
  return o;
}

inline std::vector<std::pair<std::string, double>> decode_pairs(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::parse, "report: expected an object");
  std::vector<std::pair<std::string, double>> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), decode_number(it.value()));
  return out;
}

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::parse, std::string("report: missing key '") + key + "'");
  return j.at(key);
}

}  // namespace detail

inline Json to_json(const StageRecord& s) {
  Json j;
  j["name"] = s.name;
  j["constants"] = detail::encode_pairs(s.constants);
  j["verdict"] = s.verdict;
  j["witness"] = s.witness;
  if (!s.trace.empty()) {
    Json t = Json::array();
    for (const auto& [d, v] : s.trace) t.push_back(Json::array({d, detail::encode_number(v)}));
    j["trace"] = std::move(t);
  }
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

inline Json to_json(const Report& r) {
  Json j;
  j["schema_version"] = r.schema_version;
  j["command"] = r.command;
  j["config"] = r.config;
  j["verdict"] = r.verdict();
  Json stages = Json::array();
  for (const auto& s : r.stages) stages.push_back(to_json(s));
  j["stages"] = std::move(stages);
  j["timings_ms"] = detail::encode_pairs(r.timings_ms);
  return j;
}

inline StageRecord stage_from_json(const Json& j) {
  StageRecord s;
  s.name = detail::member(j, "name").get<std::string>();
  s.constants = detail::decode_pairs(detail::member(j, "constants"));
  s.verdict = detail::member(j, "verdict").get<bool>();
  s.witness = detail::member(j, "witness").get<std::string>();
  if (j.contains("trace")) {
    for (const auto& e : j.at("trace")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorKind::parse, "report: trace entries are [depth, value]");
      s.trace.emplace_back(e[0].get<int>(), detail::decode_number(e[1]));
    }
  }
  if (j.contains("error")) s.error = j.at("error").get<std::string>();
  return s;
}

inline Report report_from_json(const Json& j) {
  Report r;
  r.schema_version = detail::member(j, "schema_version").get<int>();
  if (r.schema_version != report_schema_version) {
    throw Error(ErrorKind::parse, "report: unsupported schema version " + std::to_string(r.schema_version));
  }
  r.command = detail::member(j, "command").get<std::string>();
  r.config = detail::member(j, "config");
  for (const auto& s : detail::member(j, "stages")) r.stages.push_back(stage_from_json(s));
  r.timings_ms = detail::decode_pairs(detail::member(j, "timings_ms"));
  return r;
}

inline std::string dump_report(const Report& r, int indent = 2) { return to_json(r).dump(indent) + "\n"; }

inline Report parse_report(const std::string& text) {
  try {
    return report_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::parse, std::string("report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Bench CSV
// ---------------------------------------------------------------------------

struct BenchRow {
  std::size_t n = 0;
  double dense_ms = 0.0;
  double dyadic_ms = 0.0;
  /// dense_ms / dyadic_ms
  double ratio = 0.0;
};

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "N,dense_ms,dyadic_ms,ratio\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line.precision(6);
    line << r.n << ',' << r.dense_ms << ',' << r.dyadic_ms << ',' << r.ratio << '\n';
    out << line.str();
  }
}

}  // namespace carleson_lab
