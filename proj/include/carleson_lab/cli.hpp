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
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carleson_lab/bench.hpp"
#include "carleson_lab/dirichlet.hpp"
#include "carleson_lab/dyadic.hpp"
#include "carleson_lab/errors.hpp"
#include "carleson_lab/lemmas.hpp"
#include "carleson_lab/measures.hpp"
#include "carleson_lab/parallel.hpp"
#include "carleson_lab/report.hpp"
#include "carleson_lab/weights.hpp"

namespace carleson_lab {

inline constexpr int exit_ok = 0;
inline constexpr int exit_verdict_false = 1;
inline constexpr int exit_usage = 2;

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"test-weight", "embedding", "two-weight",
                                              "certify",     "verify-lemma", "bench"};
  return names;
}

struct RunConfig {
  std::string command;
  std::string lemma;
  std::string weight = "lebesgue";
  std::string mu = "lebesgue";
  std::string nu = "lebesgue";
  double p = 2.0;
  double q = 2.0;
  double alpha = 1.0;
  int depth = 12;
  /// Defaults to depth; unused by bench.
  std::optional<int> quad_depth;
  std::optional<std::int64_t> samples;
  std::uint64_t seed = Rng::default_seed;
  std::string out;
  /// json everywhere; csv by default for bench.
  std::optional<std::string> format;
  unsigned threads = 0;
  std::vector<std::size_t> sizes{1024, 4096, 16384};

  int quadrature_depth() const { return quad_depth.value_or(depth); }
  std::string output_format() const { return format.value_or(command == "bench" ? "csv" : "json"); }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  int exit_code = exit_ok;
  Report report;
  /// Serialized JSON or CSV.
  std::string output;
};

inline std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v <= 0) throw UsageError("bad size '" + item + "' in --sizes");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

inline Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  if (!c.lemma.empty()) j["lemma"] = c.lemma;
  j["weight"] = c.weight;
  j["mu"] = c.mu;
  j["nu"] = c.nu;
  j["p"] = c.p;
  j["q"] = c.q;
  j["alpha"] = c.alpha;
  j["depth"] = c.depth;
  j["quad_depth"] = c.quadrature_depth();
  j["samples"] = c.samples ? Json(*c.samples) : Json(nullptr);
  j["seed"] = c.seed;
  j["format"] = c.output_format();
  j["threads"] = c.threads;
  if (c.command == "bench") j["sizes"] = c.sizes;
  return j;
}

/// Parses argv into a RunConfig. Help requests return std::nullopt after
/// printing to out; malformed input throws UsageError.
inline std::optional<RunConfig> parse_run_config(int argc, const char* const* argv, std::ostream& out) {
  RunConfig c;
  CLI::App app{"Numerical checks for weighted Dirichlet-space embeddings", "carleson-lab"};
  app.add_option("command", c.command, "test-weight | embedding | two-weight | certify | verify-lemma | bench")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("lemma", c.lemma, "lemma suite for verify-lemma");
  app.add_option("--weight", c.weight, "weight spec: lebesgue | radial-power:<a> | product:<w>,<w> | grid:<path>");
  app.add_option("--mu", c.mu, "domain weight for two-weight");
  app.add_option("--nu", c.nu, "target weight for two-weight");
  app.add_option("--p", c.p, "domain exponent");
  app.add_option("--q", c.q, "target exponent");
  app.add_option("--alpha", c.alpha, "kernel exponent");
  auto* depth_opt = app.add_option("--depth", c.depth, "dyadic depth (default 12; 6 for bench)")->check(CLI::Range(0, 30));
  app.add_option("--quad-depth", c.quad_depth, "quadrature depth (default: depth)")->check(CLI::Range(0, 30));
  app.add_option("--samples", c.samples, "sample count for the command")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--out", c.out, "output path (default: stdout)");
  app.add_option("--format", c.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", c.threads, "worker cap (0: hardware)");
  std::string sizes;
  auto* sizes_opt = app.add_option("--sizes", sizes, "comma-separated bench sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (sizes_opt->count() > 0) c.sizes = parse_sizes(sizes);
  if (c.command == "bench" && depth_opt->count() == 0) c.depth = 6;
  for (std::size_t i = 1; i < c.sizes.size(); ++i) {
    if (c.sizes[i] < c.sizes[i - 1]) throw UsageError("--sizes must be ascending");
  }
  if (c.command == "verify-lemma") {
    if (c.lemma.empty()) throw UsageError("verify-lemma needs a lemma name");
    if (std::find(lemma_names().begin(), lemma_names().end(), c.lemma) == lemma_names().end()) {
      throw UsageError("unknown lemma '" + c.lemma + "'");
    }
  } else if (!c.lemma.empty()) {
    throw UsageError("unexpected argument '" + c.lemma + "'");
  }
  if (c.output_format() == "csv" && c.command != "bench") throw UsageError("csv output is only available for bench");
  if (c.quadrature_depth() < c.depth) throw UsageError("--quad-depth must be at least --depth");
  try {
    (void)ExponentConfig::make(c.p, c.q, c.alpha);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

namespace detail {

inline Weight usage_weight(const std::string& spec, const char* flag) {
  try {
    return parse_weight(spec);
  } catch (const Error& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

inline std::string point_text(Point z) {
  return "(" + Weight::format_number(z.real()) + ", " + Weight::format_number(z.imag()) + ")";
}

class StageRunner {
 public:
  explicit StageRunner(Report& report) : report_(report) {}

  /// Runs body into a new stage; numerical errors become a failed stage.
  void operator()(const std::string& name, const std::function<void(StageRecord&)>& body) {
    StageRecord s;
    s.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      body(s);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      s.verdict = false;
      s.error = e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report_.timings_ms.emplace_back(name, ms);
    report_.stages.push_back(std::move(s));
  }

 private:
  Report& report_;
};

inline void run_test_weight(const RunConfig& c, StageRunner& stage) {
  const Weight w = usage_weight(c.weight, "--weight");
  stage("doubling", [&](StageRecord& s) {
    DoublingOptions o;
    o.seed = c.seed;
    const auto r = doubling_report(w, static_cast<std::size_t>(c.samples.value_or(1000)), o);
    s.constants = {{"c_hat", r.c_hat}, {"worst_radius", r.worst_radius}, {"samples", static_cast<double>(r.samples)}};
    s.verdict = std::isfinite(r.c_hat);
    s.witness = "center " + point_text(r.worst_center) + ", radius " + Weight::format_number(r.worst_radius);
  });
  stage("reverse-doubling", [&](StageRecord& s) {
    ReverseDoublingOptions o;
    o.seed = c.seed;
    std::optional<DiskQuadrature> quad;
    if (!w.radial_exponent()) {
      quad = build_quadrature(c.quadrature_depth(), 16);
      o.quad = &*quad;
    }
    const auto r = reverse_doubling_report(w, c.depth, static_cast<std::size_t>(c.samples.value_or(2000)), o);
    s.constants = {{"delta_hat", r.delta_hat}, {"arcs_tested", static_cast<double>(r.arcs_tested)}};
    s.verdict = r.verdict;
    s.witness = "arc start " + Weight::format_number(r.worst_arc.start_turns()) + " turns, length " +
                Weight::format_number(r.worst_arc.length);
  });
}

inline void run_embedding(const RunConfig& c, StageRunner& stage) {
  const Weight w = usage_weight(c.weight, "--weight");
  const auto cfg = ExponentConfig::make(c.p, c.q, c.alpha);
  const double t = cfg.t();
  std::optional<DiskQuadrature> quad;
  auto quadrature = [&]() -> const DiskQuadrature& {
    if (!quad) quad = build_quadrature(c.quadrature_depth(), 16);
    return *quad;
  };
  stage("carleson-embedding", [&](StageRecord& s) {
    const auto r = w.radial_exponent() ? carleson_embedding_constant(w, t, c.depth)
                                       : carleson_embedding_constant(w, t, c.depth, &quadrature());
    s.constants = {{"c1_hat", r.c1_hat},
                   {"grid_0", r.per_grid[0]},
                   {"grid_1/3", r.per_grid[1]},
                   {"tail_estimate", r.tail_estimate},
                   {"max_top_level", static_cast<double>(r.max_top_level)},
                   {"t", t}};
    s.verdict = std::isfinite(r.c1_hat);
    s.witness = "box " + to_string(r.worst_box);
  });
  const std::int64_t functions = c.samples.value_or(20);
  std::vector<std::vector<double>> fs;
  double c1_all = NAN;
  auto prepare = [&] {
    if (!fs.empty() || functions == 0) return;
    const auto& q = quadrature();
    c1_all = carleson_embedding_constant(w, t, c.depth, &q, c.depth).c1_hat;
    Rng rng(c.seed);
    for (std::int64_t k = 0; k < functions; ++k) {
      fs.push_back(sample_positive_function(rng, q.size(), static_cast<int>(k)));
    }
  };
  stage("weak-type", [&](StageRecord& s) {
    prepare();
    double worst = 0.0;
    std::int64_t violations = 0;
    for (const auto& f : fs) {
      const auto r = weak_type_report(w, t, f, quadrature(), c.depth);
      const double bound = std::pow(c1_all, 1.0 / t) * r.l1_norm;
      if (bound > 0.0) worst = std::max(worst, r.value / bound);
      if (r.value > bound * (1.0 + 1e-12)) ++violations;
    }
    s.constants = {{"c1_all_levels", c1_all},
                   {"max_ratio_to_bound", worst},
                   {"violations", static_cast<double>(violations)},
                   {"functions", static_cast<double>(fs.size())}};
    s.verdict = violations == 0;
    s.witness = "weak norm <= c1^{1/t} * L1 norm";
  });
  stage("strong-embedding", [&](StageRecord& s) {
    prepare();
    double worst = 0.0;
    for (const auto& f : fs) worst = std::max(worst, strong_embedding_check(w, cfg, f, quadrature(), c.depth));
    s.constants = {{"max_ratio", worst}};
    if (t == 1.0) {
      const double bound = cfg.p_conjugate() * std::pow(c1_all, 1.0 / cfg.p);
      s.constants.emplace_back("bound", bound);
      s.verdict = worst <= bound * (1.0 + 1e-12);
      s.witness = "p = q: ratio <= p' c1^{1/p}";
    } else {
      s.verdict = std::isfinite(worst);
      s.witness = "sampled ratio, t = " + Weight::format_number(t);
    }
  });
}

inline void run_two_weight(const RunConfig& c, StageRunner& stage) {
  const Weight nu = usage_weight(c.nu, "--nu");
  const Weight mu = usage_weight(c.mu, "--mu");
  const auto cfg = ExponentConfig::make(c.p, c.q, c.alpha);
  stage("testing-constant", [&](StageRecord& s) {
    std::optional<DiskQuadrature> quad;
    if (!nu.radial_exponent() || !mu.radial_exponent()) quad = build_quadrature(c.quadrature_depth(), 16);
    const auto r = two_weight_testing_constant(nu, mu, cfg, c.depth, quad ? &*quad : nullptr,
                                               static_cast<int>(c.samples.value_or(1000)), c.seed);
    s.constants = {{"sup_value", r.sup_value}, {"grid_0", r.per_grid[0]}, {"grid_1/3", r.per_grid[1]},
                   {"random_arc_sup", r.random_arc_sup}};
    s.verdict = std::isfinite(r.sup_value);
    s.witness = (r.worst_arc ? "random arc of length " + Weight::format_number(r.worst_arc->length)
                             : "box " + to_string(r.worst_box)) +
                "; dual weight " + r.dual_weight;
  });
  stage("two-weight-norm", [&](StageRecord& s) {
    TwoWeightNormOptions o;
    o.depths = refinement_schedule(c.quadrature_depth());
    o.seed = c.seed;
    o.power.seed = c.seed;
    if (c.samples) o.samples = static_cast<int>(*c.samples);
    const auto r = two_weight_norm_check(nu, mu, cfg, o);
    for (const auto& l : r.levels) {
      const std::string d = std::to_string(l.depth);
      s.constants.emplace_back("kernel_norm_depth_" + d, l.kernel_norm);
      s.constants.emplace_back("dyadic_0_norm_depth_" + d, l.dyadic_norm[0]);
      s.constants.emplace_back("dyadic_1/3_norm_depth_" + d, l.dyadic_norm[1]);
      s.trace.emplace_back(l.depth, l.kernel_norm);
    }
    s.constants.emplace_back("relative_change", r.relative_change);
    s.verdict = r.verdict;
    s.witness = r.lower_bound_only ? "sampled lower bounds" : "power iteration";
  });
}

inline void run_certify(const RunConfig& c, Report& report) {
  const Weight w = usage_weight(c.weight, "--weight");
  PipelineOptions o;
  o.seed = c.seed;
  if (c.samples) o.random_arcs = static_cast<std::size_t>(*c.samples);
  const auto start = std::chrono::steady_clock::now();
  const auto p = theorem_pipeline(w, c.depth, o);
  for (const auto& st : p.stages) {
    StageRecord s;
    s.name = st.name;
    s.constants = st.constants;
    s.verdict = st.verdict;
    s.witness = std::string(st.hypothesis ? "hypothesis" : "conclusion") + (st.witness.empty() ? "" : "; " + st.witness);
    s.error = st.error;
    report.stages.push_back(std::move(s));
  }
  report.timings_ms.emplace_back(
      "pipeline", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
}

inline void run_verify_lemma(const RunConfig& c, StageRunner& stage) {
  stage(c.lemma, [&](StageRecord& s) {
    LemmaOptions o;
    o.samples = c.samples;
    o.seed = c.seed;
    if (c.lemma == "domination" || c.lemma == "k1-projection" || c.lemma == "factorization" ||
        c.lemma == "weak-type") {
      o.depth = c.depth;
    }
    const auto r = verify_lemma(c.lemma, o);
    s.constants = r.constants;
    s.constants.emplace_back("cases", static_cast<double>(r.cases));
    s.constants.emplace_back("failures", static_cast<double>(r.failures));
    s.verdict = r.verdict;
    s.witness = r.witness;
  });
}

}  // namespace detail

/// Executes a parsed configuration. Throws UsageError for bad weight specs;
/// numerical failures are reported through stage verdicts.
inline RunResult execute(const RunConfig& c) {
  if (c.threads > 0) set_max_threads(c.threads);
  RunResult result;
  Report& report = result.report;
  report.command = c.command;
  report.config = config_json(c);
  detail::StageRunner stage(report);
  const auto start = std::chrono::steady_clock::now();
  std::vector<BenchRow> rows;
  if (c.command == "test-weight") {
    detail::run_test_weight(c, stage);
  } else if (c.command == "embedding") {
    detail::run_embedding(c, stage);
  } else if (c.command == "two-weight") {
    detail::run_two_weight(c, stage);
  } else if (c.command == "certify") {
    detail::run_certify(c, report);
  } else if (c.command == "verify-lemma") {
    detail::run_verify_lemma(c, stage);
  } else if (c.command == "bench") {
    stage("bench", [&](StageRecord& s) {
      rows = bench(c.sizes, c.depth, c.alpha);
      for (const auto& r : rows) {
        const std::string n = std::to_string(r.n);
        s.constants.emplace_back("dense_ms_" + n, r.dense_ms);
        s.constants.emplace_back("dyadic_ms_" + n, r.dyadic_ms);
      }
      s.verdict = true;
      s.witness = "timings only";
    });
  } else {
    throw UsageError("unknown command '" + c.command + "'");
  }
  report.timings_ms.emplace_back(
      "total", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  if (c.output_format() == "csv") {
    std::ostringstream csv;
    write_bench_csv(csv, rows);
    result.output = csv.str();
  } else {
    result.output = dump_report(report);
  }
  result.exit_code = report.verdict() ? exit_ok : exit_verdict_false;
  return result;
}

/// Full command-line entry point: parse, execute, write, map to an exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_run_config(argc, argv, out);
    if (!config) return exit_ok;
    const RunResult r = execute(*config);
    if (config->out.empty()) {
      out << r.output;
    } else {
      std::ofstream file(config->out);
      if (!file) throw UsageError("cannot open '" + config->out + "' for writing");
      file << r.output;
    }
    return r.exit_code;
  } catch (const UsageError& e) {
    err << "carleson-lab: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "carleson-lab: " << e.what() << "\n";
    return exit_verdict_false;
  }
}

}  // namespace carleson_lab
