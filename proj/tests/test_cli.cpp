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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "carleson_lab/cli.hpp"

namespace cl = carleson_lab;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "carleson-lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = cl::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string samples_dir() {
  const char* env = std::getenv("CARLESON_LAB_SAMPLES");
  return env ? env : "samples";
}

cl::Json parse(const std::string& text) { return cl::Json::parse(text); }

double constant(const cl::Json& report, const std::string& stage, const std::string& key) {
  for (const auto& s : report.at("stages")) {
    if (s.at("name") == stage) return s.at("constants").at(key).get<double>();
  }
  ADD_FAILURE() << "no stage " << stage;
  return NAN;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

// ---------------------------------------------------------------------------
// Report serialization

TEST(Report, RoundTripsLosslessly) {
  cl::Report r;
  r.command = "certify";
  r.config = cl::Json{{"weight", "radial-power:1"}, {"depth", 12}, {"p", 2.0}};
  cl::StageRecord s;
  s.name = "carleson-constant";
  s.constants = {{"operator_norm", 1.0 / 3.0}, {"tiny", 4.9e-324}, {"big", 1.7976931348623157e308},
                 {"inf", std::numeric_limits<double>::infinity()}, {"neg_inf", -std::numeric_limits<double>::infinity()}};
  s.verdict = true;
  s.witness = "refinements 8..12";
  s.trace = {{8, 0.1 + 0.2}, {10, std::nextafter(1.0, 2.0)}};
  r.stages.push_back(s);
  cl::StageRecord failed;
  failed.name = "finiteness";
  failed.error = "infinite_mass error: weight has infinite mass";
  r.stages.push_back(failed);
  r.timings_ms = {{"total", 12.5}};
  const cl::Report back = cl::parse_report(cl::dump_report(r));
  EXPECT_EQ(back, r);
  EXPECT_EQ(cl::dump_report(back), cl::dump_report(r));
}

TEST(Report, NanSurvivesRoundTrip) {
  cl::Report r;
  r.command = "x";
  cl::StageRecord s;
  s.name = "s";
  s.constants = {{"nan", std::numeric_limits<double>::quiet_NaN()}};
  r.stages.push_back(s);
  const auto back = cl::parse_report(cl::dump_report(r));
  ASSERT_EQ(back.stages.size(), 1U);
  EXPECT_TRUE(std::isnan(back.stages[0].constants[0].second));
}

TEST(Report, TopLevelSchema) {
  cl::Report r;
  r.command = "bench";
  const auto j = cl::to_json(r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "command", "config", "verdict", "stages", "timings_ms"}));
  EXPECT_EQ(j.at("schema_version"), cl::report_schema_version);
  EXPECT_TRUE(j.at("verdict").get<bool>());
}

TEST(Report, VerdictIsConjunctionOfStages) {
  cl::Report r;
  cl::StageRecord a;
  a.verdict = true;
  r.stages = {a};
  EXPECT_TRUE(r.verdict());
  cl::StageRecord b;
  r.stages.push_back(b);
  EXPECT_FALSE(r.verdict());
}

TEST(Report, RejectsMalformedInput) {
  for (const std::string bad : {"not json", "{}", R"({"schema_version": 99, "command": "x", "config": {}, "stages": [], "timings_ms": {}})",
                                R"({"schema_version": 1, "command": "x", "config": {}, "stages": [{"name": "s"}], "timings_ms": {}})"}) {
    try {
      (void)cl::parse_report(bad);
      FAIL() << bad;
    } catch (const cl::Error& e) {
      EXPECT_EQ(e.kind(), cl::ErrorKind::parse) << bad;
    }
  }
}

TEST(BenchCsv, EmptyRowsGiveHeaderOnly) {
  std::ostringstream out;
  cl::write_bench_csv(out, {});
  EXPECT_EQ(out.str(), "N,dense_ms,dyadic_ms,ratio\n");
}

// ---------------------------------------------------------------------------
// Argument parsing and exit codes

TEST(Cli, DefaultsAndSeed) {
  const char* argv[] = {"carleson-lab", "certify"};
  std::ostringstream out;
  const auto c = cl::parse_run_config(2, argv, out);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->command, "certify");
  EXPECT_EQ(c->weight, "lebesgue");
  EXPECT_EQ(c->depth, 12);
  EXPECT_EQ(c->quadrature_depth(), 12);
  EXPECT_EQ(c->seed, cl::Rng::default_seed);
  EXPECT_EQ(c->output_format(), "json");
}

TEST(Cli, BenchDefaultsToCsvAndShallowDepth) {
  const char* argv[] = {"carleson-lab", "bench"};
  std::ostringstream out;
  const auto c = cl::parse_run_config(2, argv, out);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->output_format(), "csv");
  EXPECT_EQ(c->depth, 6);
}

TEST(Cli, HelpExitsZero) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, cl::exit_ok);
  EXPECT_NE(r.out.find("verify-lemma"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  const std::vector<std::vector<std::string>> cases{
      {},
      {"bogus"},
      {"certify", "--weight", "nonsense"},
      {"certify", "--weight", "radial-power:abc"},
      {"certify", "--weight", "grid:/nonexistent/file.grid"},
      {"two-weight", "--mu", "product:lebesgue"},
      {"embedding", "--p", "0.5"},
      {"embedding", "--p", "3", "--q", "2"},
      {"embedding", "--alpha", "-1"},
      {"verify-lemma"},
      {"verify-lemma", "no-such-lemma"},
      {"certify", "extra"},
      {"certify", "--format", "csv"},
      {"certify", "--format", "xml"},
      {"certify", "--depth", "-3"},
      {"certify", "--depth", "8", "--quad-depth", "6"},
      {"certify", "--unknown-flag"},
      {"bench", "--sizes", "4096,1024"},
      {"bench", "--sizes", "12x"},
  };
  for (const auto& args : cases) {
    const auto r = invoke(args);
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    EXPECT_EQ(r.code, cl::exit_usage) << joined;
    EXPECT_FALSE(r.err.empty()) << joined;
    EXPECT_TRUE(r.out.empty()) << joined;
  }
}

TEST(Cli, TestWeightLebesgueReportsThreeQuarters) {
  const auto r = invoke({"test-weight", "--weight", "lebesgue"});
  ASSERT_EQ(r.code, cl::exit_ok) << r.err;
  const auto j = parse(r.out);
  EXPECT_EQ(j.at("command"), "test-weight");
  EXPECT_NEAR(constant(j, "reverse-doubling", "delta_hat"), 0.75, 1e-12);
  EXPECT_TRUE(j.at("verdict").get<bool>());
  EXPECT_EQ(j.at("config").at("weight"), "lebesgue");
}

TEST(Cli, VerifyMeiCoverHasZeroFailures) {
  const auto r = invoke({"verify-lemma", "mei-cover", "--samples", "100000"});
  ASSERT_EQ(r.code, cl::exit_ok) << r.err;
  const auto j = parse(r.out);
  EXPECT_EQ(constant(j, "mei-cover", "failures"), 0.0);
  EXPECT_EQ(constant(j, "mei-cover", "cases"), 100001.0);
  EXPECT_LE(constant(j, "mei-cover", "max_cover_ratio"), 6.0 + 1e-9);
}

TEST(Cli, CertifyRadialPowerOnePasses) {
  const auto r = invoke({"certify", "--weight", "radial-power:1"});
  ASSERT_EQ(r.code, cl::exit_ok) << r.err;
  const auto j = parse(r.out);
  EXPECT_TRUE(j.at("verdict").get<bool>());
  ASSERT_EQ(j.at("stages").size(), 5U);
  for (const auto& s : j.at("stages")) EXPECT_TRUE(s.at("verdict").get<bool>()) << s.dump();
  EXPECT_NEAR(constant(j, "carleson-constant", "operator_norm"), 1.0 / 3.0, 1e-4);
  const auto back = cl::parse_report(r.out);
  EXPECT_EQ(cl::dump_report(back), r.out);
}

TEST(Cli, CertifyThinShellExitsOne) {
  const auto r = invoke({"certify", "--weight", "grid:" + samples_dir() + "/thin_shell.grid", "--depth", "8"});
  EXPECT_EQ(r.code, cl::exit_verdict_false) << r.err;
  const auto j = parse(r.out);
  EXPECT_FALSE(j.at("verdict").get<bool>());
  for (const auto& s : j.at("stages")) {
    if (s.at("name") == "reverse-doubling") {
      EXPECT_FALSE(s.at("verdict").get<bool>());
    }
    if (s.at("name") == "carleson-constant") {
      EXPECT_TRUE(std::isfinite(s.at("constants").at("operator_norm").get<double>()));
    }
  }
}

TEST(Cli, NumericalStageErrorExitsOneWithReport) {
  // Dual weight (1 - |z|)^{-3/2} is not integrable.
  const auto r = invoke({"two-weight", "--mu", "radial-power:1.5", "--depth", "6", "--samples", "16"});
  EXPECT_EQ(r.code, cl::exit_verdict_false);
  const auto j = parse(r.out);
  const auto& s = j.at("stages").at(0);
  EXPECT_EQ(s.at("name"), "testing-constant");
  EXPECT_FALSE(s.at("verdict").get<bool>());
  EXPECT_NE(s.at("error").get<std::string>().find("infinite"), std::string::npos);
}

TEST(Cli, EmbeddingLebesgue) {
  const auto r = invoke({"embedding", "--weight", "lebesgue", "--depth", "10", "--samples", "12"});
  ASSERT_EQ(r.code, cl::exit_ok) << r.err;
  const auto j = parse(r.out);
  // Closed form sum over levels of (4 - 4l/3)/(2 - l) at l = 1 is 8/3, truncated at level depth / 2.
  EXPECT_NEAR(constant(j, "carleson-embedding", "c1_hat"), 8.0 / 3.0, 0.02);
  EXPECT_EQ(constant(j, "weak-type", "violations"), 0.0);
  EXPECT_LE(constant(j, "strong-embedding", "max_ratio"), constant(j, "strong-embedding", "bound"));
}

TEST(Cli, TwoWeightTestingConstantIsMassRoot) {
  const auto r = invoke({"two-weight", "--nu", "radial-power:1", "--depth", "8", "--quad-depth", "8", "--samples", "100"});
  ASSERT_EQ(r.code, cl::exit_ok) << r.err;
  const auto j = parse(r.out);
  EXPECT_NEAR(constant(j, "testing-constant", "sup_value"), std::sqrt(1.0 / 3.0), 1e-6);
}

TEST(Cli, DeterministicApartFromTimings) {
  const std::vector<std::string> args{"embedding", "--weight", "radial-power:1", "--depth", "8", "--samples", "8",
                                      "--seed", "99"};
  auto a = parse(invoke(args).out);
  auto b = parse(invoke(args).out);
  a.erase("timings_ms");
  b.erase("timings_ms");
  EXPECT_EQ(a.dump(), b.dump());
  const auto c = parse(invoke({"embedding", "--weight", "radial-power:1", "--depth", "8", "--samples", "8", "--seed", "7"}).out);
  EXPECT_NE(constant(c, "weak-type", "max_ratio_to_bound"), constant(a, "weak-type", "max_ratio_to_bound"));
}

TEST(Cli, OutWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "carleson_lab_cli_out.json";
  std::filesystem::remove(path);
  const auto r = invoke({"test-weight", "--weight", "radial-power:1", "--depth", "6", "--samples", "50", "--out", path.string()});
  EXPECT_EQ(r.code, cl::exit_ok) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  const auto report = cl::parse_report(text.str());
  EXPECT_EQ(report.command, "test-weight");
  std::filesystem::remove(path);
}

TEST(Cli, ThreadsFlagIsAccepted) {
  const auto r = invoke({"verify-lemma", "gram-psd", "--samples", "5", "--threads", "1"});
  EXPECT_EQ(r.code, cl::exit_ok) << r.err;
  cl::set_max_threads(0);
}

// ---------------------------------------------------------------------------
// Bench

TEST(Bench, EmptySizeListGivesHeaderOnly) {
  const auto r = invoke({"bench", "--sizes", ""});
  EXPECT_EQ(r.code, cl::exit_ok) << r.err;
  EXPECT_EQ(r.out, "N,dense_ms,dyadic_ms,ratio\n");
}

TEST(Bench, SingleSizeGivesOneRow) {
  const auto r = invoke({"bench", "--sizes", "512", "--depth", "4"});
  EXPECT_EQ(r.code, cl::exit_ok) << r.err;
  const auto lines = csv_lines(r.out);
  ASSERT_EQ(lines.size(), 2U);
  EXPECT_EQ(lines[0], "N,dense_ms,dyadic_ms,ratio");
  EXPECT_EQ(std::count(lines[1].begin(), lines[1].end(), ','), 3);
}

TEST(Bench, JsonFormatCarriesTimings) {
  const auto r = invoke({"bench", "--sizes", "256,512", "--depth", "4", "--format", "json"});
  EXPECT_EQ(r.code, cl::exit_ok) << r.err;
  const auto j = parse(r.out);
  EXPECT_EQ(j.at("stages").at(0).at("constants").size(), 4U);
}

TEST(Bench, QuadratureSizesQuadruple) {
  const auto a = cl::bench_quadrature(1024, 6);
  const auto b = cl::bench_quadrature(4096, 6);
  EXPECT_EQ(b.size(), 4 * a.size());
}

TEST(Bench, DenseApplyMatchesDirectSum) {
  const auto q = cl::build_quadrature(2, 4);
  std::vector<double> f(q.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + static_cast<double>(i % 3);
  const auto out = cl::detail::dense_kernel_apply(2.0, f, q);
  for (std::size_t i = 0; i < q.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      s += f[j] * q.area(j) / std::norm(1.0 - q.point(i) * std::conj(q.point(j)));
    }
    EXPECT_NEAR(out[i], s, 1e-12 * s);
  }
}

// ---------------------------------------------------------------------------
// Lemma suites

TEST(Lemmas, NamesMatchCli) {
  EXPECT_EQ(cl::lemma_names(), (std::vector<std::string>{"mei-cover", "sandwich", "gram-psd", "domination",
                                                         "k1-projection", "factorization", "weak-type"}));
  EXPECT_THROW(cl::verify_lemma("nope"), cl::Error);
}

TEST(Lemmas, QuickSuitesPass) {
  cl::LemmaOptions o;
  o.samples = 10;
  for (const std::string name : {"mei-cover", "sandwich", "gram-psd", "weak-type"}) {
    const auto r = cl::verify_lemma(name, o);
    EXPECT_TRUE(r.verdict) << name;
    EXPECT_EQ(r.failures, 0) << name;
    EXPECT_GT(r.cases, 0) << name;
    EXPECT_EQ(r.name, name);
  }
}

TEST(Lemmas, DominationReproducesFrozenConstants) {
  const auto r = cl::verify_lemma("domination");
  EXPECT_TRUE(r.verdict);
  ASSERT_GE(r.constants.size(), 4U);
  EXPECT_NEAR(r.constants[0].second / 7.107135, 1.0, 1e-6);
  EXPECT_NEAR(r.constants[2].second / 50.511368, 1.0, 1e-6);
}

TEST(Lemmas, FactorizationShallow) {
  cl::LemmaOptions o;
  o.samples = 2;
  o.depth = 10;
  const auto r = cl::verify_lemma("factorization", o);
  EXPECT_TRUE(r.verdict) << r.witness;
}

TEST(Lemmas, K1ProjectionShallow) {
  cl::LemmaOptions o;
  o.depth = 10;
  const auto r = cl::verify_lemma("k1-projection", o);
  EXPECT_TRUE(r.verdict);
  for (const auto& [k, v] : r.constants) EXPECT_LE(v, 1e-4) << k;
}

TEST(Lemmas, PositiveFunctionsAreNonnegative) {
  cl::Rng rng(3);
  for (int kind = 0; kind < 8; ++kind) {
    const auto f = cl::sample_positive_function(rng, 500, kind);
    ASSERT_EQ(f.size(), 500U);
    double total = 0.0;
    for (const double v : f) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_GT(total, 0.0) << kind;
  }
}
