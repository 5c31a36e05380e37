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

// Runs the end-to-end pipeline on a tabulated weight and prints each stage.
//
//   certify_grid [path/to/weight.grid] [depth]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "carleson_lab/dirichlet.hpp"

int main(int argc, char** argv) {
  namespace cl = carleson_lab;
  const std::string path = argc > 1 ? argv[1] : std::string(CARLESON_LAB_SAMPLES_DIR) + "/angular_bump.grid";
  const int depth = argc > 2 ? std::atoi(argv[2]) : 10;
  try {
    const cl::Weight w = cl::parse_weight("grid:" + path);
    const cl::PipelineReport report = cl::theorem_pipeline(w, depth);
    std::printf("weight %s, depth %d\n", report.weight.c_str(), report.depth);
    for (const auto& s : report.stages) {
      std::printf("  %-18s %-10s %s\n", s.name.c_str(), s.verdict ? "ok" : "FAILED",
                  s.error.empty() ? s.witness.c_str() : s.error.c_str());
      for (const auto& [key, value] : s.constants) std::printf("      %-28s %.6g\n", key.c_str(), value);
    }
    std::printf("hypotheses %s, conclusions %s\n", report.hypotheses_hold ? "hold" : "fail",
                report.conclusions_hold ? "hold" : "fail");
    return report.verdict ? 0 : 1;
  } catch (const cl::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
}
