// Copyright 2026 The skillmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Acceptance suite: one PASS/FAIL line per criterion. Exit status is zero
// only if every selected criterion passes.
//
//   skillmpc_acceptance [name ...]    run only the named criteria

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "skillmpc/skillmpc.h"

namespace {

using namespace skillmpc;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string Source(const std::string& rel) { return std::string(SKILLMPC_SOURCE_DIR) + "/" + rel; }

Outcome FromCheck(const CheckResult& r, double budget_seconds) {
  std::ostringstream d;
  d << r.detail << " runtime=" << r.seconds << "s";
  if (budget_seconds > 0) d << " (budget " << budget_seconds << "s)";
  return {r.passed && (budget_seconds <= 0 || r.seconds < budget_seconds), d.str()};
}

Outcome GradientOracle() { return FromCheck(GradientOracleCheck(1e-4), 30.0); }

Outcome Contraction() {
  const CheckResult c = ContractionCheck(1000);
  const CheckResult v = ValueIterationCheck(1e-6);
  return {c.passed && v.passed, c.detail + "; " + v.detail};
}

Outcome PlannerOracle() { return FromCheck(PlannerOracleCheck(0.05), 10.0); }
Outcome SimplexAlgebra() { return FromCheck(SimplexAlgebraCheck(10000), 0.0); }
Outcome ConvexHull() { return FromCheck(ConvexHullCheck(10000), 0.0); }

void Progress(AblationVariant v, std::uint64_t seed, const RunResult& r) {
  std::fprintf(stderr, "  %s seed %llu: final %.3f\n", std::string(ToString(v)).c_str(),
               static_cast<unsigned long long>(seed), r.final_return);
}

// Door ablation: ordering of mean final returns, full vs uniform margin, and
// the wall-clock budget.
Outcome AblationOrdering() {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig base = LoadRunConfig(Source("configs/door.json"));
  const std::vector<AblationVariant> order = {AblationVariant::kFull, AblationVariant::kAlphaOne,
                                              AblationVariant::kLambdaZero,
                                              AblationVariant::kUniformWeights};
  const AblationSummary s = RunAblation(base, order, Progress);
  const double seconds = Seconds(start);
  std::ofstream("ablation_door.json") << ToJson(s).dump(2) << "\n";

  bool ordered = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double m = s.Row(order[i]).mean;
    d << (i ? " > " : "") << ToString(order[i]) << "(" << m << ")";
    if (i > 0) ordered &= s.Row(order[i - 1]).mean > m;
  }
  const double gain = RelativeImprovement(s.Row(AblationVariant::kFull).mean,
                                          s.Row(AblationVariant::kUniformWeights).mean);
  const bool enough_seeds = base.seeds.size() >= 5;
  d << "; ordering " << (ordered ? "holds" : "violated") << "; full vs uniform " << gain * 100
    << "% (need >= 50%); seeds=" << base.seeds.size()
    << " equal_budgets=" << (s.EqualBudgets() ? "yes" : "no") << " runtime=" << seconds
    << "s (budget 1800s)";
  return {ordered && gain >= 0.5 && enough_seeds && s.EqualBudgets() && seconds < 1800.0,
          d.str()};
}

// Reach: steps for the seed-median eval curve to come within 10% of the
// best final return, with and without expert guidance.
Outcome GuidanceEfficiency() {
  const RunConfig base = LoadRunConfig(Source("configs/reach.json"));
  const AblationSummary s =
      RunAblation(base, {AblationVariant::kFull, AblationVariant::kLambdaZero}, Progress);
  std::ofstream("ablation_reach.json") << ToJson(s).dump(2) << "\n";
  const auto& guided = s.Row(AblationVariant::kFull).steps_to_threshold;
  const auto& unguided = s.Row(AblationVariant::kLambdaZero).steps_to_threshold;
  auto show = [](const std::optional<int>& v) { return v ? std::to_string(*v) : "never"; };
  std::ostringstream d;
  d << "steps_to_threshold lambda=" << base.world_model.lambda_guidance << ": " << show(guided)
    << ", lambda=0: " << show(unguided) << "; threshold " << s.threshold
    << "; seeds=" << base.seeds.size();
  const bool passed = guided && (!unguided || *guided <= *unguided) && base.seeds.size() >= 20;
  return {passed, d.str()};
}

// Two identically seeded CLI train runs must write byte-identical metrics.
Outcome Reproducibility() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "skillmpc_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RunConfig c = LoadRunConfig(Source("configs/reach.json"));
  c.training.total_env_steps = 400;
  c.training.eval_every = 200;
  const std::string cfg = (dir / "config.json").string();
  std::ofstream(cfg) << ToJson(c).dump(2);
  std::string metrics[2];
  for (int i = 0; i < 2; ++i) {
    const std::string out = (dir / ("run" + std::to_string(i))).string();
    const std::string cmd = std::string(SKILLMPC_CLI_PATH) + " train --config " + cfg +
                            " --seed 7 --out " + out + " > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "train command failed: " + cmd};
    std::ifstream in(out + "/metrics.jsonl", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    metrics[i] = s.str();
  }
  const bool same = !metrics[0].empty() && metrics[0] == metrics[1];
  return {same, std::to_string(metrics[0].size()) + " bytes, " +
                    (same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  GlobalLogLevel() = LogLevel::kError;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_oracle", GradientOracle},
      {"contraction_suite", Contraction},
      {"planner_oracle", PlannerOracle},
      {"simplex_fusion_algebra", SimplexAlgebra},
      {"convex_hull_grounding", ConvexHull},
      {"reproducibility", Reproducibility},
      {"guidance_sample_efficiency", GuidanceEfficiency},
      {"ablation_ordering", AblationOrdering},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  bool all = true;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %-28s %8.1fs  %s\n", o.passed ? "PASS" : "FAIL", name.c_str(),
                Seconds(start), o.detail.c_str());
    std::fflush(stdout);
    all &= o.passed;
  }
  return all ? 0 : 1;
}
