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

// Command-line front end: train, eval, ablate, check, plan.
//
// Exit codes: 0 success, 1 configuration / IO / runtime error, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "skillmpc/skillmpc.h"

namespace {

using namespace skillmpc;
namespace fs = std::filesystem;

std::ofstream OpenOutput(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ": cannot open for writing");
  return out;
}

void WriteJsonFile(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = OpenOutput(path);
  out << j.dump(2) << '\n';
}

Checkpoint LoadCheckpoint(const std::string& path) {
  try {
    return CheckpointFromJson(ReadJsonFile(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

int Train(const std::string& config_path, std::optional<std::uint64_t> seed,
          std::string out_dir) {
  const RunConfig cfg = LoadRunConfig(config_path);
  const std::uint64_t s = seed.value_or(cfg.seeds.front());
  if (out_dir.empty()) {
    out_dir = "runs/" + (cfg.task.task_id.empty() ? std::string("run") : cfg.task.task_id) +
              "-seed" + std::to_string(s);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError(out_dir + ": cannot create directory (" + ec.message() + ")");
  std::ofstream metrics = OpenOutput(fs::path(out_dir) / "metrics.jsonl");
  std::ofstream timing = OpenOutput(fs::path(out_dir) / "timing.jsonl");
  MetricsWriter writer(&metrics, &timing);
  const RunResult result = RunTraining(cfg, s, &writer);
  WriteJsonFile(fs::path(out_dir) / "checkpoint.json",
                CheckpointJson(cfg, s, *result.model));
  std::cout << "seed " << s << ": " << result.env_steps
            << " env steps, final eval return " << result.final_return << "\n"
            << "wrote " << out_dir << "/{metrics.jsonl,timing.jsonl,checkpoint.json}\n";
  return 0;
}

int Eval(const std::string& checkpoint_path, int episodes, int n_iters,
         const std::string& trajectory_path) {
  if (episodes < 1) throw ConfigError("--episodes must be >= 1");
  const Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  Agent agent(ckpt.config, ckpt.seed, ckpt.model);
  PlannerConfig planner = ckpt.config.planner;
  if (n_iters >= 0) planner.n_iters = n_iters;
  std::ofstream traj;
  if (!trajectory_path.empty()) traj = OpenOutput(trajectory_path);
  nlohmann::json returns = nlohmann::json::array();
  const RngStream base(ckpt.seed, static_cast<std::uint64_t>(StreamTag::kEvaluation));
  for (int i = 0; i < episodes; ++i) {
    ToyEnv env(ckpt.config.env_kind, ckpt.config.env);
    auto ctl = agent.MakeController(planner, base.Derive(StreamTag::kPlanner, i));
    std::vector<Transition> transitions;
    const EpisodeStats stats = CollectEpisode(
        ctl, env, base.Derive(StreamTag::kEnvironment, i).NextU64(),
        base.Derive(StreamTag::kPlanner, i), nullptr, -1, &transitions);
    returns.push_back(stats.episode_return);
    if (traj.is_open()) {
      for (std::size_t t = 0; t < transitions.size(); ++t) {
        traj << TransitionToJsonLine(transitions[t], static_cast<int>(t)) << '\n';
      }
    }
  }
  const std::vector<double> r = returns.get<std::vector<double>>();
  std::cout << nlohmann::json{{"episodes", episodes},
                              {"returns", returns},
                              {"mean_return", Mean(r)},
                              {"std_return", StdDev(r)}}
                   .dump(2)
            << "\n";
  return 0;
}

std::vector<AblationVariant> ParseVariants(const std::string& list) {
  std::vector<AblationVariant> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(AblationVariantFromString(item));
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("--variants: ") + e.what());
    }
  }
  return out;
}

int Ablate(const std::string& config_path, const std::string& variants,
           const std::string& out_path) {
  const RunConfig cfg = LoadRunConfig(config_path);
  const std::vector<AblationVariant> list = ParseVariants(variants);
  if (list.size() < 2) throw ConfigError("--variants: need at least two variants");
  const AblationSummary summary =
      RunAblation(cfg, list, [](AblationVariant v, std::uint64_t seed, const RunResult& r) {
        std::cerr << ToString(v) << " seed " << seed << ": final " << r.final_return << "\n";
      });
  std::cout << FormatTable(summary);
  if (!out_path.empty()) WriteJsonFile(out_path, ToJson(summary));
  return 0;
}

int Check() {
  bool all = true;
  for (const CheckResult& r : RunAllChecks()) {
    std::printf("%s %-24s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.seconds, r.detail.c_str());
    all &= r.passed;
  }
  return all ? 0 : 1;
}

int PlanOnce(const std::string& checkpoint_path, const std::string& obs_json) {
  const Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  const auto parsed = nlohmann::json::parse(obs_json, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) {
    throw ConfigError("--obs: expected a JSON array of numbers");
  }
  Vec obs;
  try {
    obs = parsed.get<Vec>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("--obs: expected a JSON array of numbers");
  }
  Agent agent(ckpt.config, ckpt.seed, ckpt.model);
  auto ctl = agent.MakeController(
      ckpt.config.planner,
      RngStream(ckpt.seed, static_cast<std::uint64_t>(StreamTag::kPlanner)));
  const Simplex p = SelectionProbs(agent.encoder().Encode(obs), agent.library());
  const ActResult act = ctl.Act(obs);
  nlohmann::ordered_json out;
  nlohmann::ordered_json ids = nlohmann::ordered_json::array();
  for (const Expert& e : agent.library().experts()) ids.push_back(e.descriptor.id);
  out["experts"] = ids;
  out["semantic_weights"] = agent.semantic_weights().weights();
  out["selection_probs"] = p.weights();
  out["fused_weights"] = act.fused_weights.weights();
  out["a_ref"] = act.a_ref;
  out["action"] = act.action;
  out["plan"] = nlohmann::ordered_json::parse(ToJson(act.plan).dump());
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skillmpc: semantic expert fusion with latent model-predictive control"};
  app.require_subcommand(1);
  std::string log_level = "warning";
  app.add_option("--log-level", log_level, "debug|info|warning|error|off")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "off"}));

  std::string config_path, out_dir, checkpoint_path, variants, obs_json, trajectory_path,
      ablate_out;
  std::optional<std::uint64_t> seed;
  int episodes = 5;
  int n_iters = -1;

  CLI::App* train = app.add_subcommand("train", "train one seed and write metrics");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--seed", seed, "seed (default: first of config seeds)");
  train->add_option("--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  eval->add_option("--episodes", episodes, "number of episodes");
  eval->add_option("--n-iters", n_iters, "override planner iterations (0 = a_ref only)");
  eval->add_option("--trajectory", trajectory_path, "write transitions as JSONL");

  CLI::App* ablate = app.add_subcommand("ablate", "run ablation variants over shared seeds");
  ablate->add_option("--config", config_path, "run config JSON")->required();
  ablate->add_option("--variants", variants,
                     "comma list of full,uniform_weights,alpha_one,lambda_zero")
      ->required();
  ablate->add_option("--out", ablate_out, "write the summary as JSON");

  app.add_subcommand("check", "run gradient, contraction, planner and algebra suites");

  CLI::App* plan = app.add_subcommand("plan", "one-shot planning dump for an observation");
  plan->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  plan->add_option("--obs", obs_json, "observation as a JSON array")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::map<std::string, LogLevel> levels = {{"debug", LogLevel::kDebug},
                                                  {"info", LogLevel::kInfo},
                                                  {"warning", LogLevel::kWarning},
                                                  {"error", LogLevel::kError},
                                                  {"off", LogLevel::kOff}};
  GlobalLogLevel() = levels.at(log_level);

  try {
    if (train->parsed()) return Train(config_path, seed, out_dir);
    if (eval->parsed()) return Eval(checkpoint_path, episodes, n_iters, trajectory_path);
    if (ablate->parsed()) return Ablate(config_path, variants, ablate_out);
    if (plan->parsed()) return PlanOnce(checkpoint_path, obs_json);
    return Check();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
