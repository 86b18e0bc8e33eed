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

#ifndef SKILLMPC_TRAINING_H_
#define SKILLMPC_TRAINING_H_

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "skillmpc/config.h"
#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/experts.h"
#include "skillmpc/fusion.h"
#include "skillmpc/planner.h"
#include "skillmpc/replay_buffer.h"
#include "skillmpc/semantic.h"
#include "skillmpc/world_model.h"

namespace skillmpc {

// -- episodes -- //

struct EpisodeStats {
  double episode_return = 0.0;
  int steps = 0;
  double mean_predicted_return = 0.0;
  // Mean squared distance between executed action and a_ref.
  double mean_ref_deviation = 0.0;
};

// Runs one episode from env.Reset(env_seed) for at most `max_steps` steps.
// Every transition goes into `buffer` (if given) with its a_ref, and into
// `trajectory` (if given). A positive `exploration_std` adds clamped Gaussian
// noise to the executed action; the stored a_ref stays clean.
template <class Model>
EpisodeStats CollectEpisode(Controller<Model>& controller, ToyEnv& env,
                            std::uint64_t env_seed, RngStream planner_rng,
                            ReplayBuffer* buffer, int max_steps = -1,
                            std::vector<Transition>* trajectory = nullptr,
                            double exploration_std = 0.0) {
  EpisodeStats stats;
  Vec obs = env.Reset(env_seed);
  controller.Reset(planner_rng);
  RngStream noise = planner_rng.Derive(StreamTag::kEpisode, 0);
  if (max_steps < 0) max_steps = env.params().max_steps;
  while (!env.done() && stats.steps < max_steps) {
    ActResult act = controller.Act(obs);
    if (exploration_std > 0.0) {
      for (double& a : act.action) {
        a = std::clamp(a + exploration_std * noise.Normal(), kActionLow, kActionHigh);
      }
    }
    Transition t = env.Step(act.action);
    stats.episode_return += t.r;
    stats.mean_predicted_return += act.plan.predicted_return;
    for (std::size_t d = 0; d < t.a.size(); ++d) {
      stats.mean_ref_deviation += (t.a[d] - act.a_ref[d]) * (t.a[d] - act.a_ref[d]);
    }
    ++stats.steps;
    obs = t.o_next;
    if (trajectory) trajectory->push_back(t);
    if (buffer) buffer->Push(std::move(t), std::move(act.a_ref));
  }
  if (stats.steps > 0) {
    stats.mean_predicted_return /= stats.steps;
    stats.mean_ref_deviation /= stats.steps;
  }
  return stats;
}

// -- metrics -- //

struct MetricsRecord {
  int step = 0;
  std::string kind;  // "train" or "eval"
  int episode = 0;
  double episode_return = 0.0;
  int stage = 1;
  // train records only
  int episode_steps = 0;
  int updates = 0;
  int skipped_updates = 0;
  LossReport loss;
  double mean_predicted_return = 0.0;
  double mean_ref_deviation = 0.0;
  // eval records only
  std::vector<double> eval_returns;
  // Not serialized into the metrics stream; see MetricsWriter.
  double wall_seconds = 0.0;
};

inline nlohmann::json ToJson(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["kind"] = r.kind;
  j["episode"] = r.episode;
  j["stage"] = r.stage;
  j["episode_return"] = r.episode_return;
  if (r.kind == "train") {
    j["episode_steps"] = r.episode_steps;
    j["updates"] = r.updates;
    j["skipped_updates"] = r.skipped_updates;
    j["loss"] = {{"td", r.loss.td},         {"guidance", r.loss.guidance},
                 {"dynamics", r.loss.dynamics}, {"reward", r.loss.reward},
                 {"value", r.loss.value},   {"total", r.loss.total}};
    j["plan"] = {{"mean_predicted_return", r.mean_predicted_return},
                 {"mean_ref_deviation", r.mean_ref_deviation}};
  } else {
    j["eval_returns"] = r.eval_returns;
  }
  return nlohmann::json::parse(j.dump());
}

// Writes metrics.jsonl (deterministic content only) and, separately,
// timing.jsonl with wall-clock seconds, so two identically seeded runs produce
// byte-identical metrics files.
class MetricsWriter {
 public:
  MetricsWriter(std::ostream* metrics, std::ostream* timing)
      : metrics_(metrics), timing_(timing) {}

  void Write(const MetricsRecord& r) {
    if (metrics_) {
      nlohmann::ordered_json j;
      const nlohmann::json body = ToJson(r);
      // Keep a stable, readable key order.
      for (const char* key : {"step", "kind", "episode", "stage", "episode_return",
                              "episode_steps", "updates", "skipped_updates", "loss",
                              "plan", "eval_returns"}) {
        if (body.contains(key)) j[key] = body[key];
      }
      *metrics_ << j.dump() << '\n';
    }
    if (timing_) {
      *timing_ << nlohmann::json{{"step", r.step},
                                 {"kind", r.kind},
                                 {"wall_seconds", r.wall_seconds}}
                      .dump()
               << '\n';
    }
  }

 private:
  std::ostream* metrics_;
  std::ostream* timing_;
};

// -- training run -- //

struct EvalPoint {
  int step = 0;
  double mean_return = 0.0;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  std::vector<EvalPoint> evals;
  double final_return = 0.0;
  int env_steps = 0;
  int skipped_updates = 0;
  std::shared_ptr<WorldModel> model;
};

// Semantic weights for a run: the planner's w, or uniform for the
// uniform_weights variant.
inline Simplex SemanticWeights(const RunConfig& cfg, const ExpertLibrary& library) {
  if (cfg.ablation == AblationVariant::kUniformWeights) {
    return Simplex::Uniform(library.size());
  }
  SemanticPlanner planner(cfg.semantic);
  return planner.Plan(cfg.task, library);
}

// Everything needed to act in one environment with one model.
class Agent {
 public:
  Agent(const RunConfig& cfg, std::uint64_t seed, std::shared_ptr<WorldModel> model)
      : cfg_(cfg),
        seed_(seed),
        library_(cfg.Library()),
        model_(std::move(model)),
        encoder_(StateEncoder::Make(cfg.encoder,
                                    static_cast<std::size_t>(LayoutFor(cfg.env_kind).obs_dim),
                                    library_.embedding_dim(),
                                    RngStream(seed, 0).Derive(StreamTag::kEncoder, 0))),
        weights_(SemanticWeights(cfg, library_)) {}

  const ExpertLibrary& library() const { return library_; }
  const Simplex& semantic_weights() const { return weights_; }
  const StateEncoder& encoder() const { return encoder_; }
  WorldModel& model() { return *model_; }
  std::shared_ptr<WorldModel> shared_model() const { return model_; }

  Controller<WorldModel> MakeController(const PlannerConfig& planner,
                                        RngStream rng) const {
    return Controller<WorldModel>(model_.get(), &library_, weights_, encoder_,
                                  cfg_.fusion, planner, rng);
  }

  // Mean return over eval episodes whose env seeds and planner streams depend
  // only on the run seed and the episode index.
  std::vector<double> Evaluate(const PlannerConfig& planner, int episodes) const {
    std::vector<double> returns;
    const RngStream base(seed_, static_cast<std::uint64_t>(StreamTag::kEvaluation));
    for (int i = 0; i < episodes; ++i) {
      ToyEnv env(cfg_.env_kind, cfg_.env);
      auto ctl = MakeController(planner, base.Derive(StreamTag::kPlanner, i));
      const std::uint64_t env_seed =
          base.Derive(StreamTag::kEnvironment, static_cast<std::uint64_t>(i)).NextU64();
      returns.push_back(CollectEpisode(ctl, env, env_seed,
                                       base.Derive(StreamTag::kPlanner, i), nullptr)
                            .episode_return);
    }
    return returns;
  }

 private:
  RunConfig cfg_;
  std::uint64_t seed_;
  ExpertLibrary library_;
  std::shared_ptr<WorldModel> model_;
  StateEncoder encoder_;
  Simplex weights_;
};

inline double Mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Two-stage loop. Stage 1 (the first stage1_fraction of the step budget)
// executes a_ref without planning while the model trains; stage 2 plans with
// the full CEM configuration. After each episode, round(updates_per_step *
// episode_length) gradient updates are applied. Evaluations run at step 0 and
// every eval_every steps, and once more at the end of the budget.
inline RunResult RunTraining(const RunConfig& cfg, std::uint64_t seed,
                             MetricsWriter* writer = nullptr) {
  cfg.Validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };
  const RngStream root(seed, 0);
  auto model = std::make_shared<WorldModel>(cfg.ModelConfig(),
                                            root.Derive(StreamTag::kModelInit, 0));
  Agent agent(cfg, seed, model);
  ReplayBuffer buffer(static_cast<std::size_t>(cfg.training.replay_capacity),
                      root.Derive(StreamTag::kReplay, 0));
  const TrainingConfig& tc = cfg.training;
  const int stage1_steps =
      static_cast<int>(std::lround(tc.stage1_fraction * tc.total_env_steps));
  PlannerConfig stage1 = cfg.planner;
  stage1.n_iters = 0;

  RunResult result;
  result.model = model;
  auto emit = [&](MetricsRecord r) {
    r.wall_seconds = elapsed();
    if (writer) writer->Write(r);
    result.records.push_back(std::move(r));
  };
  auto evaluate = [&](int step) {
    const PlannerConfig& pc = step < stage1_steps ? stage1 : cfg.planner;
    MetricsRecord r;
    r.step = step;
    r.kind = "eval";
    r.stage = step < stage1_steps ? 1 : 2;
    r.eval_returns = agent.Evaluate(pc, tc.eval_episodes);
    r.episode_return = Mean(r.eval_returns);
    result.evals.push_back({step, r.episode_return});
    emit(std::move(r));
  };

  evaluate(0);
  int next_eval = tc.eval_every;
  int steps = 0;
  int consecutive_failures = 0;
  for (int episode = 0; steps < tc.total_env_steps; ++episode) {
    const bool planning = steps >= stage1_steps;
    ToyEnv env(cfg.env_kind, cfg.env);
    auto ctl = agent.MakeController(planning ? cfg.planner : stage1,
                                    root.Derive(StreamTag::kPlanner, episode));
    const std::uint64_t env_seed =
        root.Derive(StreamTag::kEpisode, static_cast<std::uint64_t>(episode)).NextU64();
    const EpisodeStats ep =
        CollectEpisode(ctl, env, env_seed, root.Derive(StreamTag::kPlanner, episode),
                       &buffer, tc.total_env_steps - steps, nullptr, tc.exploration_std);
    steps += ep.steps;

    MetricsRecord r;
    r.step = steps;
    r.kind = "train";
    r.episode = episode;
    r.stage = planning ? 2 : 1;
    r.episode_return = ep.episode_return;
    r.episode_steps = ep.steps;
    r.mean_predicted_return = ep.mean_predicted_return;
    r.mean_ref_deviation = ep.mean_ref_deviation;
    const int n_updates = static_cast<int>(std::lround(tc.updates_per_step * ep.steps));
    const std::size_t batch =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.world_model.batch_size),
                              buffer.size());
    for (int u = 0; u < n_updates; ++u) {
      try {
        const LossReport l = model->TrainStep(buffer.Sample(batch));
        r.loss.td += l.td;
        r.loss.guidance += l.guidance;
        r.loss.dynamics += l.dynamics;
        r.loss.reward += l.reward;
        r.loss.value += l.value;
        r.loss.total += l.total;
        ++r.updates;
        consecutive_failures = 0;
      } catch (const NumericalFailure& e) {
        ++r.skipped_updates;
        ++result.skipped_updates;
        Log(LogLevel::kWarning, std::string("skipped update: ") + e.what());
        if (++consecutive_failures > tc.max_consecutive_failures) {
          throw NumericalFailure("aborting run: " + std::to_string(consecutive_failures) +
                                 " consecutive failed updates at env step " +
                                 std::to_string(steps) + " (last: " + e.what() + ")");
        }
      }
    }
    if (r.updates > 0) {
      const double n = r.updates;
      r.loss.td /= n;
      r.loss.guidance /= n;
      r.loss.dynamics /= n;
      r.loss.reward /= n;
      r.loss.value /= n;
      r.loss.total /= n;
    }
    emit(std::move(r));
    while (next_eval <= steps) {
      evaluate(next_eval);
      next_eval += tc.eval_every;
    }
  }
  if (result.evals.back().step != steps) evaluate(steps);
  result.env_steps = steps;
  result.final_return = result.evals.back().mean_return;
  return result;
}

// -- checkpoints -- //

inline nlohmann::json CheckpointJson(const RunConfig& cfg, std::uint64_t seed,
                                     const WorldModel& model) {
  return {{"format", "skillmpc-checkpoint"},
          {"version", 1},
          {"seed", seed},
          {"run_config", ToJson(cfg)},
          {"model", model.ToJson()}};
}

struct Checkpoint {
  RunConfig config;
  std::uint64_t seed = 0;
  std::shared_ptr<WorldModel> model;
};

inline Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "skillmpc-checkpoint") {
    throw ConfigError("checkpoint: not a skillmpc checkpoint");
  }
  if (j.value("version", -1) != 1) throw ConfigError("checkpoint: unsupported version");
  Checkpoint c;
  c.config = RunConfigFromJson(j.at("run_config"));
  c.seed = j.at("seed").get<std::uint64_t>();
  try {
    c.model = std::make_shared<WorldModel>(
        WorldModel::FromJson(j.at("model"), c.config.ModelConfig()));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("checkpoint.model: ") + e.what());
  }
  return c;
}

}  // namespace skillmpc

#endif  // SKILLMPC_TRAINING_H_
