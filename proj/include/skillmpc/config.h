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

#ifndef SKILLMPC_CONFIG_H_
#define SKILLMPC_CONFIG_H_

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/experts.h"
#include "skillmpc/fusion.h"
#include "skillmpc/planner.h"
#include "skillmpc/semantic.h"
#include "skillmpc/world_model.h"

namespace skillmpc {

enum class AblationVariant { kFull, kUniformWeights, kAlphaOne, kLambdaZero };

inline std::string_view ToString(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kUniformWeights: return "uniform_weights";
    case AblationVariant::kAlphaOne: return "alpha_one";
    case AblationVariant::kLambdaZero: return "lambda_zero";
  }
  return "unknown";
}

inline AblationVariant AblationVariantFromString(std::string_view name) {
  for (AblationVariant v : {AblationVariant::kFull, AblationVariant::kUniformWeights,
                            AblationVariant::kAlphaOne, AblationVariant::kLambdaZero}) {
    if (ToString(v) == name) return v;
  }
  throw InvalidInput("unknown ablation variant '" + std::string(name) + "'");
}

struct TrainingConfig {
  int total_env_steps = 2000;
  int eval_every = 400;
  int eval_episodes = 2;
  // Fraction of the budget collected with planning disabled (a_ref only).
  double stage1_fraction = 0.25;
  // Gaussian noise on executed actions in training episodes, not in evals.
  double exploration_std = 0.3;
  int replay_capacity = 100000;
  // Gradient updates per collected environment step.
  double updates_per_step = 1.0;
  int max_consecutive_failures = 10;

  void Validate() const {
    if (total_env_steps < 1) throw InvalidInput("training.total_env_steps must be >= 1");
    if (eval_every < 1) throw InvalidInput("training.eval_every must be >= 1");
    if (eval_episodes < 1) throw InvalidInput("training.eval_episodes must be >= 1");
    if (!(stage1_fraction >= 0.0 && stage1_fraction <= 1.0)) {
      throw InvalidInput("training.stage1_fraction must lie in [0, 1]");
    }
    if (!(exploration_std >= 0.0)) {
      throw InvalidInput("training.exploration_std must be >= 0");
    }
    if (replay_capacity < 1) throw InvalidInput("training.replay_capacity must be >= 1");
    if (!(updates_per_step >= 0.0)) {
      throw InvalidInput("training.updates_per_step must be >= 0");
    }
    if (max_consecutive_failures < 1) {
      throw InvalidInput("training.max_consecutive_failures must be >= 1");
    }
  }
};

struct RunConfig {
  static constexpr int kVersion = 1;

  TaskDescription task{"open the door", "door"};
  EnvKind env_kind = EnvKind::kDoor;
  EnvParams env;
  // Empty means DefaultLibrary(env_kind, embedding_scheme).
  std::vector<Expert> experts;
  EmbeddingScheme embedding_scheme = EmbeddingScheme::kOneHot;
  EncoderMode encoder = EncoderMode::kRandomProjection;
  SemanticPlannerConfig semantic;
  FusionConfig fusion;
  PlannerConfig planner;
  WorldModelConfig world_model;
  TrainingConfig training;
  std::vector<std::uint64_t> seeds = {0};
  AblationVariant ablation = AblationVariant::kFull;

  ExpertLibrary Library() const {
    if (experts.empty()) return DefaultLibrary(env_kind, embedding_scheme);
    return ExpertLibrary(experts, LayoutFor(env_kind));
  }

  // World-model config with dims filled in from the environment.
  WorldModelConfig ModelConfig() const {
    WorldModelConfig c = world_model;
    const ObservationLayout layout = LayoutFor(env_kind);
    c.obs_dim = layout.obs_dim;
    c.action_dim = layout.action_dim;
    return c;
  }

  void Validate() const {
    if (task.text.empty()) throw ConfigError("task.text: must not be empty");
    semantic.Validate();
    fusion.Validate();
    planner.Validate();
    ModelConfig().Validate();
    training.Validate();
    if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
    const ExpertLibrary lib = Library();
    if (encoder == EncoderMode::kIdentity &&
        lib.embedding_dim() != static_cast<std::size_t>(LayoutFor(env_kind).obs_dim)) {
      throw ConfigError("experts: identity encoder needs embedding dim == obs dim (" +
                        std::to_string(LayoutFor(env_kind).obs_dim) + ")");
    }
    if (ablation == AblationVariant::kAlphaOne && fusion.alpha != 1.0) {
      throw ConfigError("fusion.alpha: ablation alpha_one requires alpha = 1.0");
    }
    if (ablation == AblationVariant::kLambdaZero && world_model.lambda_guidance != 0.0) {
      throw ConfigError("world_model.lambda: ablation lambda_zero requires lambda = 0");
    }
  }
};

// Returns `base` with the variant's mechanism disabled.
inline RunConfig ApplyVariant(RunConfig base, AblationVariant v) {
  base.ablation = v;
  switch (v) {
    case AblationVariant::kFull:
    case AblationVariant::kUniformWeights:
      break;
    case AblationVariant::kAlphaOne:
      base.fusion.alpha = 1.0;
      break;
    case AblationVariant::kLambdaZero:
      base.world_model.lambda_guidance = 0.0;
      break;
  }
  return base;
}

namespace internal {

// Walks one JSON object, tracking which keys were read so unknown keys can be
// reported with their full path.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool Has(const std::string& key) const { return j_.contains(key); }
  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const nlohmann::json* Raw(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  bool Read(const std::string& key, T& out) {
    const nlohmann::json* v = Raw(key);
    if (v == nullptr) return false;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw ConfigError(Path(key) + ": expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) {
          throw ConfigError(Path(key) + ": expected an integer");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(Path(key) + ": expected a string");
      }
      out = v->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(Path(key) + ": " + e.what());
    }
    return true;
  }

  // Reads a string and maps it through `parse`, reporting failures by path.
  template <class T, class F>
  bool ReadEnum(const std::string& key, T& out, F parse) {
    std::string name;
    if (!Read(key, name)) return false;
    try {
      out = parse(name);
    } catch (const InvalidInput& e) {
      throw ConfigError(Path(key) + ": " + e.what());
    }
    return true;
  }

  void RejectUnknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(Path(it.key()) + ": unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline EmbeddingScheme EmbeddingSchemeFromString(std::string_view name) {
  if (name == "one_hot") return EmbeddingScheme::kOneHot;
  if (name == "one_hot_capability") return EmbeddingScheme::kOneHotCapability;
  throw InvalidInput("unknown embedding scheme '" + std::string(name) + "'");
}

inline SemanticBackend SemanticBackendFromString(std::string_view name) {
  if (name == "mock") return SemanticBackend::kMock;
  if (name == "http") return SemanticBackend::kHttp;
  throw InvalidInput("unknown semantic backend '" + std::string(name) + "'");
}

// Runs `fn` with a reader for j[key] if present, then rejects unknown keys.
template <class F>
void Section(FieldReader& parent, const std::string& key, F fn) {
  const nlohmann::json* v = parent.Raw(key);
  if (v == nullptr) return;
  FieldReader r(*v, parent.Path(key));
  fn(r);
  r.RejectUnknown();
}

}  // namespace internal

inline std::string_view ToString(EmbeddingScheme s) {
  return s == EmbeddingScheme::kOneHot ? "one_hot" : "one_hot_capability";
}

inline std::string_view ToString(SemanticBackend b) {
  return b == SemanticBackend::kMock ? "mock" : "http";
}

// Parses a versioned run config. Every error names the offending field path.
inline RunConfig RunConfigFromJson(const nlohmann::json& j) {
  using internal::FieldReader;
  using internal::Section;
  RunConfig c;
  FieldReader root(j, "");
  int version = 0;
  if (!root.Read("version", version)) throw ConfigError("version: missing");
  if (version != RunConfig::kVersion) {
    throw ConfigError("version: unsupported value " + std::to_string(version));
  }
  root.ReadEnum("ablation", c.ablation, AblationVariantFromString);

  Section(root, "task", [&](FieldReader& r) {
    r.Read("text", c.task.text);
    r.Read("task_id", c.task.task_id);
  });
  Section(root, "env", [&](FieldReader& r) {
    r.ReadEnum("kind", c.env_kind, EnvKindFromString);
    r.Read("dt", c.env.dt);
    r.Read("max_steps", c.env.max_steps);
    r.Read("max_speed", c.env.max_speed);
    r.Read("walk_speed", c.env.walk_speed);
    r.Read("run_speed", c.env.run_speed);
    r.Read("handle_position", c.env.handle_position);
    r.Read("corridor_length", c.env.corridor_length);
    r.Read("reach_bound", c.env.reach_bound);
    r.Read("handle_tolerance", c.env.handle_tolerance);
    r.Read("hold_steps", c.env.hold_steps);
    r.Read("grip_radius", c.env.grip_radius);
    r.Read("open_angle", c.env.open_angle);
    r.Read("open_bonus", c.env.open_bonus);
  });
  Section(root, "experts", [&](FieldReader& r) {
    r.ReadEnum("encoder", c.encoder, EncoderModeFromString);
    r.ReadEnum("embedding_scheme", c.embedding_scheme,
               internal::EmbeddingSchemeFromString);
    const nlohmann::json* lib = r.Raw("library");
    if (lib == nullptr) return;
    const std::string path = r.Path("library");
    if (!lib->is_array() || lib->empty()) {
      throw ConfigError(path + ": expected a non-empty array");
    }
    for (std::size_t i = 0; i < lib->size(); ++i) {
      FieldReader e((*lib)[i], path + "[" + std::to_string(i) + "]");
      Expert x;
      if (!e.Read("id", x.descriptor.id)) throw ConfigError(e.Path("id") + ": missing");
      e.Read("description", x.descriptor.description);
      if (!e.Read("embedding", x.descriptor.embedding)) {
        throw ConfigError(e.Path("embedding") + ": missing");
      }
      Section(e, "controller", [&](FieldReader& cr) {
        cr.ReadEnum("kind", x.controller.kind, ControllerKindFromString);
        cr.Read("gain", x.controller.gain);
        cr.Read("target", x.controller.target);
      });
      e.RejectUnknown();
      c.experts.push_back(std::move(x));
    }
  });
  Section(root, "semantic", [&](FieldReader& r) {
    r.ReadEnum("backend", c.semantic.backend, internal::SemanticBackendFromString);
    r.Read("temperature", c.semantic.temperature);
    r.Read("endpoint_url", c.semantic.endpoint_url);
    r.Read("model_name", c.semantic.model_name);
    r.Read("max_retries", c.semantic.max_retries);
  });
  bool alpha_set = false;
  Section(root, "fusion", [&](FieldReader& r) { alpha_set = r.Read("alpha", c.fusion.alpha); });
  Section(root, "planner", [&](FieldReader& r) {
    r.Read("horizon", c.planner.horizon);
    r.Read("n_samples", c.planner.n_samples);
    r.Read("n_elites", c.planner.n_elites);
    r.Read("n_iters", c.planner.n_iters);
    r.Read("init_std", c.planner.init_std);
    r.Read("min_std", c.planner.min_std);
    r.Read("ref_seed_fraction", c.planner.ref_seed_fraction);
    r.Read("warm_start_ref_weight", c.planner.warm_start_ref_weight);
    r.Read("ref_penalty", c.planner.ref_penalty);
  });
  bool lambda_set = false;
  Section(root, "world_model", [&](FieldReader& r) {
    auto& w = c.world_model;
    r.Read("latent_dim", w.latent_dim);
    r.Read("hidden", w.hidden);
    r.ReadEnum("activation", w.activation, ActivationFromString);
    r.Read("gamma", w.gamma);
    lambda_set = r.Read("lambda", w.lambda_guidance);
    r.Read("n_quantiles", w.n_quantiles);
    r.ReadEnum("td_loss", w.td_loss, TdLossFormFromString);
    r.Read("learning_rate", w.learning_rate);
    r.Read("batch_size", w.batch_size);
    r.ReadEnum("optimizer", w.optimizer, OptimizerKindFromString);
    r.Read("grad_clip", w.grad_clip);
    r.Read("value_scale", w.value_scale);
    r.Read("dynamics_coef", w.dynamics_coef);
    r.Read("reward_coef", w.reward_coef);
    r.Read("value_coef", w.value_coef);
  });
  Section(root, "training", [&](FieldReader& r) {
    auto& t = c.training;
    r.Read("total_env_steps", t.total_env_steps);
    r.Read("eval_every", t.eval_every);
    r.Read("eval_episodes", t.eval_episodes);
    r.Read("stage1_fraction", t.stage1_fraction);
    r.Read("exploration_std", t.exploration_std);
    r.Read("replay_capacity", t.replay_capacity);
    r.Read("updates_per_step", t.updates_per_step);
    r.Read("max_consecutive_failures", t.max_consecutive_failures);
  });
  root.Read("seeds", c.seeds);
  root.RejectUnknown();

  // An explicit setting that contradicts the variant is an error; an omitted
  // one is forced.
  if (c.ablation == AblationVariant::kAlphaOne && !alpha_set) c.fusion.alpha = 1.0;
  if (c.ablation == AblationVariant::kLambdaZero && !lambda_set) {
    c.world_model.lambda_guidance = 0.0;
  }
  try {
    c.Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline nlohmann::json ToJson(const RunConfig& c) {
  nlohmann::json j;
  j["version"] = RunConfig::kVersion;
  j["ablation"] = ToString(c.ablation);
  j["task"] = {{"text", c.task.text}, {"task_id", c.task.task_id}};
  j["env"] = {{"kind", ToString(c.env_kind)},
              {"dt", c.env.dt},
              {"max_steps", c.env.max_steps},
              {"max_speed", c.env.max_speed},
              {"walk_speed", c.env.walk_speed},
              {"run_speed", c.env.run_speed},
              {"handle_position", c.env.handle_position},
              {"corridor_length", c.env.corridor_length},
              {"reach_bound", c.env.reach_bound},
              {"handle_tolerance", c.env.handle_tolerance},
              {"hold_steps", c.env.hold_steps},
              {"grip_radius", c.env.grip_radius},
              {"open_angle", c.env.open_angle},
              {"open_bonus", c.env.open_bonus}};
  nlohmann::json experts = {{"encoder", ToString(c.encoder)},
                            {"embedding_scheme", ToString(c.embedding_scheme)}};
  if (!c.experts.empty()) {
    experts["library"] = nlohmann::json::array();
    for (const Expert& e : c.experts) {
      experts["library"].push_back(
          {{"id", e.descriptor.id},
           {"description", e.descriptor.description},
           {"embedding", e.descriptor.embedding},
           {"controller",
            {{"kind", ToString(e.controller.kind)},
             {"gain", e.controller.gain},
             {"target", e.controller.target}}}});
    }
  }
  j["experts"] = experts;
  j["semantic"] = {{"backend", ToString(c.semantic.backend)},
                   {"temperature", c.semantic.temperature},
                   {"endpoint_url", c.semantic.endpoint_url},
                   {"model_name", c.semantic.model_name},
                   {"max_retries", c.semantic.max_retries}};
  j["fusion"] = {{"alpha", c.fusion.alpha}};
  j["planner"] = ToJson(c.planner);
  nlohmann::json wm = ToJson(c.world_model);
  wm.erase("obs_dim");
  wm.erase("action_dim");
  j["world_model"] = wm;
  const TrainingConfig& t = c.training;
  j["training"] = {{"total_env_steps", t.total_env_steps},
                   {"eval_every", t.eval_every},
                   {"eval_episodes", t.eval_episodes},
                   {"stage1_fraction", t.stage1_fraction},
                   {"exploration_std", t.exploration_std},
                   {"replay_capacity", t.replay_capacity},
                   {"updates_per_step", t.updates_per_step},
                   {"max_consecutive_failures", t.max_consecutive_failures}};
  j["seeds"] = c.seeds;
  return j;
}

inline nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto j = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + ": not valid JSON");
  return j;
}

inline RunConfig LoadRunConfig(const std::string& path) {
  const nlohmann::json j = ReadJsonFile(path);
  try {
    return RunConfigFromJson(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace skillmpc

#endif  // SKILLMPC_CONFIG_H_
