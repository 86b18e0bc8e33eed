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

#ifndef SKILLMPC_EXPERTS_H_
#define SKILLMPC_EXPERTS_H_

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/envs.h"

namespace skillmpc {

// Scripted controllers. Each reads its inputs through the library's
// ObservationLayout and writes one action component before clamping:
//   damping            force  = -gain * v
//   velocity_tracking  force  =  gain * (target - v)
//   goal_seeking       force  =  gain * (goal - x)   goal = target when the
//                                                    observation has none
//   turn               torque =  gain * (target - angle)
enum class ControllerKind { kDamping, kVelocityTracking, kGoalSeeking, kTurn };

inline std::string_view ToString(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kDamping: return "damping";
    case ControllerKind::kVelocityTracking: return "velocity_tracking";
    case ControllerKind::kGoalSeeking: return "goal_seeking";
    case ControllerKind::kTurn: return "turn";
  }
  return "unknown";
}

inline ControllerKind ControllerKindFromString(std::string_view name) {
  for (ControllerKind kind :
       {ControllerKind::kDamping, ControllerKind::kVelocityTracking,
        ControllerKind::kGoalSeeking, ControllerKind::kTurn}) {
    if (ToString(kind) == name) return kind;
  }
  throw InvalidInput("unknown controller kind '" + std::string(name) + "'");
}

struct ExpertDescriptor {
  std::string id;
  Vec embedding;
  std::string description;
};

struct ExpertController {
  ControllerKind kind = ControllerKind::kDamping;
  double gain = 1.0;
  double target = 0.0;
};

struct Expert {
  ExpertDescriptor descriptor;
  ExpertController controller;
};

// Immutable, ordered set of experts. The order fixes the index used by every
// weight and probability vector.
class ExpertLibrary {
 public:
  ExpertLibrary(std::vector<Expert> experts, ObservationLayout layout)
      : experts_(std::move(experts)), layout_(layout) {
    if (experts_.empty()) throw InvalidInput("ExpertLibrary: no experts");
    std::set<std::string> ids;
    const std::size_t dim = experts_.front().descriptor.embedding.size();
    for (const Expert& e : experts_) {
      if (e.descriptor.id.empty()) throw InvalidInput("ExpertLibrary: empty id");
      if (!ids.insert(e.descriptor.id).second) {
        throw InvalidInput("ExpertLibrary: duplicate id '" + e.descriptor.id +
                           "'");
      }
      if (e.descriptor.embedding.size() != dim) {
        throw InvalidInput("ExpertLibrary: embedding dims differ");
      }
      CheckFinite(e.descriptor.embedding, "ExpertLibrary embedding");
    }
  }

  std::size_t size() const { return experts_.size(); }
  const Expert& expert(std::size_t i) const { return experts_.at(i); }
  const std::vector<Expert>& experts() const { return experts_; }
  const ObservationLayout& layout() const { return layout_; }
  std::size_t embedding_dim() const {
    return experts_.front().descriptor.embedding.size();
  }
  std::size_t action_dim() const {
    return static_cast<std::size_t>(layout_.action_dim);
  }

  std::size_t IndexOf(std::string_view id) const {
    for (std::size_t i = 0; i < experts_.size(); ++i) {
      if (experts_[i].descriptor.id == id) return i;
    }
    throw InvalidInput("ExpertLibrary: no expert '" + std::string(id) + "'");
  }

  Vec Action(std::size_t i, std::span<const double> obs) const {
    if (i >= experts_.size()) {
      throw InvalidInput("ExpertLibrary::Action: index out of range");
    }
    CheckDim(obs, static_cast<std::size_t>(layout_.obs_dim),
             "ExpertLibrary::Action observation");
    const ExpertController& c = experts_[i].controller;
    Vec action(action_dim(), 0.0);
    const double x = obs[layout_.position];
    const double v = obs[layout_.velocity];
    switch (c.kind) {
      case ControllerKind::kDamping:
        action[0] = -c.gain * v;
        break;
      case ControllerKind::kVelocityTracking:
        action[0] = c.gain * (c.target - v);
        break;
      case ControllerKind::kGoalSeeking: {
        const double goal = layout_.goal >= 0 ? obs[layout_.goal] : c.target;
        action[0] = c.gain * (goal - x);
        break;
      }
      case ControllerKind::kTurn:
        if (layout_.angle >= 0 && action.size() > 1) {
          action[1] = c.gain * (c.target - obs[layout_.angle]);
        }
        break;
    }
    return ClampToBox(action);
  }

  // Expert actions for one observation, indexed like the library.
  std::vector<Vec> Actions(std::span<const double> obs) const {
    std::vector<Vec> out;
    out.reserve(experts_.size());
    for (std::size_t i = 0; i < experts_.size(); ++i) {
      out.push_back(Action(i, obs));
    }
    return out;
  }

  const Vec& Embedding(std::size_t i) const {
    if (i >= experts_.size()) {
      throw InvalidInput("ExpertLibrary::Embedding: index out of range");
    }
    return experts_[i].descriptor.embedding;
  }

 private:
  std::vector<Expert> experts_;
  ObservationLayout layout_;
};

inline Vec OneHot(std::size_t i, std::size_t k) {
  Vec v(k, 0.0);
  v.at(i) = 1.0;
  return v;
}

enum class EmbeddingScheme {
  kOneHot,            // dim K
  kOneHotCapability,  // dim K + 2: one-hot, target speed, manipulation flag
};

// walk, stand, reach, run for the locomotion tasks; the door task adds turn.
inline ExpertLibrary DefaultLibrary(EnvKind kind,
                                    EmbeddingScheme scheme = EmbeddingScheme::kOneHot) {
  const EnvParams env;
  std::vector<Expert> experts = {
      {{"walk", {}, "move forward at a steady pace"},
       {ControllerKind::kVelocityTracking, 1.0, env.walk_speed}},
      {{"stand", {}, "hold still in place"}, {ControllerKind::kDamping, 1.0, 0.0}},
      {{"reach", {}, "move to the goal position"},
       {ControllerKind::kGoalSeeking, 1.0, 0.0}},
      {{"run", {}, "move forward at high speed"},
       {ControllerKind::kVelocityTracking, 1.0, env.run_speed}},
  };
  if (kind == EnvKind::kDoor) {
    // Aims past the open angle: a proportional law aimed at it only converges
    // asymptotically and would never trigger the opening.
    experts.push_back({{"turn", {}, "rotate the handle to open the door"},
                       {ControllerKind::kTurn, 1.0, 2.0 * env.open_angle}});
  }
  const std::size_t k = experts.size();
  for (std::size_t i = 0; i < k; ++i) {
    Vec e = OneHot(i, k);
    if (scheme == EmbeddingScheme::kOneHotCapability) {
      const ExpertController& c = experts[i].controller;
      e.push_back(c.kind == ControllerKind::kVelocityTracking ? c.target : 0.0);
      e.push_back(c.kind == ControllerKind::kTurn ? 1.0 : 0.0);
    }
    experts[i].descriptor.embedding = std::move(e);
  }
  return ExpertLibrary(std::move(experts), LayoutFor(kind));
}

}  // namespace skillmpc

#endif  // SKILLMPC_EXPERTS_H_
