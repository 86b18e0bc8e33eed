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

#ifndef SKILLMPC_ENVS_H_
#define SKILLMPC_ENVS_H_

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "skillmpc/core.h"

namespace skillmpc {

// -- toy point-mass tasks -- //

enum class EnvKind { kStand, kWalk, kRun, kReach, kDoor };

inline std::string_view ToString(EnvKind kind) {
  switch (kind) {
    case EnvKind::kStand: return "stand";
    case EnvKind::kWalk: return "walk";
    case EnvKind::kRun: return "run";
    case EnvKind::kReach: return "reach";
    case EnvKind::kDoor: return "door";
  }
  return "unknown";
}

inline EnvKind EnvKindFromString(std::string_view name) {
  for (EnvKind kind : {EnvKind::kStand, EnvKind::kWalk, EnvKind::kRun,
                       EnvKind::kReach, EnvKind::kDoor}) {
    if (ToString(kind) == name) return kind;
  }
  throw InvalidInput("unknown environment kind '" + std::string(name) + "'");
}

// Where each quantity sits in an observation vector; -1 means absent.
//
//   stand, walk, run : [x, v]
//   reach            : [x, v, goal]
//   door             : [x, v, handle, angle, phase]   phase = -1 approach,
//                                                      +1 manipulate
//
// Action is [force] everywhere except door, which adds a handle torque:
// [force, torque].
struct ObservationLayout {
  int obs_dim = 2;
  int action_dim = 1;
  int position = 0;
  int velocity = 1;
  int goal = -1;
  int angle = -1;
  int phase = -1;
};

inline ObservationLayout LayoutFor(EnvKind kind) {
  switch (kind) {
    case EnvKind::kReach: return {3, 1, 0, 1, 2, -1, -1};
    case EnvKind::kDoor: return {5, 2, 0, 1, 2, 3, 4};
    default: return {2, 1, 0, 1, -1, -1, -1};
  }
}

// Initial states are drawn uniformly:
//   stand       x ~ U[-0.5, 0.5], v ~ U[-0.5, 0.5]
//   walk, run   x = 0,            v ~ U[-0.2, 0.2]
//   reach       x ~ U[-1, 1],     goal ~ U[-1, 1], v = 0;
//               walls at -reach_bound and reach_bound
//   door        x ~ U[0, 0.5],    v = 0, angle = 0, handle fixed;
//               walls at 0 and corridor_length stop the agent
//
// Per-step rewards:
//   stand  -|v|                          in [-2, 0]
//   walk   -|v - walk_speed|             in [-2.3, 0]
//   run    -|v - run_speed|              in [-3, 0]
//   reach  -min(|x - goal|, 2)           in [-2, 0]
//   door   approach: -1 - min(|x - handle|, 1), manipulate: -|angle - open|,
//          plus open_bonus on the opening step; in [-2, open_bonus]
struct EnvParams {
  double dt = 0.1;
  int max_steps = 200;
  double max_speed = 2.0;
  double walk_speed = 0.3;
  double run_speed = 1.0;
  double handle_position = 1.0;
  double corridor_length = 2.0;  // door only: walls at 0 and this length
  double reach_bound = 1.25;     // reach only: walls at +-this
  double handle_tolerance = 0.05;
  int hold_steps = 5;
  double grip_radius = 0.1;
  double open_angle = 1.0;
  double open_bonus = 5.0;
};

struct Transition {
  Vec o;
  Vec a;
  double r = 0.0;
  Vec o_next;
  bool done = false;
};

class ToyEnv {
 public:
  struct State {
    double position = 0.0;
    double velocity = 0.0;
    double goal = 0.0;
    double angle = 0.0;
    bool manipulating = false;
    int hold_count = 0;
    int steps = 0;
    bool done = false;
  };

  explicit ToyEnv(EnvKind kind, EnvParams params = {})
      : kind_(kind), params_(params), layout_(LayoutFor(kind)), rng_(0, 0) {
    if (!(params_.dt > 0.0) || params_.max_steps < 1 || !(params_.corridor_length > 0.0) ||
        !(params_.reach_bound > 0.0)) {
      throw InvalidInput(
          "ToyEnv: dt, max_steps, corridor_length and reach_bound must be positive");
    }
  }

  EnvKind kind() const { return kind_; }
  const EnvParams& params() const { return params_; }
  const ObservationLayout& layout() const { return layout_; }
  const State& state() const { return state_; }
  int step_count() const { return state_.steps; }
  bool done() const { return state_.done; }

  // Used by perfect-model planning and tests.
  void set_state(const State& state) { state_ = state; }

  Vec Reset(std::uint64_t seed) {
    rng_ = RngStream(seed, static_cast<std::uint64_t>(StreamTag::kEnvironment));
    state_ = State{};
    switch (kind_) {
      case EnvKind::kStand:
        state_.position = rng_.Uniform(-0.5, 0.5);
        state_.velocity = rng_.Uniform(-0.5, 0.5);
        break;
      case EnvKind::kWalk:
      case EnvKind::kRun:
        state_.velocity = rng_.Uniform(-0.2, 0.2);
        break;
      case EnvKind::kReach:
        state_.position = rng_.Uniform(-1.0, 1.0);
        state_.goal = rng_.Uniform(-1.0, 1.0);
        break;
      case EnvKind::kDoor:
        state_.position = rng_.Uniform(0.0, 0.5);
        state_.goal = params_.handle_position;
        break;
    }
    return Observation();
  }

  Vec Observation() const { return Observe(state_); }

  Vec Observe(const State& s) const {
    Vec obs(static_cast<std::size_t>(layout_.obs_dim), 0.0);
    obs[layout_.position] = s.position;
    obs[layout_.velocity] = s.velocity;
    if (layout_.goal >= 0) obs[layout_.goal] = s.goal;
    if (layout_.angle >= 0) obs[layout_.angle] = s.angle;
    if (layout_.phase >= 0) obs[layout_.phase] = s.manipulating ? 1.0 : -1.0;
    return obs;
  }

  Transition Step(std::span<const double> action) {
    if (state_.done) throw InvalidInput("ToyEnv::Step: episode is done");
    CheckDim(action, static_cast<std::size_t>(layout_.action_dim),
             "ToyEnv::Step action");
    CheckFinite(action, "ToyEnv::Step action");
    Vec a = ClampToBox(action);
    if (a != Vec(action.begin(), action.end())) {
      Log(LogLevel::kWarning, "ToyEnv::Step: action outside [-1, 1] clamped");
    }
    Transition t;
    t.o = Observation();
    t.a = a;
    t.r = Advance(state_, a);
    t.o_next = Observation();
    t.done = state_.done;
    return t;
  }

  // Pure transition function on an explicit state; returns the reward.
  double Advance(State& s, std::span<const double> a) const {
    const double dt = params_.dt;
    s.velocity =
        std::clamp(s.velocity + a[0] * dt, -params_.max_speed, params_.max_speed);
    s.position += s.velocity * dt;
    s.steps += 1;
    double reward = 0.0;
    switch (kind_) {
      case EnvKind::kStand:
        reward = -std::abs(s.velocity);
        break;
      case EnvKind::kWalk:
        reward = -std::abs(s.velocity - params_.walk_speed);
        break;
      case EnvKind::kRun:
        reward = -std::abs(s.velocity - params_.run_speed);
        break;
      case EnvKind::kReach:
        StopAtWalls(s, -params_.reach_bound, params_.reach_bound);
        reward = -std::min(std::abs(s.position - s.goal), 2.0);
        break;
      case EnvKind::kDoor:
        reward = AdvanceDoor(s, a);
        break;
    }
    if (s.steps >= params_.max_steps) s.done = true;
    return reward;
  }

 private:
  // Without walls a flat far-field reward lets an imperfect model wander off.
  static void StopAtWalls(State& s, double lo, double hi) {
    if (s.position < lo || s.position > hi) {
      s.position = std::clamp(s.position, lo, hi);
      s.velocity = 0.0;
    }
  }

  double AdvanceDoor(State& s, std::span<const double> a) const {
    StopAtWalls(s, 0.0, params_.corridor_length);
    const double distance = std::abs(s.position - s.goal);
    if (!s.manipulating) {
      s.hold_count = distance < params_.handle_tolerance ? s.hold_count + 1 : 0;
      if (s.hold_count >= params_.hold_steps) s.manipulating = true;
      return -1.0 - std::min(distance, 1.0);
    }
    if (distance < params_.grip_radius) {
      s.angle = std::clamp(s.angle + a[1] * params_.dt, 0.0, params_.open_angle);
    }
    double reward = -std::abs(s.angle - params_.open_angle);
    if (s.angle >= params_.open_angle) {
      reward += params_.open_bonus;
      s.done = true;
    }
    return reward;
  }

  EnvKind kind_;
  EnvParams params_;
  ObservationLayout layout_;
  RngStream rng_;
  State state_;
};

// -- trajectory dumps -- //

inline std::string TransitionToJsonLine(const Transition& t, int index) {
  nlohmann::json j;
  j["t"] = index;
  j["o"] = t.o;
  j["a"] = t.a;
  j["r"] = t.r;
  j["o_next"] = t.o_next;
  j["done"] = t.done;
  return j.dump();
}

inline Transition TransitionFromJsonLine(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  Transition t;
  t.o = j.at("o").get<Vec>();
  t.a = j.at("a").get<Vec>();
  t.r = j.at("r").get<double>();
  t.o_next = j.at("o_next").get<Vec>();
  t.done = j.at("done").get<bool>();
  return t;
}

// -- discrete MDPs -- //

using QTable = Eigen::MatrixXd;  // states x actions

struct DiscreteMdp {
  int n_states = 1;
  int n_actions = 1;
  std::vector<double> transitions;  // [s][a][s']
  std::vector<double> rewards;      // [s][a]
  double gamma = 0.99;

  double P(int s, int a, int s_next) const {
    return transitions[(static_cast<std::size_t>(s) * n_actions + a) * n_states +
                       s_next];
  }
  double& P(int s, int a, int s_next) {
    return transitions[(static_cast<std::size_t>(s) * n_actions + a) * n_states +
                       s_next];
  }
  double R(int s, int a) const {
    return rewards[static_cast<std::size_t>(s) * n_actions + a];
  }
  double& R(int s, int a) {
    return rewards[static_cast<std::size_t>(s) * n_actions + a];
  }

  static DiscreteMdp Zeros(int n_states, int n_actions, double gamma) {
    DiscreteMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.transitions.assign(
        static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    mdp.rewards.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    return mdp;
  }

  // Dense random MDP: rows are normalized uniforms, rewards in [-1, 1].
  static DiscreteMdp Random(RngStream& rng, int n_states, int n_actions,
                            double gamma) {
    DiscreteMdp mdp = Zeros(n_states, n_actions, gamma);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double total = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
          mdp.P(s, a, s2) = rng.Uniform() + 1e-3;
          total += mdp.P(s, a, s2);
        }
        for (int s2 = 0; s2 < n_states; ++s2) mdp.P(s, a, s2) /= total;
        mdp.R(s, a) = rng.Uniform(-1.0, 1.0);
      }
    }
    return mdp;
  }

  void Validate() const {
    if (n_states < 1 || n_actions < 1) {
      throw InvalidInput("DiscreteMdp: empty state or action set");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
      throw InvalidInput("DiscreteMdp: gamma must lie in [0, 1)");
    }
    if (transitions.size() !=
            static_cast<std::size_t>(n_states) * n_actions * n_states ||
        rewards.size() != static_cast<std::size_t>(n_states) * n_actions) {
      throw InvalidInput("DiscreteMdp: table sizes do not match dimensions");
    }
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double total = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
          if (P(s, a, s2) < 0.0) {
            throw InvalidInput("DiscreteMdp: negative transition probability");
          }
          total += P(s, a, s2);
        }
        if (std::abs(total - 1.0) > 1e-9) {
          throw InvalidInput("DiscreteMdp: transition row does not sum to 1");
        }
      }
    }
  }
};

// (TQ)(s, a) = r(s, a) + gamma * sum_s' P(s'|s, a) max_a' Q(s', a')
inline QTable BellmanOperator(const DiscreteMdp& mdp, const QTable& q) {
  if (q.rows() != mdp.n_states || q.cols() != mdp.n_actions) {
    throw InvalidInput("BellmanOperator: Q table shape mismatch");
  }
  if (!q.allFinite()) throw InvalidInput("BellmanOperator: non-finite Q");
  const Eigen::VectorXd best = q.rowwise().maxCoeff();
  QTable out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double expected = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        expected += mdp.P(s, a, s2) * best[s2];
      }
      out(s, a) = mdp.R(s, a) + mdp.gamma * expected;
    }
  }
  return out;
}

inline double SupNorm(const QTable& q) { return q.cwiseAbs().maxCoeff(); }

struct ValueIterationResult {
  QTable q;
  int iterations = 0;  // Bellman applications performed
};

// Iterates from q0 until successive tables differ by less than tol in the
// sup norm; returns the last table.
inline ValueIterationResult ValueIteration(const DiscreteMdp& mdp, double tol,
                                           QTable q0 = QTable()) {
  if (!(tol > 0.0)) throw InvalidInput("ValueIteration: tol must be positive");
  mdp.Validate();
  if (q0.size() == 0) q0 = QTable::Zero(mdp.n_states, mdp.n_actions);
  ValueIterationResult result{std::move(q0), 0};
  while (true) {
    QTable next = BellmanOperator(mdp, result.q);
    ++result.iterations;
    const double change = SupNorm(next - result.q);
    result.q = std::move(next);
    if (change < tol) return result;
  }
}

}  // namespace skillmpc

#endif  // SKILLMPC_ENVS_H_
