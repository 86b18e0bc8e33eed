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

#ifndef SKILLMPC_PLANNER_H_
#define SKILLMPC_PLANNER_H_

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <optional>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/experts.h"
#include "skillmpc/fusion.h"

namespace skillmpc {

// Anything the planner can roll forward: batched latent dynamics with reward,
// a terminal value, and a discount. Columns are candidates.
template <class M>
concept PlanningModel = requires(const M& m, const Eigen::MatrixXd& z,
                                 const Eigen::MatrixXd& a, Eigen::MatrixXd* zn,
                                 Eigen::RowVectorXd* r) {
  { m.gamma() } -> std::convertible_to<double>;
  { m.latent_dim() } -> std::convertible_to<int>;
  { m.action_dim() } -> std::convertible_to<int>;
  m.PredictBatch(z, a, zn, r);
  { m.ValueBatch(z) } -> std::convertible_to<Eigen::RowVectorXd>;
};

struct PlannerConfig {
  int horizon = 3;
  int n_samples = 256;
  int n_elites = 32;
  int n_iters = 6;
  double init_std = 0.5;
  double min_std = 0.05;
  double ref_seed_fraction = 0.05;
  // Weight of the a_ref mean when blending with the shifted previous plan.
  double warm_start_ref_weight = 0.5;
  // Off by default. When positive, scores subtract
  // ref_penalty * sum_k ||a_k - a_ref||^2.
  double ref_penalty = 0.0;

  void Validate() const {
    if (horizon < 1) throw InvalidInput("PlannerConfig: horizon must be >= 1");
    if (n_samples < 1) throw InvalidInput("PlannerConfig: n_samples must be >= 1");
    if (n_elites < 1 || n_elites > n_samples) {
      throw InvalidInput("PlannerConfig: need 1 <= n_elites <= n_samples");
    }
    if (n_iters < 0) throw InvalidInput("PlannerConfig: n_iters must be >= 0");
    if (!(init_std > 0.0) || !(min_std > 0.0)) {
      throw InvalidInput("PlannerConfig: std values must be > 0");
    }
    if (!(ref_seed_fraction >= 0.0 && ref_seed_fraction <= 1.0)) {
      throw InvalidInput("PlannerConfig: ref_seed_fraction must lie in [0, 1]");
    }
    if (!(warm_start_ref_weight >= 0.0 && warm_start_ref_weight <= 1.0)) {
      throw InvalidInput("PlannerConfig: warm_start_ref_weight must lie in [0, 1]");
    }
    if (!(ref_penalty >= 0.0)) throw InvalidInput("PlannerConfig: ref_penalty must be >= 0");
  }
};

inline nlohmann::json ToJson(const PlannerConfig& c) {
  return {{"horizon", c.horizon},
          {"n_samples", c.n_samples},
          {"n_elites", c.n_elites},
          {"n_iters", c.n_iters},
          {"init_std", c.init_std},
          {"min_std", c.min_std},
          {"ref_seed_fraction", c.ref_seed_fraction},
          {"warm_start_ref_weight", c.warm_start_ref_weight},
          {"ref_penalty", c.ref_penalty}};
}

struct PlanResult {
  std::vector<Vec> actions;
  double predicted_return = 0.0;
  int iterations_used = 0;
  // Best candidate score after each iteration.
  std::vector<double> best_scores;
};

inline nlohmann::json ToJson(const PlanResult& r) {
  return {{"actions", r.actions},
          {"predicted_return", r.predicted_return},
          {"iterations_used", r.iterations_used},
          {"best_scores", r.best_scores}};
}

// Scores a batch of action sequences from one start latent. actions[k] holds
// step k for every candidate (action_dim x N).
template <PlanningModel Model>
Eigen::RowVectorXd EvaluateSequences(const Model& model, std::span<const double> z0,
                                     const std::vector<Eigen::MatrixXd>& actions) {
  CheckDim(z0, static_cast<std::size_t>(model.latent_dim()), "EvaluateSequences z0");
  if (actions.empty()) throw InvalidInput("EvaluateSequences: empty horizon");
  const Eigen::Index n = actions.front().cols();
  Eigen::MatrixXd z(model.latent_dim(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int i = 0; i < model.latent_dim(); ++i) z(i, c) = z0[i];
  }
  Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(n);
  double discount = 1.0;
  Eigen::MatrixXd z_next;
  Eigen::RowVectorXd reward;
  for (const Eigen::MatrixXd& a : actions) {
    if (a.rows() != model.action_dim() || a.cols() != n) {
      throw InvalidInput("EvaluateSequences: action block has the wrong shape");
    }
    model.PredictBatch(z, a, &z_next, &reward);
    total += discount * reward;
    discount *= model.gamma();
    z.swap(z_next);
  }
  total += discount * model.ValueBatch(z);
  return total;
}

// sum_k gamma^k r_k + gamma^H V(z_H) for one sequence.
template <PlanningModel Model>
double EvaluateSequence(const Model& model, std::span<const double> z0,
                        const std::vector<Vec>& actions) {
  std::vector<Eigen::MatrixXd> blocks;
  for (const Vec& a : actions) {
    CheckDim(a, static_cast<std::size_t>(model.action_dim()), "EvaluateSequence action");
    blocks.emplace_back(Eigen::Map<const Eigen::MatrixXd>(
        a.data(), static_cast<Eigen::Index>(a.size()), 1));
  }
  return EvaluateSequences(model, z0, blocks)(0);
}

// Cross-entropy search over H-step action sequences. The pure a_ref sequence
// and the best candidate so far are scored in every iteration, so the best
// score never decreases and never falls below the a_ref score. Candidate j of
// iteration t draws from rng.Derive(t, j), so results do not depend on
// evaluation order.
template <PlanningModel Model>
PlanResult Plan(const Model& model, std::span<const double> z0,
                std::span<const double> a_ref, const PlannerConfig& cfg,
                const RngStream& rng, const std::vector<Vec>* previous = nullptr) {
  cfg.Validate();
  const int da = model.action_dim();
  const int h = cfg.horizon;
  CheckDim(a_ref, static_cast<std::size_t>(da), "Plan a_ref");
  CheckFinite(a_ref, "Plan a_ref");
  const Vec ref = ClampToBox(a_ref);

  // mean(d, k): component d of step k.
  Eigen::MatrixXd ref_seq(da, h);
  for (int k = 0; k < h; ++k) {
    for (int d = 0; d < da; ++d) ref_seq(d, k) = ref[d];
  }
  Eigen::MatrixXd mean = ref_seq;
  if (previous != nullptr && !previous->empty()) {
    // Shift by one; the vacated tail step keeps a_ref.
    const double wr = cfg.warm_start_ref_weight;
    for (int k = 0; k + 1 < h && k + 1 < static_cast<int>(previous->size()); ++k) {
      CheckDim((*previous)[k + 1], static_cast<std::size_t>(da), "Plan previous");
      for (int d = 0; d < da; ++d) {
        mean(d, k) = wr * ref[d] + (1.0 - wr) * (*previous)[k + 1][d];
      }
    }
  }
  Eigen::MatrixXd stddev = Eigen::MatrixXd::Constant(da, h, cfg.init_std);

  auto to_actions = [&](const Eigen::MatrixXd& seq) {
    std::vector<Vec> out(h, Vec(da));
    for (int k = 0; k < h; ++k) {
      for (int d = 0; d < da; ++d) {
        out[k][d] = std::clamp(seq(d, k), kActionLow, kActionHigh);
      }
    }
    return out;
  };
  auto score_block = [&](const std::vector<Eigen::MatrixXd>& blocks) {
    Eigen::RowVectorXd s = EvaluateSequences(model, z0, blocks);
    if (cfg.ref_penalty > 0.0) {
      for (const Eigen::MatrixXd& a : blocks) {
        s -= cfg.ref_penalty *
             (a.colwise() - Eigen::Map<const Eigen::VectorXd>(ref.data(), da))
                 .colwise()
                 .squaredNorm();
      }
    }
    return s;
  };
  auto score_one = [&](const Eigen::MatrixXd& seq) {
    std::vector<Eigen::MatrixXd> blocks;
    for (int k = 0; k < h; ++k) blocks.emplace_back(seq.col(k));
    return score_block(blocks)(0);
  };

  PlanResult result;
  if (cfg.n_iters == 0) {
    result.actions = to_actions(mean);
    result.predicted_return = score_one(mean.cwiseMax(kActionLow).cwiseMin(kActionHigh));
    return result;
  }

  const int n = cfg.n_samples;
  const int n_seed = std::min(
      n, std::max(1, static_cast<int>(std::lround(cfg.ref_seed_fraction * n))));
  Eigen::MatrixXd best_seq = ref_seq;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> blocks(h, Eigen::MatrixXd(da, n));

  for (int it = 0; it < cfg.n_iters; ++it) {
    for (int j = 0; j < n; ++j) {
      if (j == 0) {
        for (int k = 0; k < h; ++k) blocks[k].col(j) = ref_seq.col(k);
      } else if (j == 1 && n > 1 && it > 0) {
        for (int k = 0; k < h; ++k) blocks[k].col(j) = best_seq.col(k);
      } else if (j < 1 + n_seed) {
        for (int k = 0; k < h; ++k) {
          blocks[k].col(j) = mean.col(k).cwiseMax(kActionLow).cwiseMin(kActionHigh);
        }
      } else {
        RngStream draw = rng.Derive(static_cast<std::uint64_t>(it),
                                    static_cast<std::uint64_t>(j));
        for (int k = 0; k < h; ++k) {
          for (int d = 0; d < da; ++d) {
            blocks[k](d, j) = std::clamp(mean(d, k) + stddev(d, k) * draw.Normal(),
                                         kActionLow, kActionHigh);
          }
        }
      }
    }
    const Eigen::RowVectorXd scores = score_block(blocks);
    if (!scores.allFinite()) {
      throw NumericalFailure("Plan: model produced a non-finite score");
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores(a) > scores(b); });
    if (scores(order[0]) > best_score) {
      best_score = scores(order[0]);
      for (int k = 0; k < h; ++k) best_seq.col(k) = blocks[k].col(order[0]);
    }
    result.best_scores.push_back(best_score);

    const int ne = cfg.n_elites;
    mean.setZero();
    for (int e = 0; e < ne; ++e) {
      for (int k = 0; k < h; ++k) mean.col(k) += blocks[k].col(order[e]);
    }
    mean /= ne;
    stddev.setZero();
    for (int e = 0; e < ne; ++e) {
      for (int k = 0; k < h; ++k) {
        stddev.col(k) += (blocks[k].col(order[e]) - mean.col(k)).cwiseAbs2();
      }
    }
    stddev = (stddev / ne).cwiseSqrt().cwiseMax(cfg.min_std);
  }

  const double mean_score = score_one(mean);
  result.iterations_used = cfg.n_iters;
  if (mean_score >= best_score) {
    result.actions = to_actions(mean);
    result.predicted_return = mean_score;
  } else {
    result.actions = to_actions(best_seq);
    result.predicted_return = best_score;
  }
  return result;
}

// -- closed-loop control -- //

struct ActResult {
  Vec action;
  Vec a_ref;
  Simplex fused_weights;
  PlanResult plan;
};

// Per-step pipeline: fuse plan weights with state-aware selection, form
// a_ref, encode, plan, and emit the first planned action.
template <class Model>
class Controller {
 public:
  Controller(const Model* model, const ExpertLibrary* library, Simplex plan_weights,
             StateEncoder encoder, FusionConfig fusion, PlannerConfig planner,
             RngStream rng)
      : model_(model),
        library_(library),
        plan_weights_(std::move(plan_weights)),
        encoder_(std::move(encoder)),
        fusion_(fusion),
        planner_(planner),
        rng_(rng) {
    if (model_ == nullptr || library_ == nullptr) {
      throw InvalidInput("Controller: model and library are required");
    }
    if (plan_weights_.size() != library_->size()) {
      throw InvalidInput("Controller: plan weights do not match the library");
    }
    if (encoder_.feature_dim() != library_->embedding_dim()) {
      throw InvalidInput("Controller: encoder output dim != embedding dim");
    }
    fusion_.Validate();
    planner_.Validate();
  }

  const PlannerConfig& planner_config() const { return planner_; }
  void set_planner_config(const PlannerConfig& cfg) {
    cfg.Validate();
    planner_ = cfg;
  }
  const Simplex& plan_weights() const { return plan_weights_; }
  void set_model(const Model* model) { model_ = model; }

  // Starts a new episode: drops the warm start and restarts the planner
  // stream at `rng`.
  void Reset(RngStream rng) {
    rng_ = rng;
    previous_.clear();
    step_ = 0;
  }

  // Fused weights and reference action only.
  std::pair<Simplex, Vec> Reference(std::span<const double> obs) const {
    const Simplex p = SelectionProbs(encoder_.Encode(obs), *library_);
    Simplex w_tilde = Fuse(plan_weights_, p, fusion_);
    Vec a_ref = ReferenceAction(w_tilde, *library_, obs);
    return {std::move(w_tilde), std::move(a_ref)};
  }

  ActResult Act(std::span<const double> obs) {
    return ActWithLatent(obs, model_->Encode(obs));
  }

  // As Act, with the latent supplied by the caller.
  ActResult ActWithLatent(std::span<const double> obs, const Vec& z) {
    auto [w_tilde, a_ref] = Reference(obs);
    PlanResult plan =
        Plan(*model_, z, a_ref, planner_, rng_.Derive(StreamTag::kPlanner, step_),
             previous_.empty() ? nullptr : &previous_);
    ++step_;
    // Only an optimized plan is worth warm starting from.
    if (plan.iterations_used > 0) {
      previous_ = plan.actions;
    } else {
      previous_.clear();
    }
    Vec action = plan.actions.front();
    return {std::move(action), std::move(a_ref), std::move(w_tilde), std::move(plan)};
  }

 private:
  const Model* model_;
  const ExpertLibrary* library_;
  Simplex plan_weights_;
  StateEncoder encoder_;
  FusionConfig fusion_;
  PlannerConfig planner_;
  RngStream rng_;
  std::vector<Vec> previous_;
  std::uint64_t step_ = 0;
};

// Exact model of a ToyEnv: the latent is the full environment state, the
// value is zero. Used to test the planner independently of learning.
class PerfectEnvModel {
 public:
  static constexpr int kStateDim = 8;

  explicit PerfectEnvModel(const ToyEnv* env, double gamma = 0.99)
      : env_(env), gamma_(gamma) {}

  double gamma() const { return gamma_; }
  int latent_dim() const { return kStateDim; }
  int action_dim() const { return env_->layout().action_dim; }

  static Vec Pack(const ToyEnv::State& s) {
    return {s.position, s.velocity,  s.goal, s.angle, s.manipulating ? 1.0 : 0.0,
            static_cast<double>(s.hold_count), static_cast<double>(s.steps),
            s.done ? 1.0 : 0.0};
  }

  static ToyEnv::State Unpack(const double* v) {
    ToyEnv::State s;
    s.position = v[0];
    s.velocity = v[1];
    s.goal = v[2];
    s.angle = v[3];
    s.manipulating = v[4] > 0.5;
    s.hold_count = static_cast<int>(v[5]);
    s.steps = static_cast<int>(v[6]);
    s.done = v[7] > 0.5;
    return s;
  }

  // The observation alone does not carry the hidden counters; this reads the
  // bound environment's current state.
  Vec Encode(std::span<const double>) const { return Pack(env_->state()); }

  void PredictBatch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                    Eigen::MatrixXd* z_next, Eigen::RowVectorXd* reward) const {
    z_next->resize(z.rows(), z.cols());
    reward->resize(z.cols());
    Vec action(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      ToyEnv::State s = Unpack(z.col(c).data());
      double r = 0.0;
      if (!s.done) {
        for (Eigen::Index d = 0; d < a.rows(); ++d) action[d] = a(d, c);
        r = env_->Advance(s, action);
      }
      const Vec packed = Pack(s);
      for (int i = 0; i < kStateDim; ++i) (*z_next)(i, c) = packed[i];
      (*reward)(c) = r;
    }
  }

  Eigen::RowVectorXd ValueBatch(const Eigen::MatrixXd& z) const {
    return Eigen::RowVectorXd::Zero(z.cols());
  }

 private:
  const ToyEnv* env_;
  double gamma_;
};

}  // namespace skillmpc

#endif  // SKILLMPC_PLANNER_H_
