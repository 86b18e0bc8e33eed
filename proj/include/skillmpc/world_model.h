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

#ifndef SKILLMPC_WORLD_MODEL_H_
#define SKILLMPC_WORLD_MODEL_H_

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/mlp.h"

namespace skillmpc {

// -- configuration -- //

enum class TdLossForm {
  kAuto,     // squared for one quantile, pinball otherwise
  kSquared,
  kPinball,
};

inline std::string_view ToString(TdLossForm f) {
  switch (f) {
    case TdLossForm::kAuto: return "auto";
    case TdLossForm::kSquared: return "squared";
    case TdLossForm::kPinball: return "pinball";
  }
  return "unknown";
}

inline TdLossForm TdLossFormFromString(std::string_view name) {
  for (TdLossForm f : {TdLossForm::kAuto, TdLossForm::kSquared, TdLossForm::kPinball}) {
    if (ToString(f) == name) return f;
  }
  throw InvalidInput("unknown td loss form '" + std::string(name) + "'");
}

enum class OptimizerKind { kAdam, kSgd };

inline std::string_view ToString(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "sgd";
}

inline OptimizerKind OptimizerKindFromString(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw InvalidInput("unknown optimizer '" + std::string(name) + "'");
}

struct WorldModelConfig {
  int obs_dim = 2;
  int action_dim = 1;
  int latent_dim = 16;
  std::vector<int> hidden = {32, 32};
  Activation activation = Activation::kTanh;
  double gamma = 0.99;
  double lambda_guidance = 0.05;
  int n_quantiles = 5;
  TdLossForm td_loss = TdLossForm::kAuto;
  double learning_rate = 1e-3;
  int batch_size = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double grad_clip = 10.0;
  // Q and V heads output value / value_scale; value losses are measured in
  // those units.
  double value_scale = 10.0;
  double dynamics_coef = 1.0;
  double reward_coef = 1.0;
  double value_coef = 1.0;

  // Small enough for finite-difference checks (< 2k parameters).
  static WorldModelConfig Tiny(int obs_dim, int action_dim) {
    WorldModelConfig c;
    c.obs_dim = obs_dim;
    c.action_dim = action_dim;
    c.latent_dim = 4;
    c.hidden = {8, 8};
    c.n_quantiles = 3;
    return c;
  }

  TdLossForm EffectiveTdLoss() const {
    if (td_loss != TdLossForm::kAuto) return td_loss;
    return n_quantiles == 1 ? TdLossForm::kSquared : TdLossForm::kPinball;
  }

  void Validate() const {
    if (obs_dim < 1 || action_dim < 1 || latent_dim < 1) {
      throw InvalidInput("WorldModelConfig: dimensions must be positive");
    }
    for (int h : hidden) {
      if (h < 1) throw InvalidInput("WorldModelConfig: hidden widths must be positive");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw InvalidInput("WorldModelConfig: gamma must lie in (0, 1)");
    }
    if (!(lambda_guidance >= 0.0)) {
      throw InvalidInput("WorldModelConfig: lambda must be >= 0");
    }
    if (n_quantiles < 1) throw InvalidInput("WorldModelConfig: n_quantiles must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidInput("WorldModelConfig: lr must be > 0");
    if (batch_size < 1) throw InvalidInput("WorldModelConfig: batch_size must be >= 1");
    if (!(grad_clip > 0.0)) throw InvalidInput("WorldModelConfig: grad_clip must be > 0");
    if (!(value_scale > 0.0)) throw InvalidInput("WorldModelConfig: value_scale must be > 0");
    if (dynamics_coef < 0.0 || reward_coef < 0.0 || value_coef < 0.0) {
      throw InvalidInput("WorldModelConfig: loss coefficients must be >= 0");
    }
  }
};

inline nlohmann::json ToJson(const WorldModelConfig& c) {
  return {{"obs_dim", c.obs_dim},
          {"action_dim", c.action_dim},
          {"latent_dim", c.latent_dim},
          {"hidden", c.hidden},
          {"activation", ToString(c.activation)},
          {"gamma", c.gamma},
          {"lambda", c.lambda_guidance},
          {"n_quantiles", c.n_quantiles},
          {"td_loss", ToString(c.td_loss)},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"optimizer", ToString(c.optimizer)},
          {"grad_clip", c.grad_clip},
          {"value_scale", c.value_scale},
          {"dynamics_coef", c.dynamics_coef},
          {"reward_coef", c.reward_coef},
          {"value_coef", c.value_coef}};
}

// -- loss primitives -- //

// Midpoint quantile fractions (2k - 1) / (2n), k = 1..n.
inline double QuantileFraction(int k, int n) {
  return (2.0 * k - 1.0) / (2.0 * n);
}

// rho_tau(u) = u * (tau - 1[u < 0]), u = target - estimate.
template <class T>
inline T PinballLoss(T u, double tau) {
  return u * (T(tau) - (u < T(0) ? T(1) : T(0)));
}

// lambda * ||a - a_ref||^2
inline double GuidanceLoss(std::span<const double> a, std::span<const double> a_ref,
                           double lambda) {
  if (a.size() != a_ref.size()) throw InvalidInput("GuidanceLoss: dim mismatch");
  if (!(lambda >= 0.0)) throw InvalidInput("GuidanceLoss: lambda must be >= 0");
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    sum += (a[d] - a_ref[d]) * (a[d] - a_ref[d]);
  }
  return lambda * sum;
}

// -- batches and reports -- //

struct TrainBatch {
  std::vector<Transition> transitions;
  std::vector<Vec> a_refs;

  std::size_t size() const { return transitions.size(); }

  void Validate(int obs_dim, int action_dim) const {
    if (transitions.empty()) throw InvalidInput("TrainBatch: empty batch");
    if (a_refs.size() != transitions.size()) {
      throw InvalidInput("TrainBatch: a_refs not aligned with transitions");
    }
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      const Transition& t = transitions[i];
      CheckDim(t.o, static_cast<std::size_t>(obs_dim), "TrainBatch o");
      CheckDim(t.o_next, static_cast<std::size_t>(obs_dim), "TrainBatch o_next");
      CheckDim(t.a, static_cast<std::size_t>(action_dim), "TrainBatch a");
      CheckDim(a_refs[i], static_cast<std::size_t>(action_dim), "TrainBatch a_ref");
    }
  }
};

struct LossReport {
  double td = 0.0;
  double guidance = 0.0;
  double dynamics = 0.0;
  double reward = 0.0;
  double value = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
};

inline nlohmann::json ToJson(const LossReport& r) {
  return {{"td", r.td},         {"guidance", r.guidance}, {"dynamics", r.dynamics},
          {"reward", r.reward}, {"value", r.value},       {"total", r.total}};
}

enum LossTerm : unsigned {
  kLossTd = 1u << 0,
  kLossGuidance = 1u << 1,
  kLossDynamics = 1u << 2,
  kLossReward = 1u << 3,
  kLossValue = 1u << 4,
  kLossAll = 0x1Fu,
};

inline std::string_view LossTermName(unsigned term) {
  switch (term) {
    case kLossTd: return "td";
    case kLossGuidance: return "guidance";
    case kLossDynamics: return "dynamics";
    case kLossReward: return "reward";
    case kLossValue: return "value";
    default: return "combined";
  }
}

// -- the model -- //

// Encoder o -> z, latent dynamics (z, a) -> z', reward head (z, a) -> r,
// quantile Q head (z, a) -> N_q values, value head z -> V, and a policy prior
// z -> a. The policy prior carries the expert-guidance term and supplies the
// bootstrap action in the TD target.
class WorldModel {
 public:
  enum Net { kEncoder = 0, kDynamics, kReward, kQ, kValue, kPolicy, kNumNets };

  static constexpr std::array<std::string_view, kNumNets> kNetNames = {
      "encoder", "dynamics", "reward", "q", "value", "policy"};

  using Gradients = std::array<Eigen::VectorXd, kNumNets>;

  // Batch in column layout.
  struct BatchData {
    Eigen::MatrixXd obs, action, next_obs, a_ref;
    Eigen::RowVectorXd reward, done;
  };

  // Stop-gradient quantities, computed once per update from current params.
  struct Targets {
    Eigen::MatrixXd next_latent;     // enc(o')
    Eigen::RowVectorXd td;           // r + gamma (1 - done) Qbar(z', pi(z'))
    Eigen::RowVectorXd value;        // Qbar(z, pi(z))
    Eigen::MatrixXd latent;          // enc(o), detached input of pi and V
  };

  template <class T>
  struct Losses {
    T td = 0, guidance = 0, dynamics = 0, reward = 0, value = 0;
    T Total() const { return td + guidance + dynamics + reward + value; }
  };

  WorldModel(WorldModelConfig cfg, RngStream rng) : cfg_(std::move(cfg)) {
    cfg_.Validate();
    BuildNetworks();
    for (int n = 0; n < kNumNets; ++n) {
      nets_[n].Initialize(rng.Derive(StreamTag::kModelInit, n));
    }
    ResetOptimizer();
  }

  const WorldModelConfig& config() const { return cfg_; }
  WorldModelConfig& mutable_config() { return cfg_; }
  double gamma() const { return cfg_.gamma; }
  int latent_dim() const { return cfg_.latent_dim; }
  int action_dim() const { return cfg_.action_dim; }
  int obs_dim() const { return cfg_.obs_dim; }

  Mlp& net(Net n) { return nets_[n]; }
  const Mlp& net(Net n) const { return nets_[n]; }

  Eigen::Index num_parameters() const {
    Eigen::Index total = 0;
    for (const Mlp& m : nets_) total += m.num_parameters();
    return total;
  }

  // Global parameter index -> (net, offset).
  std::pair<int, Eigen::Index> Locate(Eigen::Index global) const {
    for (int n = 0; n < kNumNets; ++n) {
      if (global < nets_[n].num_parameters()) return {n, global};
      global -= nets_[n].num_parameters();
    }
    throw InvalidInput("WorldModel::Locate: parameter index out of range");
  }
  double& Parameter(Eigen::Index global) {
    auto [n, i] = Locate(global);
    return nets_[n].parameters()[i];
  }

  // -- single-sample queries -- //

  Vec Encode(std::span<const double> obs) const {
    CheckDim(obs, static_cast<std::size_t>(cfg_.obs_dim), "WorldModel::Encode");
    return ToVec(nets_[kEncoder].Forward<double>(Column(obs)));
  }

  // (z', r_hat)
  std::pair<Vec, double> Predict(std::span<const double> z,
                                 std::span<const double> a) const {
    const Eigen::MatrixXd za = LatentAction(z, a);
    return {ToVec(nets_[kDynamics].Forward<double>(za)),
            nets_[kReward].Forward<double>(za)(0, 0)};
  }

  // N_q quantile estimates in value units.
  Vec QuantileValues(std::span<const double> z, std::span<const double> a) const {
    const Eigen::MatrixXd q = nets_[kQ].Forward<double>(LatentAction(z, a));
    return ToVec(q * cfg_.value_scale);
  }

  // Mean of the quantile estimates.
  double QValue(std::span<const double> z, std::span<const double> a) const {
    const Vec q = QuantileValues(z, a);
    double sum = 0.0;
    for (double v : q) sum += v;
    return sum / static_cast<double>(q.size());
  }

  double Value(std::span<const double> z) const {
    CheckDim(z, static_cast<std::size_t>(cfg_.latent_dim), "WorldModel::Value");
    return nets_[kValue].Forward<double>(Column(z))(0, 0) * cfg_.value_scale;
  }

  Vec PolicyPrior(std::span<const double> z) const {
    CheckDim(z, static_cast<std::size_t>(cfg_.latent_dim), "WorldModel::PolicyPrior");
    return ToVec(nets_[kPolicy].Forward<double>(Column(z)));
  }

  // r + gamma * Qbar(z', a'), or r for terminal transitions. Constant with
  // respect to training.
  double TdTarget(double r, std::span<const double> z_next,
                  std::span<const double> a_next, bool done = false) const {
    if (done) return r;
    return r + cfg_.gamma * QValue(z_next, a_next);
  }

  // -- batched queries (columns are samples) -- //

  Eigen::MatrixXd EncodeBatch(const Eigen::MatrixXd& obs) const {
    return nets_[kEncoder].Forward<double>(obs);
  }

  void PredictBatch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                    Eigen::MatrixXd* z_next, Eigen::RowVectorXd* reward) const {
    Eigen::MatrixXd za(z.rows() + a.rows(), z.cols());
    za << z, a;
    *z_next = nets_[kDynamics].Forward<double>(za);
    *reward = nets_[kReward].Forward<double>(za).row(0);
  }

  Eigen::RowVectorXd ValueBatch(const Eigen::MatrixXd& z) const {
    return nets_[kValue].Forward<double>(z).row(0) * cfg_.value_scale;
  }

  // -- training -- //

  BatchData Collate(const TrainBatch& batch) const {
    batch.Validate(cfg_.obs_dim, cfg_.action_dim);
    const auto b = static_cast<Eigen::Index>(batch.size());
    BatchData d;
    d.obs.resize(cfg_.obs_dim, b);
    d.next_obs.resize(cfg_.obs_dim, b);
    d.action.resize(cfg_.action_dim, b);
    d.a_ref.resize(cfg_.action_dim, b);
    d.reward.resize(b);
    d.done.resize(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      const Transition& t = batch.transitions[static_cast<std::size_t>(i)];
      const Vec& ref = batch.a_refs[static_cast<std::size_t>(i)];
      for (int k = 0; k < cfg_.obs_dim; ++k) {
        d.obs(k, i) = t.o[k];
        d.next_obs(k, i) = t.o_next[k];
      }
      for (int k = 0; k < cfg_.action_dim; ++k) {
        d.action(k, i) = t.a[k];
        d.a_ref(k, i) = ref[k];
      }
      d.reward(i) = t.r;
      d.done(i) = t.done ? 1.0 : 0.0;
    }
    return d;
  }

  Targets ComputeTargets(const BatchData& d) const {
    Targets t;
    t.next_latent = nets_[kEncoder].Forward<double>(d.next_obs);
    const Eigen::RowVectorXd q_next = MeanQ(t.next_latent);
    t.td = d.reward.array() +
           cfg_.gamma * (1.0 - d.done.array()) * q_next.array();
    t.latent = nets_[kEncoder].Forward<double>(d.obs);
    t.value = MeanQ(t.latent);
    return t;
  }

  // Loss terms selected by `terms`. When `grads` is non-null (double only) the
  // gradient of their sum is added into it.
  template <class T>
  Losses<T> ComputeLosses(const BatchData& d, const Targets& targets,
                          unsigned terms, Gradients* grads = nullptr) const {
    static_assert(std::is_floating_point_v<T>);
    constexpr bool kBackprop = std::is_same_v<T, double>;
    if constexpr (!kBackprop) {
      if (grads) throw InvalidInput("ComputeLosses: gradients need double");
    }
    const Eigen::Index b = d.obs.cols();
    const T inv_b = T(1) / T(b);
    const int dz = cfg_.latent_dim;
    const T scale = T(cfg_.value_scale);
    Losses<T> out;

    Mlp::Cache<T> enc_cache;
    const Matrix<T> z =
        nets_[kEncoder].Forward<T>(d.obs.cast<T>(), grads ? &enc_cache : nullptr);
    Matrix<T> za(dz + cfg_.action_dim, b);
    za << z, d.action.cast<T>();
    Matrix<T> grad_z = Matrix<T>::Zero(dz, b);
    bool latent_used = false;

    auto backward = [&](Net n, const Mlp::Cache<T>& cache, const Matrix<T>& g,
                        bool into_latent) {
      if constexpr (kBackprop) {
        if (!grads) return;
        Eigen::MatrixXd gin = nets_[n].Backward(cache, g, (*grads)[n]);
        if (into_latent) {
          grad_z += gin.topRows(dz);
          latent_used = true;
        }
      }
    };

    if (terms & kLossDynamics) {
      Mlp::Cache<T> cache;
      const Matrix<T> diff = nets_[kDynamics].Forward<T>(za, grads ? &cache : nullptr) -
                             targets.next_latent.cast<T>();
      const T c = T(cfg_.dynamics_coef) * inv_b / T(dz);
      out.dynamics = c * diff.squaredNorm();
      backward(kDynamics, cache, T(2) * c * diff, true);
    }
    if (terms & kLossReward) {
      Mlp::Cache<T> cache;
      const Matrix<T> diff =
          nets_[kReward].Forward<T>(za, grads ? &cache : nullptr).rowwise() -
          d.reward.cast<T>();
      const T c = T(cfg_.reward_coef) * inv_b;
      out.reward = c * diff.squaredNorm();
      backward(kReward, cache, T(2) * c * diff, true);
    }
    if (terms & kLossTd) {
      Mlp::Cache<T> cache;
      const Matrix<T> q = nets_[kQ].Forward<T>(za, grads ? &cache : nullptr);
      const Eigen::Matrix<T, 1, Eigen::Dynamic> y = targets.td.cast<T>() / scale;
      const int nq = cfg_.n_quantiles;
      const T c = inv_b / T(nq);
      Matrix<T> g(nq, b);
      if (cfg_.EffectiveTdLoss() == TdLossForm::kSquared) {
        const Matrix<T> diff = q.rowwise() - y;
        out.td = c * diff.squaredNorm();
        g = T(2) * c * diff;
      } else {
        for (Eigen::Index i = 0; i < b; ++i) {
          for (int k = 0; k < nq; ++k) {
            const double tau = QuantileFraction(k + 1, nq);
            const T u = y(i) - q(k, i);
            out.td += c * PinballLoss(u, tau);
            g(k, i) = -c * (T(tau) - (u < T(0) ? T(1) : T(0)));
          }
        }
      }
      backward(kQ, cache, g, true);
    }
    if constexpr (kBackprop) {
      if (grads && latent_used) {
        nets_[kEncoder].Backward(enc_cache, grad_z, (*grads)[kEncoder]);
      }
    }
    // Policy prior and value head read the detached latent.
    const Matrix<T> z_sg = targets.latent.cast<T>();
    if (terms & kLossGuidance) {
      Mlp::Cache<T> cache;
      const Matrix<T> diff = nets_[kPolicy].Forward<T>(z_sg, grads ? &cache : nullptr) -
                             d.a_ref.cast<T>();
      const T c = T(cfg_.lambda_guidance) * inv_b;
      out.guidance = c * diff.squaredNorm();
      backward(kPolicy, cache, T(2) * c * diff, false);
    }
    if (terms & kLossValue) {
      Mlp::Cache<T> cache;
      const Matrix<T> diff =
          nets_[kValue].Forward<T>(z_sg, grads ? &cache : nullptr).rowwise() -
          (targets.value.cast<T>() / scale);
      const T c = T(cfg_.value_coef) * inv_b;
      out.value = c * diff.squaredNorm();
      backward(kValue, cache, T(2) * c * diff, false);
    }
    return out;
  }

  Gradients ZeroGradients() const {
    Gradients g;
    for (int n = 0; n < kNumNets; ++n) {
      g[n] = Eigen::VectorXd::Zero(nets_[n].num_parameters());
    }
    return g;
  }

  // One optimizer update on L_total. Throws NumericalFailure, leaving every
  // parameter and optimizer moment untouched, if a loss or gradient is not
  // finite.
  LossReport TrainStep(const TrainBatch& batch, double lr) {
    if (!(lr > 0.0)) throw InvalidInput("TrainStep: lr must be positive");
    const BatchData d = Collate(batch);
    const Targets targets = ComputeTargets(d);
    Gradients grads = ZeroGradients();
    const Losses<double> l = ComputeLosses<double>(d, targets, kLossAll, &grads);
    LossReport report{l.td, l.guidance, l.dynamics, l.reward, l.value, l.Total(), 0.0};
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    report.grad_norm = std::sqrt(sq);
    if (!std::isfinite(report.total) || !std::isfinite(report.grad_norm)) {
      throw NumericalFailure("TrainStep: non-finite loss or gradient (total=" +
                             std::to_string(report.total) + ")");
    }
    const double clip = report.grad_norm > cfg_.grad_clip
                            ? cfg_.grad_clip / report.grad_norm
                            : 1.0;
    ++adam_step_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, adam_step_);
    const double c2 = 1.0 - std::pow(b2, adam_step_);
    for (int n = 0; n < kNumNets; ++n) {
      Eigen::VectorXd g = grads[n] * clip;
      Eigen::VectorXd& p = nets_[n].parameters();
      if (cfg_.optimizer == OptimizerKind::kSgd) {
        p -= lr * g;
        continue;
      }
      adam_m_[n] = b1 * adam_m_[n] + (1.0 - b1) * g;
      adam_v_[n] = b2 * adam_v_[n] + (1.0 - b2) * g.cwiseAbs2();
      p.array() -= lr * (adam_m_[n].array() / c1) /
                   ((adam_v_[n].array() / c2).sqrt() + eps);
    }
    return report;
  }

  LossReport TrainStep(const TrainBatch& batch) {
    return TrainStep(batch, cfg_.learning_rate);
  }

  void ResetOptimizer() {
    adam_step_ = 0;
    for (int n = 0; n < kNumNets; ++n) {
      adam_m_[n] = Eigen::VectorXd::Zero(nets_[n].num_parameters());
      adam_v_[n] = Eigen::VectorXd::Zero(nets_[n].num_parameters());
    }
  }

  // -- checkpoints -- //

  static constexpr int kFormatVersion = 1;

  nlohmann::json ToJson() const {
    nlohmann::json j;
    j["format"] = "skillmpc-world-model";
    j["version"] = kFormatVersion;
    j["config"] = skillmpc::ToJson(cfg_);
    for (int n = 0; n < kNumNets; ++n) {
      const Mlp& m = nets_[n];
      const Eigen::VectorXd& p = m.parameters();
      j["networks"][std::string(kNetNames[n])] = {
          {"widths", m.widths()},
          {"hidden_activation", ToString(m.hidden_activation())},
          {"output_activation", ToString(m.output_activation())},
          {"parameters", std::vector<double>(p.data(), p.data() + p.size())}};
    }
    return j;
  }

  // Rebuilds the networks from `cfg` and copies parameters from `j`; any
  // shape disagreement is an error.
  static WorldModel FromJson(const nlohmann::json& j, const WorldModelConfig& cfg) {
    if (j.value("format", "") != "skillmpc-world-model") {
      throw InvalidInput("checkpoint: not a world-model record");
    }
    if (j.value("version", -1) != kFormatVersion) {
      throw InvalidInput("checkpoint: unsupported version");
    }
    WorldModel model(cfg, RngStream(0, 0));
    for (int n = 0; n < kNumNets; ++n) {
      const std::string name(kNetNames[n]);
      if (!j.contains("networks") || !j["networks"].contains(name)) {
        throw InvalidInput("checkpoint: missing network '" + name + "'");
      }
      const auto& rec = j["networks"][name];
      Mlp& m = model.nets_[n];
      if (rec.at("widths").get<std::vector<int>>() != m.widths()) {
        throw InvalidInput("checkpoint: layer shapes of '" + name +
                           "' do not match the configuration");
      }
      const auto params = rec.at("parameters").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(params.size()) != m.num_parameters()) {
        throw InvalidInput("checkpoint: parameter count of '" + name +
                           "' does not match its shape");
      }
      if (!AllFinite(params)) {
        throw InvalidInput("checkpoint: non-finite parameter in '" + name + "'");
      }
      m.parameters() = Eigen::Map<const Eigen::VectorXd>(
          params.data(), static_cast<Eigen::Index>(params.size()));
    }
    return model;
  }

 private:
  void BuildNetworks() {
    auto widths = [&](int in, int out) {
      std::vector<int> w = {in};
      w.insert(w.end(), cfg_.hidden.begin(), cfg_.hidden.end());
      w.push_back(out);
      return w;
    };
    const int z = cfg_.latent_dim, a = cfg_.action_dim;
    const Activation h = cfg_.activation;
    nets_[kEncoder] = Mlp(widths(cfg_.obs_dim, z), h, Activation::kLinear);
    nets_[kDynamics] = Mlp(widths(z + a, z), h, Activation::kLinear);
    nets_[kReward] = Mlp(widths(z + a, 1), h, Activation::kLinear);
    nets_[kQ] = Mlp(widths(z + a, cfg_.n_quantiles), h, Activation::kLinear);
    nets_[kValue] = Mlp(widths(z, 1), h, Activation::kLinear);
    nets_[kPolicy] = Mlp(widths(z, a), h, Activation::kTanh);
  }

  // Quantile mean of Q(z, pi(z)) in value units, per column.
  Eigen::RowVectorXd MeanQ(const Eigen::MatrixXd& z) const {
    const Eigen::MatrixXd pi = nets_[kPolicy].Forward<double>(z);
    Eigen::MatrixXd za(z.rows() + pi.rows(), z.cols());
    za << z, pi;
    return nets_[kQ].Forward<double>(za).colwise().mean() * cfg_.value_scale;
  }

  static Eigen::MatrixXd Column(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                             static_cast<Eigen::Index>(v.size()));
  }

  Eigen::MatrixXd LatentAction(std::span<const double> z,
                               std::span<const double> a) const {
    CheckDim(z, static_cast<std::size_t>(cfg_.latent_dim), "WorldModel latent");
    CheckDim(a, static_cast<std::size_t>(cfg_.action_dim), "WorldModel action");
    Eigen::MatrixXd za(cfg_.latent_dim + cfg_.action_dim, 1);
    for (int i = 0; i < cfg_.latent_dim; ++i) za(i, 0) = z[i];
    for (int i = 0; i < cfg_.action_dim; ++i) za(cfg_.latent_dim + i, 0) = a[i];
    return za;
  }

  static Vec ToVec(const Eigen::MatrixXd& m) {
    return Vec(m.data(), m.data() + m.size());
  }

  WorldModelConfig cfg_;
  std::array<Mlp, kNumNets> nets_;
  std::array<Eigen::VectorXd, kNumNets> adam_m_;
  std::array<Eigen::VectorXd, kNumNets> adam_v_;
  int adam_step_ = 0;
};

// -- gradient verification -- //

struct GradientCheckResult {
  double max_relative_error = 0.0;
  int parameters_checked = 0;
};

// Compares the analytic gradient of the selected loss terms against central
// differences (step h) on a random subsample of parameters. Stop-gradient
// targets are frozen at the current parameters, and the perturbed losses are
// evaluated in extended precision. Relative error is
// |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
inline GradientCheckResult FiniteDiffCheck(WorldModel& model, const TrainBatch& batch,
                                           unsigned terms, RngStream rng,
                                           int n_samples = 100, double h = 1e-5) {
  const WorldModel::BatchData d = model.Collate(batch);
  const WorldModel::Targets targets = model.ComputeTargets(d);
  WorldModel::Gradients grads = model.ZeroGradients();
  model.ComputeLosses<double>(d, targets, terms, &grads);

  const Eigen::Index total = model.num_parameters();
  const int count = static_cast<int>(std::min<Eigen::Index>(n_samples, total));
  // Floyd's algorithm: `count` distinct indices.
  std::vector<Eigen::Index> picks;
  std::unordered_set<Eigen::Index> seen;
  for (Eigen::Index j = total - count; j < total; ++j) {
    const auto t = static_cast<Eigen::Index>(rng.UniformInt(static_cast<std::uint64_t>(j + 1)));
    const Eigen::Index pick = seen.count(t) ? j : t;
    seen.insert(pick);
    picks.push_back(pick);
  }

  GradientCheckResult result;
  for (Eigen::Index global : picks) {
    auto [net, local] = model.Locate(global);
    const double analytic = grads[net][local];
    double& p = model.Parameter(global);
    const double original = p;
    p = original + h;
    const double up = p;
    const long double loss_up =
        model.ComputeLosses<long double>(d, targets, terms).Total();
    p = original - h;
    const double down = p;
    const long double loss_down =
        model.ComputeLosses<long double>(d, targets, terms).Total();
    p = original;
    const double numeric = static_cast<double>(
        (loss_up - loss_down) /
        (static_cast<long double>(up) - static_cast<long double>(down)));
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    ++result.parameters_checked;
  }
  return result;
}

}  // namespace skillmpc

#endif  // SKILLMPC_WORLD_MODEL_H_
