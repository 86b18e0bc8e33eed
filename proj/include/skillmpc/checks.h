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

#ifndef SKILLMPC_CHECKS_H_
#define SKILLMPC_CHECKS_H_

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/experts.h"
#include "skillmpc/fusion.h"
#include "skillmpc/planner.h"
#include "skillmpc/world_model.h"

namespace skillmpc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace internal {

template <class F>
CheckResult Timed(const std::string& name, F fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r = fn();
  r.name = name;
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace internal

// -- gradient oracle -- //

// Random door transitions for the tiny model; a_ref drawn independently.
inline TrainBatch RandomDoorBatch(RngStream rng, int n) {
  ToyEnv env(EnvKind::kDoor);
  env.Reset(rng.NextU64());
  TrainBatch b;
  for (int i = 0; i < n; ++i) {
    if (env.done()) env.Reset(rng.NextU64());
    Vec a = {rng.Uniform(-1, 1), rng.Uniform(-1, 1)};
    b.transitions.push_back(env.Step(a));
    b.a_refs.push_back({rng.Uniform(-1, 1), rng.Uniform(-1, 1)});
  }
  return b;
}

inline CheckResult GradientOracleCheck(double tolerance = 1e-4, int subsamples = 2) {
  return internal::Timed("gradient_oracle", [&] {
    const RngStream rng(2026, static_cast<std::uint64_t>(StreamTag::kCheck));
    WorldModel model(WorldModelConfig::Tiny(5, 2), rng.Derive(StreamTag::kModelInit, 0));
    const TrainBatch batch = RandomDoorBatch(rng.Derive(StreamTag::kReplay, 0), 32);
    CheckResult r;
    r.passed = true;
    std::ostringstream detail;
    detail << "params=" << model.num_parameters();
    for (unsigned term : {kLossTd, kLossGuidance, kLossDynamics, kLossReward, kLossValue}) {
      double worst = 0.0;
      for (int s = 0; s < subsamples; ++s) {
        worst = std::max(worst, FiniteDiffCheck(model, batch, term,
                                                rng.Derive(StreamTag::kCheck, 10 * term + s))
                                    .max_relative_error);
      }
      detail << " " << LossTermName(term) << "=" << worst;
      r.passed &= worst < tolerance;
    }
    r.detail = detail.str();
    return r;
  });
}

// -- contraction and value iteration -- //

inline CheckResult ContractionCheck(int triples = 1000) {
  return internal::Timed("contraction", [&] {
    const RngStream rng(7, static_cast<std::uint64_t>(StreamTag::kCheck));
    int violations = 0;
    double worst_ratio = 0.0;
    for (int t = 0; t < triples; ++t) {
      RngStream g = rng.Derive(StreamTag::kCheck, t);
      const int s = 1 + static_cast<int>(g.UniformInt(8));
      const int a = 1 + static_cast<int>(g.UniformInt(4));
      const double gamma = t % 2 ? 0.99 : g.Uniform(0.01, 0.999);
      const DiscreteMdp mdp = DiscreteMdp::Random(g, s, a, gamma);
      QTable q1(s, a), q2(s, a);
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j < a; ++j) {
          q1(i, j) = g.Uniform(-10, 10);
          q2(i, j) = g.Uniform(-10, 10);
        }
      }
      const double lhs = SupNorm(BellmanOperator(mdp, q1) - BellmanOperator(mdp, q2));
      const double rhs = gamma * SupNorm(q1 - q2);
      if (lhs > rhs * (1.0 + 1e-12)) ++violations;
      if (rhs > 0.0) worst_ratio = std::max(worst_ratio, lhs / rhs);
    }
    CheckResult r;
    r.passed = violations == 0;
    r.detail = "triples=" + std::to_string(triples) +
               " violations=" + std::to_string(violations) +
               " max_ratio=" + std::to_string(worst_ratio);
    return r;
  });
}

// One state, one action, r = 1.
inline DiscreteMdp SingleStateMdp(double gamma = 0.99) {
  DiscreteMdp m = DiscreteMdp::Zeros(1, 1, gamma);
  m.transitions[0] = 1.0;
  m.rewards[0] = 1.0;
  return m;
}

// States {0, 1} with reward (0, 1) for being in them; action 0 stays,
// action 1 moves to the other state.
inline DiscreteMdp TwoStateChain(double gamma = 0.99) {
  DiscreteMdp m = DiscreteMdp::Zeros(2, 2, gamma);
  auto p = [&](int s, int a, int sn) -> double& {
    return m.transitions[(s * 2 + a) * 2 + sn];
  };
  p(0, 0, 0) = 1.0;
  p(0, 1, 1) = 1.0;
  p(1, 0, 1) = 1.0;
  p(1, 1, 0) = 1.0;
  m.rewards = {0.0, 0.0, 1.0, 1.0};
  return m;
}

// Closed form for TwoStateChain: V(1) = 1 / (1 - g), V(0) = g V(1).
inline QTable TwoStateChainOptimum(double g) {
  const double v1 = 1.0 / (1.0 - g);
  const double v0 = g * v1;
  QTable q(2, 2);
  q << g * v0, g * v1, 1.0 + g * v1, 1.0 + g * v0;
  return q;
}

inline CheckResult ValueIterationCheck(double tolerance = 1e-6) {
  return internal::Timed("value_iteration", [&] {
    const double g = 0.99;
    const auto one = ValueIteration(SingleStateMdp(g), 1e-10);
    const double err1 = std::abs(one.q(0, 0) - 1.0 / (1.0 - g));
    const auto two = ValueIteration(TwoStateChain(g), 1e-10);
    const double err2 = SupNorm(two.q - TwoStateChainOptimum(g));
    CheckResult r;
    r.passed = err1 < tolerance && err2 < tolerance;
    r.detail = "single_state_err=" + std::to_string(err1) +
               " two_state_err=" + std::to_string(err2);
    return r;
  });
}

// -- planner oracle -- //

// x' = x + step * a, reward -(x' - target)^2, V = 0.
class IntegratorModel {
 public:
  explicit IntegratorModel(double step = 0.5, double target = 0.5, double gamma = 0.99)
      : step_(step), target_(target), gamma_(gamma) {}

  double gamma() const { return gamma_; }
  int latent_dim() const { return 1; }
  int action_dim() const { return 1; }
  double step() const { return step_; }
  double target() const { return target_; }

  void PredictBatch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                    Eigen::MatrixXd* z_next, Eigen::RowVectorXd* reward) const {
    *z_next = z + step_ * a;
    *reward = -(z_next->row(0).array() - target_).square().matrix();
  }

  Eigen::RowVectorXd ValueBatch(const Eigen::MatrixXd& z) const {
    return Eigen::RowVectorXd::Zero(z.cols());
  }

 private:
  double step_, target_, gamma_;
};

struct GridOptimum {
  Vec actions;
  double score = 0.0;
};

// Exhaustive search over 3-step sequences on a grid of `resolution` in
// [-1, 1].
inline GridOptimum GridSearch3(const IntegratorModel& m, double x0,
                               double resolution = 0.01) {
  const int n = static_cast<int>(std::lround(2.0 / resolution)) + 1;
  auto value = [&](int i) { return -1.0 + i * resolution; };
  const double g = m.gamma();
  GridOptimum best{{0, 0, 0}, -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < n; ++i) {
    const double x1 = x0 + m.step() * value(i);
    const double r0 = -(x1 - m.target()) * (x1 - m.target());
    for (int j = 0; j < n; ++j) {
      const double x2 = x1 + m.step() * value(j);
      const double r1 = r0 - g * (x2 - m.target()) * (x2 - m.target());
      for (int k = 0; k < n; ++k) {
        const double x3 = x2 + m.step() * value(k);
        const double s = r1 - g * g * (x3 - m.target()) * (x3 - m.target());
        if (s > best.score) best = {{value(i), value(j), value(k)}, s};
      }
    }
  }
  return best;
}

inline CheckResult PlannerOracleCheck(double tolerance = 0.05) {
  return internal::Timed("planner_oracle", [&] {
    const IntegratorModel model;
    PlannerConfig cfg;
    cfg.horizon = 3;
    CheckResult r;
    r.passed = true;
    std::ostringstream detail;
    const RngStream rng(11, static_cast<std::uint64_t>(StreamTag::kCheck));
    int idx = 0;
    for (double x0 : {-0.3, 0.0, 0.2, 0.45, 0.9}) {
      const GridOptimum grid = GridSearch3(model, x0);
      const PlanResult plan =
          Plan(model, Vec{x0}, Vec{0.0}, cfg, rng.Derive(StreamTag::kPlanner, idx++));
      const double err = std::abs(plan.actions[0][0] - grid.actions[0]);
      r.passed &= err <= tolerance;
      detail << "x0=" << x0 << ":|" << plan.actions[0][0] << "-" << grid.actions[0]
             << "|=" << err << " ";
    }
    r.detail = detail.str();
    return r;
  });
}

// -- simplex and fusion algebra -- //

inline CheckResult SimplexAlgebraCheck(int instances = 10000) {
  return internal::Timed("simplex_fusion_algebra", [&] {
    const RngStream rng(13, static_cast<std::uint64_t>(StreamTag::kCheck));
    int failures = 0;
    std::string first_failure;
    auto fail = [&](int i, const std::string& what) {
      if (failures++ == 0) first_failure = "instance " + std::to_string(i) + ": " + what;
    };
    auto sum_ok = [](const Simplex& s) {
      double sum = 0.0;
      for (double v : s.weights()) {
        if (!(v >= 0.0)) return false;
        sum += v;
      }
      return std::abs(sum - 1.0) <= 1e-9;
    };
    for (int i = 0; i < instances; ++i) {
      RngStream g = rng.Derive(StreamTag::kCheck, i);
      const std::size_t k = 2 + g.UniformInt(7);
      const double scale = g.Uniform(0.1, 50.0);
      Vec s1(k), s2(k);
      for (std::size_t j = 0; j < k; ++j) {
        s1[j] = scale * g.Normal();
        s2[j] = scale * g.Normal();
      }
      const Simplex w = Softmax(s1);
      const Simplex p = Softmax(s2);
      if (!sum_ok(w) || !sum_ok(p)) fail(i, "softmax not normalized");
      // Shift invariance.
      Vec shifted = s1;
      for (double& v : shifted) v += 3.0;
      const Simplex ws = Softmax(shifted);
      for (std::size_t j = 0; j < k; ++j) {
        if (std::abs(ws[j] - w[j]) > 1e-9) fail(i, "softmax not shift invariant");
      }
      const double alpha = g.Uniform();
      const Simplex f = Fuse(w, p, FusionConfig{alpha});
      if (!sum_ok(f)) fail(i, "fuse not normalized");
      for (std::size_t j = 0; j < k; ++j) {
        const double lo = std::min(w[j], p[j]), hi = std::max(w[j], p[j]);
        if (f[j] < lo - 1e-12 || f[j] > hi + 1e-12) fail(i, "fuse not convex");
      }
      if (Fuse(w, p, FusionConfig{1.0}).weights() != w.weights()) fail(i, "alpha=1");
      if (Fuse(w, p, FusionConfig{0.0}).weights() != p.weights()) fail(i, "alpha=0");
      // Selection probabilities from random embeddings.
      const std::size_t dim = 1 + g.UniformInt(6);
      std::vector<Expert> experts;
      for (std::size_t j = 0; j < k; ++j) {
        Vec e(dim);
        for (double& v : e) v = g.Normal();
        experts.push_back({{"e" + std::to_string(j), e, ""}, {}});
      }
      const ExpertLibrary lib(std::move(experts), LayoutFor(EnvKind::kStand));
      Vec phi(dim);
      for (double& v : phi) v = scale * g.Normal();
      const Simplex sel = SelectionProbs(phi, lib);
      if (!sum_ok(sel)) fail(i, "selection_probs not normalized");
      Vec dots(k);
      for (std::size_t j = 0; j < k; ++j) dots[j] = Dot(phi, lib.Embedding(j));
      const Simplex ref = Softmax(dots);
      for (std::size_t j = 0; j < k; ++j) {
        if (std::abs(ref[j] - sel[j]) > 1e-12) fail(i, "selection_probs != softmax");
      }
    }
    CheckResult r;
    r.passed = failures == 0;
    r.detail = "instances=" + std::to_string(instances) +
               " failures=" + std::to_string(failures) +
               (failures ? " first: " + first_failure : "");
    return r;
  });
}

// -- convex-hull grounding -- //

inline CheckResult ConvexHullCheck(int states = 10000) {
  return internal::Timed("convex_hull", [&] {
    const RngStream rng(17, static_cast<std::uint64_t>(StreamTag::kCheck));
    int violations = 0;
    for (int i = 0; i < states; ++i) {
      RngStream g = rng.Derive(StreamTag::kCheck, i);
      const EnvKind kind = static_cast<EnvKind>(g.UniformInt(5));
      const ExpertLibrary lib = DefaultLibrary(kind);
      const ObservationLayout layout = lib.layout();
      Vec obs(static_cast<std::size_t>(layout.obs_dim));
      for (double& v : obs) v = g.Uniform(-3.0, 3.0);
      if (layout.phase >= 0) obs[layout.phase] = g.Uniform() < 0.5 ? -1.0 : 1.0;
      Vec scores(lib.size());
      for (double& s : scores) s = 5.0 * g.Normal();
      const Simplex w = Softmax(scores);
      const Vec a = ReferenceAction(w, lib, obs);
      const std::vector<Vec> experts = lib.Actions(obs);
      for (std::size_t d = 0; d < a.size(); ++d) {
        double lo = experts[0][d], hi = experts[0][d];
        for (const Vec& e : experts) {
          lo = std::min(lo, e[d]);
          hi = std::max(hi, e[d]);
        }
        if (a[d] < lo - 1e-12 || a[d] > hi + 1e-12) ++violations;
      }
    }
    CheckResult r;
    r.passed = violations == 0;
    r.detail = "states=" + std::to_string(states) +
               " violations=" + std::to_string(violations);
    return r;
  });
}

inline std::vector<CheckResult> RunAllChecks() {
  return {GradientOracleCheck(), ContractionCheck(), ValueIterationCheck(),
          PlannerOracleCheck(), SimplexAlgebraCheck(), ConvexHullCheck()};
}

}  // namespace skillmpc

#endif  // SKILLMPC_CHECKS_H_
