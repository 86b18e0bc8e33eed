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


#include <gtest/gtest.h>

#include "skillmpc/envs.h"
#include "skillmpc/experts.h"
#include "skillmpc/fusion.h"

namespace skillmpc {
namespace {

TEST(ToyEnv, ResetIsAFunctionOfTheSeed) {
  for (EnvKind kind : {EnvKind::kStand, EnvKind::kWalk, EnvKind::kRun, EnvKind::kReach,
                       EnvKind::kDoor}) {
    ToyEnv a(kind), b(kind);
    EXPECT_EQ(a.Reset(9), b.Reset(9)) << ToString(kind);
    const Vec action(static_cast<std::size_t>(a.layout().action_dim), 0.3);
    for (int t = 0; t < 20; ++t) {
      const Transition ta = a.Step(action), tb = b.Step(action);
      EXPECT_EQ(ta.o_next, tb.o_next);
      EXPECT_EQ(ta.r, tb.r);
    }
  }
}

TEST(ToyEnv, RejectsBadActionsAndSteppingAfterDone) {
  EnvParams p;
  p.max_steps = 2;
  ToyEnv env(EnvKind::kWalk, p);
  env.Reset(1);
  EXPECT_THROW(env.Step(Vec{0.0, 0.0}), InvalidInput);
  EXPECT_THROW(env.Step(Vec{std::nan("")}), InvalidInput);
  env.Step(Vec{0.0});
  EXPECT_TRUE(env.Step(Vec{0.0}).done);
  EXPECT_THROW(env.Step(Vec{0.0}), InvalidInput);
}

TEST(ToyEnv, OutOfBoxActionsAreClamped) {
  ToyEnv a(EnvKind::kStand), b(EnvKind::kStand);
  a.Reset(3);
  b.Reset(3);
  const LogLevel saved = GlobalLogLevel();
  GlobalLogLevel() = LogLevel::kOff;
  const Transition ta = a.Step(Vec{5.0});
  GlobalLogLevel() = saved;
  const Transition tb = b.Step(Vec{1.0});
  EXPECT_EQ(ta.a, (Vec{1.0}));
  EXPECT_EQ(ta.o_next, tb.o_next);
}

TEST(ToyEnv, RewardsMatchTheirDefinitions) {
  ToyEnv env(EnvKind::kRun);
  env.Reset(0);
  ToyEnv::State s = env.state();
  s.velocity = 0.4;
  env.set_state(s);
  // v' = 0.4 + 0.5 * 0.1 = 0.45, reward -|0.45 - 1.0|
  EXPECT_NEAR(env.Step(Vec{0.5}).r, -0.55, 1e-12);
}

TEST(ToyEnv, DoorCorridorWallsStopTheAgent) {
  ToyEnv env(EnvKind::kDoor);
  env.Reset(4);
  for (int t = 0; t < 100 && !env.done(); ++t) {
    env.Step(Vec{1.0, 0.0});
    ASSERT_LE(env.state().position, env.params().corridor_length);
  }
  env.Reset(4);
  for (int t = 0; t < 100 && !env.done(); ++t) {
    env.Step(Vec{-1.0, 0.0});
    ASSERT_GE(env.state().position, 0.0);
  }
}

TEST(ToyEnv, ReachWallsStopTheAgent) {
  ToyEnv env(EnvKind::kReach);
  for (double force : {1.0, -1.0}) {
    env.Reset(2);
    while (!env.done()) {
      env.Step(Vec{force});
      ASSERT_LE(std::abs(env.state().position), env.params().reach_bound);
    }
    EXPECT_NEAR(std::abs(env.state().position), env.params().reach_bound, 1e-12);
  }
}

double RunDoor(const std::function<Vec(const Vec&)>& policy, std::uint64_t seed,
               bool* opened) {
  ToyEnv env(EnvKind::kDoor);
  Vec obs = env.Reset(seed);
  double total = 0.0;
  while (!env.done()) {
    const Transition t = env.Step(policy(obs));
    total += t.r;
    obs = t.o_next;
  }
  *opened = env.state().angle >= env.params().open_angle;
  return total;
}

// No single expert opens the door; a fixed blend of stand (damping), reach
// and turn does.
TEST(ToyEnv, DoorNeedsComposedExperts) {
  const ExpertLibrary lib = DefaultLibrary(EnvKind::kDoor);
  for (std::size_t i = 0; i < lib.size(); ++i) {
    bool opened = true;
    RunDoor([&](const Vec& o) { return lib.Action(i, o); }, 5, &opened);
    EXPECT_FALSE(opened) << lib.expert(i).descriptor.id;
  }
  Vec w(lib.size(), 0.0);
  w[lib.IndexOf("stand")] = 0.25;
  w[lib.IndexOf("reach")] = 0.25;
  w[lib.IndexOf("turn")] = 0.5;
  const Simplex blend(w);
  bool opened = false;
  RunDoor([&](const Vec& o) { return ReferenceAction(blend, lib, o); }, 5, &opened);
  EXPECT_TRUE(opened);
}

TEST(ToyEnv, TransitionJsonLinesRoundTrip) {
  ToyEnv env(EnvKind::kDoor);
  env.Reset(2);
  const Transition t = env.Step(Vec{0.25, -0.5});
  const Transition back = TransitionFromJsonLine(TransitionToJsonLine(t, 0));
  EXPECT_EQ(back.o, t.o);
  EXPECT_EQ(back.a, t.a);
  EXPECT_EQ(back.r, t.r);
  EXPECT_EQ(back.o_next, t.o_next);
  EXPECT_EQ(back.done, t.done);
}

TEST(ValueIteration, SingleStateFixedPoint) {
  DiscreteMdp mdp = DiscreteMdp::Zeros(1, 1, 0.9);
  mdp.P(0, 0, 0) = 1.0;
  mdp.R(0, 0) = 1.0;
  EXPECT_NEAR(ValueIteration(mdp, 1e-12).q(0, 0), 10.0, 1e-9);
}

// s0: action 0 stays (r = 0), action 1 moves to s1 (r = 1); s1 is absorbing
// with r = 2. With gamma 1/2: V(s1) = 4, Q(s0, 1) = 3, Q(s0, 0) = 1.5.
TEST(ValueIteration, TwoStateFixedPoint) {
  DiscreteMdp mdp = DiscreteMdp::Zeros(2, 2, 0.5);
  mdp.P(0, 0, 0) = 1.0;
  mdp.P(0, 1, 1) = 1.0;
  mdp.P(1, 0, 1) = mdp.P(1, 1, 1) = 1.0;
  mdp.R(0, 1) = 1.0;
  mdp.R(1, 0) = mdp.R(1, 1) = 2.0;
  const QTable q = ValueIteration(mdp, 1e-13).q;
  EXPECT_NEAR(q(0, 0), 1.5, 1e-9);
  EXPECT_NEAR(q(0, 1), 3.0, 1e-9);
  EXPECT_NEAR(q(1, 0), 4.0, 1e-9);
}

TEST(BellmanOperator, ContractsInSupNorm) {
  RngStream rng(77, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const int s = 1 + static_cast<int>(rng.UniformInt(6));
    const int a = 1 + static_cast<int>(rng.UniformInt(3));
    const double gamma = rng.Uniform(0.0, 0.999);
    const DiscreteMdp mdp = DiscreteMdp::Random(rng, s, a, gamma);
    QTable q1(s, a), q2(s, a);
    for (Eigen::Index i = 0; i < q1.size(); ++i) {
      q1.data()[i] = rng.Uniform(-10.0, 10.0);
      q2.data()[i] = rng.Uniform(-10.0, 10.0);
    }
    const double lhs = SupNorm(BellmanOperator(mdp, q1) - BellmanOperator(mdp, q2));
    EXPECT_LE(lhs, gamma * SupNorm(q1 - q2) * (1.0 + 1e-12) + 1e-15);
  }
}

TEST(DiscreteMdp, ValidationCatchesBadTables) {
  DiscreteMdp mdp = DiscreteMdp::Zeros(2, 1, 0.9);
  EXPECT_THROW(mdp.Validate(), InvalidInput);  // rows sum to 0
  mdp.P(0, 0, 0) = mdp.P(1, 0, 1) = 1.0;
  EXPECT_NO_THROW(mdp.Validate());
  mdp.gamma = 1.0;
  EXPECT_THROW(mdp.Validate(), InvalidInput);
}

}  // namespace
}  // namespace skillmpc
