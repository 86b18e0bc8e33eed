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

#include "skillmpc/experts.h"
#include "skillmpc/fusion.h"

namespace skillmpc {
namespace {

TEST(ExpertLibrary, DefaultOrderAndIds) {
  const ExpertLibrary walk = DefaultLibrary(EnvKind::kWalk);
  ASSERT_EQ(walk.size(), 4u);
  EXPECT_EQ(walk.expert(0).descriptor.id, "walk");
  EXPECT_EQ(walk.IndexOf("run"), 3u);
  EXPECT_THROW(walk.IndexOf("fly"), InvalidInput);
  const ExpertLibrary door = DefaultLibrary(EnvKind::kDoor);
  EXPECT_EQ(door.size(), 5u);
  EXPECT_EQ(door.action_dim(), 2u);
  EXPECT_EQ(door.Embedding(4), OneHot(4, 5));
  EXPECT_EQ(DefaultLibrary(EnvKind::kDoor, EmbeddingScheme::kOneHotCapability)
                .embedding_dim(),
            7u);
}

TEST(ExpertLibrary, RejectsMalformedLibraries) {
  const ObservationLayout layout = LayoutFor(EnvKind::kWalk);
  EXPECT_THROW(ExpertLibrary({}, layout), InvalidInput);
  Expert a{{"a", {1.0}, ""}, {}};
  Expert dup{{"a", {0.0}, ""}, {}};
  Expert wide{{"b", {0.0, 1.0}, ""}, {}};
  EXPECT_THROW(ExpertLibrary({a, dup}, layout), InvalidInput);
  EXPECT_THROW(ExpertLibrary({a, wide}, layout), InvalidInput);
}

TEST(ExpertLibrary, ControllerLawsAndClamping) {
  const ExpertLibrary lib = DefaultLibrary(EnvKind::kReach);
  const Vec obs = {0.2, 0.5, 0.9};  // x, v, goal
  EXPECT_NEAR(lib.Action(lib.IndexOf("stand"), obs)[0], -0.5, 1e-15);
  EXPECT_NEAR(lib.Action(lib.IndexOf("walk"), obs)[0], 0.3 - 0.5, 1e-15);
  EXPECT_NEAR(lib.Action(lib.IndexOf("reach"), obs)[0], 0.7, 1e-15);
  EXPECT_EQ(lib.Action(lib.IndexOf("reach"), Vec{-5.0, 0.0, 5.0})[0], 1.0);
  EXPECT_THROW(lib.Action(0, Vec{0.0}), InvalidInput);
}

TEST(SelectionProbs, OneHotEmbeddingsGiveSoftmaxOfFeatures) {
  const ExpertLibrary lib = DefaultLibrary(EnvKind::kWalk);
  const Simplex p = SelectionProbs(Vec{2.0, 0.0, 0.0, 0.0}, lib);
  EXPECT_NEAR(p[0], 0.71123459422759386, 1e-15);
  EXPECT_NEAR(p[3], 0.096255135257468713, 1e-15);
  EXPECT_THROW(SelectionProbs(Vec{1.0}, lib), InvalidInput);
}

TEST(Fuse, MatchesReferenceValue) {
  const Simplex w = Softmax(Vec{2.0, 0.0});
  const Simplex p = Simplex::Uniform(2);
  const Simplex f = Fuse(w, p, {0.7});
  EXPECT_NEAR(f[0], 0.7665579545845177, 1e-15);
  EXPECT_NEAR(f[1], 0.2334420454154823, 1e-15);
}

TEST(Fuse, EndpointsAreExact) {
  RngStream rng(8, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.UniformInt(6);
    Vec a(k), b(k);
    for (std::size_t i = 0; i < k; ++i) {
      a[i] = rng.Uniform(-3.0, 3.0);
      b[i] = rng.Uniform(-3.0, 3.0);
    }
    const Simplex w = Softmax(a), p = Softmax(b);
    EXPECT_EQ(Fuse(w, p, {1.0}).weights(), w.weights());
    EXPECT_EQ(Fuse(w, p, {0.0}).weights(), p.weights());
  }
}

TEST(Fuse, RejectsBadInputs) {
  EXPECT_THROW(Fuse(Simplex::Uniform(2), Simplex::Uniform(3), {0.5}), InvalidInput);
  EXPECT_THROW(Fuse(Simplex::Uniform(2), Simplex::Uniform(2), {1.5}), InvalidInput);
}

TEST(ReferenceAction, LiesInExpertHullAndIsClamped) {
  const ExpertLibrary lib = DefaultLibrary(EnvKind::kDoor);
  RngStream rng(21, 0);
  for (int trial = 0; trial < 500; ++trial) {
    Vec obs = {rng.Uniform(-1.0, 3.0), rng.Uniform(-2.0, 2.0), 1.0,
               rng.Uniform(0.0, 1.0), rng.Uniform() < 0.5 ? -1.0 : 1.0};
    Vec scores(lib.size());
    for (double& s : scores) s = rng.Uniform(-4.0, 4.0);
    const Vec a = ReferenceAction(Softmax(scores), lib, obs);
    const auto actions = lib.Actions(obs);
    for (std::size_t d = 0; d < a.size(); ++d) {
      double lo = 1e9, hi = -1e9;
      for (const Vec& e : actions) {
        lo = std::min(lo, e[d]);
        hi = std::max(hi, e[d]);
      }
      EXPECT_GE(a[d], lo - 1e-12);
      EXPECT_LE(a[d], hi + 1e-12);
    }
  }
}

TEST(StateEncoder, ProjectionIsFixedBySeed) {
  const auto a = StateEncoder::RandomProjection(5, 3, RngStream(1, 2));
  const auto b = StateEncoder::RandomProjection(5, 3, RngStream(1, 2));
  EXPECT_EQ(a.Encode(Vec{1, 2, 3, 4, 5}), b.Encode(Vec{1, 2, 3, 4, 5}));
  EXPECT_EQ(a.Encode(Vec{1, 2, 3, 4, 5}).size(), 3u);
  EXPECT_THROW(a.Encode(Vec{1.0}), InvalidInput);
  EXPECT_THROW(StateEncoder::Make(EncoderMode::kIdentity, 5, 3, RngStream(0, 0)),
               InvalidInput);
  EXPECT_EQ(StateEncoder::Identity(2).Encode(Vec{0.5, -1.0}), (Vec{0.5, -1.0}));
}

}  // namespace
}  // namespace skillmpc
