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

#include <cmath>
#include <set>

#include "skillmpc/core.h"

namespace skillmpc {
namespace {

TEST(Softmax, TwoScoresMatchReferenceValues) {
  const Simplex w = Softmax(Vec{2.0, 0.0});
  EXPECT_NEAR(w[0], 0.88079707797788244, 1e-15);
  EXPECT_NEAR(w[1], 0.11920292202211756, 1e-15);
}

TEST(Softmax, FourScoresMatchReferenceValues) {
  const Simplex w = Softmax(Vec{2.0, 0.0, 0.0, 0.0});
  EXPECT_NEAR(w[0], 0.71123459422759386, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(w[i], 0.096255135257468713, 1e-15);
}

TEST(Softmax, ShiftInvariantAndStableForLargeScores) {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec s(1 + rng.UniformInt(8));
    for (double& v : s) v = rng.Uniform(-20.0, 20.0);
    Vec shifted = s;
    for (double& v : shifted) v += 700.0;
    const Simplex a = Softmax(s), b = Softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12);
      sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Softmax, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Softmax(Vec{}), InvalidInput);
  EXPECT_THROW(Softmax(Vec{1.0, std::nan("")}), InvalidInput);
  EXPECT_THROW(Softmax(Vec{INFINITY}), InvalidInput);
}

TEST(Simplex, ValidatesWithoutRescaling) {
  EXPECT_NO_THROW(Simplex(Vec{0.25, 0.75}));
  EXPECT_THROW(Simplex(Vec{0.5, 0.6}), InvalidInput);
  EXPECT_THROW(Simplex(Vec{1.5, -0.5}), InvalidInput);
  EXPECT_THROW(Simplex(Vec{}), InvalidInput);
  const Simplex n = Simplex::Normalized({1.0, 3.0});
  EXPECT_DOUBLE_EQ(n[0], 0.25);
  EXPECT_THROW(Simplex::Normalized({0.0, 0.0}), InvalidInput);
  EXPECT_THROW(Simplex::Normalized({-1.0, 2.0}), InvalidInput);
  const Simplex u = Simplex::Uniform(4);
  EXPECT_DOUBLE_EQ(u[3], 0.25);
  EXPECT_EQ(Simplex(Vec{0.1, 0.7, 0.2}).Argmax(), 1u);
}

TEST(ClampToBox, ClampsEachComponent) {
  EXPECT_EQ(ClampToBox(Vec{-3.0, 0.5, 2.0}), (Vec{-1.0, 0.5, 1.0}));
  EXPECT_THROW(ClampAction(Vec{0.0}, 1.0, 1.0), InvalidInput);
}

TEST(RngStream, SameSeedAndStreamReproduce) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(RngStream, DerivedStreamsAreDistinctAndPure) {
  const RngStream root(3, 0);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t tag = 1; tag <= 8; ++tag) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      firsts.insert(root.Derive(tag, i).NextU64());
    }
  }
  EXPECT_EQ(firsts.size(), 400u);
  // Deriving does not advance the parent.
  RngStream parent(3, 0);
  const std::uint64_t before = RngStream(3, 0).NextU64();
  (void)parent.Derive(StreamTag::kPlanner, 1);
  EXPECT_EQ(parent.NextU64(), before);
}

TEST(RngStream, DrawsStayInRange) {
  RngStream rng(5, 1);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.UniformInt(7), 7u);
    const double z = rng.Normal();
    sum += z;
    sq += z * z;
  }
  // Mean and variance within 5 standard errors.
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

}  // namespace
}  // namespace skillmpc
