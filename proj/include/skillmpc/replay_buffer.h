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

#ifndef SKILLMPC_REPLAY_BUFFER_H_
#define SKILLMPC_REPLAY_BUFFER_H_

#include <unordered_set>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/world_model.h"

namespace skillmpc {

// Fixed-capacity ring of transitions with their reference actions. Once full,
// each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, RngStream rng) : capacity_(capacity), rng_(rng) {
    if (capacity_ == 0) throw InvalidInput("ReplayBuffer: capacity must be positive");
    transitions_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
    a_refs_.reserve(transitions_.capacity());
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }

  void Push(Transition t, Vec a_ref) {
    if (!std::isfinite(t.r)) throw InvalidInput("ReplayBuffer: non-finite reward");
    if (a_ref.size() != t.a.size()) {
      throw InvalidInput("ReplayBuffer: a_ref dim != action dim");
    }
    if (transitions_.size() < capacity_) {
      transitions_.push_back(std::move(t));
      a_refs_.push_back(std::move(a_ref));
    } else {
      transitions_[next_] = std::move(t);
      a_refs_[next_] = std::move(a_ref);
    }
    next_ = (next_ + 1) % capacity_;
  }

  const Transition& transition(std::size_t i) const { return transitions_.at(i); }
  const Vec& a_ref(std::size_t i) const { return a_refs_.at(i); }

  // `n` distinct storage indices, uniform over all n-subsets (Floyd), in
  // draw order.
  std::vector<std::size_t> SampleIndices(std::size_t n) {
    const std::size_t size = transitions_.size();
    if (n == 0 || n > size) {
      throw InvalidInput("ReplayBuffer: cannot draw " + std::to_string(n) +
                         " of " + std::to_string(size) + " items");
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    std::unordered_set<std::size_t> taken;
    for (std::size_t j = size - n; j < size; ++j) {
      const std::size_t t = rng_.UniformInt(j + 1);
      const std::size_t pick = taken.count(t) ? j : t;
      taken.insert(pick);
      out.push_back(pick);
    }
    return out;
  }

  TrainBatch Sample(std::size_t n) {
    TrainBatch batch;
    for (std::size_t i : SampleIndices(n)) {
      batch.transitions.push_back(transitions_[i]);
      batch.a_refs.push_back(a_refs_[i]);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  RngStream rng_;
  std::vector<Transition> transitions_;
  std::vector<Vec> a_refs_;
  std::size_t next_ = 0;
};

}  // namespace skillmpc

#endif  // SKILLMPC_REPLAY_BUFFER_H_
