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

#ifndef SKILLMPC_FUSION_H_
#define SKILLMPC_FUSION_H_

#include <Eigen/Dense>

#include <cmath>
#include <string_view>

#include "skillmpc/core.h"
#include "skillmpc/experts.h"

namespace skillmpc {

enum class EncoderMode { kIdentity, kRandomProjection };

inline std::string_view ToString(EncoderMode mode) {
  return mode == EncoderMode::kIdentity ? "identity" : "random_projection";
}

inline EncoderMode EncoderModeFromString(std::string_view name) {
  if (name == "identity") return EncoderMode::kIdentity;
  if (name == "random_projection") return EncoderMode::kRandomProjection;
  throw InvalidInput("unknown encoder mode '" + std::string(name) + "'");
}

// State features compared against expert embeddings. The projection is drawn
// once, entries N(0, 1) / sqrt(state_dim), and never changes afterwards.
class StateEncoder {
 public:
  static StateEncoder Identity(std::size_t dim) {
    StateEncoder enc;
    enc.mode_ = EncoderMode::kIdentity;
    enc.state_dim_ = enc.feature_dim_ = dim;
    return enc;
  }

  static StateEncoder RandomProjection(std::size_t state_dim,
                                       std::size_t feature_dim,
                                       RngStream rng) {
    StateEncoder enc;
    enc.mode_ = EncoderMode::kRandomProjection;
    enc.state_dim_ = state_dim;
    enc.feature_dim_ = feature_dim;
    enc.projection_.resize(static_cast<Eigen::Index>(feature_dim),
                           static_cast<Eigen::Index>(state_dim));
    const double scale = 1.0 / std::sqrt(static_cast<double>(state_dim));
    for (Eigen::Index r = 0; r < enc.projection_.rows(); ++r) {
      for (Eigen::Index c = 0; c < enc.projection_.cols(); ++c) {
        enc.projection_(r, c) = rng.Normal() * scale;
      }
    }
    return enc;
  }

  static StateEncoder Make(EncoderMode mode, std::size_t state_dim,
                           std::size_t feature_dim, RngStream rng) {
    if (mode == EncoderMode::kIdentity) {
      if (state_dim != feature_dim) {
        throw InvalidInput(
            "StateEncoder: identity mode needs state dim == embedding dim");
      }
      return Identity(state_dim);
    }
    return RandomProjection(state_dim, feature_dim, rng);
  }

  EncoderMode mode() const { return mode_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const Eigen::MatrixXd& projection() const { return projection_; }

  Vec Encode(std::span<const double> s) const {
    CheckDim(s, state_dim_, "StateEncoder::Encode");
    if (mode_ == EncoderMode::kIdentity) return Vec(s.begin(), s.end());
    const Eigen::Map<const Eigen::VectorXd> x(s.data(),
                                              static_cast<Eigen::Index>(s.size()));
    const Eigen::VectorXd y = projection_ * x;
    return Vec(y.data(), y.data() + y.size());
  }

 private:
  StateEncoder() = default;

  EncoderMode mode_ = EncoderMode::kIdentity;
  std::size_t state_dim_ = 0;
  std::size_t feature_dim_ = 0;
  Eigen::MatrixXd projection_;
};

struct FusionConfig {
  double alpha = 0.7;

  void Validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw InvalidInput("FusionConfig: alpha must lie in [0, 1]");
    }
  }
};

// p_i = softmax_i <phi_s, psi_i>
inline Simplex SelectionProbs(std::span<const double> phi_s,
                              const ExpertLibrary& library) {
  CheckDim(phi_s, library.embedding_dim(), "SelectionProbs");
  Vec scores(library.size());
  for (std::size_t i = 0; i < library.size(); ++i) {
    scores[i] = Dot(phi_s, library.Embedding(i));
  }
  return Softmax(scores);
}

// alpha * w + (1 - alpha) * p. The endpoints return their input unchanged.
inline Simplex Fuse(const Simplex& w, const Simplex& p, const FusionConfig& cfg) {
  if (w.size() != p.size()) throw InvalidInput("Fuse: length mismatch");
  cfg.Validate();
  if (cfg.alpha == 1.0) return w;
  if (cfg.alpha == 0.0) return p;
  Vec out(w.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = cfg.alpha * w[i] + (1.0 - cfg.alpha) * p[i];
    sum += out[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) return Simplex::Normalized(std::move(out));
  return Simplex(std::move(out));
}

// sum_i weights_i * expert_action_i(obs), before clamping.
inline Vec MixExpertActions(const Simplex& weights, const ExpertLibrary& library,
                            std::span<const double> obs) {
  if (weights.size() != library.size()) {
    throw InvalidInput("MixExpertActions: weight count != expert count");
  }
  Vec mix(library.action_dim(), 0.0);
  for (std::size_t i = 0; i < library.size(); ++i) {
    const Vec a = library.Action(i, obs);
    for (std::size_t d = 0; d < mix.size(); ++d) mix[d] += weights[i] * a[d];
  }
  return mix;
}

// a_ref = clamp(sum_i w_tilde_i * expert_action_i(obs)).
inline Vec ReferenceAction(const Simplex& w_tilde, const ExpertLibrary& library,
                           std::span<const double> obs) {
  return ClampToBox(MixExpertActions(w_tilde, library, obs));
}

}  // namespace skillmpc

#endif  // SKILLMPC_FUSION_H_
