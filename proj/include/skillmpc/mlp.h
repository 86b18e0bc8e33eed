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

#ifndef SKILLMPC_MLP_H_
#define SKILLMPC_MLP_H_

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "skillmpc/core.h"

namespace skillmpc {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

enum class Activation { kLinear, kTanh, kRelu };

inline std::string_view ToString(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "unknown";
}

inline Activation ActivationFromString(std::string_view name) {
  for (Activation a : {Activation::kLinear, Activation::kTanh, Activation::kRelu}) {
    if (ToString(a) == name) return a;
  }
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

// Fully connected network. Samples are matrix columns. Parameters live in one
// flat vector, per layer: weights (out x in, column major) then biases.
class Mlp {
 public:
  template <class T>
  struct Cache {
    std::vector<Matrix<T>> inputs;   // input of each layer
    std::vector<Matrix<T>> outputs;  // post-activation output of each layer
  };

  Mlp() = default;

  Mlp(std::vector<int> widths, Activation hidden, Activation output)
      : widths_(std::move(widths)), hidden_(hidden), output_(output) {
    if (widths_.size() < 2) throw InvalidInput("Mlp: need at least two widths");
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      if (widths_[l] < 1 || widths_[l + 1] < 1) {
        throw InvalidInput("Mlp: widths must be positive");
      }
      offsets_.push_back(total);
      total += static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
    }
    params_ = Eigen::VectorXd::Zero(total);
  }

  const std::vector<int>& widths() const { return widths_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  Eigen::Index num_parameters() const { return params_.size(); }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  // Weights ~ N(0, 1/fan_in), biases zero; the last layer is scaled by
  // output_scale.
  void Initialize(RngStream rng, double output_scale = 1.0) {
    for (int l = 0; l < num_layers(); ++l) {
      const double scale =
          (l + 1 == num_layers() ? output_scale : 1.0) / std::sqrt(widths_[l]);
      auto w = Weights(l);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.Normal() * scale;
      Biases(l).setZero();
    }
  }

  Eigen::Map<Eigen::MatrixXd> Weights(int l) {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<const Eigen::MatrixXd> Weights(int l) const {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<Eigen::VectorXd> Biases(int l) {
    return {params_.data() + offsets_[l] +
                static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l],
            widths_[l + 1]};
  }
  Eigen::Map<const Eigen::VectorXd> Biases(int l) const {
    return {params_.data() + offsets_[l] +
                static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l],
            widths_[l + 1]};
  }

  template <class T>
  Matrix<T> Forward(const Matrix<T>& x, Cache<T>* cache = nullptr) const {
    if (x.rows() != input_dim()) {
      throw InvalidInput("Mlp::Forward: expected input dim " +
                         std::to_string(input_dim()) + ", got " +
                         std::to_string(x.rows()));
    }
    if (cache) {
      cache->inputs.clear();
      cache->outputs.clear();
    }
    Matrix<T> h = x;
    for (int l = 0; l < num_layers(); ++l) {
      Matrix<T> pre;
      if constexpr (std::is_same_v<T, double>) {
        pre = (Weights(l) * h).colwise() + Biases(l);
      } else {
        pre = (Weights(l).template cast<T>() * h).colwise() +
              Biases(l).template cast<T>();
      }
      Apply(l + 1 == num_layers() ? output_ : hidden_, pre);
      if (cache) {
        cache->inputs.push_back(std::move(h));
        cache->outputs.push_back(pre);
      }
      h = std::move(pre);
    }
    return h;
  }

  Eigen::VectorXd Forward(const Eigen::VectorXd& x) const {
    return Forward<double>(Matrix<double>(x)).col(0);
  }

  // Adds d(loss)/d(params) into grad and returns d(loss)/d(input), given
  // d(loss)/d(output) and the cache of the matching Forward call.
  Eigen::MatrixXd Backward(const Cache<double>& cache,
                           const Eigen::MatrixXd& grad_out,
                           Eigen::Ref<Eigen::VectorXd> grad) const {
    Eigen::MatrixXd delta = grad_out;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const Activation act = l + 1 == num_layers() ? output_ : hidden_;
      const Eigen::MatrixXd& out = cache.outputs[l];
      if (act == Activation::kTanh) {
        delta.array() *= 1.0 - out.array().square();
      } else if (act == Activation::kRelu) {
        delta.array() *= (out.array() > 0.0).cast<double>();
      }
      const Eigen::Index n_w = static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l];
      Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], widths_[l + 1],
                                     widths_[l]);
      gw.noalias() += delta * cache.inputs[l].transpose();
      grad.segment(offsets_[l] + n_w, widths_[l + 1]) += delta.rowwise().sum();
      Eigen::MatrixXd next = Weights(l).transpose() * delta;
      delta = std::move(next);
    }
    return delta;
  }

 private:
  template <class T>
  static void Apply(Activation act, Matrix<T>& m) {
    switch (act) {
      case Activation::kLinear: break;
      case Activation::kTanh:
        if constexpr (std::is_same_v<T, double>) {
          // Eigen vectorizes exp but not tanh for double. Absolute error is a
          // few ulps; large |x| saturates to +-1 exactly.
          m = (1.0 - 2.0 / ((2.0 * m.array()).exp() + 1.0)).matrix();
        } else {
          m = m.array().tanh().matrix();
        }
        break;
      case Activation::kRelu: m = m.cwiseMax(T(0)); break;
    }
  }

  std::vector<int> widths_;
  Activation hidden_ = Activation::kTanh;
  Activation output_ = Activation::kLinear;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

}  // namespace skillmpc

#endif  // SKILLMPC_MLP_H_
