// Copyright 2026 The WaveLoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "waveloc/nn/layers.hpp"

namespace waveloc::nn {

/// Gradient tensors indexed [layer][param], shaped like the parameters.
template <typename T>
using Gradients = std::vector<std::vector<Tensor<T>>>;

/// Activations and per-layer scratch of one forward pass.
/// activations[0] is the input; activations[i + 1] is the output of layer i.
template <typename T>
struct Trace {
  std::size_t batch = 0;
  std::vector<AlignedVector<T>> activations;
  std::vector<LayerState<T>> states;

  std::span<const T> output() const { return activations.back(); }
};

/// Sequential network over the fixed layer vocabulary. Layer shapes are
/// checked as layers are appended, so a built network is shape-consistent.
template <typename T>
class Network {
 public:
  explicit Network(Shape input) : input_(input) {}
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  ~Network() = default;

  Network& add(const LayerSpec& spec);

  Shape input_shape() const { return input_; }
  Shape output_shape() const { return layers_.empty() ? input_ : layers_.back()->output_shape(); }
  std::size_t num_layers() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

  /// Glorot-uniform weights for every trainable kernel, zero biases.
  /// Frozen parameters are left untouched.
  void initialise(std::uint64_t seed);

  std::size_t parameter_count(bool trainable_only = true) const;

  /// Throws ConfigError unless the last layer is a softmax over `classes`.
  void require_classifier(std::size_t classes) const;

  void forward(std::span<const T> input, std::size_t batch, const RunOptions& opts,
               Trace<T>& trace) const;
  /// Re-runs layers [first, end) from trace.activations[first].
  void forward_from(std::size_t first, const RunOptions& opts, Trace<T>& trace) const;

  /// Inference-mode posteriors, batch x output size.
  std::vector<T> predict(std::span<const T> input, std::size_t batch) const;

  Gradients<T> zero_gradients() const;

  /// Mean cross-entropy of the softmax output against `labels`.
  T loss(const Trace<T>& trace, std::span<const int> labels) const;

  /// Adds d(loss)/d(param) into `grads` and returns the loss. Softmax and
  /// cross-entropy are fused. When `activation_grads` is non-null it receives
  /// d(loss)/d(activations[i]) for every layer input i.
  T backward(const Trace<T>& trace, std::span<const int> labels, Gradients<T>& grads,
             std::vector<std::vector<T>>* activation_grads = nullptr) const;

  template <typename U>
  Network<U> convert() const {
    Network<U> out(input_);
    for (const auto& l : layers_) {
      out.add(l->spec());
      auto& dst = out.layer(out.num_layers() - 1).params();
      for (std::size_t p = 0; p < dst.size(); ++p) {
        const auto& src = l->params()[p].value.data;
        dst[p].value.data.assign(src.begin(), src.end());
      }
    }
    return out;
  }

 private:
  void check_labels(std::span<const int> labels, std::size_t batch) const;

  Shape input_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace waveloc::nn
