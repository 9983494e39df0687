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
#include <string>
#include <string_view>
#include <vector>

#include "waveloc/nn/tensor.hpp"

namespace waveloc::nn {

enum class LayerKind {
  kTimeConv,       // 1 x K kernels along time, frequency analysis
  kEarConv2d,      // 2 x K kernels collapsing the ear axis
  kConv1d,         // 1 x K feature kernels
  kMaxPool,        // 1 x w along time
  kPeakNormalise,  // divide by the per-item max |x|
  kFlattenConcat,
  kDense,
  kDropout,
  kSoftmax,
};

enum class Activation { kLinear, kRelu, kSigmoid };

enum class Mode { kTrain, kInfer };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation act);

/// Kind-specific hyperparameters. Unused fields are ignored by a layer kind.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  std::size_t units = 0;  // conv filters or dense outputs
  std::size_t kernel_height = 1;
  std::size_t kernel_width = 1;
  std::size_t groups = 1;
  std::size_t pool_width = 1;
  double dropout_rate = 0.0;
  Activation activation = Activation::kLinear;
  bool trainable = true;
  bool bias = true;
};

LayerSpec time_conv(std::size_t filters, std::size_t width, Activation act = Activation::kLinear,
                    bool trainable = true, bool bias = true);
LayerSpec ear_conv2d(std::size_t filters, std::size_t width, Activation act,
                     std::size_t groups = 1);
LayerSpec conv1d(std::size_t filters, std::size_t width, Activation act, std::size_t groups = 1);
LayerSpec max_pool(std::size_t width);
LayerSpec peak_normalise();
LayerSpec flatten_concat();
LayerSpec dense(std::size_t units, Activation act);
LayerSpec dropout(double rate);
LayerSpec softmax();

template <typename T>
struct Parameter {
  std::string role;  // "kernel", "bias", "weight"
  Tensor<T> value;
  bool trainable = true;
};

/// Scratch a layer records during forward for use in backward.
template <typename T>
struct LayerState {
  std::vector<std::uint32_t> indices;
  AlignedVector<T> values;
};

struct RunOptions {
  Mode mode = Mode::kInfer;
  std::uint64_t dropout_seed = 0;
};

/// A layer is immutable during forward/backward: all per-call data lives in
/// LayerState and gradient tensors owned by the caller.
template <typename T>
class Layer {
 public:
  Layer(LayerSpec spec, Shape input) : spec_(spec), input_(input) {}
  virtual ~Layer() = default;

  const LayerSpec& spec() const { return spec_; }
  LayerKind kind() const { return spec_.kind; }
  Shape input_shape() const { return input_; }
  Shape output_shape() const { return output_; }

  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }
  bool has_trainable_params() const;

  virtual void forward(std::span<const T> in, std::span<T> out, std::size_t batch,
                       const RunOptions& opts, std::uint64_t layer_index,
                       LayerState<T>& state) const = 0;

  /// Adds parameter gradients into `param_grads` (one per param, same order)
  /// and, when `din` is non-empty, writes the gradient wrt the input.
  virtual void backward(std::span<const T> in, std::span<const T> out, std::span<const T> dout,
                        std::span<T> din, std::size_t batch, const LayerState<T>& state,
                        std::span<Tensor<T>> param_grads) const = 0;

  virtual std::unique_ptr<Layer<T>> clone() const = 0;

 protected:
  LayerSpec spec_;
  Shape input_;
  Shape output_;
  std::vector<Parameter<T>> params_;
};

/// Validates `spec` against `input` and returns a layer with zeroed
/// parameters. Throws ConfigError on inconsistent shapes or settings.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, Shape input);

}  // namespace waveloc::nn
