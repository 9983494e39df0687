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

#include "waveloc/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "waveloc/common.hpp"

namespace waveloc::nn {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

template <typename T>
Network<T>::Network(const Network& other) : input_(other.input_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Network<T>& Network<T>::add(const LayerSpec& spec) {
  layers_.push_back(make_layer<T>(spec, output_shape()));
  return *this;
}

template <typename T>
void Network<T>::initialise(std::uint64_t seed) {
  std::uint64_t state = mix(seed);
  for (auto& l : layers_) {
    const LayerSpec& spec = l->spec();
    for (auto& p : l->params()) {
      if (!p.trainable) continue;
      if (p.role == "bias") {
        std::fill(p.value.data.begin(), p.value.data.end(), T{0});
        continue;
      }
      double fan_in = 0.0, fan_out = 0.0;
      if (spec.kind == LayerKind::kDense) {
        fan_in = static_cast<double>(p.value.shape[1]);
        fan_out = static_cast<double>(p.value.shape[0]);
      } else {
        // kernel [out, in/groups, kh, kw]
        const double receptive = static_cast<double>(p.value.shape[2] * p.value.shape[3]);
        fan_in = static_cast<double>(p.value.shape[1]) * receptive;
        fan_out = static_cast<double>(p.value.shape[0] / spec.groups) * receptive;
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (T& w : p.value.data) {
        state = mix(state);
        const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
        w = static_cast<T>((2.0 * u - 1.0) * limit);
      }
    }
  }
}

template <typename T>
std::size_t Network<T>::parameter_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    for (const auto& p : l->params()) {
      if (!trainable_only || p.trainable) n += p.value.size();
    }
  }
  return n;
}

template <typename T>
void Network<T>::require_classifier(std::size_t classes) const {
  if (layers_.empty() || layers_.back()->kind() != LayerKind::kSoftmax) {
    throw ConfigError("network must end in a softmax layer");
  }
  if (output_shape().size() != classes) {
    throw ConfigError("network output has " + std::to_string(output_shape().size()) +
                      " classes, expected " + std::to_string(classes));
  }
}

template <typename T>
void Network<T>::forward(std::span<const T> input, std::size_t batch, const RunOptions& opts,
                         Trace<T>& trace) const {
  if (input.size() != batch * input_.size()) {
    throw ConfigError("forward: input holds " + std::to_string(input.size()) +
                      " values, expected batch " + std::to_string(batch) + " x " +
                      to_string(input_));
  }
  trace.batch = batch;
  trace.activations.resize(layers_.size() + 1);
  trace.states.resize(layers_.size());
  trace.activations[0].assign(input.begin(), input.end());
  forward_from(0, opts, trace);
}

template <typename T>
void Network<T>::forward_from(std::size_t first, const RunOptions& opts, Trace<T>& trace) const {
  for (std::size_t i = first; i < layers_.size(); ++i) {
    auto& out = trace.activations[i + 1];
    out.resize(trace.batch * layers_[i]->output_shape().size());
    layers_[i]->forward(trace.activations[i], out, trace.batch, opts, i, trace.states[i]);
  }
}

template <typename T>
std::vector<T> Network<T>::predict(std::span<const T> input, std::size_t batch) const {
  Trace<T> trace;
  forward(input, batch, RunOptions{Mode::kInfer, 0}, trace);
  const auto& out = trace.activations.back();
  return std::vector<T>(out.begin(), out.end());
}

template <typename T>
Gradients<T> Network<T>::zero_gradients() const {
  Gradients<T> grads(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& p : layers_[i]->params()) grads[i].emplace_back(p.value.shape);
  }
  return grads;
}

template <typename T>
void Network<T>::check_labels(std::span<const int> labels, std::size_t batch) const {
  if (labels.size() != batch) throw InputError("label count does not match batch size");
  const int classes = static_cast<int>(output_shape().size());
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw InputError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(classes - 1) + "]");
    }
  }
}

template <typename T>
T Network<T>::loss(const Trace<T>& trace, std::span<const int> labels) const {
  require_classifier(output_shape().size());
  check_labels(labels, trace.batch);
  const std::size_t classes = output_shape().size();
  const auto& logits = trace.activations[layers_.size() - 1];
  double total = 0.0;
  for (std::size_t s = 0; s < trace.batch; ++s) {
    const T* z = logits.data() + s * classes;
    const T peak = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) sum += std::exp(static_cast<double>(z[k] - peak));
    total += std::log(sum) - static_cast<double>(z[labels[s]] - peak);
  }
  return static_cast<T>(total / static_cast<double>(trace.batch));
}

template <typename T>
T Network<T>::backward(const Trace<T>& trace, std::span<const int> labels, Gradients<T>& grads,
                       std::vector<std::vector<T>>* activation_grads) const {
  const T value = loss(trace, labels);
  const std::size_t n = layers_.size();
  const std::size_t classes = output_shape().size();
  const std::size_t batch = trace.batch;

  // Input gradients are only needed below the earliest trainable layer when
  // the caller asks for them.
  std::size_t lowest = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (layers_[i]->has_trainable_params()) {
      lowest = i;
      break;
    }
  }
  if (activation_grads) {
    lowest = 0;
    activation_grads->assign(n + 1, {});
  }

  AlignedVector<T> grad(batch * classes);
  const auto& probs = trace.activations[n];
  const T inv_batch = T{1} / static_cast<T>(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t k = 0; k < classes; ++k) {
      const T target = static_cast<int>(k) == labels[s] ? T{1} : T{0};
      grad[s * classes + k] = (probs[s * classes + k] - target) * inv_batch;
    }
  }
  if (activation_grads) (*activation_grads)[n - 1].assign(grad.begin(), grad.end());

  AlignedVector<T> below;
  for (std::size_t i = n - 1; i-- > 0;) {
    const bool need_din = activation_grads != nullptr || i > lowest;
    below.assign(need_din ? batch * layers_[i]->input_shape().size() : 0, T{0});
    layers_[i]->backward(trace.activations[i], trace.activations[i + 1], grad, below, batch,
                         trace.states[i], grads[i]);
    for (const auto& g : grads[i]) {
      for (T v : g.data) {
        if (!std::isfinite(v)) {
          throw Error("non-finite gradient in layer " + std::to_string(i) + " (" +
                      std::string(to_string(layers_[i]->kind())) + ")");
        }
      }
    }
    if (!need_din) break;
    grad.swap(below);
    if (activation_grads) (*activation_grads)[i].assign(grad.begin(), grad.end());
  }
  return value;
}

template class Network<float>;
template class Network<double>;

}  // namespace waveloc::nn
