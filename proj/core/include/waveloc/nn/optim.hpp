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
#include <span>
#include <vector>

#include "waveloc/nn/network.hpp"

namespace waveloc::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators, one pair per parameter tensor.
template <typename T>
struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update over a flat list of parameter tensors:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// The state grows lazily to match `params` on first use.
template <typename T>
void adam_step(OptimizerState<T>& state, std::span<const std::span<T>> params,
               std::span<const std::span<const T>> grads);

/// Adam bound to a network; frozen parameters are never touched.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) { state_.config = config; }

  void step(Network<T>& net, const Gradients<T>& grads);

  double learning_rate() const { return state_.config.learning_rate; }
  void set_learning_rate(double lr) { state_.config.learning_rate = lr; }
  std::uint64_t steps() const { return state_.step; }
  const OptimizerState<T>& state() const { return state_; }

 private:
  OptimizerState<T> state_;
};

/// Plateau learning-rate decay and early stopping, counted in epochs.
struct TrainingSchedule {
  double base_lr = 1e-3;
  double lr_decay_factor = 0.2;
  int lr_patience = 2;
  int early_stop_patience = 5;
  int max_epochs = 50;
  std::size_t batch_size = 128;
  double min_lr = 1e-6;
};

enum class ScheduleAction { kContinue, kStop };

struct ScheduleDecision {
  ScheduleAction action = ScheduleAction::kContinue;
  double learning_rate = 0.0;
  bool improved = false;       // latest epoch set a new best
  bool restore_best = false;   // reload the best-validation weights
  std::size_t best_epoch = 0;  // 0-based index into the history
};

/// Replays the validation-loss history (one entry per completed epoch) and
/// decides what happens before the next epoch. An epoch improves only if its
/// loss is strictly below the best so far.
ScheduleDecision schedule_step(const TrainingSchedule& schedule, std::span<const double> history);

}  // namespace waveloc::nn
