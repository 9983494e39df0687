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

#include "waveloc/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace waveloc::nn {

template <typename T>
void adam_step(OptimizerState<T>& state, std::span<const std::span<T>> params,
               std::span<const std::span<const T>> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (state.first_moment.size() != params.size()) {
    state.first_moment.resize(params.size());
    state.second_moment.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first_moment[i].assign(params[i].size(), T{0});
      state.second_moment[i].assign(params[i].size(), T{0});
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != params[i].size() || grads[i].size() != params[i].size()) {
      throw std::invalid_argument("adam_step: tensor shape mismatch");
    }
    for (std::size_t k = 0; k < m.size(); ++k) {
      const T g = grads[i][k];
      m[k] = b1 * m[k] + (T{1} - b1) * g;
      v[k] = b2 * v[k] + (T{1} - b2) * g * g;
      const double m_hat = static_cast<double>(m[k]) / correct1;
      const double v_hat = static_cast<double>(v[k]) / correct2;
      params[i][k] -= static_cast<T>(c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

template <typename T>
void Adam<T>::step(Network<T>& net, const Gradients<T>& grads) {
  std::vector<std::span<T>> params;
  std::vector<std::span<const T>> g;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    auto& ps = net.layer(i).params();
    for (std::size_t p = 0; p < ps.size(); ++p) {
      if (!ps[p].trainable) continue;
      params.emplace_back(ps[p].value.data);
      g.emplace_back(grads[i][p].data);
    }
  }
  adam_step<T>(state_, params, g);
}

ScheduleDecision schedule_step(const TrainingSchedule& schedule, std::span<const double> history) {
  if (history.empty()) throw std::invalid_argument("schedule_step: empty history");
  ScheduleDecision d;
  double lr = schedule.base_lr;
  double best = history[0];
  std::size_t best_epoch = 0;
  int since_best = 0;
  int since_decay = 0;
  bool improved = true;
  for (std::size_t e = 1; e < history.size(); ++e) {
    improved = history[e] < best;
    if (improved) {
      best = history[e];
      best_epoch = e;
      since_best = 0;
      since_decay = 0;
    } else {
      ++since_best;
      ++since_decay;
      if (since_decay >= schedule.lr_patience) {
        lr = std::max(lr * schedule.lr_decay_factor, schedule.min_lr);
        since_decay = 0;
      }
    }
  }
  d.learning_rate = lr;
  d.improved = improved;
  d.best_epoch = best_epoch;
  const bool exhausted = static_cast<int>(history.size()) >= schedule.max_epochs;
  if (since_best > schedule.early_stop_patience || exhausted) {
    d.action = ScheduleAction::kStop;
    d.restore_best = true;
  }
  return d;
}

template void adam_step<float>(OptimizerState<float>&, std::span<const std::span<float>>,
                               std::span<const std::span<const float>>);
template void adam_step<double>(OptimizerState<double>&, std::span<const std::span<double>>,
                                std::span<const std::span<const double>>);
template class Adam<float>;
template class Adam<double>;

}  // namespace waveloc::nn
