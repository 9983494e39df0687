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
#include <functional>
#include <string>
#include <vector>

#include "waveloc/nn/network.hpp"

namespace waveloc::nn {

struct GradcheckOptions {
  int trials = 3;
  double tolerance = 1e-4;
  double step = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, floor); differences below the
  /// double-precision noise of a central difference count as agreement.
  double denominator_floor = 1e-6;
  /// Per tensor, at most this many randomly chosen elements are perturbed.
  std::size_t max_elements = 64;
  std::size_t batch = 3;
};

enum class GradcheckStatus { kPass, kFail, kSkipped };

struct GradcheckEntry {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::kDense;
  GradcheckStatus status = GradcheckStatus::kPass;
  double max_rel_error = 0.0;
  std::size_t elements_checked = 0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double tolerance = 0.0;

  bool passed() const;
  /// Worst error seen for each layer kind across all checked layers.
  std::vector<std::pair<LayerKind, double>> max_error_by_kind() const;
  std::string to_text() const;
};

/// Compares backpropagated gradients with central finite differences for
/// every trainable parameter and every layer input. Inputs are random
/// (hence free of max-pool ties); dropout masks are held fixed per trial.
/// Layers whose parameters are all frozen are reported as skipped.
/// Throws Error naming the layer if any gradient is non-finite.
GradcheckReport gradcheck(const std::function<Network<double>(std::uint64_t seed)>& factory,
                          const GradcheckOptions& options = {});

/// The small networks used by `waveloc gradcheck`: together they cover every
/// layer kind, a frozen frequency-analysis layer and grouped convolutions.
std::vector<std::function<Network<double>(std::uint64_t)>> reference_gradcheck_models();

}  // namespace waveloc::nn
