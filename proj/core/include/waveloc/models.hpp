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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "waveloc/common.hpp"
#include "waveloc/dsp.hpp"
#include "waveloc/nn/network.hpp"

namespace waveloc::models {

enum class ModelKind { kWavelocGtf, kWavelocConv, kGccBaseline };

std::string_view to_string(ModelKind kind);
/// Accepts "waveloc_gtf"/"gtf", "waveloc_conv"/"conv", "gcc_baseline"/"baseline".
ModelKind parse_model_kind(std::string_view text);

struct ModelConfig {
  ModelKind kind = ModelKind::kWavelocGtf;
  /// Per-band kernel counts of the gammatone model's feature stacks.
  std::size_t gtf_band_kernels_2d = 6;
  std::size_t gtf_band_kernels_1d = 6;
  std::uint64_t seed = 0;
};

struct TrainingMetadata {
  int epochs_run = 0;
  double best_validation_loss = std::numeric_limits<double>::quiet_NaN();
};

using Posterior = std::array<float, kNumAzimuths>;

/// A built architecture plus its configuration. Copyable value type.
class LocalisationModel {
 public:
  LocalisationModel(ModelConfig config, nn::Network<float> network);

  ModelKind kind() const { return config_.kind; }
  const ModelConfig& config() const { return config_; }
  nn::Network<float>& network() { return network_; }
  const nn::Network<float>& network() const { return network_; }

  /// Values per frame: 640 raw samples, or 37 GCC-PHAT features.
  std::size_t input_size() const { return network_.input_shape().size(); }
  bool takes_waveform() const { return kind() != ModelKind::kGccBaseline; }

  TrainingMetadata metadata;

 private:
  ModelConfig config_;
  nn::Network<float> network_;
};

/// Layer stacks, generic over the scalar so the same graph can be checked in
/// double precision. The gammatone layer is filled from design_gammatone_bank.
template <typename T>
nn::Network<T> build_network(const ModelConfig& config);

LocalisationModel build_waveloc_gtf(const ModelConfig& config);
LocalisationModel build_waveloc_conv(const ModelConfig& config);
LocalisationModel build_gcc_baseline(const ModelConfig& config);
LocalisationModel build_model(const ModelConfig& config);

/// Index of the frozen gammatone layer in the GTF graph.
inline constexpr std::size_t kGammatoneLayer = 0;

/// Posteriors for `batch` inputs laid out back to back.
std::vector<float> predict_batch(const LocalisationModel& model, std::span<const float> inputs,
                                 std::size_t batch);

/// Throws InputError if the input kind does not match the model kind.
Posterior predict_frame(const LocalisationModel& model, const dsp::BinauralFrame& frame);
Posterior predict_frame(const LocalisationModel& model, const dsp::GccFeature& feature);

int argmax_class(std::span<const float> posterior);

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout: "WLOC" | u32 version | u64 header length | JSON header |
// float32 little-endian payloads in header order. Tensor names are
// "L<layer index, two digits>.<role>", e.g. "L00.kernel", "L12.bias".

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string tensor_name(std::size_t layer, std::string_view role);

void save_checkpoint(const LocalisationModel& model, const std::filesystem::path& path);

/// Throws LoadError on bad magic/version, truncation or a tensor whose name,
/// shape or trainable flag disagrees with the rebuilt architecture.
LocalisationModel load_checkpoint(const std::filesystem::path& path);

}  // namespace waveloc::models
