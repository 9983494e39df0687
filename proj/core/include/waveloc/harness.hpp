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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "waveloc/dataset.hpp"
#include "waveloc/dsp.hpp"
#include "waveloc/models.hpp"
#include "waveloc/nn/optim.hpp"

namespace waveloc::harness {

enum class TrainingMode { kAnechoicOnly, kMct };

std::string_view to_string(TrainingMode mode);
/// Accepts "anechoic"/"anechoic_only" and "mct".
TrainingMode parse_training_mode(std::string_view text);

struct ExperimentSpec {
  models::ModelConfig model;
  sim::DatasetManifest manifest;
  TrainingMode mode = TrainingMode::kAnechoicOnly;
  /// Room held out of MCT training; also the default evaluation room.
  std::string test_room;
  std::string anechoic_room = "anechoic";
  nn::TrainingSchedule schedule;
  std::uint64_t seed = 0;
  /// Frames kept per file, evenly spaced; 0 keeps every frame.
  std::size_t max_frames_per_file = 0;
  int jobs = 0;
};

/// Rooms pooled for training: the anechoic room alone, or for MCT every room
/// except the test room (the anechoic room is always included).
std::vector<std::string> training_rooms(const ExperimentSpec& spec);

/// Per-frame network inputs with their class labels, stored back to back.
struct FrameSet {
  std::size_t input_size = 0;
  std::vector<float> inputs;
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
  std::span<const float> input(std::size_t i) const {
    return {inputs.data() + i * input_size, input_size};
  }
};

/// Network input for one frame: the raw 640 samples or the 37 GCC features.
void frame_input(models::ModelKind kind, const dsp::BinauralFrame& frame, std::span<float> out);

/// Frames of every entry of `rooms` in `split`. Throws ConfigError if empty.
FrameSet load_frames(const sim::DatasetManifest& manifest, const std::vector<std::string>& rooms,
                     sim::Split split, models::ModelKind kind, std::size_t max_frames_per_file,
                     int jobs);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  models::LocalisationModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t train_frames = 0;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam + plateau schedule on frame-level cross-entropy; best-validation
/// weights are restored on return. Throws Error on a non-finite loss.
TrainResult train(const ExperimentSpec& spec, const EpochCallback& on_epoch = {});

/// Lower level entry used by `train`: trains `model` in place.
TrainResult train_model(models::LocalisationModel model, const FrameSet& train_set,
                        const FrameSet& valid_set, const nn::TrainingSchedule& schedule,
                        std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Mean cross-entropy of `model` over a frame set.
double mean_loss(const models::LocalisationModel& model, const FrameSet& set);

// ---------------------------------------------------------------------------
// Chunk evaluation

struct ChunkResult {
  std::string file;
  std::size_t chunk_index = 0;
  double true_azimuth = 0.0;
  double estimated_azimuth = 0.0;
  models::Posterior mean_posterior{};
};

struct EvaluationReport {
  std::vector<ChunkResult> chunks;
  double rmse_deg = 0.0;
  std::size_t files = 0;
  std::size_t skipped_files = 0;  // shorter than one chunk
  std::vector<std::string> warnings;
};

/// Arithmetic mean of frame posteriors (rows of `posteriors`).
models::Posterior average_posteriors(std::span<const float> posteriors, std::size_t frames);

/// Azimuth estimate of one chunk: argmax of the averaged posterior.
double chunk_estimate(std::span<const float> posteriors, std::size_t frames);

/// Root-mean-square error in degrees; 0 for an empty list.
double rmse(std::span<const ChunkResult> chunks);

/// Non-overlapping 25-frame chunks of one signal (trailing partial dropped).
std::vector<ChunkResult> evaluate_signal(const models::LocalisationModel& model,
                                         const BinauralWaveform& wave, double true_azimuth);

EvaluationReport evaluate_chunks(const models::LocalisationModel& model,
                                 const sim::DatasetManifest& manifest, std::string_view room,
                                 sim::Split split = sim::Split::kTest, int jobs = 0);

/// Delimited dump of chunk results for plotting.
std::string chunks_to_csv(std::span<const ChunkResult> chunks);

// ---------------------------------------------------------------------------
// Experiment matrix

struct MatrixConfig {
  std::vector<models::ModelKind> systems{models::ModelKind::kGccBaseline,
                                         models::ModelKind::kWavelocGtf,
                                         models::ModelKind::kWavelocConv};
  std::vector<TrainingMode> modes{TrainingMode::kAnechoicOnly, TrainingMode::kMct};
  /// Evaluation conditions; empty means every room of the manifest.
  std::vector<std::string> rooms;
  sim::DatasetManifest manifest;
  nn::TrainingSchedule schedule;
  std::uint64_t seed = 0;
  std::size_t max_frames_per_file = 0;
  int jobs = 0;
};

struct MatrixCell {
  models::ModelKind system;
  TrainingMode mode;
  std::string room;
  std::optional<double> rmse_deg;  // empty when the cell failed
  std::string error;
};

/// Published figures shown alongside measured rows for orientation.
struct ReferenceRow {
  std::string label;
  TrainingMode mode;
  std::vector<std::pair<std::string, double>> values;  // room -> RMSE degrees
};
const std::vector<ReferenceRow>& reference_rows();

struct MatrixReport {
  std::vector<std::string> rooms;
  std::vector<MatrixCell> cells;
  double seconds = 0.0;

  std::string to_text() const;
  std::string to_json() const;
};

MatrixConfig matrix_config_from_json(std::string_view text);
MatrixConfig read_matrix_config(const std::filesystem::path& path);

/// Anechoic-only models are trained once and evaluated in every room; MCT
/// models are trained once per held-out room. Failed cells keep an error.
MatrixReport run_matrix(const MatrixConfig& config,
                        const std::function<void(const std::string&)>& log = {});

// ---------------------------------------------------------------------------
// Kernel spectra

/// Log-power spectra of a WaveLoc-CONV model's first-layer kernels (shared
/// by both ears), rows sorted by dominant bin. Throws InputError for other
/// model kinds.
dsp::SpectrumMatrix kernel_spectra(const models::LocalisationModel& model, std::size_t nfft = 1024);

/// Fraction of linear power within +/- `half_width` bins of the row peak.
double band_concentration(const dsp::SpectrumMatrix& spectra, std::size_t row,
                          std::size_t half_width = 10);

/// CSV with a header row of bin frequencies in Hz.
std::string spectra_to_csv(const dsp::SpectrumMatrix& spectra);
void export_kernel_spectra(const std::filesystem::path& checkpoint,
                           const std::filesystem::path& out, std::size_t nfft = 1024);

}  // namespace waveloc::harness
