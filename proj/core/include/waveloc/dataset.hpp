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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "waveloc/sim.hpp"
#include "waveloc/wav.hpp"

namespace waveloc::sim {

enum class SourceKind { kWhiteNoiseBurst, kSpeechShapedNoise, kWavCorpus };
enum class Split { kTrain, kValid, kTest };
enum class RoomKind { kAnechoic, kImageSource, kExternal };

std::string_view to_string(SourceKind kind);
std::string_view to_string(Split split);
std::string_view to_string(RoomKind kind);
SourceKind parse_source_kind(std::string_view text);
Split parse_split(std::string_view text);
RoomKind parse_room_kind(std::string_view text);

inline constexpr std::array<Split, 3> kSplits{Split::kTrain, Split::kValid, Split::kTest};

struct SourceConfig {
  SourceKind kind = SourceKind::kSpeechShapedNoise;
  /// Synthetic sources only; at least 0.5 s so every file holds two chunks.
  double duration_s = 1.0;
  /// WAV-corpus mode: mono 16 kHz files, assigned round-robin to entries.
  std::vector<std::string> corpus;
  double gate_db = 30.0;
};

/// One acoustic condition. External rooms read per-azimuth stereo BRIRs named
/// az{+ddd}.wav from `brir_dir`.
struct RoomCondition {
  std::string id;
  RoomKind kind = RoomKind::kAnechoic;
  RoomSpec spec;
  std::string brir_dir;
};

struct ManifestEntry {
  std::string room_id;
  Split split = Split::kTrain;
  double azimuth_deg = 0.0;
  int index = 0;
  std::uint64_t seed = 0;
  std::string source_path;  // corpus mode only
  std::string path;         // relative to the output directory
};

struct RoomMeasurement {
  std::string room_id;
  double target_t60 = 0.0;
  double absorption = 1.0;
  double measured_t60 = 0.0;  // mean over azimuths, NaN if unmeasurable
  double measured_drr = 0.0;  // mean over azimuths, +inf if anechoic
};

inline constexpr int kManifestVersion = 1;

struct DatasetManifest {
  int version = kManifestVersion;
  int sample_rate = kSampleRate;
  std::uint64_t seed = 0;
  std::string output_dir = "data";
  WavEncoding encoding = WavEncoding::kPcm16;
  SourceConfig source;
  std::vector<RoomCondition> rooms;
  /// Signals per azimuth for train / valid / test.
  std::array<int, 3> split_counts{24, 6, 15};
  std::vector<ManifestEntry> entries;
  std::vector<RoomMeasurement> measurements;

  const RoomCondition& room(std::string_view id) const;
  std::vector<const ManifestEntry*> select(std::string_view room_id, Split split) const;
  std::filesystem::path resolve(const ManifestEntry& entry) const;
};

/// Anechoic plus rooms A-D with target T60 0.32, 0.47, 0.68, 0.89 s.
DatasetManifest default_manifest(std::string output_dir = "data", std::uint64_t seed = 0);

/// Replaces `entries` with one entry per room x split x azimuth x index.
/// Source seeds depend on (manifest seed, split, azimuth, index) only, so
/// every room renders the same dry signal for a given slot.
void expand_entries(DatasetManifest& manifest);

/// Throws ConfigError on inconsistent fields.
void validate(const DatasetManifest& manifest);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
/// Relative output_dir values are resolved against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// BRIR for one room condition and azimuth.
Brir room_brir(const RoomCondition& room, double azimuth_deg);

/// Dry source signal for an entry.
MonoWaveform render_source(const SourceConfig& source, const ManifestEntry& entry);

struct DatasetReport {
  std::size_t written = 0;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

/// Renders every entry (expanding first if empty) to <output_dir>/<path>,
/// fills `measurements`, and writes <output_dir>/manifest.json. Per-entry
/// failures are collected in the report; other entries still run.
DatasetReport make_dataset(DatasetManifest& manifest, int jobs = 1);

}  // namespace waveloc::sim
