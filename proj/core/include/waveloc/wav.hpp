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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "waveloc/waveform.hpp"

namespace waveloc {

enum class WavEncoding { kPcm16, kFloat32 };

/// Decoded RIFF/WAVE contents, one vector per channel.
struct WavData {
  int sample_rate = 0;
  std::vector<std::vector<float>> channels;
};

/// Reads 16-bit PCM or 32-bit IEEE float little-endian WAV files.
/// Integer samples are scaled by 1/32768. Throws LoadError on malformed input.
WavData read_wav(const std::filesystem::path& path);

/// Writes all channels interleaved. The file appears atomically (temp + rename).
void write_wav(const std::filesystem::path& path, const std::vector<std::vector<float>>& channels,
               int sample_rate, WavEncoding encoding = WavEncoding::kFloat32);

MonoWaveform read_mono_wav(const std::filesystem::path& path);
BinauralWaveform read_binaural_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const BinauralWaveform& wave,
               WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace waveloc
