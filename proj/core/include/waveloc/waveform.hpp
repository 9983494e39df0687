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
#include <span>
#include <vector>

#include "waveloc/common.hpp"

namespace waveloc {

/// Single-channel audio at 16 kHz, amplitude nominally in [-1, 1].
struct MonoWaveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
};

/// Two-ear audio; both channels share one length and sample rate.
struct BinauralWaveform {
  std::vector<float> left;
  std::vector<float> right;
  int sample_rate = kSampleRate;

  std::size_t size() const { return left.size(); }
};

/// Throws InputError unless the rate is 16 kHz and all samples are finite.
void validate(const MonoWaveform& wave);
void validate(const BinauralWaveform& wave);

}  // namespace waveloc
