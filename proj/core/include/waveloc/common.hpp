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
#include <functional>
#include <stdexcept>
#include <string>

namespace waveloc {

inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kFrameLength = 320;  // 20 ms
inline constexpr std::size_t kFrameHop = 160;     // 10 ms
inline constexpr std::size_t kNumEars = 2;
inline constexpr int kNumAzimuths = 37;
inline constexpr double kAzimuthStepDeg = 5.0;
inline constexpr double kMinAzimuthDeg = -90.0;
inline constexpr std::size_t kFramesPerChunk = 25;  // 250 ms

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration detected before any compute.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or manifest could not be restored.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// A requested acoustic measure cannot be derived from the data.
class MeasurementError : public Error {
 public:
  using Error::Error;
};

/// Azimuth in degrees of class index `i` (0 -> -90, 18 -> 0, 36 -> +90).
constexpr double azimuth_of_class(int i) {
  return kMinAzimuthDeg + kAzimuthStepDeg * static_cast<double>(i);
}

/// Inverse of azimuth_of_class. Throws InputError off the 5 degree grid.
int class_of_azimuth(double azimuth_deg);

/// Formats an azimuth as a signed three-digit label, e.g. "+045", "-090".
std::string azimuth_label(double azimuth_deg);

/// Worker count for `jobs` <= 0: the hardware concurrency (at least 1).
int resolve_jobs(int jobs);

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception thrown by any
/// call is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace waveloc
