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
#include <vector>

#include "waveloc/sim.hpp"

namespace waveloc::sim::detail {

/// Ear delays in samples (left, right) for an arrival with the given
/// propagation delay and lateral angle.
struct EarDelays {
  double left = 0.0;
  double right = 0.0;
};
EarDelays ear_delays(double propagation_samples, double lateral_deg, const HeadModel& head);

/// Hann-windowed sinc spanning kFractionalDelayTaps samples.
double windowed_sinc(double x);

/// Adds gain * windowed-sinc(t - delay) into `out` (exact taps).
void add_fractional_delay(std::vector<double>& out, double delay, double gain);

/// Output length that holds an arrival at `max_delay` plus filter tails.
std::size_t response_length(double max_delay);

/// The shadow filter numerator is affine in alpha, so any number of arrivals
/// with different alphas can share one recursion: `plain` accumulates the
/// delayed impulses and `weighted` the same impulses scaled by alpha.
struct ShadowTrains {
  std::vector<double> plain;
  std::vector<double> weighted;

  explicit ShadowTrains(std::size_t n) : plain(n, 0.0), weighted(n, 0.0) {}
  std::vector<double> filter(const HeadModel& head) const;
};

/// Exact direct-sound arrival into both ears' trains.
void add_arrival(ShadowTrains& left, ShadowTrains& right, double propagation_samples,
                 double lateral_deg, double gain, const HeadModel& head);

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace waveloc::sim::detail
