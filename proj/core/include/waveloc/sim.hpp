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
#include <span>
#include <string>
#include <vector>

#include "waveloc/waveform.hpp"

namespace waveloc::sim {

/// Rigid spherical head. Azimuth is positive towards the right ear and the
/// head faces +x in room coordinates (+y is to its left, +z up).
struct HeadModel {
  double radius_m = 0.0875;
  double speed_of_sound = 343.0;
};

/// Woodworth interaural time difference (a/c)(theta + sin theta) in seconds.
/// Positive for sources on the right, where the right ear leads.
/// Throws InputError outside [-90, 90] degrees.
double woodworth_itd(double azimuth_deg, const HeadModel& head = {});

/// Brown-Duda shadow coefficient for a given angle between the source
/// direction and an ear's axis: 2 when facing the ear, 0.1 at 150 degrees.
double shadow_alpha(double incidence_deg);

/// Two-ear impulse response at one azimuth.
struct Brir {
  std::vector<double> left;
  std::vector<double> right;
  double azimuth_deg = 0.0;
  std::string room_id = "anechoic";
  double measured_t60 = 0.0;  // NaN when not measurable
  double measured_drr = 0.0;  // +inf when all energy is direct

  std::size_t size() const { return left.size(); }
};

inline constexpr int kFractionalDelayTaps = 64;
/// Samples of silence ahead of the earliest possible arrival.
inline constexpr double kLeadInSamples = 40.0;
/// Samples appended after the last arrival for the shadow filters to decay.
inline constexpr std::size_t kTailSamples = 64;

/// Anechoic spherical-head response: Hann-windowed sinc fractional delays
/// realising +/- ITD/2 around the propagation delay, followed per ear by a
/// one-pole/one-zero head-shadow filter, with 1/r gain.
Brir synth_anechoic_brir(double azimuth_deg, double source_distance_m = 1.5,
                         const HeadModel& head = {});

struct RoomSpec {
  std::string id = "room";
  std::array<double, 3> dimensions_m{6.0, 5.0, 3.0};
  /// 0 denotes a fully absorbing (anechoic) room; otherwise 0.1..2.0 s.
  double target_t60 = 0.5;
  std::array<double, 3> head_position_m{2.2, 2.4, 1.6};
  double source_distance_m = 1.5;
  int max_image_order = 150;
};

/// Uniform wall absorption from Sabine's formula, clamped to (0, 1].
double sabine_absorption(const RoomSpec& room);

/// Wall absorption actually used by image_source_rir. Starts from Sabine and
/// rescales until the Schroeder T60 of the 0 degree response is within 2% of
/// target: specular shoebox decay is slower than the diffuse-field estimate,
/// by up to 50% at 6x5x3 m. Cached per room geometry; 1 for target_t60 = 0.
double calibrated_absorption(const RoomSpec& room, const HeadModel& head = {});

/// Throws InputError when the room, head or source placement is invalid.
void validate_room(const RoomSpec& room, double azimuth_deg);

/// Shoebox image-source BRIR with calibrated_absorption walls. Each image arrives through the head
/// model at its lateral angle (front-back folded into [-90, 90]). Images whose accumulated wall
/// reflection loss exceeds 60 dB, or whose order exceeds max_image_order, are dropped.
Brir image_source_rir(const RoomSpec& room, double azimuth_deg, const HeadModel& head = {});

/// Reverberation time from the -5..-25 dB span of the Schroeder decay curve,
/// extrapolated to 60 dB. Throws MeasurementError if -25 dB is never reached.
double schroeder_t60(std::span<const double> rir);

/// Direct-to-reverberant ratio in dB, direct window ending 2.5 ms after the
/// main peak. Returns +inf when there is no energy after the window.
double drr(std::span<const double> rir);

/// Fills measured_t60 / measured_drr from both ears (mean of the two).
void measure(Brir& brir);

/// Full per-ear convolution (length source + brir - 1), then joint peak
/// normalisation of both ears to 0.95.
BinauralWaveform spatialize(const MonoWaveform& source, const Brir& brir);

// ---------------------------------------------------------------------------
// Source signals

/// Gaussian white noise with 50 ms raised-cosine onset and offset.
MonoWaveform white_noise_burst(double duration_s, std::uint64_t seed);

/// Pink-weighted (1/f power above 100 Hz) noise with the same edges.
MonoWaveform speech_shaped_noise(double duration_s, std::uint64_t seed);

/// Drops leading and trailing 20 ms blocks more than `threshold_db` below the
/// utterance RMS. Returns the input unchanged if every block is quiet.
MonoWaveform energy_gate(const MonoWaveform& wave, double threshold_db = 30.0);

}  // namespace waveloc::sim
