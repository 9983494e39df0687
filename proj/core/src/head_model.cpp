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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sim_detail.hpp"
#include "waveloc/fft.hpp"

namespace waveloc::sim {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kShadowAlphaMin = 0.1;
constexpr double kShadowThetaMinDeg = 150.0;
constexpr double kEdgeSeconds = 0.05;

double deg2rad(double d) { return d * kPi / 180.0; }

double gaussian(std::uint64_t& state) {
  // Box-Muller on splitmix64 output keeps datasets byte-identical across
  // standard library implementations.
  const double u1 = (static_cast<double>(detail::splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(detail::splitmix64(state) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::size_t duration_samples(double duration_s) {
  if (!(duration_s > 0.0)) throw InputError("source duration must be positive");
  return static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
}

void apply_edges(std::vector<float>& x) {
  const std::size_t ramp =
      std::min<std::size_t>(static_cast<std::size_t>(kEdgeSeconds * kSampleRate), x.size() / 2);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / static_cast<double>(ramp));
    x[i] = static_cast<float>(x[i] * g);
    x[x.size() - 1 - i] = static_cast<float>(x[x.size() - 1 - i] * g);
  }
}

void normalise_peak(std::vector<float>& x, float target) {
  float peak = 0.0f;
  for (float v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0f) {
    for (float& v : x) v *= target / peak;
  }
}

}  // namespace

namespace detail {

double windowed_sinc(double x) {
  constexpr double half = kFractionalDelayTaps / 2.0;
  if (std::abs(x) >= half) return 0.0;
  const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
  return sinc * (0.5 + 0.5 * std::cos(kPi * x / half));
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EarDelays ear_delays(double propagation_samples, double lateral_deg, const HeadModel& head) {
  const double half_itd = 0.5 * woodworth_itd(lateral_deg, head) * kSampleRate;
  const double base = kLeadInSamples + propagation_samples;
  return {base + half_itd, base - half_itd};
}

void add_fractional_delay(std::vector<double>& out, double delay, double gain) {
  const auto whole = static_cast<std::ptrdiff_t>(std::floor(delay));
  const std::ptrdiff_t first = whole - kFractionalDelayTaps / 2 + 1;
  for (std::ptrdiff_t i = first; i < first + kFractionalDelayTaps; ++i) {
    if (i < 0 || i >= static_cast<std::ptrdiff_t>(out.size())) continue;
    out[static_cast<std::size_t>(i)] += gain * windowed_sinc(static_cast<double>(i) - delay);
  }
}

std::size_t response_length(double max_delay) {
  return static_cast<std::size_t>(std::ceil(max_delay)) + kFractionalDelayTaps / 2 + kTailSamples;
}

std::vector<double> ShadowTrains::filter(const HeadModel& head) const {
  // Bilinear transform of (1 + j alpha w / 2w0) / (1 + j w / 2w0), w0 = c / a:
  // numerator (1 + z^-1) + alpha K (1 - z^-1), denominator (1 + K) + (1 - K) z^-1.
  const double k = kSampleRate * head.radius_m / head.speed_of_sound;
  const double a0 = 1.0 + k, a1 = 1.0 - k;
  std::vector<double> y(plain.size());
  double p_prev = 0.0, w_prev = 0.0, y_prev = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const double num = (plain[i] + p_prev) + k * (weighted[i] - w_prev);
    y[i] = (num - a1 * y_prev) / a0;
    p_prev = plain[i];
    w_prev = weighted[i];
    y_prev = y[i];
  }
  return y;
}

void add_arrival(ShadowTrains& left, ShadowTrains& right, double propagation_samples,
                 double lateral_deg, double gain, const HeadModel& head) {
  const EarDelays d = ear_delays(propagation_samples, lateral_deg, head);
  const double alpha_left = shadow_alpha(90.0 + lateral_deg);
  const double alpha_right = shadow_alpha(90.0 - lateral_deg);
  add_fractional_delay(left.plain, d.left, gain);
  add_fractional_delay(left.weighted, d.left, gain * alpha_left);
  add_fractional_delay(right.plain, d.right, gain);
  add_fractional_delay(right.weighted, d.right, gain * alpha_right);
}

}  // namespace detail

double woodworth_itd(double azimuth_deg, const HeadModel& head) {
  if (!(azimuth_deg >= -90.0 && azimuth_deg <= 90.0)) {
    throw InputError("woodworth_itd: azimuth " + std::to_string(azimuth_deg) +
                     " outside [-90, 90]");
  }
  const double theta = deg2rad(azimuth_deg);
  return head.radius_m / head.speed_of_sound * (theta + std::sin(theta));
}

double shadow_alpha(double incidence_deg) {
  return (1.0 + kShadowAlphaMin / 2.0) +
         (1.0 - kShadowAlphaMin / 2.0) * std::cos(incidence_deg / kShadowThetaMinDeg * kPi);
}

Brir synth_anechoic_brir(double azimuth_deg, double source_distance_m, const HeadModel& head) {
  class_of_azimuth(azimuth_deg);
  if (!(source_distance_m > 0.0)) throw InputError("source distance must be positive");
  const double propagation = source_distance_m / head.speed_of_sound * kSampleRate;
  const detail::EarDelays d = detail::ear_delays(propagation, azimuth_deg, head);
  Brir brir;
  brir.azimuth_deg = azimuth_deg;
  brir.room_id = "anechoic";
  const std::size_t n = detail::response_length(std::max(d.left, d.right));
  detail::ShadowTrains left(n), right(n);
  detail::add_arrival(left, right, propagation, azimuth_deg, 1.0 / source_distance_m, head);
  brir.left = left.filter(head);
  brir.right = right.filter(head);
  return brir;
}

BinauralWaveform spatialize(const MonoWaveform& source, const Brir& brir) {
  validate(source);
  if (source.samples.empty() || brir.left.empty()) throw InputError("spatialize: empty input");
  const std::vector<double> x(source.samples.begin(), source.samples.end());
  const auto left = dsp::fft_convolve(x, brir.left);
  const auto right = dsp::fft_convolve(x, brir.right);
  double peak = 0.0;
  for (std::size_t i = 0; i < left.size(); ++i) {
    peak = std::max({peak, std::abs(left[i]), std::abs(right[i])});
  }
  const double scale = peak > 0.0 ? 0.95 / peak : 0.0;
  BinauralWaveform out;
  out.left.resize(left.size());
  out.right.resize(right.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    out.left[i] = static_cast<float>(left[i] * scale);
    out.right[i] = static_cast<float>(right[i] * scale);
  }
  return out;
}

MonoWaveform white_noise_burst(double duration_s, std::uint64_t seed) {
  const std::size_t n = duration_samples(duration_s);
  MonoWaveform wave;
  wave.samples.resize(n);
  std::uint64_t state = seed;
  for (float& v : wave.samples) v = static_cast<float>(gaussian(state));
  apply_edges(wave.samples);
  normalise_peak(wave.samples, 0.9f);
  return wave;
}

MonoWaveform speech_shaped_noise(double duration_s, std::uint64_t seed) {
  const std::size_t n = duration_samples(duration_s);
  std::vector<double> white(n);
  std::uint64_t state = seed;
  for (double& v : white) v = gaussian(state);

  const std::size_t nfft = dsp::next_pow2(n);
  dsp::RealFft& fft = dsp::real_fft(nfft);
  auto spectrum = fft.forward(white);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k) * kSampleRate / static_cast<double>(nfft);
    spectrum[k] *= 1.0 / std::sqrt(std::max(f, 100.0));
  }
  std::vector<double> shaped(nfft);
  fft.inverse(spectrum, shaped);

  MonoWaveform wave;
  wave.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) wave.samples[i] = static_cast<float>(shaped[i]);
  apply_edges(wave.samples);
  normalise_peak(wave.samples, 0.9f);
  return wave;
}

MonoWaveform energy_gate(const MonoWaveform& wave, double threshold_db) {
  const std::size_t block = kFrameLength;
  const std::size_t blocks = wave.samples.size() / block;
  if (blocks == 0) return wave;
  double total = 0.0;
  for (float v : wave.samples) total += static_cast<double>(v) * v;
  const double utterance_ms = total / static_cast<double>(wave.samples.size());
  const double floor_ms = utterance_ms * std::pow(10.0, -threshold_db / 10.0);
  const auto loud = [&](std::size_t b) {
    double e = 0.0;
    for (std::size_t i = b * block; i < (b + 1) * block; ++i) {
      e += static_cast<double>(wave.samples[i]) * wave.samples[i];
    }
    return e / static_cast<double>(block) >= floor_ms;
  };
  std::size_t first = 0;
  while (first < blocks && !loud(first)) ++first;
  if (first == blocks) return wave;
  std::size_t last = blocks;
  while (last > first && !loud(last - 1)) --last;
  const std::size_t end = last == blocks ? wave.samples.size() : last * block;
  MonoWaveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.assign(wave.samples.begin() + static_cast<std::ptrdiff_t>(first * block),
                     wave.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace waveloc::sim
