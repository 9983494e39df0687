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

#include "waveloc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "waveloc/fft.hpp"

namespace waveloc::dsp {

std::vector<BinauralFrame> frame_signal(const BinauralWaveform& wave) {
  if (wave.left.size() != wave.right.size()) {
    throw InputError("frame_signal: channel lengths differ");
  }
  const std::size_t n = frame_count(wave.size());
  if (n == 0) {
    throw InputError("frame_signal: signal of " + std::to_string(wave.size()) +
                     " samples is shorter than one 320-sample window");
  }
  std::vector<BinauralFrame> frames(n);
  for (std::size_t k = 0; k < n; ++k) copy_frame(wave, k, frames[k].data);
  return frames;
}

void copy_frame(const BinauralWaveform& wave, std::size_t k, std::span<float> dst) {
  const std::size_t start = k * kFrameHop;
  std::copy_n(wave.left.begin() + static_cast<std::ptrdiff_t>(start), kFrameLength, dst.begin());
  std::copy_n(wave.right.begin() + static_cast<std::ptrdiff_t>(start), kFrameLength,
              dst.begin() + kFrameLength);
}

double erb_hz(double f_hz) { return 24.7 * (4.37 * f_hz / 1000.0 + 1.0); }

double erb_rate(double f_hz) { return 21.4 * std::log10(4.37 * f_hz / 1000.0 + 1.0); }

double erb_rate_to_hz(double erb) { return (std::pow(10.0, erb / 21.4) - 1.0) * 1000.0 / 4.37; }

std::vector<double> erb_space(double low_hz, double high_hz, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = low_hz;
    return out;
  }
  const double lo = erb_rate(low_hz);
  const double hi = erb_rate(high_hz);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = erb_rate_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  // Pin the endpoints against round-trip error.
  out.front() = low_hz;
  out.back() = high_hz;
  return out;
}

std::vector<double> gammatone_impulse_response(const GammatoneKernelSpec& spec) {
  if (spec.order < 1 || spec.bandwidth_hz <= 0.0 || spec.centre_hz <= 0.0 ||
      spec.centre_hz >= kSampleRate / 2.0 || spec.length == 0) {
    throw InputError("gammatone_impulse_response: invalid kernel parameters");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> h(spec.length);
  for (std::size_t k = 0; k < spec.length; ++k) {
    const double t = static_cast<double>(k + 1) / kSampleRate;
    h[k] = spec.amplitude * std::pow(t, spec.order - 1) *
           std::cos(kTwoPi * spec.centre_hz * t + spec.phase) *
           std::exp(-kTwoPi * spec.bandwidth_hz * t);
  }
  return h;
}

std::vector<double> magnitude_response(std::span<const double> taps, std::size_t nfft) {
  const auto spectrum = real_fft(nfft).forward(taps);
  std::vector<double> mag(spectrum.size());
  std::transform(spectrum.begin(), spectrum.end(), mag.begin(),
                 [](std::complex<double> c) { return std::abs(c); });
  return mag;
}

GammatoneKernelBank design_gammatone_bank() {
  GammatoneKernelBank bank;
  bank.kernels.resize(kGammatoneChannels * kGammatoneLength);
  const auto centres = erb_space(kGammatoneLowHz, kGammatoneHighHz, kGammatoneChannels);
  for (std::size_t i = 0; i < kGammatoneChannels; ++i) {
    GammatoneKernelSpec spec;
    spec.centre_hz = centres[i];
    spec.bandwidth_hz = 1.019 * erb_hz(centres[i]);
    spec.amplitude = 1.0;
    const auto unit = gammatone_impulse_response(spec);
    const auto mag = magnitude_response(unit, kGainCheckFft);
    spec.amplitude = 1.0 / *std::max_element(mag.begin(), mag.end());

    const auto h = gammatone_impulse_response(spec);
    std::reverse_copy(h.begin(), h.end(),
                      bank.kernels.begin() + static_cast<std::ptrdiff_t>(i * kGammatoneLength));
    bank.specs.push_back(spec);
  }
  return bank;
}

std::vector<double> convolve_kernel(std::span<const double> x, std::span<const double> w) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(w.size());
  const std::ptrdiff_t pad = (k - 1) / 2;
  std::vector<double> y(x.size(), 0.0);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, pad - t);
    const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(k, n - t + pad);
    double acc = 0.0;
    for (std::ptrdiff_t j = j0; j < j1; ++j) acc += x[t + j - pad] * w[j];
    y[t] = acc;
  }
  return y;
}

std::array<double, kGccFeatureSize> gcc_phat_lags(const BinauralFrame& frame) {
  std::array<double, kFrameLength> left{}, right{};
  std::copy(frame.left().begin(), frame.left().end(), left.begin());
  std::copy(frame.right().begin(), frame.right().end(), right.begin());

  RealFft& fft = real_fft(kGccFft);
  auto cross = fft.forward(left);
  const auto fr = fft.forward(right);
  for (std::size_t k = 0; k < cross.size(); ++k) {
    const std::complex<double> g = cross[k] * std::conj(fr[k]);
    cross[k] = g / (std::abs(g) + 1e-8);
  }
  std::array<double, kGccFft> corr{};
  fft.inverse(cross, corr);

  // corr[tau] = sum_n l[n + tau] r[n]; a left lead of d samples peaks at tau = -d.
  std::array<double, kGccFeatureSize> out{};
  for (int lag = -kGccMaxLag; lag <= kGccMaxLag; ++lag) {
    const std::size_t tau =
        static_cast<std::size_t>((static_cast<int>(kGccFft) - lag) % static_cast<int>(kGccFft));
    out[static_cast<std::size_t>(lag + kGccMaxLag)] = corr[tau];
  }
  return out;
}

int gcc_phat_peak_lag(const BinauralFrame& frame) {
  const auto lags = gcc_phat_lags(frame);
  const auto it = std::max_element(lags.begin(), lags.end());
  return static_cast<int>(it - lags.begin()) - kGccMaxLag;
}

GccFeature gcc_phat(const BinauralFrame& frame) {
  const auto raw = gcc_phat_lags(frame);
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(raw.size());
  double var = 0.0;
  for (double v : raw) var += (v - mean) * (v - mean);
  var /= static_cast<double>(raw.size());
  const double inv_std = 1.0 / std::sqrt(std::max(var, 1e-12));

  GccFeature feature;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    feature.values[i] = static_cast<float>((raw[i] - mean) * inv_std);
  }
  return feature;
}

SpectrumMatrix kernel_log_power_spectra(std::span<const double> kernels, std::size_t rows,
                                        std::size_t length, std::size_t nfft) {
  if (nfft < length || nfft < 2 || (nfft & (nfft - 1)) != 0) {
    throw InputError("kernel_log_power_spectra: nfft must be a power of two >= kernel length");
  }
  if (kernels.size() != rows * length) {
    throw InputError("kernel_log_power_spectra: kernel buffer does not match rows x length");
  }
  SpectrumMatrix out;
  out.rows = rows;
  out.cols = nfft / 2 + 1;
  out.nfft = nfft;
  out.values.resize(out.rows * out.cols);
  RealFft& fft = real_fft(nfft);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto spectrum = fft.forward(kernels.subspan(r * length, length));
    for (std::size_t b = 0; b < out.cols; ++b) {
      out.values[r * out.cols + b] = 20.0 * std::log10(std::abs(spectrum[b]) + 1e-12);
    }
  }
  return out;
}

}  // namespace waveloc::dsp
