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
#include <span>
#include <vector>

#include "waveloc/common.hpp"
#include "waveloc/waveform.hpp"

namespace waveloc::dsp {

/// One 20 ms analysis window: row 0 is the left ear, row 1 the right ear.
struct BinauralFrame {
  std::array<float, kNumEars * kFrameLength> data{};

  std::span<const float> left() const { return {data.data(), kFrameLength}; }
  std::span<const float> right() const { return {data.data() + kFrameLength, kFrameLength}; }
  std::span<float> left() { return {data.data(), kFrameLength}; }
  std::span<float> right() { return {data.data() + kFrameLength, kFrameLength}; }
};

/// Number of full windows in a signal of n samples (0 when n < 320).
constexpr std::size_t frame_count(std::size_t n) {
  return n < kFrameLength ? 0 : (n - kFrameLength) / kFrameHop + 1;
}

/// Rectangular 320-sample windows with a 160-sample hop; the trailing partial
/// window is dropped. Throws InputError for signals shorter than one window.
std::vector<BinauralFrame> frame_signal(const BinauralWaveform& wave);

/// Copies frame k of `wave` into `dst` (2 x 320, row-major) without allocating.
void copy_frame(const BinauralWaveform& wave, std::size_t k, std::span<float> dst);

// ---------------------------------------------------------------------------
// Gammatone filterbank

inline constexpr std::size_t kGammatoneChannels = 32;
inline constexpr double kGammatoneLowHz = 70.0;
inline constexpr double kGammatoneHighHz = 7000.0;
inline constexpr std::size_t kGammatoneLength = kFrameLength;
inline constexpr std::size_t kGainCheckFft = 4096;

struct GammatoneKernelSpec {
  double amplitude = 1.0;
  int order = 4;
  double centre_hz = 1000.0;
  double phase = 0.0;
  double bandwidth_hz = 0.0;
  std::size_t length = kGammatoneLength;
};

struct GammatoneKernelBank {
  std::vector<GammatoneKernelSpec> specs;
  /// kGammatoneChannels x kGammatoneLength, row-major, each row time-reversed.
  std::vector<double> kernels;

  std::span<const double> kernel(std::size_t i) const {
    return {kernels.data() + i * kGammatoneLength, kGammatoneLength};
  }
};

/// Glasberg & Moore equivalent rectangular bandwidth in Hz.
double erb_hz(double f_hz);
/// ERB-rate (Cam) value of a frequency, and its inverse.
double erb_rate(double f_hz);
double erb_rate_to_hz(double erb);

/// n frequencies uniformly spaced on the ERB-rate scale, endpoints included.
std::vector<double> erb_space(double low_hz, double high_hz, std::size_t n);

/// Samples t^(n-1) cos(2 pi f t + phi) exp(-2 pi b t) at t = (k+1)/fs,
/// scaled by the spec's amplitude. Throws InputError on invalid parameters.
std::vector<double> gammatone_impulse_response(const GammatoneKernelSpec& spec);

/// 32 fourth-order kernels, 70-7000 Hz, each with 0 dB peak gain.
GammatoneKernelBank design_gammatone_bank();

/// Magnitude response |H| of a kernel over bins 0..nfft/2.
std::vector<double> magnitude_response(std::span<const double> taps, std::size_t nfft);

/// Output sample t aligned to input sample t at the kernel's temporal centre:
/// y[t] = sum_k x[t + k - (K-1)/2] * w[k], zero padded, |y| == |x|. With `w`
/// holding a time-reversed impulse response h this equals the causal
/// convolution of x and h advanced by K-1-(K-1)/2 samples.
std::vector<double> convolve_kernel(std::span<const double> x, std::span<const double> w);

/// Offset such that convolve_kernel(x, reverse(h))[t] == (x * h)[t + offset].
constexpr std::size_t same_alignment_shift(std::size_t kernel_length) {
  return kernel_length - 1 - (kernel_length - 1) / 2;
}

// ---------------------------------------------------------------------------
// GCC-PHAT

inline constexpr int kGccMaxLag = 18;
inline constexpr std::size_t kGccFeatureSize = 2 * kGccMaxLag + 1;  // 37
inline constexpr std::size_t kGccFft = 1024;

/// Standardised GCC-PHAT values for lags -18..+18 (index i <-> lag i - 18).
/// A positive lag means the left ear leads.
struct GccFeature {
  std::array<float, kGccFeatureSize> values{};
};

/// Raw (unstandardised) PHAT-weighted cross-correlation over lags -18..+18.
std::array<double, kGccFeatureSize> gcc_phat_lags(const BinauralFrame& frame);

/// Lag in samples of the raw cross-correlation peak.
int gcc_phat_peak_lag(const BinauralFrame& frame);

/// Zero-mean, unit-variance version of gcc_phat_lags. An all-zero frame yields
/// an all-zero feature.
GccFeature gcc_phat(const BinauralFrame& frame);

// ---------------------------------------------------------------------------
// Kernel spectra

/// Log-power spectra in dB, one row per kernel, nfft/2+1 columns.
struct SpectrumMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t nfft = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  double bin_hz(std::size_t bin) const {
    return static_cast<double>(bin) * kSampleRate / static_cast<double>(nfft);
  }
};

/// Row k = 20 log10(|FFT(kernel_k, nfft)| + 1e-12). `kernels` is rows x length
/// row-major. Throws InputError unless nfft is a power of two >= length.
SpectrumMatrix kernel_log_power_spectra(std::span<const double> kernels, std::size_t rows,
                                        std::size_t length, std::size_t nfft);

}  // namespace waveloc::dsp
