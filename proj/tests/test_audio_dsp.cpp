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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "test_support.hpp"
#include "waveloc/common.hpp"
#include "waveloc/dsp.hpp"
#include "waveloc/fft.hpp"
#include "waveloc/wav.hpp"

namespace waveloc {
namespace {

using testing::TempDir;

TEST(AzimuthGrid, ClassesMapToFiveDegreeSteps) {
  EXPECT_EQ(class_of_azimuth(-90.0), 0);
  EXPECT_EQ(class_of_azimuth(0.0), 18);
  EXPECT_EQ(class_of_azimuth(90.0), 36);
  for (int c = 0; c < kNumAzimuths; ++c) EXPECT_EQ(class_of_azimuth(azimuth_of_class(c)), c);
  EXPECT_THROW(class_of_azimuth(2.5), InputError);
  EXPECT_THROW(class_of_azimuth(95.0), InputError);
  EXPECT_EQ(azimuth_label(45.0), "+045");
  EXPECT_EQ(azimuth_label(-5.0), "-005");
}

BinauralWaveform ramp_wave(std::size_t n) {
  BinauralWaveform w;
  w.left.resize(n);
  w.right.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.left[i] = static_cast<float>(i);
    w.right[i] = -static_cast<float>(i);
  }
  return w;
}

TEST(Framing, OneSecondGivesNinetyNineFrames) {
  EXPECT_EQ(dsp::frame_count(16000), 99u);
  EXPECT_EQ(dsp::frame_count(320), 1u);
  EXPECT_EQ(dsp::frame_count(319), 0u);
  EXPECT_EQ(dsp::frame_count(479), 1u);
  EXPECT_EQ(dsp::frame_count(480), 2u);
  const auto frames = dsp::frame_signal(ramp_wave(16000));
  ASSERT_EQ(frames.size(), 99u);
  for (std::size_t k : {0u, 1u, 50u, 98u}) {
    EXPECT_EQ(frames[k].left()[0], static_cast<float>(k * 160));
    EXPECT_EQ(frames[k].left()[319], static_cast<float>(k * 160 + 319));
    EXPECT_EQ(frames[k].right()[7], -static_cast<float>(k * 160 + 7));
  }
}

TEST(Framing, ShortSignalIsRejected) {
  EXPECT_THROW(dsp::frame_signal(ramp_wave(100)), InputError);
}

TEST(Wav, FloatRoundTripIsExact) {
  TempDir dir("wav");
  BinauralWaveform w = ramp_wave(1000);
  for (auto& v : w.left) v /= 1000.0f;
  for (auto& v : w.right) v /= 1000.0f;
  const auto path = dir.path() / "x.wav";
  write_wav(path, w, WavEncoding::kFloat32);
  const auto r = read_binaural_wav(path);
  EXPECT_EQ(r.sample_rate, 16000);
  EXPECT_EQ(r.left, w.left);
  EXPECT_EQ(r.right, w.right);
}

TEST(Wav, Pcm16RoundTripWithinOneStep) {
  TempDir dir("wav");
  const auto noise = testing::gaussian_noise(500, 3);
  std::vector<float> ch(noise.size());
  for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = static_cast<float>(std::tanh(noise[i]) * 0.9);
  const auto path = dir.path() / "x.wav";
  write_wav(path, {ch}, 16000, WavEncoding::kPcm16);
  const auto r = read_wav(path);
  ASSERT_EQ(r.channels.size(), 1u);
  for (std::size_t i = 0; i < ch.size(); ++i) EXPECT_NEAR(r.channels[0][i], ch[i], 1.0 / 32768.0);
}

TEST(Wav, TruncatedFileIsALoadError) {
  TempDir dir("wav");
  const auto path = dir.path() / "x.wav";
  write_wav(path, ramp_wave(400), WavEncoding::kPcm16);
  std::filesystem::resize_file(path, 60);
  EXPECT_THROW(read_wav(path), LoadError);
  std::ofstream(dir.path() / "junk.wav") << "not a wave file at all";
  EXPECT_THROW(read_wav(dir.path() / "junk.wav"), LoadError);
  EXPECT_THROW(read_wav(dir.path() / "missing.wav"), LoadError);
}

TEST(Erb, GlasbergMooreValues) {
  EXPECT_NEAR(dsp::erb_hz(1000.0), 24.7 * (4.37 + 1.0), 1e-9);
  EXPECT_NEAR(dsp::erb_rate_to_hz(dsp::erb_rate(1234.5)), 1234.5, 1e-9);
  const auto f = dsp::erb_space(70.0, 7000.0, 32);
  ASSERT_EQ(f.size(), 32u);
  EXPECT_NEAR(f.front(), 70.0, 1e-9);
  EXPECT_NEAR(f.back(), 7000.0, 1e-9);
  const double step = dsp::erb_rate(f[1]) - dsp::erb_rate(f[0]);
  for (std::size_t i = 1; i < f.size(); ++i) {
    EXPECT_NEAR(dsp::erb_rate(f[i]) - dsp::erb_rate(f[i - 1]), step, 1e-9);
  }
}

TEST(Gammatone, ImpulseResponseMatchesClosedForm) {
  dsp::GammatoneKernelSpec spec;
  spec.centre_hz = 500.0;
  spec.bandwidth_hz = 1.019 * dsp::erb_hz(500.0);
  spec.amplitude = 2.0;
  const auto h = dsp::gammatone_impulse_response(spec);
  ASSERT_EQ(h.size(), 320u);
  for (std::size_t k : {0u, 10u, 100u, 319u}) {
    const double t = static_cast<double>(k + 1) / 16000.0;
    const double expected = 2.0 * t * t * t * std::cos(2.0 * std::numbers::pi * 500.0 * t) *
                            std::exp(-2.0 * std::numbers::pi * spec.bandwidth_hz * t);
    EXPECT_NEAR(h[k], expected, 1e-15);
  }
  spec.order = 0;
  EXPECT_THROW(dsp::gammatone_impulse_response(spec), InputError);
}

TEST(Gammatone, BankHasUnitPeakGainAtNominalFrequency) {
  const auto bank = dsp::design_gammatone_bank();
  ASSERT_EQ(bank.specs.size(), 32u);
  ASSERT_EQ(bank.kernels.size(), 32u * 320u);
  constexpr std::size_t nfft = 4096;
  for (std::size_t i = 0; i < 32; ++i) {
    std::vector<double> taps(bank.kernel(i).begin(), bank.kernel(i).end());
    double best = 0.0;
    std::size_t best_bin = 0;
    for (std::size_t b = 0; b <= nfft / 2; ++b) {
      const double mag = std::abs(testing::dtft(taps, b * 16000.0 / nfft, 16000.0));
      if (mag > best) {
        best = mag;
        best_bin = b;
      }
    }
    const double fc = bank.specs[i].centre_hz;
    EXPECT_NEAR(20.0 * std::log10(best), 0.0, 0.1) << "kernel " << i;
    EXPECT_LE(std::abs(best_bin * 16000.0 / nfft - fc), std::max(0.02 * fc, 16000.0 / nfft))
        << "kernel " << i;
  }
}

TEST(Gammatone, StoredKernelsAreTimeReversed) {
  const auto bank = dsp::design_gammatone_bank();
  const auto h = dsp::gammatone_impulse_response(bank.specs[5]);
  const auto k = bank.kernel(5);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(k[i], h[h.size() - 1 - i]);
}

TEST(ConvolveKernel, MatchesSameModeCorrelation) {
  const auto x = testing::gaussian_noise(50, 1);
  const auto w = testing::gaussian_noise(7, 2);
  const auto y = dsp::convolve_kernel(x, w);
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const long idx = static_cast<long>(t + k) - 3;
      if (idx >= 0 && idx < static_cast<long>(x.size())) acc += x[idx] * w[k];
    }
    EXPECT_NEAR(y[t], acc, 1e-12);
  }
}

TEST(ConvolveKernel, ReversedKernelIsShiftedCausalConvolution) {
  for (std::size_t K : {6u, 7u, 320u}) {
    const auto x = testing::gaussian_noise(400, K);
    const auto h = testing::gaussian_noise(K, K + 1);
    std::vector<double> w(h.rbegin(), h.rend());
    const auto y = dsp::convolve_kernel(x, w);
    const auto full = testing::naive_convolve(x, h);
    const std::size_t shift = dsp::same_alignment_shift(K);
    for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(y[t], full[t + shift], 1e-9);
  }
}

TEST(Fft, ConvolutionMatchesDirectSum) {
  const auto a = testing::gaussian_noise(333, 5);
  const auto b = testing::gaussian_noise(77, 6);
  const auto fast = dsp::fft_convolve(a, b);
  const auto slow = testing::naive_convolve(a, b);
  ASSERT_EQ(fast.size(), slow.size());
  for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-9);
  EXPECT_EQ(dsp::next_pow2(1000), 1024u);
  EXPECT_EQ(dsp::next_pow2(1024), 1024u);
}

TEST(Fft, InverseRestoresInput) {
  const auto x = testing::gaussian_noise(256, 9);
  auto& fft = dsp::real_fft(256);
  const auto spectrum = fft.forward(x);
  std::vector<double> back(256);
  fft.inverse(spectrum, back);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
}

dsp::BinauralFrame delayed_pair(int delay, std::uint64_t seed) {
  // Left carries s[n], right s[n - delay]: positive delay means left leads.
  const auto s = testing::gaussian_noise(400, seed);
  dsp::BinauralFrame f;
  for (std::size_t n = 0; n < 320; ++n) {
    f.left()[n] = static_cast<float>(s[n + 40]);
    f.right()[n] = static_cast<float>(s[n + 40 - delay]);
  }
  return f;
}

TEST(GccPhat, RecoversIntegerDelaysWithSign) {
  for (int d = -8; d <= 8; ++d) {
    EXPECT_EQ(dsp::gcc_phat_peak_lag(delayed_pair(d, 100 + d)), d);
    const auto raw = dsp::gcc_phat_lags(delayed_pair(d, 100 + d));
    const auto peak = std::max_element(raw.begin(), raw.end()) - raw.begin();
    EXPECT_EQ(peak - dsp::kGccMaxLag, d);
  }
}

TEST(GccPhat, FeatureIsStandardised) {
  const auto f = dsp::gcc_phat(delayed_pair(3, 7));
  double mean = 0.0, var = 0.0;
  for (float v : f.values) mean += v;
  mean /= 37.0;
  for (float v : f.values) var += (v - mean) * (v - mean);
  var /= 37.0;
  EXPECT_NEAR(mean, 0.0, 1e-5);
  EXPECT_NEAR(var, 1.0, 1e-4);
  const auto zero = dsp::gcc_phat(dsp::BinauralFrame{});
  for (float v : zero.values) EXPECT_EQ(v, 0.0f);
}

TEST(KernelSpectra, ShapeAndImpulseIsFlat) {
  std::vector<double> kernels(3 * 64, 0.0);
  kernels[0] = 1.0;
  kernels[64 + 10] = 0.5;
  kernels[128 + 63] = 2.0;
  const auto s = dsp::kernel_log_power_spectra(kernels, 3, 64, 1024);
  EXPECT_EQ(s.rows, 3u);
  EXPECT_EQ(s.cols, 513u);
  for (double v : s.row(0)) EXPECT_NEAR(v, 0.0, 1e-9);
  for (double v : s.row(1)) EXPECT_NEAR(v, 20.0 * std::log10(0.5), 1e-9);
  EXPECT_DOUBLE_EQ(s.bin_hz(512), 8000.0);
  EXPECT_THROW(dsp::kernel_log_power_spectra(kernels, 3, 64, 1000), InputError);
  EXPECT_THROW(dsp::kernel_log_power_spectra(kernels, 2, 64, 1024), InputError);
}

}  // namespace
}  // namespace waveloc
