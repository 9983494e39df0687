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
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>

#include "test_support.hpp"
#include "waveloc/dataset.hpp"
#include "waveloc/dsp.hpp"
#include "waveloc/sim.hpp"

namespace waveloc::sim {
namespace {

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

// Lag l maximising sum_n left[n] * right[n + l]; positive when the left ear leads.
int xcorr_peak_lag(std::span<const double> left, std::span<const double> right, int max_lag) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int l = -max_lag; l <= max_lag; ++l) {
    double acc = 0.0;
    for (std::size_t n = 0; n < left.size(); ++n) {
      const long m = static_cast<long>(n) + l;
      if (m >= 0 && m < static_cast<long>(right.size())) acc += left[n] * right[m];
    }
    if (acc > best_value) {
      best_value = acc;
      best = l;
    }
  }
  return best;
}

// RMS over 2-7 kHz from a zero-padded DTFT grid.
double band_rms(std::span<const double> x) {
  double acc = 0.0;
  int n = 0;
  for (double f = 2000.0; f <= 7000.0; f += 50.0, ++n) acc += std::norm(testing::dtft(x, f, 16000));
  return std::sqrt(acc / n);
}

TEST(Woodworth, ClosedFormAndSymmetry) {
  EXPECT_EQ(woodworth_itd(0.0), 0.0);
  EXPECT_NEAR(woodworth_itd(90.0), 0.0875 / 343.0 * (std::numbers::pi / 2 + 1.0), 1e-15);
  EXPECT_NEAR(woodworth_itd(90.0), 6.56e-4, 1e-6);
  for (double az = -90.0; az <= 90.0; az += 5.0) {
    EXPECT_DOUBLE_EQ(woodworth_itd(-az), -woodworth_itd(az));
    if (az > -90.0) {
      EXPECT_GT(woodworth_itd(az), woodworth_itd(az - 5.0));
    }
  }
  EXPECT_THROW(woodworth_itd(91.0), InputError);
  EXPECT_THROW(woodworth_itd(std::nan("")), InputError);
}

TEST(ShadowAlpha, EndpointsAndMinimum) {
  EXPECT_NEAR(shadow_alpha(0.0), 2.0, 1e-12);
  EXPECT_NEAR(shadow_alpha(150.0), 0.1, 1e-12);
  EXPECT_LT(shadow_alpha(150.0), shadow_alpha(180.0));
}

TEST(AnechoicBrir, MedianPlaneEarsAreIdentical) {
  const auto brir = synth_anechoic_brir(0.0);
  ASSERT_EQ(brir.left.size(), brir.right.size());
  for (std::size_t i = 0; i < brir.size(); ++i) EXPECT_NEAR(brir.left[i], brir.right[i], 1e-6);
}

TEST(AnechoicBrir, RightEarLouderAtPlus60) {
  const auto brir = synth_anechoic_brir(60.0);
  const double ild = 20.0 * std::log10(band_rms(brir.right) / band_rms(brir.left));
  EXPECT_GT(ild, 3.0);
  const auto mirrored = synth_anechoic_brir(-60.0);
  EXPECT_NEAR(20.0 * std::log10(band_rms(mirrored.left) / band_rms(mirrored.right)), ild, 1e-9);
}

TEST(AnechoicBrir, CrossCorrelationLagAt90) {
  const auto brir = synth_anechoic_brir(90.0);
  const int lag = xcorr_peak_lag(brir.left, brir.right, 30);
  EXPECT_TRUE(lag == -10 || lag == -11) << lag;
}

TEST(AnechoicBrir, LagSignAndMonotonicity) {
  int prev = 0;
  for (int c = 19; c < kNumAzimuths; ++c) {
    const double az = azimuth_of_class(c);
    const auto right = synth_anechoic_brir(az);
    const auto left = synth_anechoic_brir(-az);
    const int lr = xcorr_peak_lag(right.left, right.right, 30);
    const int ll = xcorr_peak_lag(left.left, left.right, 30);
    EXPECT_LE(lr, 0) << az;
    EXPECT_GE(ll, 0) << az;
    EXPECT_GE(std::abs(lr), prev) << az;
    EXPECT_EQ(std::abs(lr), std::abs(ll)) << az;
    prev = std::abs(lr);
  }
  EXPECT_GT(prev, 0);
}

TEST(AnechoicBrir, DistanceScalesAmplitude) {
  const auto near = synth_anechoic_brir(30.0, 1.0);
  const auto far = synth_anechoic_brir(30.0, 2.0);
  EXPECT_NEAR(std::sqrt(energy(near.left) / energy(far.left)), 2.0, 0.05);
  EXPECT_THROW(synth_anechoic_brir(32.0), InputError);
  EXPECT_THROW(synth_anechoic_brir(30.0, 0.0), InputError);
}

TEST(ImageSource, ZeroT60IsAnechoic) {
  RoomSpec room;
  room.target_t60 = 0.0;
  for (double az : {-90.0, -35.0, 0.0, 50.0, 90.0}) {
    const auto a = image_source_rir(room, az);
    const auto b = synth_anechoic_brir(az, room.source_distance_m);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_NEAR(a.left[i], b.left[i], 1e-6);
      ASSERT_NEAR(a.right[i], b.right[i], 1e-6);
    }
  }
}

TEST(ImageSource, HalfSecondTarget) {
  RoomSpec room;
  room.target_t60 = 0.5;
  const auto brir = image_source_rir(room, 20.0);
  const double t60 = schroeder_t60(brir.left);
  EXPECT_GE(t60, 0.4);
  EXPECT_LE(t60, 0.6);
}

TEST(ImageSource, ReverberantEnergyExceedsDirectPath) {
  RoomSpec room;
  room.target_t60 = 0.68;
  const auto brir = image_source_rir(room, -45.0);
  const auto direct = synth_anechoic_brir(-45.0, room.source_distance_m);
  const std::size_t n = direct.size();
  EXPECT_GE(energy(brir.left), energy(std::span<const double>(brir.left).first(n)));
  EXPECT_GT(energy(brir.left), energy(direct.left));
}

class SabineConsistency : public ::testing::TestWithParam<double> {};

TEST_P(SabineConsistency, MeasuredT60WithinTwentyPercent) {
  RoomSpec room;
  room.target_t60 = GetParam();
  for (double az : {0.0, 65.0}) {
    auto brir = image_source_rir(room, az);
    measure(brir);
    EXPECT_NEAR(brir.measured_t60, room.target_t60, 0.2 * room.target_t60) << az;
  }
}

INSTANTIATE_TEST_SUITE_P(Targets, SabineConsistency, ::testing::Values(0.3, 0.47, 0.68, 0.9));

TEST(ImageSource, RejectsBadGeometry) {
  RoomSpec room;
  room.head_position_m = {7.0, 2.0, 1.5};
  EXPECT_THROW(image_source_rir(room, 0.0), InputError);
  RoomSpec close;
  close.head_position_m = {2.5, 0.5, 1.5};
  EXPECT_THROW(image_source_rir(close, 90.0), InputError);
  EXPECT_NO_THROW(validate_room(close, -90.0));
}

TEST(Sabine, KnownRoom) {
  RoomSpec room;
  room.target_t60 = 0.5;
  const double volume = 6.0 * 5.0 * 3.0, surface = 2.0 * (30.0 + 18.0 + 15.0);
  EXPECT_NEAR(sabine_absorption(room), 0.161 * volume / (surface * 0.5), 1e-3);
  room.target_t60 = 0.0;
  EXPECT_EQ(sabine_absorption(room), 1.0);
}

TEST(Schroeder, ExponentialDecayRecovered) {
  for (double t : {0.3, 0.6, 1.2}) {
    std::vector<double> rir(static_cast<std::size_t>(1.5 * t * 16000));
    const auto noise = testing::gaussian_noise(rir.size(), 5);
    for (std::size_t n = 0; n < rir.size(); ++n) {
      rir[n] = noise[n] * std::exp(-static_cast<double>(n) / 16000.0 * 6.91 / t);
    }
    EXPECT_NEAR(schroeder_t60(rir), t, 0.02 * t);
  }
}

TEST(Schroeder, UnreachableRangeThrows) {
  // 100 near-equal samples: the curve ends at about -20 dB.
  std::vector<double> slow(100);
  for (std::size_t n = 0; n < slow.size(); ++n) slow[n] = std::exp(-1e-4 * static_cast<double>(n));
  EXPECT_THROW(schroeder_t60(slow), MeasurementError);
  EXPECT_THROW(schroeder_t60(std::vector<double>(100, 0.0)), MeasurementError);
  EXPECT_THROW(schroeder_t60(std::vector<double>{}), InputError);
}

TEST(Drr, ImpulseIsInfinite) {
  std::vector<double> rir(500, 0.0);
  rir[10] = 1.0;
  EXPECT_EQ(drr(rir), std::numeric_limits<double>::infinity());
}

TEST(Drr, EqualEnergyTailIsZeroDecibels) {
  std::vector<double> rir(4000, 0.0);
  rir[20] = 1.0;
  const std::size_t tail_start = 200, tail_len = 2000;
  for (std::size_t n = 0; n < tail_len; ++n) {
    rir[tail_start + n] = (n % 2 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(tail_len));
  }
  EXPECT_NEAR(drr(rir), 0.0, 0.5);
}

TEST(Spatialize, ImpulseReproducesBrir) {
  const auto brir = synth_anechoic_brir(25.0);
  MonoWaveform impulse;
  impulse.samples.assign(100, 0.0f);
  impulse.samples[0] = 1.0f;
  const auto out = spatialize(impulse, brir);
  ASSERT_EQ(out.size(), impulse.size() + brir.size() - 1);
  double peak = 0.0;
  for (std::size_t i = 0; i < brir.size(); ++i) {
    peak = std::max({peak, std::abs(brir.left[i]), std::abs(brir.right[i])});
  }
  const double scale = 0.95 / peak;
  for (std::size_t i = 0; i < brir.size(); ++i) {
    EXPECT_NEAR(out.left[i], scale * brir.left[i], 1e-6);
    EXPECT_NEAR(out.right[i], scale * brir.right[i], 1e-6);
  }
  float max_out = 0.0f;
  for (std::size_t i = 0; i < out.size(); ++i) {
    max_out = std::max({max_out, std::abs(out.left[i]), std::abs(out.right[i])});
  }
  EXPECT_NEAR(max_out, 0.95f, 1e-6f);
}

TEST(Spatialize, ZeroSourceGivesZeroOutput) {
  MonoWaveform zero;
  zero.samples.assign(800, 0.0f);
  const auto out = spatialize(zero, synth_anechoic_brir(-10.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out.left[i], 0.0f);
    EXPECT_EQ(out.right[i], 0.0f);
  }
}

TEST(Spatialize, GccModalLagMatchesItd) {
  const auto out = spatialize(white_noise_burst(1.0, 3), synth_anechoic_brir(45.0));
  std::map<int, int> votes;
  for (const auto& frame : dsp::frame_signal(out)) ++votes[dsp::gcc_phat_peak_lag(frame)];
  const auto mode = std::max_element(votes.begin(), votes.end(),
                                     [](auto& a, auto& b) { return a.second < b.second; });
  const int expected = static_cast<int>(std::lround(woodworth_itd(45.0) * 16000));
  EXPECT_EQ(mode->first, -expected);
}

TEST(Sources, EdgesPeakAndDeterminism) {
  for (auto make : {&white_noise_burst, &speech_shaped_noise}) {
    const auto a = make(0.5, 12);
    const auto b = make(0.5, 12);
    const auto c = make(0.5, 13);
    ASSERT_EQ(a.size(), 8000u);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NE(a.samples, c.samples);
    EXPECT_EQ(a.samples.front(), 0.0f);
    float peak = 0.0f;
    for (float v : a.samples) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 0.9f, 1e-6f);
  }
}

TEST(Sources, SpeechShapedNoiseIsLowPassTilted) {
  const auto x = speech_shaped_noise(1.0, 4);
  const std::vector<double> d(x.samples.begin(), x.samples.end());
  EXPECT_GT(std::norm(testing::dtft(d, 300, 16000)) + std::norm(testing::dtft(d, 310, 16000)),
            std::norm(testing::dtft(d, 6000, 16000)) + std::norm(testing::dtft(d, 6010, 16000)));
}

TEST(EnergyGate, TrimsSilentEdges) {
  MonoWaveform wave;
  wave.samples.assign(3200, 0.0f);
  const auto burst = white_noise_burst(0.5, 1);
  wave.samples.insert(wave.samples.end(), burst.samples.begin(), burst.samples.end());
  wave.samples.resize(wave.samples.size() + 3200, 0.0f);
  const auto gated = energy_gate(wave, 30.0);
  EXPECT_LT(gated.size(), wave.size());
  EXPECT_GE(gated.size(), 8000u - 640u);
  MonoWaveform silent;
  silent.samples.assign(1000, 0.0f);
  EXPECT_EQ(energy_gate(silent).samples, silent.samples);
}

// ---------------------------------------------------------------------------

TEST(Manifest, DefaultCountsPerRoom) {
  auto m = default_manifest("out", 1);
  expand_entries(m);
  ASSERT_EQ(m.rooms.size(), 5u);
  for (const auto& room : m.rooms) {
    EXPECT_EQ(m.select(room.id, Split::kTrain).size(), 888u) << room.id;
    EXPECT_EQ(m.select(room.id, Split::kValid).size(), 222u);
    EXPECT_EQ(m.select(room.id, Split::kTest).size(), 555u);
    std::map<int, int> per_class;
    for (const auto* e : m.select(room.id, Split::kTest))
      ++per_class[class_of_azimuth(e->azimuth_deg)];
    EXPECT_EQ(per_class.size(), 37u);
    for (const auto& [c, n] : per_class) EXPECT_EQ(n, 15);
  }
  const std::vector<double> targets{0.32, 0.47, 0.68, 0.89};
  for (std::size_t i = 0; i < targets.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.rooms[i + 1].spec.target_t60, targets[i]);
  }
}

TEST(Manifest, JsonRoundTrip) {
  auto m = default_manifest("somewhere", 99);
  m.split_counts = {2, 1, 1};
  expand_entries(m);
  m.measurements.push_back({"A", 0.32, 0.2, 0.33, -4.0});
  m.measurements.push_back(
      {"anechoic", 0.0, 1.0, std::nan(""), std::numeric_limits<double>::infinity()});
  const auto text = manifest_to_json(m);
  const auto back = manifest_from_json(text);
  EXPECT_EQ(manifest_to_json(back), text);
  EXPECT_EQ(back.entries.size(), m.entries.size());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_TRUE(std::isnan(back.measurements[1].measured_t60));
  EXPECT_THROW(manifest_from_json("{\"format\": \"other\"}"), Error);
}

TEST(Manifest, ValidationErrors) {
  auto m = default_manifest();
  m.split_counts[1] = 0;
  EXPECT_THROW(validate(m), ConfigError);
  m = default_manifest();
  m.rooms[1].id = "A/B";
  EXPECT_THROW(validate(m), ConfigError);
  m = default_manifest();
  m.rooms[2].id = m.rooms[1].id;
  EXPECT_THROW(validate(m), ConfigError);
}

std::map<std::string, std::vector<char>> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::vector<char>> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".wav") continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[std::filesystem::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in),
                                                                 {}};
  }
  return files;
}

TEST(MakeDataset, ByteIdenticalAcrossRuns) {
  testing::TempDir dir("dataset");
  std::vector<std::map<std::string, std::vector<char>>> trees;
  for (const char* sub : {"one", "two"}) {
    auto m = default_manifest((dir.path() / sub).string(), 5);
    m.rooms.resize(1);
    m.split_counts = {1, 1, 1};
    m.source.duration_s = 0.5;
    const auto report = make_dataset(m, 2);
    ASSERT_TRUE(report.ok());
    EXPECT_EQ(report.written, 111u);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / sub / "manifest.json"));
    trees.push_back(read_tree(dir.path() / sub));
  }
  EXPECT_EQ(trees[0].size(), 111u);
  EXPECT_EQ(trees[0], trees[1]);
}

TEST(MakeDataset, MissingCorpusFileIsReported) {
  testing::TempDir dir("corpus");
  auto m = default_manifest(dir.path().string(), 1);
  m.rooms.resize(1);
  m.split_counts = {1, 1, 1};
  m.source.kind = SourceKind::kWavCorpus;
  m.source.corpus = {(dir.path() / "absent.wav").string()};
  const auto report = make_dataset(m);
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(report.errors.size(), 111u);
  EXPECT_EQ(report.written, 0u);
}

TEST(MakeDataset, ExternalBrirImport) {
  testing::TempDir dir("external");
  const auto brir_dir = dir.path() / "brirs";
  std::filesystem::create_directories(brir_dir);
  const auto src = synth_anechoic_brir(-15.0);
  BinauralWaveform stereo;
  stereo.left.assign(src.left.begin(), src.left.end());
  stereo.right.assign(src.right.begin(), src.right.end());
  write_wav(brir_dir / "az-015.wav", stereo, WavEncoding::kFloat32);
  RoomCondition room{"ext", RoomKind::kExternal, {}, brir_dir.string()};
  const auto got = room_brir(room, -15.0);
  ASSERT_EQ(got.size(), src.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.left[i], src.left[i], 1e-7);
  EXPECT_THROW(room_brir(room, 20.0), Error);
}

}  // namespace
}  // namespace waveloc::sim
