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

#include <cmath>
#include <fstream>
#include <iterator>

#include "test_support.hpp"
#include "waveloc/models.hpp"

namespace waveloc::models {
namespace {

// Weights plus biases of a dense or conv layer.
std::size_t affine(std::size_t fan_in, std::size_t units) { return fan_in * units + units; }

std::size_t head(std::size_t flat) {
  return affine(flat, 1024) + affine(1024, 1024) + affine(1024, 37);
}

TEST(ParameterCount, GtfMatchesClosedForm) {
  const auto model = build_waveloc_gtf({ModelKind::kWavelocGtf, 6, 6, 1});
  // 320 -> pool 2 -> 160 -> pool 4 -> 40 -> pool 4 -> 10 samples per band stack.
  const std::size_t band_2d = affine(2 * 18, 6), band_1d = affine(6 * 6, 6);
  const std::size_t expected = 32 * (band_2d + band_1d) + head(32 * 6 * 10);
  EXPECT_EQ(expected, 3068837u);
  EXPECT_EQ(model.network().parameter_count(), expected);
  EXPECT_EQ(model.network().parameter_count(false), expected + 32 * 320);
}

TEST(ParameterCount, ConvAndBaseline) {
  const auto conv = build_waveloc_conv({ModelKind::kWavelocConv});
  const auto& first = conv.network().layer(0).params()[0].value.shape;
  EXPECT_EQ(first, (std::vector<std::size_t>{64, 1, 1, 256}));
  const auto& net = conv.network();
  std::size_t flat = 0;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    if (net.layer(i).kind() == nn::LayerKind::kFlattenConcat)
      flat = net.layer(i).output_shape().size();
  }
  EXPECT_EQ(flat, 640u);
  EXPECT_EQ(net.parameter_count(),
            affine(256, 64) + affine(64 * 2 * 18, 64) + affine(64 * 6, 64) + head(640));

  const auto base = build_gcc_baseline({ModelKind::kGccBaseline});
  EXPECT_EQ(base.network().parameter_count(), head(37));
  EXPECT_EQ(head(37), 1126437u);
  EXPECT_EQ(base.input_size(), 37u);
}

TEST(ParameterCount, GtfBandKernelsScale) {
  const auto model = build_waveloc_gtf({ModelKind::kWavelocGtf, 2, 3, 0});
  const std::size_t expected = 32 * (affine(2 * 18, 2) + affine(2 * 6, 3)) + head(32 * 3 * 10);
  EXPECT_EQ(model.network().parameter_count(), expected);
  EXPECT_THROW(build_waveloc_gtf({ModelKind::kWavelocGtf, 0, 6, 0}), ConfigError);
}

TEST(Builders, RejectMismatchedKind) {
  EXPECT_THROW(build_waveloc_gtf({ModelKind::kWavelocConv}), ConfigError);
  EXPECT_THROW(build_gcc_baseline({ModelKind::kWavelocGtf}), ConfigError);
  EXPECT_EQ(parse_model_kind("conv"), ModelKind::kWavelocConv);
  EXPECT_EQ(parse_model_kind(to_string(ModelKind::kGccBaseline)), ModelKind::kGccBaseline);
  EXPECT_THROW(parse_model_kind("resnet"), InputError);
}

TEST(Gtf, FirstLayerIsTheFrozenGammatoneBank) {
  const auto model = build_waveloc_gtf({ModelKind::kWavelocGtf, 6, 6, 3});
  const auto& layer = model.network().layer(kGammatoneLayer);
  ASSERT_EQ(layer.params().size(), 1u);
  const auto& p = layer.params()[0];
  EXPECT_FALSE(p.trainable);
  EXPECT_EQ(p.value.shape, (std::vector<std::size_t>{32, 1, 1, 320}));
  const auto bank = dsp::design_gammatone_bank();
  ASSERT_EQ(p.value.size(), bank.kernels.size());
  for (std::size_t i = 0; i < bank.kernels.size(); ++i) {
    ASSERT_EQ(p.value.data[i], static_cast<float>(bank.kernels[i]));
  }
}

TEST(Gtf, OutputIsInvariantToInputGain) {
  const auto model = build_waveloc_gtf({ModelKind::kWavelocGtf, 6, 6, 4});
  const auto noise = testing::gaussian_noise(640, 6);
  dsp::BinauralFrame frame, loud;
  for (std::size_t i = 0; i < 640; ++i) {
    frame.data[i] = static_cast<float>(0.1 * noise[i]);
    loud.data[i] = static_cast<float>(0.8 * noise[i]);
  }
  const auto a = predict_frame(model, frame);
  const auto b = predict_frame(model, loud);
  float sum = 0.0f;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(a[k], b[k], 1e-5f);
    sum += a[k];
  }
  EXPECT_NEAR(sum, 1.0f, 1e-5f);
}

TEST(PredictFrame, RejectsWrongFeatureKind) {
  const auto gtf = build_waveloc_gtf({ModelKind::kWavelocGtf, 1, 1, 0});
  const auto base = build_gcc_baseline({ModelKind::kGccBaseline});
  EXPECT_THROW(predict_frame(gtf, dsp::GccFeature{}), InputError);
  EXPECT_THROW(predict_frame(base, dsp::BinauralFrame{}), InputError);
  EXPECT_NO_THROW(predict_frame(base, dsp::GccFeature{}));
}

TEST(ArgmaxClass, FirstMaximumWins) {
  const std::vector<float> p{0.1f, 0.4f, 0.4f, 0.1f};
  EXPECT_EQ(argmax_class(p), 1);
}

TEST(Checkpoint, TensorNamesAreZeroPadded) {
  EXPECT_EQ(tensor_name(0, "kernel"), "L00.kernel");
  EXPECT_EQ(tensor_name(12, "bias"), "L12.bias");
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

class CheckpointRoundTrip : public ::testing::TestWithParam<ModelKind> {};

TEST_P(CheckpointRoundTrip, WeightsAndPredictionsAreBitIdentical) {
  testing::TempDir dir("ckpt");
  ModelConfig config{GetParam(), 2, 3, 77};
  auto model = build_model(config);
  model.metadata.epochs_run = 7;
  model.metadata.best_validation_loss = 1.25;
  const auto path = dir.path() / "m.wloc";
  save_checkpoint(model, path);
  const auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.kind(), model.kind());
  EXPECT_EQ(loaded.config().gtf_band_kernels_2d, config.gtf_band_kernels_2d);
  EXPECT_EQ(loaded.config().seed, 77u);
  EXPECT_EQ(loaded.metadata.epochs_run, 7);
  EXPECT_EQ(loaded.metadata.best_validation_loss, 1.25);
  for (std::size_t i = 0; i < model.network().num_layers(); ++i) {
    const auto& a = model.network().layer(i).params();
    const auto& b = loaded.network().layer(i).params();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
      EXPECT_EQ(a[p].value.data, b[p].value.data);
      EXPECT_EQ(a[p].trainable, b[p].trainable);
    }
  }
  const auto noise = testing::gaussian_noise(model.input_size(), 1);
  const std::vector<float> x(noise.begin(), noise.end());
  EXPECT_EQ(predict_batch(model, x, 1), predict_batch(loaded, x, 1));
  // Saving the loaded model reproduces the file byte for byte.
  save_checkpoint(loaded, dir.path() / "again.wloc");
  EXPECT_EQ(slurp(path), slurp(dir.path() / "again.wloc"));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, CheckpointRoundTrip,
                         ::testing::Values(ModelKind::kWavelocGtf, ModelKind::kWavelocConv,
                                           ModelKind::kGccBaseline));

TEST(Checkpoint, CorruptionIsALoadError) {
  testing::TempDir dir("ckpt_bad");
  const auto model = build_gcc_baseline({ModelKind::kGccBaseline});
  const auto path = dir.path() / "m.wloc";
  save_checkpoint(model, path);
  const auto bytes = slurp(path);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  spit(dir.path() / "magic.wloc", bad_magic);
  EXPECT_THROW(load_checkpoint(dir.path() / "magic.wloc"), LoadError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 100);
  spit(dir.path() / "short.wloc", truncated);
  EXPECT_THROW(load_checkpoint(dir.path() / "short.wloc"), LoadError);

  auto trailing = bytes;
  trailing.push_back('\0');
  spit(dir.path() / "long.wloc", trailing);
  EXPECT_THROW(load_checkpoint(dir.path() / "long.wloc"), LoadError);

  auto version = bytes;
  version[4] = 9;
  spit(dir.path() / "version.wloc", version);
  EXPECT_THROW(load_checkpoint(dir.path() / "version.wloc"), LoadError);

  EXPECT_THROW(load_checkpoint(dir.path() / "missing.wloc"), LoadError);
}

}  // namespace
}  // namespace waveloc::models
