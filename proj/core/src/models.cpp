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

#include "waveloc/models.hpp"

#include <algorithm>
#include <string>

namespace waveloc::models {

using nn::Activation;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kWavelocGtf: return "waveloc_gtf";
    case ModelKind::kWavelocConv: return "waveloc_conv";
    case ModelKind::kGccBaseline: return "gcc_baseline";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "waveloc_gtf" || text == "gtf") return ModelKind::kWavelocGtf;
  if (text == "waveloc_conv" || text == "conv") return ModelKind::kWavelocConv;
  if (text == "gcc_baseline" || text == "baseline") return ModelKind::kGccBaseline;
  throw InputError("unknown model kind '" + std::string(text) + "'");
}

LocalisationModel::LocalisationModel(ModelConfig config, nn::Network<float> network)
    : config_(config), network_(std::move(network)) {
  network_.require_classifier(kNumAzimuths);
}

namespace {

template <typename T>
void add_dense_head(nn::Network<T>& net, Activation hidden) {
  net.add(nn::dense(1024, hidden))
      .add(nn::dropout(0.5))
      .add(nn::dense(1024, hidden))
      .add(nn::dropout(0.5))
      .add(nn::dense(kNumAzimuths, Activation::kLinear))
      .add(nn::softmax());
}

template <typename T>
nn::Network<T> gtf_network(const ModelConfig& config) {
  if (config.gtf_band_kernels_2d == 0 || config.gtf_band_kernels_1d == 0) {
    throw ConfigError("GTF per-band kernel counts must be >= 1");
  }
  constexpr std::size_t bands = dsp::kGammatoneChannels;
  nn::Network<T> net(nn::Shape{1, kNumEars, kFrameLength});
  // The per-band stacks are grouped convolutions with one group per band,
  // so flattening yields the band outputs concatenated in band order.
  net.add(nn::time_conv(bands, dsp::kGammatoneLength, Activation::kLinear,
                        /*trainable=*/false, /*bias=*/false))
      .add(nn::peak_normalise())
      .add(nn::max_pool(2))
      .add(nn::ear_conv2d(bands * config.gtf_band_kernels_2d, 18, Activation::kRelu, bands))
      .add(nn::max_pool(4))
      .add(nn::conv1d(bands * config.gtf_band_kernels_1d, 6, Activation::kRelu, bands))
      .add(nn::max_pool(4))
      .add(nn::flatten_concat());
  add_dense_head(net, Activation::kRelu);
  net.initialise(config.seed);

  const auto bank = dsp::design_gammatone_bank();
  auto& kernel = net.layer(kGammatoneLayer).params()[0].value.data;
  std::transform(bank.kernels.begin(), bank.kernels.end(), kernel.begin(),
                 [](double v) { return static_cast<T>(static_cast<float>(v)); });
  return net;
}

template <typename T>
nn::Network<T> conv_network(const ModelConfig& config) {
  nn::Network<T> net(nn::Shape{1, kNumEars, kFrameLength});
  net.add(nn::time_conv(64, 256, Activation::kLinear))
      .add(nn::max_pool(2))
      .add(nn::ear_conv2d(64, 18, Activation::kRelu))
      .add(nn::max_pool(4))
      .add(nn::conv1d(64, 6, Activation::kRelu))
      .add(nn::max_pool(4))
      .add(nn::flatten_concat());
  add_dense_head(net, Activation::kRelu);
  net.initialise(config.seed);
  return net;
}

template <typename T>
nn::Network<T> baseline_network(const ModelConfig& config) {
  nn::Network<T> net(nn::Shape{1, 1, dsp::kGccFeatureSize});
  add_dense_head(net, Activation::kSigmoid);
  net.initialise(config.seed);
  return net;
}

void require_kind(const ModelConfig& config, ModelKind expected) {
  if (config.kind != expected) {
    throw ConfigError("builder for " + std::string(to_string(expected)) + " got config for " +
                      std::string(to_string(config.kind)));
  }
}

}  // namespace

template <typename T>
nn::Network<T> build_network(const ModelConfig& config) {
  switch (config.kind) {
    case ModelKind::kWavelocGtf: return gtf_network<T>(config);
    case ModelKind::kWavelocConv: return conv_network<T>(config);
    case ModelKind::kGccBaseline: return baseline_network<T>(config);
  }
  throw ConfigError("unknown model kind");
}

template nn::Network<float> build_network<float>(const ModelConfig&);
template nn::Network<double> build_network<double>(const ModelConfig&);

LocalisationModel build_waveloc_gtf(const ModelConfig& config) {
  require_kind(config, ModelKind::kWavelocGtf);
  return {config, build_network<float>(config)};
}

LocalisationModel build_waveloc_conv(const ModelConfig& config) {
  require_kind(config, ModelKind::kWavelocConv);
  return {config, build_network<float>(config)};
}

LocalisationModel build_gcc_baseline(const ModelConfig& config) {
  require_kind(config, ModelKind::kGccBaseline);
  return {config, build_network<float>(config)};
}

LocalisationModel build_model(const ModelConfig& config) {
  return {config, build_network<float>(config)};
}

std::vector<float> predict_batch(const LocalisationModel& model, std::span<const float> inputs,
                                 std::size_t batch) {
  return model.network().predict(inputs, batch);
}

Posterior predict_frame(const LocalisationModel& model, const dsp::BinauralFrame& frame) {
  if (!model.takes_waveform()) {
    throw InputError("gcc_baseline expects GCC-PHAT features, not a waveform frame");
  }
  const auto out = predict_batch(model, frame.data, 1);
  Posterior p;
  std::copy(out.begin(), out.end(), p.begin());
  return p;
}

Posterior predict_frame(const LocalisationModel& model, const dsp::GccFeature& feature) {
  if (model.takes_waveform()) {
    throw InputError(std::string(to_string(model.kind())) +
                     " expects a 2x320 waveform frame, not GCC-PHAT features");
  }
  const auto out = predict_batch(model, feature.values, 1);
  Posterior p;
  std::copy(out.begin(), out.end(), p.begin());
  return p;
}

int argmax_class(std::span<const float> posterior) {
  return static_cast<int>(std::max_element(posterior.begin(), posterior.end()) - posterior.begin());
}

}  // namespace waveloc::models
