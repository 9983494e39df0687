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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "waveloc/dsp.hpp"
#include "waveloc/models.hpp"
#include "waveloc/sim.hpp"

namespace {

using namespace waveloc;

dsp::BinauralFrame noise_frame(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  dsp::BinauralFrame frame;
  for (float& v : frame.data) v = normal(rng);
  return frame;
}

void BM_GammatoneBankDesign(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dsp::design_gammatone_bank());
}
BENCHMARK(BM_GammatoneBankDesign)->Unit(benchmark::kMillisecond);

void BM_GammatoneFilterFrame(benchmark::State& state) {
  const auto bank = dsp::design_gammatone_bank();
  const auto frame = noise_frame(1);
  const std::vector<double> x(frame.left().begin(), frame.left().end());
  for (auto _ : state) {
    for (std::size_t k = 0; k < dsp::kGammatoneChannels; ++k) {
      benchmark::DoNotOptimize(dsp::convolve_kernel(x, bank.kernel(k)));
    }
  }
}
BENCHMARK(BM_GammatoneFilterFrame)->Unit(benchmark::kMicrosecond);

void BM_GccPhat(benchmark::State& state) {
  const auto frame = noise_frame(2);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::gcc_phat(frame));
}
BENCHMARK(BM_GccPhat)->Unit(benchmark::kMicrosecond);

void BM_ModelForward(benchmark::State& state) {
  const auto kind = static_cast<models::ModelKind>(state.range(0));
  const auto model = models::build_model({kind, 6, 6, 1});
  const std::size_t batch = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal;
  std::vector<float> x(batch * model.input_size());
  for (float& v : x) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(models::predict_batch(model, x, batch));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_ModelForward)
    ->ArgsProduct({{static_cast<int>(models::ModelKind::kGccBaseline),
                    static_cast<int>(models::ModelKind::kWavelocGtf),
                    static_cast<int>(models::ModelKind::kWavelocConv)},
                   {1, 128}})
    ->Unit(benchmark::kMillisecond);

void BM_AnechoicBrir(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sim::synth_anechoic_brir(35.0));
}
BENCHMARK(BM_AnechoicBrir)->Unit(benchmark::kMicrosecond);

void BM_ImageSourceRir(benchmark::State& state) {
  sim::RoomSpec room;
  room.target_t60 = static_cast<double>(state.range(0)) / 100.0;
  sim::calibrated_absorption(room);
  for (auto _ : state) benchmark::DoNotOptimize(sim::image_source_rir(room, 35.0));
}
BENCHMARK(BM_ImageSourceRir)->Arg(32)->Arg(89)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
