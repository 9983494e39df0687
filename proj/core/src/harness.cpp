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

#include "waveloc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace waveloc::harness {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kEvalBatch = 256;

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = a ^ (b * 0xD1B54A32D192ED03ULL);
  return splitmix(state);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void zero(nn::Gradients<float>& grads) {
  for (auto& layer : grads) {
    for (auto& t : layer) std::fill(t.data.begin(), t.data.end(), 0.0f);
  }
}

std::vector<std::size_t> pick_frames(std::size_t available, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (cap == 0 || available <= cap) {
    idx.resize(available);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }
  for (std::size_t j = 0; j < cap; ++j) idx.push_back(j * available / cap);
  return idx;
}

}  // namespace

std::string_view to_string(TrainingMode mode) {
  return mode == TrainingMode::kMct ? "mct" : "anechoic_only";
}

TrainingMode parse_training_mode(std::string_view text) {
  if (text == "anechoic" || text == "anechoic_only") return TrainingMode::kAnechoicOnly;
  if (text == "mct") return TrainingMode::kMct;
  throw ConfigError("unknown training mode '" + std::string(text) + "'");
}

std::vector<std::string> training_rooms(const ExperimentSpec& spec) {
  spec.manifest.room(spec.anechoic_room);
  if (spec.mode == TrainingMode::kAnechoicOnly) return {spec.anechoic_room};
  if (spec.test_room.empty()) throw ConfigError("mct training needs a test room to hold out");
  if (spec.test_room == spec.anechoic_room) {
    throw ConfigError("mct cannot hold out the anechoic room");
  }
  spec.manifest.room(spec.test_room);
  std::vector<std::string> rooms{spec.anechoic_room};
  for (const auto& r : spec.manifest.rooms) {
    if (r.id != spec.test_room && r.id != spec.anechoic_room) rooms.push_back(r.id);
  }
  return rooms;
}

void frame_input(models::ModelKind kind, const dsp::BinauralFrame& frame, std::span<float> out) {
  if (kind == models::ModelKind::kGccBaseline) {
    const auto feature = dsp::gcc_phat(frame);
    std::copy(feature.values.begin(), feature.values.end(), out.begin());
  } else {
    std::copy(frame.data.begin(), frame.data.end(), out.begin());
  }
}

FrameSet load_frames(const sim::DatasetManifest& manifest, const std::vector<std::string>& rooms,
                     sim::Split split, models::ModelKind kind, std::size_t max_frames_per_file,
                     int jobs) {
  std::vector<const sim::ManifestEntry*> entries;
  for (const auto& room : rooms) {
    const auto sel = manifest.select(room, split);
    entries.insert(entries.end(), sel.begin(), sel.end());
  }
  if (entries.empty()) {
    throw ConfigError("no " + std::string(sim::to_string(split)) +
                      " entries for the requested rooms");
  }
  FrameSet set;
  set.input_size =
      kind == models::ModelKind::kGccBaseline ? dsp::kGccFeatureSize : kNumEars * kFrameLength;
  std::vector<FrameSet> parts(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto& e = *entries[i];
    const BinauralWaveform wave = read_binaural_wav(manifest.resolve(e));
    const auto picks = pick_frames(dsp::frame_count(wave.size()), max_frames_per_file);
    FrameSet& part = parts[i];
    part.inputs.resize(picks.size() * set.input_size);
    part.labels.assign(picks.size(), class_of_azimuth(e.azimuth_deg));
    dsp::BinauralFrame frame;
    for (std::size_t j = 0; j < picks.size(); ++j) {
      dsp::copy_frame(wave, picks[j], frame.data);
      frame_input(kind, frame, {part.inputs.data() + j * set.input_size, set.input_size});
    }
  });
  std::size_t total = 0;
  for (const auto& p : parts) total += p.labels.size();
  set.inputs.reserve(total * set.input_size);
  set.labels.reserve(total);
  for (auto& p : parts) {
    set.inputs.insert(set.inputs.end(), p.inputs.begin(), p.inputs.end());
    set.labels.insert(set.labels.end(), p.labels.begin(), p.labels.end());
    p = {};
  }
  if (set.labels.empty()) throw ConfigError("selected files contain no complete frames");
  return set;
}

double mean_loss(const models::LocalisationModel& model, const FrameSet& set) {
  const auto& net = model.network();
  nn::Trace<float> trace;
  double total = 0.0;
  for (std::size_t start = 0; start < set.size(); start += kEvalBatch) {
    const std::size_t b = std::min(kEvalBatch, set.size() - start);
    net.forward({set.inputs.data() + start * set.input_size, b * set.input_size}, b,
                nn::RunOptions{nn::Mode::kInfer, 0}, trace);
    total += static_cast<double>(net.loss(trace, {set.labels.data() + start, b})) *
             static_cast<double>(b);
  }
  return total / static_cast<double>(set.size());
}

TrainResult train_model(models::LocalisationModel model, const FrameSet& train_set,
                        const FrameSet& valid_set, const nn::TrainingSchedule& schedule,
                        std::uint64_t seed, const EpochCallback& on_epoch) {
  if (train_set.size() == 0 || valid_set.size() == 0) {
    throw ConfigError("training and validation sets must not be empty");
  }
  if (train_set.input_size != model.input_size() || valid_set.input_size != model.input_size()) {
    throw ConfigError("frame set input size does not match the model");
  }
  if (schedule.batch_size == 0 || schedule.max_epochs <= 0) {
    throw ConfigError("schedule needs batch_size >= 1 and max_epochs >= 1");
  }
  const auto t_start = Clock::now();
  auto& net = model.network();
  nn::Adam<float> adam(nn::AdamConfig{schedule.base_lr});
  nn::Gradients<float> grads = net.zero_gradients();
  nn::Trace<float> trace;
  std::vector<float> batch_inputs;
  std::vector<int> batch_labels;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t shuffle_state = mix(seed, 0x5348);

  TrainResult result{model, {}, 0, train_set.size(), 0.0};
  nn::Network<float> best = net;
  std::vector<double> valid_history;
  std::size_t best_index = 0;

  for (int epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[splitmix(shuffle_state) % i]);
    }
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size, ++batch_index) {
      const std::size_t b = std::min(schedule.batch_size, order.size() - start);
      batch_inputs.resize(b * train_set.input_size);
      batch_labels.resize(b);
      for (std::size_t k = 0; k < b; ++k) {
        const std::size_t src = order[start + k];
        std::copy_n(train_set.inputs.data() + src * train_set.input_size, train_set.input_size,
                    batch_inputs.data() + k * train_set.input_size);
        batch_labels[k] = train_set.labels[src];
      }
      const nn::RunOptions opts{nn::Mode::kTrain,
                                mix(mix(seed, static_cast<std::uint64_t>(epoch)), batch_index)};
      net.forward(batch_inputs, b, opts, trace);
      zero(grads);
      const double loss = net.backward(trace, batch_labels, grads);
      if (!std::isfinite(loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(batch_index) + " (lr " + std::to_string(adam.learning_rate()) +
                    ")");
      }
      adam.step(net, grads);
      loss_sum += loss * static_cast<double>(b);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.valid_loss = mean_loss(model, valid_set);
    rec.learning_rate = adam.learning_rate();
    if (!std::isfinite(rec.valid_loss)) {
      throw Error("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    valid_history.push_back(rec.valid_loss);
    const nn::ScheduleDecision decision = nn::schedule_step(schedule, valid_history);
    if (decision.improved) {
      best = net;
      best_index = decision.best_epoch;
    }
    rec.seconds = seconds_since(t_epoch);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    adam.set_learning_rate(decision.learning_rate);
    if (decision.action == nn::ScheduleAction::kStop) break;
  }

  net = best;
  model.metadata.epochs_run = static_cast<int>(result.history.size());
  model.metadata.best_validation_loss = valid_history[best_index];
  result.model = std::move(model);
  result.best_epoch = best_index + 1;
  result.seconds = seconds_since(t_start);
  return result;
}

TrainResult train(const ExperimentSpec& spec, const EpochCallback& on_epoch) {
  sim::validate(spec.manifest);
  const auto rooms = training_rooms(spec);
  const FrameSet train_set = load_frames(spec.manifest, rooms, sim::Split::kTrain, spec.model.kind,
                                         spec.max_frames_per_file, spec.jobs);
  const FrameSet valid_set = load_frames(spec.manifest, rooms, sim::Split::kValid, spec.model.kind,
                                         spec.max_frames_per_file, spec.jobs);
  models::ModelConfig config = spec.model;
  config.seed = spec.seed;
  return train_model(models::build_model(config), train_set, valid_set, spec.schedule,
                     mix(spec.seed, 0x7452), on_epoch);
}

models::Posterior average_posteriors(std::span<const float> posteriors, std::size_t frames) {
  if (frames == 0 || posteriors.size() != frames * kNumAzimuths) {
    throw InputError("average_posteriors: expected frames x 37 values");
  }
  std::array<double, kNumAzimuths> acc{};
  for (std::size_t f = 0; f < frames; ++f) {
    for (int c = 0; c < kNumAzimuths; ++c) acc[c] += posteriors[f * kNumAzimuths + c];
  }
  models::Posterior out;
  for (int c = 0; c < kNumAzimuths; ++c) {
    out[c] = static_cast<float>(acc[c] / static_cast<double>(frames));
  }
  return out;
}

double chunk_estimate(std::span<const float> posteriors, std::size_t frames) {
  const auto mean = average_posteriors(posteriors, frames);
  return azimuth_of_class(models::argmax_class(mean));
}

double rmse(std::span<const ChunkResult> chunks) {
  if (chunks.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& c : chunks) {
    const double e = c.estimated_azimuth - c.true_azimuth;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(chunks.size()));
}

std::vector<ChunkResult> evaluate_signal(const models::LocalisationModel& model,
                                         const BinauralWaveform& wave, double true_azimuth) {
  const std::size_t frames = dsp::frame_count(wave.size());
  const std::size_t chunks = frames / kFramesPerChunk;
  std::vector<ChunkResult> out;
  if (chunks == 0) return out;
  const std::size_t width = model.input_size();
  const std::size_t used = chunks * kFramesPerChunk;
  std::vector<float> inputs(used * width);
  dsp::BinauralFrame frame;
  for (std::size_t f = 0; f < used; ++f) {
    dsp::copy_frame(wave, f, frame.data);
    frame_input(model.kind(), frame, {inputs.data() + f * width, width});
  }
  const auto posteriors = models::predict_batch(model, inputs, used);
  for (std::size_t c = 0; c < chunks; ++c) {
    ChunkResult r;
    r.chunk_index = c;
    r.true_azimuth = true_azimuth;
    r.mean_posterior = average_posteriors(
        {posteriors.data() + c * kFramesPerChunk * kNumAzimuths, kFramesPerChunk * kNumAzimuths},
        kFramesPerChunk);
    r.estimated_azimuth = azimuth_of_class(models::argmax_class(r.mean_posterior));
    out.push_back(r);
  }
  return out;
}

EvaluationReport evaluate_chunks(const models::LocalisationModel& model,
                                 const sim::DatasetManifest& manifest, std::string_view room,
                                 sim::Split split, int jobs) {
  manifest.room(room);
  const auto entries = manifest.select(room, split);
  if (entries.empty()) {
    throw ConfigError("no " + std::string(sim::to_string(split)) + " entries for room " +
                      std::string(room));
  }
  std::vector<std::vector<ChunkResult>> per_file(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const BinauralWaveform wave = read_binaural_wav(manifest.resolve(*entries[i]));
    per_file[i] = evaluate_signal(model, wave, entries[i]->azimuth_deg);
    for (auto& c : per_file[i]) c.file = entries[i]->path;
  });
  EvaluationReport report;
  report.files = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (per_file[i].empty()) {
      ++report.skipped_files;
      report.warnings.push_back(entries[i]->path + ": shorter than one chunk, skipped");
    }
    report.chunks.insert(report.chunks.end(), per_file[i].begin(), per_file[i].end());
  }
  report.rmse_deg = rmse(report.chunks);
  return report;
}

std::string chunks_to_csv(std::span<const ChunkResult> chunks) {
  std::ostringstream out;
  out << "file,chunk,true_azimuth,estimated_azimuth";
  for (int c = 0; c < kNumAzimuths; ++c) out << ",p" << azimuth_label(azimuth_of_class(c));
  out << '\n';
  out.precision(7);
  for (const auto& r : chunks) {
    out << r.file << ',' << r.chunk_index << ',' << r.true_azimuth << ',' << r.estimated_azimuth;
    for (float p : r.mean_posterior) out << ',' << p;
    out << '\n';
  }
  return out.str();
}

}  // namespace waveloc::harness
