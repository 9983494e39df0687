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

#include "waveloc/dataset.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "sim_detail.hpp"

namespace waveloc::sim {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kManifestFormat = "waveloc-manifest";

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<Enum, N>& values, std::string_view what) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = a ^ (b * 0xD1B54A32D192ED03ULL);
  return detail::splitmix64(state);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json room_to_json(const RoomCondition& r) {
  json j = {{"id", r.id}, {"kind", to_string(r.kind)}};
  if (r.kind == RoomKind::kImageSource) {
    j["target_t60"] = r.spec.target_t60;
    j["dimensions_m"] = r.spec.dimensions_m;
    j["head_position_m"] = r.spec.head_position_m;
    j["max_image_order"] = r.spec.max_image_order;
  }
  if (r.kind != RoomKind::kExternal) j["source_distance_m"] = r.spec.source_distance_m;
  if (r.kind == RoomKind::kExternal) j["brir_dir"] = r.brir_dir;
  return j;
}

RoomCondition room_from_json(const json& j) {
  RoomCondition r;
  r.id = j.at("id").get<std::string>();
  r.kind = parse_room_kind(j.at("kind").get<std::string>());
  r.spec.id = r.id;
  if (r.kind == RoomKind::kAnechoic) r.spec.target_t60 = 0.0;
  r.spec.target_t60 = j.value("target_t60", r.spec.target_t60);
  if (j.contains("dimensions_m"))
    r.spec.dimensions_m = j["dimensions_m"].get<std::array<double, 3>>();
  if (j.contains("head_position_m")) {
    r.spec.head_position_m = j["head_position_m"].get<std::array<double, 3>>();
  }
  r.spec.source_distance_m = j.value("source_distance_m", r.spec.source_distance_m);
  r.spec.max_image_order = j.value("max_image_order", r.spec.max_image_order);
  r.brir_dir = j.value("brir_dir", std::string{});
  return r;
}

std::string entry_path(const std::string& room, Split split, double azimuth, int index) {
  char name[64];
  std::snprintf(name, sizeof(name), "az%s_%02d.wav", azimuth_label(azimuth).c_str(), index);
  return room + "/" + std::string(to_string(split)) + "/" + name;
}

Brir load_external_brir(const RoomCondition& room, double azimuth_deg) {
  const fs::path file = fs::path(room.brir_dir) / ("az" + azimuth_label(azimuth_deg) + ".wav");
  const WavData wav = read_wav(file);
  if (wav.sample_rate != kSampleRate || wav.channels.size() != 2) {
    throw LoadError(file.string() + ": external BRIR must be 16 kHz stereo");
  }
  Brir brir;
  brir.azimuth_deg = azimuth_deg;
  brir.room_id = room.id;
  brir.left.assign(wav.channels[0].begin(), wav.channels[0].end());
  brir.right.assign(wav.channels[1].begin(), wav.channels[1].end());
  return brir;
}

}  // namespace

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kWhiteNoiseBurst: return "white_noise_burst";
    case SourceKind::kSpeechShapedNoise: return "speech_shaped_noise";
    case SourceKind::kWavCorpus: return "wav_corpus";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string_view to_string(RoomKind kind) {
  switch (kind) {
    case RoomKind::kAnechoic: return "anechoic";
    case RoomKind::kImageSource: return "image_source";
    case RoomKind::kExternal: return "external";
  }
  return "?";
}

SourceKind parse_source_kind(std::string_view text) {
  return parse_enum(text,
                    std::array{SourceKind::kWhiteNoiseBurst, SourceKind::kSpeechShapedNoise,
                               SourceKind::kWavCorpus},
                    "source kind");
}

Split parse_split(std::string_view text) { return parse_enum(text, kSplits, "split"); }

RoomKind parse_room_kind(std::string_view text) {
  return parse_enum(text,
                    std::array{RoomKind::kAnechoic, RoomKind::kImageSource, RoomKind::kExternal},
                    "room kind");
}

const RoomCondition& DatasetManifest::room(std::string_view id) const {
  for (const auto& r : rooms) {
    if (r.id == id) return r;
  }
  throw ConfigError("manifest has no room '" + std::string(id) + "'");
}

std::vector<const ManifestEntry*> DatasetManifest::select(std::string_view room_id,
                                                          Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.room_id == room_id && e.split == split) out.push_back(&e);
  }
  return out;
}

fs::path DatasetManifest::resolve(const ManifestEntry& entry) const {
  return fs::path(output_dir) / entry.path;
}

DatasetManifest default_manifest(std::string output_dir, std::uint64_t seed) {
  DatasetManifest m;
  m.output_dir = std::move(output_dir);
  m.seed = seed;
  RoomCondition anechoic;
  anechoic.id = "anechoic";
  anechoic.kind = RoomKind::kAnechoic;
  anechoic.spec.id = "anechoic";
  anechoic.spec.target_t60 = 0.0;
  m.rooms.push_back(anechoic);
  const std::array<std::pair<const char*, double>, 4> rooms{
      {{"A", 0.32}, {"B", 0.47}, {"C", 0.68}, {"D", 0.89}}};
  for (const auto& [id, t60] : rooms) {
    RoomCondition r;
    r.id = id;
    r.kind = RoomKind::kImageSource;
    r.spec.id = id;
    r.spec.target_t60 = t60;
    m.rooms.push_back(r);
  }
  return m;
}

void expand_entries(DatasetManifest& manifest) {
  manifest.entries.clear();
  for (const auto& room : manifest.rooms) {
    std::size_t corpus_slot = 0;
    for (std::size_t s = 0; s < kSplits.size(); ++s) {
      const Split split = kSplits[s];
      for (int c = 0; c < kNumAzimuths; ++c) {
        const double az = azimuth_of_class(c);
        for (int i = 0; i < manifest.split_counts[s]; ++i) {
          ManifestEntry e;
          e.room_id = room.id;
          e.split = split;
          e.azimuth_deg = az;
          e.index = i;
          e.seed = mix(mix(mix(manifest.seed, s + 1), static_cast<std::uint64_t>(c)),
                       static_cast<std::uint64_t>(i));
          if (manifest.source.kind == SourceKind::kWavCorpus && !manifest.source.corpus.empty()) {
            e.source_path = manifest.source.corpus[corpus_slot++ % manifest.source.corpus.size()];
          }
          e.path = entry_path(room.id, split, az, i);
          manifest.entries.push_back(std::move(e));
        }
      }
    }
  }
}

void validate(const DatasetManifest& m) {
  if (m.version != kManifestVersion) {
    throw ConfigError("manifest version " + std::to_string(m.version) + " is not supported");
  }
  if (m.sample_rate != kSampleRate) throw ConfigError("manifest sample_rate must be 16000");
  if (m.rooms.empty()) throw ConfigError("manifest lists no rooms");
  std::map<std::string, int> ids;
  for (const auto& r : m.rooms) {
    if (r.id.empty() || r.id.find_first_of("/\\") != std::string::npos) {
      throw ConfigError("room id '" + r.id + "' is not a valid directory name");
    }
    if (ids[r.id]++) throw ConfigError("duplicate room id '" + r.id + "'");
    try {
      if (r.kind == RoomKind::kImageSource) validate_room(r.spec, 0.0);
      if (r.kind == RoomKind::kExternal && r.brir_dir.empty()) {
        throw ConfigError("external room needs brir_dir");
      }
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  for (int count : m.split_counts) {
    if (count <= 0) throw ConfigError("every split needs at least one signal per azimuth");
  }
  if (m.source.kind == SourceKind::kWavCorpus) {
    if (m.source.corpus.empty()) throw ConfigError("wav_corpus source needs corpus files");
  } else if (!(m.source.duration_s >= 0.5)) {
    throw ConfigError("source duration must be at least 0.5 s");
  }
  for (const auto& e : m.entries) {
    if (!ids.count(e.room_id))
      throw ConfigError("entry refers to unknown room '" + e.room_id + "'");
    try {
      class_of_azimuth(e.azimuth_deg);
    } catch (const InputError& err) {
      throw ConfigError(err.what());
    }
  }
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format"] = kManifestFormat;
  j["version"] = m.version;
  j["sample_rate"] = m.sample_rate;
  j["seed"] = m.seed;
  j["output_dir"] = m.output_dir;
  j["encoding"] = m.encoding == WavEncoding::kPcm16 ? "pcm16" : "float32";
  j["source"] = {{"kind", to_string(m.source.kind)},
                 {"duration_s", m.source.duration_s},
                 {"corpus", m.source.corpus},
                 {"gate_db", m.source.gate_db}};
  j["split_counts"] = {
      {"train", m.split_counts[0]}, {"valid", m.split_counts[1]}, {"test", m.split_counts[2]}};
  j["rooms"] = json::array();
  for (const auto& r : m.rooms) j["rooms"].push_back(room_to_json(r));
  j["entries"] = json::array();
  for (const auto& e : m.entries) {
    json je = {{"room", e.room_id},
               {"split", to_string(e.split)},
               {"azimuth_deg", e.azimuth_deg},
               {"index", e.index},
               {"seed", e.seed},
               {"path", e.path}};
    if (!e.source_path.empty()) je["source_path"] = e.source_path;
    j["entries"].push_back(std::move(je));
  }
  j["measurements"] = json::array();
  for (const auto& r : m.measurements) {
    j["measurements"].push_back({{"room", r.room_id},
                                 {"target_t60", r.target_t60},
                                 {"absorption", r.absorption},
                                 {"measured_t60", number_or_null(r.measured_t60)},
                                 {"measured_drr", number_or_null(r.measured_drr)}});
  }
  return j.dump(1);
}

DatasetManifest manifest_from_json(std::string_view text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != kManifestFormat) {
      throw LoadError("not a waveloc manifest (missing format tag)");
    }
    m.version = j.at("version").get<int>();
    m.sample_rate = j.value("sample_rate", kSampleRate);
    m.seed = j.value("seed", std::uint64_t{0});
    m.output_dir = j.value("output_dir", std::string("data"));
    const std::string enc = j.value("encoding", std::string("pcm16"));
    if (enc != "pcm16" && enc != "float32") throw LoadError("unknown encoding '" + enc + "'");
    m.encoding = enc == "pcm16" ? WavEncoding::kPcm16 : WavEncoding::kFloat32;
    if (j.contains("source")) {
      const json& s = j["source"];
      m.source.kind = parse_source_kind(s.value("kind", std::string("speech_shaped_noise")));
      m.source.duration_s = s.value("duration_s", m.source.duration_s);
      m.source.corpus = s.value("corpus", std::vector<std::string>{});
      m.source.gate_db = s.value("gate_db", m.source.gate_db);
    }
    if (j.contains("split_counts")) {
      const json& c = j["split_counts"];
      m.split_counts = {c.value("train", 24), c.value("valid", 6), c.value("test", 15)};
    }
    for (const auto& r : j.at("rooms")) m.rooms.push_back(room_from_json(r));
    for (const auto& je : j.value("entries", json::array())) {
      ManifestEntry e;
      e.room_id = je.at("room").get<std::string>();
      e.split = parse_split(je.at("split").get<std::string>());
      e.azimuth_deg = je.at("azimuth_deg").get<double>();
      e.index = je.value("index", 0);
      e.seed = je.value("seed", std::uint64_t{0});
      e.source_path = je.value("source_path", std::string{});
      e.path = je.at("path").get<std::string>();
      m.entries.push_back(std::move(e));
    }
    for (const auto& jm : j.value("measurements", json::array())) {
      RoomMeasurement r;
      r.room_id = jm.at("room").get<std::string>();
      r.target_t60 = jm.value("target_t60", 0.0);
      r.absorption = jm.value("absorption", 1.0);
      r.measured_t60 = jm["measured_t60"].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                    : jm["measured_t60"].get<double>();
      r.measured_drr = jm["measured_drr"].is_null() ? std::numeric_limits<double>::infinity()
                                                    : jm["measured_drr"].get<double>();
      m.measurements.push_back(r);
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  }
  return m;
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  DatasetManifest m = manifest_from_json(buffer.str());
  const fs::path base = path.parent_path();
  if (fs::path(m.output_dir).is_relative())
    m.output_dir = (base / m.output_dir).lexically_normal().string();
  for (auto& r : m.rooms) {
    if (!r.brir_dir.empty() && fs::path(r.brir_dir).is_relative()) {
      r.brir_dir = (base / r.brir_dir).lexically_normal().string();
    }
  }
  for (auto& f : m.source.corpus) {
    if (fs::path(f).is_relative()) f = (base / f).lexically_normal().string();
  }
  for (auto& e : m.entries) {
    if (!e.source_path.empty() && fs::path(e.source_path).is_relative()) {
      e.source_path = (base / e.source_path).lexically_normal().string();
    }
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << manifest_to_json(manifest) << '\n';
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

Brir room_brir(const RoomCondition& room, double azimuth_deg) {
  switch (room.kind) {
    case RoomKind::kAnechoic: {
      Brir b = synth_anechoic_brir(azimuth_deg, room.spec.source_distance_m);
      b.room_id = room.id;
      return b;
    }
    case RoomKind::kImageSource: {
      RoomSpec spec = room.spec;
      spec.id = room.id;
      return image_source_rir(spec, azimuth_deg);
    }
    case RoomKind::kExternal: return load_external_brir(room, azimuth_deg);
  }
  throw ConfigError("unknown room kind");
}

MonoWaveform render_source(const SourceConfig& source, const ManifestEntry& entry) {
  switch (source.kind) {
    case SourceKind::kWhiteNoiseBurst: return white_noise_burst(source.duration_s, entry.seed);
    case SourceKind::kSpeechShapedNoise: return speech_shaped_noise(source.duration_s, entry.seed);
    case SourceKind::kWavCorpus: {
      if (entry.source_path.empty()) throw ConfigError("corpus entry has no source file");
      const MonoWaveform wave = read_mono_wav(entry.source_path);
      if (wave.sample_rate != kSampleRate) {
        throw InputError(entry.source_path + ": corpus files must be 16 kHz");
      }
      return energy_gate(wave, source.gate_db);
    }
  }
  throw ConfigError("unknown source kind");
}

DatasetReport make_dataset(DatasetManifest& manifest, int jobs) {
  validate(manifest);
  if (manifest.entries.empty()) expand_entries(manifest);
  validate(manifest);

  // One BRIR per (room, azimuth) in use.
  std::vector<std::pair<std::size_t, int>> keys;
  std::map<std::pair<std::string, int>, std::size_t> slot;
  for (const auto& e : manifest.entries) {
    const int c = class_of_azimuth(e.azimuth_deg);
    if (slot.emplace(std::make_pair(e.room_id, c), keys.size()).second) {
      std::size_t r = 0;
      while (manifest.rooms[r].id != e.room_id) ++r;
      keys.emplace_back(r, c);
    }
  }
  std::vector<Brir> brirs(keys.size());
  std::vector<std::string> brir_errors(keys.size());
  parallel_for(keys.size(), jobs, [&](std::size_t k) {
    const auto& room = manifest.rooms[keys[k].first];
    try {
      brirs[k] = room_brir(room, azimuth_of_class(keys[k].second));
      measure(brirs[k]);
    } catch (const std::exception& e) {
      brir_errors[k] =
          room.id + " az " + azimuth_label(azimuth_of_class(keys[k].second)) + ": " + e.what();
    }
  });

  manifest.measurements.clear();
  for (std::size_t r = 0; r < manifest.rooms.size(); ++r) {
    const auto& room = manifest.rooms[r];
    RoomMeasurement meas;
    meas.room_id = room.id;
    meas.target_t60 = room.kind == RoomKind::kExternal ? 0.0 : room.spec.target_t60;
    if (room.kind == RoomKind::kImageSource) {
      RoomSpec spec = room.spec;
      spec.id = room.id;
      meas.absorption = calibrated_absorption(spec);
    }
    double t60 = 0.0, drr_sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (keys[k].first != r || !brir_errors[k].empty()) continue;
      t60 += brirs[k].measured_t60;
      drr_sum += brirs[k].measured_drr;
      ++n;
    }
    if (n == 0) continue;
    meas.measured_t60 = t60 / n;
    meas.measured_drr = drr_sum / n;
    manifest.measurements.push_back(meas);
  }

  DatasetReport report;
  std::vector<std::string> errors(manifest.entries.size());
  std::atomic<std::size_t> written{0};
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    const std::size_t k = slot.at({e.room_id, class_of_azimuth(e.azimuth_deg)});
    if (!brir_errors[k].empty()) {
      errors[i] = e.path + ": " + brir_errors[k];
      return;
    }
    try {
      const fs::path out = manifest.resolve(e);
      fs::create_directories(out.parent_path());
      write_wav(out, spatialize(render_source(manifest.source, e), brirs[k]), manifest.encoding);
      ++written;
    } catch (const std::exception& ex) {
      errors[i] = e.path + ": " + ex.what();
    }
  });
  report.written = written;
  for (auto& e : errors) {
    if (!e.empty()) report.errors.push_back(std::move(e));
  }

  DatasetManifest resolved = manifest;
  resolved.output_dir = ".";
  try {
    write_manifest(resolved, fs::path(manifest.output_dir) / "manifest.json");
  } catch (const std::exception& e) {
    report.errors.push_back(std::string("manifest: ") + e.what());
  }
  return report;
}

}  // namespace waveloc::sim
