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

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "json.hpp"
#include "waveloc/models.hpp"

namespace waveloc::models {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are stored little-endian");

constexpr char kMagic[4] = {'W', 'L', 'O', 'C'};

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"gtf_band_kernels_2d", c.gtf_band_kernels_2d},
          {"gtf_band_kernels_1d", c.gtf_band_kernels_1d},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  c.gtf_band_kernels_2d = j.at("gtf_band_kernels_2d").get<std::size_t>();
  c.gtf_band_kernels_1d = j.at("gtf_band_kernels_1d").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string tensor_name(std::size_t layer, std::string_view role) {
  std::string name = layer < 10 ? "L0" : "L";
  name += std::to_string(layer);
  name += '.';
  name += role;
  return name;
}

void save_checkpoint(const LocalisationModel& model, const std::filesystem::path& path) {
  const auto& net = model.network();
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    for (const auto& p : net.layer(i).params()) {
      tensors.push_back({{"name", tensor_name(i, p.role)},
                         {"shape", p.value.shape},
                         {"offset", offset},
                         {"trainable", p.trainable}});
      offset += p.value.size() * sizeof(float);
    }
  }
  json meta = {{"epochs_run", model.metadata.epochs_run}};
  if (std::isfinite(model.metadata.best_validation_loss)) {
    meta["best_validation_loss"] = model.metadata.best_validation_loss;
  } else {
    meta["best_validation_loss"] = nullptr;
  }
  const json header = {{"model_kind", to_string(model.kind())},
                       {"config", config_to_json(model.config())},
                       {"tensors", tensors},
                       {"payload_bytes", offset},
                       {"metadata", meta}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t header_len = text.size();
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
      for (const auto& p : net.layer(i).params()) {
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(float)));
      }
    }
    if (!out) throw Error("short write to checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LocalisationModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  const auto fail = [&](const std::string& why) {
    return LoadError("checkpoint " + path.string() + ": " + why);
  };

  char magic[4] = {};
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw fail("bad magic bytes");
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in) throw fail("truncated before version");
  if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len > (std::uint64_t{1} << 30)) throw fail("bad header length");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw fail("truncated header");

  json header;
  ModelConfig config;
  try {
    header = json::parse(text);
    config = config_from_json(header.at("config"));
  } catch (const std::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }
  LocalisationModel model = build_model(config);
  auto& net = model.network();

  try {
    const auto& tensors = header.at("tensors");
    std::size_t t = 0;
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
      for (auto& p : net.layer(i).params()) {
        const std::string expected = tensor_name(i, p.role);
        if (t >= tensors.size()) throw fail("missing tensor " + expected);
        const auto& entry = tensors[t++];
        const auto name = entry.at("name").get<std::string>();
        if (name != expected)
          throw fail("tensor " + name + " found where " + expected + " expected");
        if (entry.at("shape").get<std::vector<std::size_t>>() != p.value.shape) {
          throw fail("tensor " + name + " has inconsistent shape");
        }
        if (entry.at("trainable").get<bool>() != p.trainable) {
          throw fail("tensor " + name + " has inconsistent trainable flag");
        }
        in.read(reinterpret_cast<char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(float)));
        if (!in) throw fail("truncated payload in tensor " + name);
      }
    }
    if (t != tensors.size()) throw fail("unexpected extra tensors");
    in.peek();
    if (!in.eof()) throw fail("trailing bytes after payload");

    const auto& meta = header.at("metadata");
    model.metadata.epochs_run = meta.at("epochs_run").get<int>();
    if (!meta.at("best_validation_loss").is_null()) {
      model.metadata.best_validation_loss = meta.at("best_validation_loss").get<double>();
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }
  return model;
}

}  // namespace waveloc::models
