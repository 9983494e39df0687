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

#include "waveloc/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace waveloc {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t offset) {
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace

void validate(const MonoWaveform& wave) {
  if (wave.sample_rate != kSampleRate) {
    throw InputError("expected 16000 Hz audio, got " + std::to_string(wave.sample_rate));
  }
  for (float s : wave.samples) {
    if (!std::isfinite(s)) throw InputError("waveform contains non-finite samples");
  }
}

void validate(const BinauralWaveform& wave) {
  if (wave.sample_rate != kSampleRate) {
    throw InputError("expected 16000 Hz audio, got " + std::to_string(wave.sample_rate));
  }
  if (wave.left.size() != wave.right.size()) {
    throw InputError("left and right channels differ in length");
  }
  for (std::size_t i = 0; i < wave.left.size(); ++i) {
    if (!std::isfinite(wave.left[i]) || !std::isfinite(wave.right[i])) {
      throw InputError("waveform contains non-finite samples");
    }
  }
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) { return LoadError(path.string() + ": " + why); };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_offset = 0, data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t size = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      if (size < 16 || body + size > buf.size()) throw fail("truncated fmt chunk");
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = read_le<std::uint16_t>(buf, body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      if (size > buf.size() - body) throw fail("truncated data chunk");
      data_offset = body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (data_offset == 0) throw fail("missing data chunk");
  if (channels == 0) throw fail("zero channels");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw fail("unsupported encoding (format " + std::to_string(format) + ", " +
               std::to_string(bits) + " bits)");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.channels.assign(channels, std::vector<float>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_offset + (i * channels + c) * width;
      out.channels[c][i] = pcm16 ? static_cast<float>(read_le<std::int16_t>(buf, at)) / 32768.0f
                                 : read_le<float>(buf, at);
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const std::vector<std::vector<float>>& channels,
               int sample_rate, WavEncoding encoding) {
  if (channels.empty()) throw InputError("write_wav: no channels");
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != frames) throw InputError("write_wav: channel lengths differ");
  }
  const std::uint16_t num_channels = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = num_channels * bits / 8;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * block_align);

  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  append_le<std::uint32_t>(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  append_le<std::uint32_t>(out, 16);
  append_le<std::uint16_t>(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  append_le<std::uint16_t>(out, num_channels);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * block_align);
  append_le<std::uint16_t>(out, block_align);
  append_le<std::uint16_t>(out, bits);
  out.append("data");
  append_le<std::uint32_t>(out, data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : channels) {
      if (encoding == WavEncoding::kPcm16) {
        const float clipped = std::clamp(ch[i], -1.0f, 32767.0f / 32768.0f);
        append_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(clipped * 32768.0f)));
      } else {
        append_le<float>(out, ch[i]);
      }
    }
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write " + tmp.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

MonoWaveform read_mono_wav(const std::filesystem::path& path) {
  WavData data = read_wav(path);
  if (data.channels.size() != 1) throw LoadError(path.string() + ": expected mono audio");
  MonoWaveform wave{std::move(data.channels[0]), data.sample_rate};
  validate(wave);
  return wave;
}

BinauralWaveform read_binaural_wav(const std::filesystem::path& path) {
  WavData data = read_wav(path);
  if (data.channels.size() != 2) throw LoadError(path.string() + ": expected 2-channel audio");
  BinauralWaveform wave{std::move(data.channels[0]), std::move(data.channels[1]), data.sample_rate};
  validate(wave);
  return wave;
}

void write_wav(const std::filesystem::path& path, const BinauralWaveform& wave,
               WavEncoding encoding) {
  write_wav(path, {wave.left, wave.right}, wave.sample_rate, encoding);
}

}  // namespace waveloc
