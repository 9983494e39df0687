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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <string>

#include "sim_detail.hpp"

namespace waveloc::sim {
namespace {

constexpr double kImageFloor = 1e-3;  // -60 dB
constexpr int kTableSteps = 128;
constexpr std::size_t kDirectWindow = 40;  // 2.5 ms at 16 kHz
constexpr int kCalibrationIterations = 8;
constexpr double kCalibrationTolerance = 0.02;
constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

struct AxisImage {
  double offset;  // image coordinate minus head coordinate
  int reflections;
};

// Images along one axis: x = (1 - 2p) s + 2 n L after |n - p| + |n| wall hits.
std::vector<AxisImage> axis_images(double length, double source, double head, int max_order) {
  std::vector<AxisImage> out;
  const int n_max = max_order / 2 + 1;
  for (int n = -n_max; n <= n_max; ++n) {
    for (int p = 0; p <= 1; ++p) {
      const int refl = std::abs(n - p) + std::abs(n);
      if (refl > max_order) continue;
      out.push_back({(1 - 2 * p) * source + 2.0 * n * length - head, refl});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const AxisImage& a, const AxisImage& b) { return a.reflections < b.reflections; });
  return out;
}

using DelayTable = std::array<std::array<double, kFractionalDelayTaps>, kTableSteps + 1>;

const DelayTable& delay_table() {
  static const DelayTable table = [] {
    DelayTable t{};
    for (int f = 0; f <= kTableSteps; ++f) {
      const double frac = static_cast<double>(f) / kTableSteps;
      for (int j = 0; j < kFractionalDelayTaps; ++j) {
        t[f][j] = detail::windowed_sinc(j - (kFractionalDelayTaps / 2 - 1) - frac);
      }
    }
    return t;
  }();
  return table;
}

void add_tabulated(detail::ShadowTrains& trains, double delay, double gain, double alpha) {
  const double whole = std::floor(delay);
  const auto& taps =
      delay_table()[static_cast<std::size_t>(std::lround((delay - whole) * kTableSteps))];
  const auto first = static_cast<std::ptrdiff_t>(whole) - (kFractionalDelayTaps / 2 - 1);
  const auto n = static_cast<std::ptrdiff_t>(trains.plain.size());
  const double weighted = gain * alpha;
  for (std::ptrdiff_t j = 0; j < kFractionalDelayTaps; ++j) {
    const std::ptrdiff_t i = first + j;
    if (i < 0 || i >= n) continue;
    trains.plain[static_cast<std::size_t>(i)] += gain * taps[static_cast<std::size_t>(j)];
    trains.weighted[static_cast<std::size_t>(i)] += weighted * taps[static_cast<std::size_t>(j)];
  }
}

std::array<double, 3> source_position(const RoomSpec& room, double azimuth_deg) {
  const double az = azimuth_deg / kRadToDeg;
  const auto& h = room.head_position_m;
  return {h[0] + room.source_distance_m * std::cos(az),
          h[1] - room.source_distance_m * std::sin(az), h[2]};
}

bool inside(const std::array<double, 3>& p, const std::array<double, 3>& dims) {
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] > 0.0 && p[i] < dims[i])) return false;
  }
  return true;
}

std::vector<double> energy_decay_db(std::span<const double> rir) {
  std::vector<double> edc(rir.size());
  double acc = 0.0;
  for (std::size_t i = rir.size(); i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  if (!(acc > 0.0)) throw MeasurementError("schroeder_t60: impulse response has no energy");
  for (double& v : edc)
    v = v > 0.0 ? 10.0 * std::log10(v / acc) : -std::numeric_limits<double>::infinity();
  return edc;
}

}  // namespace

double sabine_absorption(const RoomSpec& room) {
  if (room.target_t60 == 0.0) return 1.0;
  const auto& d = room.dimensions_m;
  const double volume = d[0] * d[1] * d[2];
  const double surface = 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
  return std::clamp(0.161 * volume / (surface * room.target_t60), 1e-6, 1.0);
}

void validate_room(const RoomSpec& room, double azimuth_deg) {
  for (double d : room.dimensions_m) {
    if (!(d > 0.0)) throw InputError("room " + room.id + ": dimensions must be positive");
  }
  if (room.target_t60 != 0.0 && !(room.target_t60 >= 0.1 && room.target_t60 <= 2.0)) {
    throw InputError("room " + room.id + ": target_t60 must be 0 or within [0.1, 2.0] s");
  }
  if (!(room.source_distance_m > 0.0)) {
    throw InputError("room " + room.id + ": source distance must be positive");
  }
  if (room.max_image_order < 0) throw InputError("room " + room.id + ": negative image order");
  class_of_azimuth(azimuth_deg);
  if (!inside(room.head_position_m, room.dimensions_m)) {
    throw InputError("room " + room.id + ": head outside the room");
  }
  if (!inside(source_position(room, azimuth_deg), room.dimensions_m)) {
    throw InputError("room " + room.id + ": source at " + std::to_string(azimuth_deg) +
                     " deg outside the room");
  }
}

namespace {

Brir render_rir(const RoomSpec& room, double azimuth_deg, const HeadModel& head, double alpha) {
  const double beta = std::sqrt(1.0 - alpha);
  int max_order = 0;
  if (beta > 0.0) {
    max_order = room.max_image_order;
    if (beta < 1.0) {
      const double limit = std::floor(std::log(kImageFloor) / std::log(beta));
      max_order = static_cast<int>(std::min<double>(max_order, limit));
    }
  }

  const auto src = source_position(room, azimuth_deg);
  const auto& h = room.head_position_m;
  std::array<std::vector<AxisImage>, 3> axes;
  for (int i = 0; i < 3; ++i) {
    axes[i] = axis_images(room.dimensions_m[i], src[i], h[i], max_order);
  }
  std::vector<double> beta_pow(static_cast<std::size_t>(max_order) + 1, 1.0);
  for (std::size_t k = 1; k < beta_pow.size(); ++k) beta_pow[k] = beta_pow[k - 1] * beta;

  const double to_samples = kSampleRate / head.speed_of_sound;
  const double direct_prop = room.source_distance_m * to_samples;
  const double max_itd = woodworth_itd(90.0, head) * kSampleRate;

  // Visits every image except the direct path (order 0).
  const auto for_each_image = [&](auto&& fn) {
    for (const auto& ax : axes[0]) {
      for (const auto& ay : axes[1]) {
        const int oxy = ax.reflections + ay.reflections;
        if (oxy > max_order) break;
        for (const auto& az : axes[2]) {
          const int order = oxy + az.reflections;
          if (order > max_order) break;
          if (order == 0) continue;
          const double dist =
              std::sqrt(ax.offset * ax.offset + ay.offset * ay.offset + az.offset * az.offset);
          fn(ax.offset, ay.offset, dist, order);
        }
      }
    }
  };

  const detail::EarDelays direct = detail::ear_delays(direct_prop, azimuth_deg, head);
  double max_delay = std::max(direct.left, direct.right);
  for_each_image([&](double, double, double dist, int) {
    max_delay = std::max(max_delay, kLeadInSamples + dist * to_samples + max_itd / 2.0);
  });

  Brir brir;
  brir.azimuth_deg = azimuth_deg;
  brir.room_id = room.id;
  const std::size_t n = detail::response_length(max_delay);
  detail::ShadowTrains left(n), right(n);
  detail::add_arrival(left, right, direct_prop, azimuth_deg, 1.0 / room.source_distance_m, head);

  for_each_image([&](double, double oy, double dist, int order) {
    // Lateral angle folds front and back together: sin(lateral) = -y / r.
    const double lateral = std::asin(std::clamp(-oy / dist, -1.0, 1.0)) * kRadToDeg;
    const detail::EarDelays d = detail::ear_delays(dist * to_samples, lateral, head);
    const double gain = beta_pow[static_cast<std::size_t>(order)] / dist;
    add_tabulated(left, d.left, gain, shadow_alpha(90.0 + lateral));
    add_tabulated(right, d.right, gain, shadow_alpha(90.0 - lateral));
  });

  brir.left = left.filter(head);
  brir.right = right.filter(head);
  return brir;
}

}  // namespace

double calibrated_absorption(const RoomSpec& room, const HeadModel& head) {
  validate_room(room, 0.0);
  double alpha = sabine_absorption(room);
  if (alpha >= 1.0) return alpha;

  static std::mutex mutex;
  static std::map<std::string, double> cache;
  char key[256];
  std::snprintf(key, sizeof(key), "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%d|%.17g|%.17g",
                room.dimensions_m[0], room.dimensions_m[1], room.dimensions_m[2], room.target_t60,
                room.head_position_m[0], room.head_position_m[1], room.head_position_m[2],
                room.source_distance_m, room.max_image_order, head.radius_m, head.speed_of_sound);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  for (int iter = 0; iter < kCalibrationIterations; ++iter) {
    Brir probe = render_rir(room, 0.0, head, alpha);
    measure(probe);
    if (!std::isfinite(probe.measured_t60)) break;
    const double ratio = probe.measured_t60 / room.target_t60;
    if (std::abs(ratio - 1.0) < kCalibrationTolerance) break;
    // Decay rate is close to proportional to absorption.
    alpha = std::clamp(alpha * ratio, 1e-4, 1.0);
  }

  std::lock_guard lock(mutex);
  cache.emplace(key, alpha);
  return alpha;
}

Brir image_source_rir(const RoomSpec& room, double azimuth_deg, const HeadModel& head) {
  validate_room(room, azimuth_deg);
  return render_rir(room, azimuth_deg, head, calibrated_absorption(room, head));
}

double schroeder_t60(std::span<const double> rir) {
  if (rir.empty()) throw InputError("schroeder_t60: empty impulse response");
  const auto edc = energy_decay_db(rir);
  std::size_t begin = edc.size(), end = edc.size();
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (begin == edc.size() && edc[i] <= -5.0) begin = i;
    if (edc[i] < -25.0) {
      end = i;
      break;
    }
  }
  if (end == edc.size() || begin >= end || end - begin < 2) {
    throw MeasurementError("schroeder_t60: decay does not span -5..-25 dB");
  }
  // Least-squares line through (t, edc) over the fit range.
  const double count = static_cast<double>(end - begin);
  double st = 0.0, se = 0.0, stt = 0.0, ste = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    st += t;
    se += edc[i];
    stt += t * t;
    ste += t * edc[i];
  }
  const double slope = (count * ste - st * se) / (count * stt - st * st);
  if (!(slope < 0.0)) throw MeasurementError("schroeder_t60: non-decaying energy curve");
  return -60.0 / slope;
}

double drr(std::span<const double> rir) {
  if (rir.empty()) throw InputError("drr: empty impulse response");
  std::size_t peak = 0;
  for (std::size_t i = 1; i < rir.size(); ++i) {
    if (std::abs(rir[i]) > std::abs(rir[peak])) peak = i;
  }
  const std::size_t split = std::min(rir.size(), peak + kDirectWindow + 1);
  double direct = 0.0, late = 0.0;
  for (std::size_t i = 0; i < split; ++i) direct += rir[i] * rir[i];
  for (std::size_t i = split; i < rir.size(); ++i) late += rir[i] * rir[i];
  if (late <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(direct / late);
}

void measure(Brir& brir) {
  const auto t60_or_nan = [](std::span<const double> x) {
    try {
      return schroeder_t60(x);
    } catch (const MeasurementError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  brir.measured_t60 = 0.5 * (t60_or_nan(brir.left) + t60_or_nan(brir.right));
  brir.measured_drr = 0.5 * (drr(brir.left) + drr(brir.right));
}

}  // namespace waveloc::sim
