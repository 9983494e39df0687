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
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "waveloc/harness.hpp"

namespace waveloc::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string system_label(models::ModelKind kind) {
  switch (kind) {
    case models::ModelKind::kGccBaseline: return "Baseline";
    case models::ModelKind::kWavelocGtf: return "WaveLoc-GTF";
    case models::ModelKind::kWavelocConv: return "WaveLoc-CONV";
  }
  return "?";
}

std::string format_cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << *v;
  return s.str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows{
      {"Baseline (published)",
       TrainingMode::kAnechoicOnly,
       {{"anechoic", 0.1}, {"A", 2.6}, {"B", 9.3}, {"C", 2.6}, {"D", 10.1}}},
      {"WaveLoc-GTF (published)",
       TrainingMode::kAnechoicOnly,
       {{"anechoic", 0.0}, {"A", 9.1}, {"B", 10.7}, {"C", 1.6}, {"D", 10.5}}},
      {"WaveLoc-CONV (published)",
       TrainingMode::kAnechoicOnly,
       {{"anechoic", 0.0}, {"A", 37.7}, {"B", 41.8}, {"C", 37.3}, {"D", 44.4}}},
      {"Baseline (published)",
       TrainingMode::kMct,
       {{"A", 2.7}, {"B", 3.3}, {"C", 3.1}, {"D", 5.2}}},
      {"WaveLoc-GTF (published)",
       TrainingMode::kMct,
       {{"A", 1.5}, {"B", 3.0}, {"C", 1.7}, {"D", 3.5}}},
      {"WaveLoc-CONV (published)",
       TrainingMode::kMct,
       {{"A", 1.7}, {"B", 2.3}, {"C", 1.4}, {"D", 2.4}}},
  };
  return rows;
}

std::string MatrixReport::to_text() const {
  std::ostringstream out;
  std::vector<TrainingMode> modes;
  for (const auto& c : cells) {
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end()) modes.push_back(c.mode);
  }
  constexpr int kLabelWidth = 26;
  constexpr int kCellWidth = 10;
  for (TrainingMode mode : modes) {
    out << "RMSE (deg), training: " << to_string(mode) << '\n';
    out << std::left << std::setw(kLabelWidth) << "System";
    for (const auto& r : rooms) out << std::right << std::setw(kCellWidth) << r;
    out << '\n';
    std::vector<models::ModelKind> systems;
    for (const auto& c : cells) {
      if (c.mode == mode && std::find(systems.begin(), systems.end(), c.system) == systems.end()) {
        systems.push_back(c.system);
      }
    }
    for (auto system : systems) {
      out << std::left << std::setw(kLabelWidth) << system_label(system);
      for (const auto& room : rooms) {
        std::string text = "n/a";
        for (const auto& c : cells) {
          if (c.mode == mode && c.system == system && c.room == room) {
            text = c.rmse_deg ? format_cell(c.rmse_deg) : "FAILED";
          }
        }
        out << std::right << std::setw(kCellWidth) << text;
      }
      out << '\n';
    }
    for (const auto& ref : reference_rows()) {
      if (ref.mode != mode) continue;
      out << std::left << std::setw(kLabelWidth) << ref.label;
      for (const auto& room : rooms) {
        std::optional<double> v;
        for (const auto& [id, value] : ref.values) {
          if (id == room) v = value;
        }
        out << std::right << std::setw(kCellWidth) << format_cell(v);
      }
      out << '\n';
    }
    out << '\n';
  }
  for (const auto& c : cells) {
    if (!c.error.empty()) {
      out << "failed: " << system_label(c.system) << ' ' << to_string(c.mode) << ' ' << c.room
          << ": " << c.error << '\n';
    }
  }
  return out.str();
}

std::string MatrixReport::to_json() const {
  json j;
  j["format"] = "waveloc-matrix-report";
  j["version"] = 1;
  j["rooms"] = rooms;
  j["seconds"] = seconds;
  j["cells"] = json::array();
  for (const auto& c : cells) {
    json jc = {{"system", models::to_string(c.system)},
               {"mode", to_string(c.mode)},
               {"room", c.room},
               {"rmse_deg", c.rmse_deg ? json(*c.rmse_deg) : json(nullptr)}};
    if (!c.error.empty()) jc["error"] = c.error;
    j["cells"].push_back(std::move(jc));
  }
  j["reference"] = json::array();
  for (const auto& ref : reference_rows()) {
    json values = json::object();
    for (const auto& [room, v] : ref.values) values[room] = v;
    j["reference"].push_back(
        {{"label", ref.label}, {"mode", to_string(ref.mode)}, {"rmse_deg", values}});
  }
  return j.dump(1);
}

MatrixConfig matrix_config_from_json(std::string_view text) {
  MatrixConfig config;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "waveloc-matrix") {
      throw LoadError("not a waveloc matrix config (missing format tag)");
    }
    if (j.value("version", 0) != 1) throw LoadError("unsupported matrix config version");
    if (j.contains("systems")) {
      config.systems.clear();
      for (const auto& s : j["systems"])
        config.systems.push_back(models::parse_model_kind(s.get<std::string>()));
    }
    if (j.contains("modes")) {
      config.modes.clear();
      for (const auto& m : j["modes"])
        config.modes.push_back(parse_training_mode(m.get<std::string>()));
    }
    config.rooms = j.value("rooms", std::vector<std::string>{});
    config.seed = j.value("seed", config.seed);
    config.max_frames_per_file = j.value("max_frames_per_file", config.max_frames_per_file);
    config.jobs = j.value("jobs", config.jobs);
    if (j.contains("schedule")) {
      const json& s = j["schedule"];
      auto& sc = config.schedule;
      sc.base_lr = s.value("base_lr", sc.base_lr);
      sc.lr_decay_factor = s.value("lr_decay_factor", sc.lr_decay_factor);
      sc.lr_patience = s.value("lr_patience", sc.lr_patience);
      sc.early_stop_patience = s.value("early_stop_patience", sc.early_stop_patience);
      sc.max_epochs = s.value("max_epochs", sc.max_epochs);
      sc.batch_size = s.value("batch_size", sc.batch_size);
      sc.min_lr = s.value("min_lr", sc.min_lr);
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("matrix config: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("matrix config: ") + e.what());
  }
  return config;
}

MatrixConfig read_matrix_config(const fs::path& path) {
  const std::string text = read_text(path);
  MatrixConfig config = matrix_config_from_json(text);
  std::string manifest;
  try {
    manifest = json::parse(text).value("manifest", std::string{});
  } catch (const json::exception& e) {
    throw LoadError(std::string("matrix config: ") + e.what());
  }
  if (manifest.empty()) throw LoadError("matrix config: 'manifest' path is required");
  fs::path mpath(manifest);
  if (mpath.is_relative()) mpath = path.parent_path() / mpath;
  config.manifest = sim::read_manifest(mpath);
  return config;
}

MatrixReport run_matrix(const MatrixConfig& config,
                        const std::function<void(const std::string&)>& log) {
  const auto t0 = std::chrono::steady_clock::now();
  MatrixReport report;
  report.rooms = config.rooms;
  if (report.rooms.empty()) {
    for (const auto& r : config.manifest.rooms) report.rooms.push_back(r.id);
  }
  for (const auto& r : report.rooms) config.manifest.room(r);

  ExperimentSpec base;
  base.manifest = config.manifest;
  base.schedule = config.schedule;
  base.seed = config.seed;
  base.max_frames_per_file = config.max_frames_per_file;
  base.jobs = config.jobs;

  // Trains one model and fills the cells evaluated on it.
  const auto run_cells = [&](ExperimentSpec spec, const std::vector<std::string>& eval_rooms) {
    const std::string what = std::string(models::to_string(spec.model.kind)) + " " +
                             std::string(to_string(spec.mode)) +
                             (spec.test_room.empty() ? "" : " (held out " + spec.test_room + ")");
    std::optional<models::LocalisationModel> model;
    std::string error;
    try {
      if (log) log("training " + what);
      model = train(spec, [&](const EpochRecord& r) {
                if (log) {
                  std::ostringstream s;
                  s << "  epoch " << r.epoch << " train " << r.train_loss << " valid "
                    << r.valid_loss << " lr " << r.learning_rate << " (" << r.seconds << " s)";
                  log(s.str());
                }
              }).model;
    } catch (const std::exception& e) {
      error = e.what();
    }
    for (const auto& room : eval_rooms) {
      MatrixCell cell{spec.model.kind, spec.mode, room, std::nullopt, error};
      if (model) {
        try {
          cell.rmse_deg =
              evaluate_chunks(*model, spec.manifest, room, sim::Split::kTest, spec.jobs).rmse_deg;
          if (log) log("  " + room + ": " + format_cell(cell.rmse_deg) + " deg");
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
      report.cells.push_back(std::move(cell));
    }
  };

  for (auto mode : config.modes) {
    for (auto system : config.systems) {
      ExperimentSpec spec = base;
      spec.model.kind = system;
      spec.mode = mode;
      if (mode == TrainingMode::kAnechoicOnly) {
        run_cells(spec, report.rooms);
        continue;
      }
      for (const auto& room : report.rooms) {
        if (room == spec.anechoic_room) continue;
        spec.test_room = room;
        run_cells(spec, {room});
      }
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

dsp::SpectrumMatrix kernel_spectra(const models::LocalisationModel& model, std::size_t nfft) {
  if (model.kind() != models::ModelKind::kWavelocConv) {
    throw InputError("kernel spectra need a waveloc_conv model, got " +
                     std::string(models::to_string(model.kind())));
  }
  const auto& layer = model.network().layer(0);
  const auto& kernel = layer.params()[0].value;
  const std::size_t rows = kernel.shape.front();
  const std::size_t length = kernel.data.size() / rows;
  const std::vector<double> taps(kernel.data.begin(), kernel.data.end());
  dsp::SpectrumMatrix raw = dsp::kernel_log_power_spectra(taps, rows, length, nfft);

  std::vector<std::size_t> peak(rows), order(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = raw.row(r);
    peak[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    order[r] = r;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return peak[a] < peak[b]; });
  dsp::SpectrumMatrix sorted = raw;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto src = raw.row(order[r]);
    std::copy(src.begin(), src.end(),
              sorted.values.begin() + static_cast<std::ptrdiff_t>(r * raw.cols));
  }
  return sorted;
}

double band_concentration(const dsp::SpectrumMatrix& spectra, std::size_t row,
                          std::size_t half_width) {
  const auto values = spectra.row(row);
  const std::size_t peak =
      static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  const std::size_t lo = peak > half_width ? peak - half_width : 0;
  const std::size_t hi = std::min(values.size() - 1, peak + half_width);
  double total = 0.0, near = 0.0;
  for (std::size_t b = 0; b < values.size(); ++b) {
    const double p = std::pow(10.0, values[b] / 10.0);
    total += p;
    if (b >= lo && b <= hi) near += p;
  }
  return total > 0.0 ? near / total : 0.0;
}

std::string spectra_to_csv(const dsp::SpectrumMatrix& spectra) {
  std::ostringstream out;
  out.precision(8);
  for (std::size_t b = 0; b < spectra.cols; ++b) out << (b ? "," : "") << spectra.bin_hz(b);
  out << '\n';
  for (std::size_t r = 0; r < spectra.rows; ++r) {
    const auto row = spectra.row(r);
    for (std::size_t b = 0; b < row.size(); ++b) out << (b ? "," : "") << row[b];
    out << '\n';
  }
  return out.str();
}

void export_kernel_spectra(const fs::path& checkpoint, const fs::path& out, std::size_t nfft) {
  const auto model = models::load_checkpoint(checkpoint);
  write_text(out, spectra_to_csv(kernel_spectra(model, nfft)));
}

}  // namespace waveloc::harness
