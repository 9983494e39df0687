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

#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "waveloc/dataset.hpp"
#include "waveloc/dsp.hpp"
#include "waveloc/harness.hpp"
#include "waveloc/models.hpp"
#include "waveloc/nn/gradcheck.hpp"
#include "waveloc/wav.hpp"

namespace waveloc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;  // via --seed or WAVELOC_SEED
  std::string out_dir = "waveloc_out";
  bool verbose = false;
  int jobs = 0;
};

struct SimulateOptions {
  std::string manifest;
  std::string source;
  double duration_s = 0.0;
  std::vector<int> counts;
  std::string encoding;
  std::vector<std::string> rooms;
};

struct TrainOptions {
  std::string model;
  std::string mode = "anechoic";
  std::string test_room;
  std::string manifest;
  int epochs = 0;
  std::size_t batch = 0;
  std::size_t max_frames = 0;
};

struct EvalOptions {
  std::string checkpoint;
  std::string manifest;
  std::vector<std::string> rooms;
  std::string split = "test";
};

struct MatrixOptions {
  std::string config;
  int epochs = 0;
  std::optional<std::size_t> max_frames;
};

struct KernelOptions {
  std::string checkpoint;
  std::size_t nfft = 1024;
};

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void print_config(std::ostream& out, const std::string& command, const Globals& g, json extra) {
  json j = {{"command", command},
            {"seed", g.seed},
            {"out_dir", g.out_dir},
            {"verbose", g.verbose},
            {"jobs", resolve_jobs(g.jobs)}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  out << "resolved configuration:\n" << j.dump(2) << std::endl;
}

sim::DatasetManifest load_manifest(const std::string& path) {
  sim::DatasetManifest m = sim::read_manifest(path);
  if (m.entries.empty()) throw ConfigError(path + " lists no rendered entries; run simulate first");
  return m;
}

int run_simulate(const Globals& g, const SimulateOptions& o, std::ostream& out) {
  sim::DatasetManifest m = o.manifest.empty() ? sim::default_manifest(g.out_dir, g.seed)
                                              : sim::read_manifest(o.manifest);
  m.output_dir = g.out_dir;
  if (o.manifest.empty() || !o.counts.empty() || !o.source.empty() || o.duration_s > 0.0) {
    m.entries.clear();
  }
  m.seed = o.manifest.empty() ? g.seed : m.seed;
  if (!o.source.empty()) m.source.kind = sim::parse_source_kind(o.source);
  if (o.duration_s > 0.0) m.source.duration_s = o.duration_s;
  if (!o.counts.empty()) {
    if (o.counts.size() != 3) throw ConfigError("--counts takes train valid test");
    m.split_counts = {o.counts[0], o.counts[1], o.counts[2]};
  }
  if (o.encoding == "float32") m.encoding = WavEncoding::kFloat32;
  if (o.encoding == "pcm16") m.encoding = WavEncoding::kPcm16;
  if (!o.rooms.empty()) {
    std::vector<sim::RoomCondition> kept;
    for (const auto& id : o.rooms) kept.push_back(m.room(id));
    m.rooms = std::move(kept);
    std::erase_if(m.entries, [&](const sim::ManifestEntry& e) {
      return std::find(o.rooms.begin(), o.rooms.end(), e.room_id) == o.rooms.end();
    });
  }

  json rooms = json::array();
  for (const auto& r : m.rooms) {
    rooms.push_back(
        {{"id", r.id}, {"kind", sim::to_string(r.kind)}, {"target_t60", r.spec.target_t60}});
  }
  print_config(out, "simulate", g,
               {{"manifest", o.manifest},
                {"manifest_seed", m.seed},
                {"source", sim::to_string(m.source.kind)},
                {"duration_s", m.source.duration_s},
                {"split_counts", m.split_counts},
                {"encoding", m.encoding == WavEncoding::kPcm16 ? "pcm16" : "float32"},
                {"rooms", rooms}});

  const sim::DatasetReport report = sim::make_dataset(m, g.jobs);
  for (const auto& meas : m.measurements) {
    out << "room " << meas.room_id << ": target T60 " << meas.target_t60 << " s, measured T60 "
        << meas.measured_t60 << " s, DRR " << meas.measured_drr << " dB, absorption "
        << meas.absorption << '\n';
  }
  out << "wrote " << report.written << " files and "
      << (fs::path(g.out_dir) / "manifest.json").string() << '\n';
  for (const auto& e : report.errors) out << "error: " << e << '\n';
  return report.ok() ? 0 : 2;
}

int run_train(const Globals& g, const TrainOptions& o, std::ostream& out) {
  harness::ExperimentSpec spec;
  spec.model.kind = models::parse_model_kind(o.model);
  spec.mode = harness::parse_training_mode(o.mode);
  spec.test_room = o.test_room;
  spec.seed = g.seed;
  spec.jobs = g.jobs;
  spec.max_frames_per_file = o.max_frames;
  if (o.epochs > 0) spec.schedule.max_epochs = o.epochs;
  if (o.batch > 0) spec.schedule.batch_size = o.batch;
  spec.manifest = load_manifest(o.manifest);
  const auto rooms = harness::training_rooms(spec);

  print_config(out, "train", g,
               {{"model", models::to_string(spec.model.kind)},
                {"mode", harness::to_string(spec.mode)},
                {"test_room", spec.test_room},
                {"training_rooms", rooms},
                {"manifest", o.manifest},
                {"max_epochs", spec.schedule.max_epochs},
                {"batch_size", spec.schedule.batch_size},
                {"learning_rate", spec.schedule.base_lr},
                {"max_frames_per_file", spec.max_frames_per_file}});

  const auto result = harness::train(spec, [&](const harness::EpochRecord& r) {
    out << "epoch " << r.epoch << ": train loss " << r.train_loss << ", valid loss " << r.valid_loss
        << ", lr " << r.learning_rate;
    if (g.verbose) out << " (" << r.seconds << " s)";
    out << std::endl;
  });

  std::string stem = std::string(models::to_string(spec.model.kind)) + "_" +
                     std::string(harness::to_string(spec.mode));
  if (spec.mode == harness::TrainingMode::kMct) stem += "_" + spec.test_room;
  const fs::path ckpt = fs::path(g.out_dir) / (stem + ".wloc");
  fs::create_directories(ckpt.parent_path());
  models::save_checkpoint(result.model, ckpt);

  json history = json::array();
  for (const auto& r : result.history) {
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"valid_loss", r.valid_loss},
                       {"learning_rate", r.learning_rate},
                       {"seconds", r.seconds}});
  }
  json report = {{"format", "waveloc-train-report"},
                 {"version", 1},
                 {"model", models::to_string(spec.model.kind)},
                 {"mode", harness::to_string(spec.mode)},
                 {"test_room", spec.test_room},
                 {"seed", g.seed},
                 {"train_frames", result.train_frames},
                 {"best_epoch", result.best_epoch},
                 {"seconds", result.seconds},
                 {"history", history}};
  write_file(fs::path(g.out_dir) / (stem + "_train.json"), report.dump(1) + "\n");
  out << "best epoch " << result.best_epoch << ", checkpoint " << ckpt.string() << '\n';
  return 0;
}

int run_eval(const Globals& g, const EvalOptions& o, std::ostream& out) {
  const auto model = models::load_checkpoint(o.checkpoint);
  const auto manifest = load_manifest(o.manifest);
  const sim::Split split = sim::parse_split(o.split);
  std::vector<std::string> rooms = o.rooms;
  if (rooms.empty()) {
    for (const auto& r : manifest.rooms) rooms.push_back(r.id);
  }
  print_config(out, "eval", g,
               {{"checkpoint", o.checkpoint},
                {"model", models::to_string(model.kind())},
                {"manifest", o.manifest},
                {"rooms", rooms},
                {"split", o.split}});
  json results = json::object();
  for (const auto& room : rooms) {
    const auto report = harness::evaluate_chunks(model, manifest, room, split, g.jobs);
    out << "room " << room << ": RMSE " << report.rmse_deg << " deg over " << report.chunks.size()
        << " chunks";
    if (report.skipped_files) out << " (" << report.skipped_files << " files skipped)";
    out << '\n';
    if (g.verbose) {
      for (const auto& w : report.warnings) out << "warning: " << w << '\n';
    }
    write_file(fs::path(g.out_dir) / ("chunks_" + room + ".csv"),
               harness::chunks_to_csv(report.chunks));
    results[room] = {{"rmse_deg", report.rmse_deg},
                     {"chunks", report.chunks.size()},
                     {"skipped_files", report.skipped_files}};
  }
  write_file(
      fs::path(g.out_dir) / "eval.json",
      json{{"format", "waveloc-eval-report"}, {"version", 1}, {"rooms", results}}.dump(1) + "\n");
  return 0;
}

int run_matrix(const Globals& g, const MatrixOptions& o, std::ostream& out) {
  const std::string& config_path = o.config;
  harness::MatrixConfig config = harness::read_matrix_config(config_path);
  config.jobs = g.jobs;
  if (g.seed_given) config.seed = g.seed;
  if (o.epochs > 0) config.schedule.max_epochs = o.epochs;
  if (o.max_frames) config.max_frames_per_file = *o.max_frames;
  json systems = json::array(), modes = json::array();
  for (auto s : config.systems) systems.push_back(models::to_string(s));
  for (auto m : config.modes) modes.push_back(harness::to_string(m));
  print_config(out, "matrix", g,
               {{"config", config_path},
                {"systems", systems},
                {"modes", modes},
                {"rooms", config.rooms},
                {"matrix_seed", config.seed},
                {"max_epochs", config.schedule.max_epochs},
                {"max_frames_per_file", config.max_frames_per_file}});
  const auto report = harness::run_matrix(config, [&](const std::string& line) {
    if (g.verbose || line.rfind("  epoch", 0) != 0) out << line << std::endl;
  });
  out << report.to_text();
  write_file(fs::path(g.out_dir) / "matrix.json", report.to_json() + "\n");
  write_file(fs::path(g.out_dir) / "matrix.txt", report.to_text());
  for (const auto& c : report.cells) {
    if (!c.rmse_deg) return 2;
  }
  return 0;
}

int run_gradcheck(const Globals& g, std::ostream& out) {
  print_config(out, "gradcheck", g, json::object());
  nn::GradcheckOptions options;
  bool ok = true;
  const auto factories = nn::reference_gradcheck_models();
  for (std::size_t i = 0; i < factories.size(); ++i) {
    const auto report = nn::gradcheck(factories[i], options);
    out << "model " << i << ":\n" << report.to_text();
    ok = ok && report.passed();
  }
  out << (ok ? "gradcheck PASS" : "gradcheck FAIL") << '\n';
  return ok ? 0 : 2;
}

int run_inspect(const Globals& g, const KernelOptions& o, std::ostream& out) {
  print_config(out, "inspect-kernels", g, {{"checkpoint", o.checkpoint}, {"nfft", o.nfft}});
  const fs::path path = fs::path(g.out_dir) / "kernel_spectra.csv";
  const auto model = models::load_checkpoint(o.checkpoint);
  const auto spectra = harness::kernel_spectra(model, o.nfft);
  write_file(path, harness::spectra_to_csv(spectra));
  std::size_t concentrated = 0;
  for (std::size_t r = 0; r < spectra.rows; ++r) {
    if (harness::band_concentration(spectra, r) >= 0.5) ++concentrated;
  }
  out << "wrote " << spectra.rows << " x " << spectra.cols << " spectra to " << path.string()
      << "; " << concentrated << " kernels band-pass concentrated\n";
  return 0;
}

int run_gcc(const Globals& g, const std::string& wav, std::ostream& out) {
  print_config(out, "gcc-features", g, {{"wav", wav}});
  const BinauralWaveform wave = read_binaural_wav(wav);
  const auto frames = dsp::frame_signal(wave);
  std::ostringstream csv;
  for (int lag = -dsp::kGccMaxLag; lag <= dsp::kGccMaxLag; ++lag) {
    csv << (lag == -dsp::kGccMaxLag ? "" : ",") << "lag" << lag;
  }
  csv << '\n';
  std::map<int, std::size_t> votes;
  for (const auto& f : frames) {
    const auto feature = dsp::gcc_phat(f);
    for (std::size_t i = 0; i < feature.values.size(); ++i) {
      csv << (i ? "," : "") << feature.values[i];
    }
    csv << '\n';
    ++votes[dsp::gcc_phat_peak_lag(f)];
  }
  const fs::path path = fs::path(g.out_dir) / (fs::path(wav).stem().string() + "_gcc.csv");
  write_file(path, csv.str());
  int modal = 0;
  std::size_t best = 0;
  for (const auto& [lag, n] : votes) {
    if (n > best) {
      best = n;
      modal = lag;
    }
  }
  out << frames.size() << " frames, modal peak lag " << modal
      << " samples (positive: left ear leads); features in " << path.string() << '\n';
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"WaveLoc binaural localisation toolkit"};
  app.require_subcommand(1);
  Globals g;
  if (const char* env = std::getenv("WAVELOC_SEED")) {
    try {
      g.seed = std::stoull(env);
      g.seed_given = true;
    } catch (const std::exception&) {
      err << "error: WAVELOC_SEED is not an unsigned integer\n";
      return 1;
    }
  }
  auto* seed_opt = app.add_option("--seed", g.seed, "Run seed (falls back to WAVELOC_SEED)");
  app.add_option("--out-dir", g.out_dir, "Directory for every file the command writes");
  app.add_flag("--verbose", g.verbose, "Extra progress output");
  app.add_option("--jobs", g.jobs, "Worker threads (default: available cores)")
      ->check(CLI::NonNegativeNumber);

  SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Render a binaural dataset");
  simulate
      ->add_option("--manifest", sim_opts.manifest, "Dataset manifest (default: built-in rooms)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--source", sim_opts.source,
                       "white_noise_burst | speech_shaped_noise | wav_corpus");
  simulate->add_option("--duration", sim_opts.duration_s, "Synthetic source length in seconds");
  simulate->add_option("--counts", sim_opts.counts, "Signals per azimuth: train valid test")
      ->expected(3);
  simulate->add_option("--encoding", sim_opts.encoding, "pcm16 | float32")
      ->check(CLI::IsMember({"pcm16", "float32"}));
  simulate->add_option("--rooms", sim_opts.rooms, "Render only these room ids");

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--model", train_opts.model, "gtf | conv | baseline")
      ->required()
      ->check(CLI::IsMember(
          {"gtf", "conv", "baseline", "waveloc_gtf", "waveloc_conv", "gcc_baseline"}));
  train->add_option("--mode", train_opts.mode, "anechoic | mct")
      ->check(CLI::IsMember({"anechoic", "anechoic_only", "mct"}));
  train->add_option("--test-room", train_opts.test_room, "Room held out of MCT training");
  train->add_option("--manifest", train_opts.manifest, "Rendered dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--epochs", train_opts.epochs, "Maximum epochs (default 50)")
      ->check(CLI::PositiveNumber);
  train->add_option("--batch", train_opts.batch, "Batch size (default 128)")
      ->check(CLI::PositiveNumber);
  train->add_option("--max-frames-per-file", train_opts.max_frames,
                    "Evenly spaced frames kept per file (0: all)");

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Chunk-level RMSE on a test split");
  eval->add_option("--checkpoint", eval_opts.checkpoint, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_opts.manifest, "Rendered dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--room", eval_opts.rooms, "Rooms to evaluate (default: all)");
  eval->add_option("--split", eval_opts.split, "train | valid | test")
      ->check(CLI::IsMember({"train", "valid", "test"}));

  MatrixOptions matrix_opts;
  auto* matrix = app.add_subcommand("matrix", "Train and evaluate the system x room matrix");
  matrix->add_option("--config", matrix_opts.config, "Matrix configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  matrix->add_option("--epochs", matrix_opts.epochs, "Override the file's max_epochs")
      ->check(CLI::PositiveNumber);
  matrix->add_option("--max-frames-per-file", matrix_opts.max_frames,
                     "Override the file's max_frames_per_file");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");

  KernelOptions kernel_opts;
  auto* inspect = app.add_subcommand("inspect-kernels", "Export first-layer kernel spectra");
  inspect->add_option("--checkpoint", kernel_opts.checkpoint, "waveloc_conv checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  inspect->add_option("--nfft", kernel_opts.nfft, "FFT length (power of two >= 256)");

  std::string gcc_wav;
  auto* gcc = app.add_subcommand("gcc-features", "GCC-PHAT features of a stereo WAV");
  gcc->add_option("--wav", gcc_wav, "Stereo 16 kHz WAV")->required()->check(CLI::ExistingFile);

  std::vector<std::string> storage(args);
  if (storage.empty()) storage.emplace_back("waveloc");
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 1;
  }

  g.seed_given = g.seed_given || seed_opt->count() > 0;
  try {
    if (*simulate) return run_simulate(g, sim_opts, out);
    if (*train) {
      if (train_opts.mode == "mct" && train_opts.test_room.empty()) {
        err << "error: --test-room is required with --mode mct\n\n" << train->help();
        return 1;
      }
      return run_train(g, train_opts, out);
    }
    if (*eval) return run_eval(g, eval_opts, out);
    if (*matrix) return run_matrix(g, matrix_opts, out);
    if (*gradcheck) return run_gradcheck(g, out);
    if (*inspect) return run_inspect(g, kernel_opts, out);
    if (*gcc) return run_gcc(g, gcc_wav, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace waveloc::cli
