#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "exrec/exrec.hpp"

namespace fs = std::filesystem;
using namespace exrec;

namespace {

/// Re-raises `e` with the offending path in front of its message.
[[noreturn]] void rethrow_with_path(const Error& e, const std::string& path) {
  std::string what = e.what();
  const auto colon = what.find(": ");
  if (colon != std::string::npos) what = what.substr(colon + 2);
  if (what.find(path) != std::string::npos) throw e;
  throw Error(e.kind(), path + ": " + what);
}

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorKind::SourceFailure, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorKind::SinkFailure, "cannot open '" + path + "' for writing");
  return out;
}

/// Raw landmark CSV, 68 or 101 columns (told apart by the header).
std::vector<LandmarkFrame> read_landmarks(const std::string& path) {
  auto in = open_input(path);
  std::string first;
  std::getline(in, first);
  const bool pose33 = csv::split(first).size() == pose33_csv_header().size();
  in.clear();
  in.seekg(0);
  try {
    std::vector<std::string> warnings;
    auto frames = pose33 ? parse_pose33_csv(in, &warnings) : parse_landmark_csv(in, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    return frames;
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

bool is_window_file(const std::string& path) {
  auto in = open_input(path, std::ios::binary);
  std::string magic(kWindowMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  return in && magic == kWindowMagic;
}

FeatureTable read_features(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_feature_csv(in);
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

/// A window file as is, or a feature CSV cut into windows.
std::vector<WindowSample> read_windows_any(const std::string& path, std::size_t window_len, std::size_t stride) {
  try {
    if (is_window_file(path)) return read_windows_file(path);
    const auto table = read_features(path);
    return window(table.frames, window_len, stride, table.layout);
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

/// Default synthetic corpus for commands run without --data.
std::vector<WindowSample> synthetic_windows(std::uint64_t seed) {
  const auto frames = synth::make_dataset({}, seed);
  const auto table = featurize_all(frames, FeatureConfig{});
  return window(table.frames, 30, 30, table.layout);
}

training::TrainConfig read_train_config(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_input(path);
  try {
    return training::parse_train_config(in);
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

std::map<std::string, repcount::RepSpec> read_thresholds(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_input(path);
  try {
    return repcount::parse_threshold_overrides(in);
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

void write_reports(const eval::Evaluation& e, const std::string& dir, const std::string& prefix = "") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::SinkFailure, "cannot create directory '" + dir + "': " + ec.message());
  const fs::path base(dir);
  auto report = open_output((base / (prefix + "report.csv")).string());
  eval::write_report_csv(e.report, report);
  auto confusion = open_output((base / (prefix + "confusion.csv")).string());
  eval::write_confusion_csv(e.confusion, confusion);
  auto text = open_output((base / (prefix + "report.txt")).string());
  csv::write_or_throw(text, eval::render_text(e.report));
}

// Subcommands -----------------------------------------------------------------

struct FeaturizeArgs {
  std::string input, output, layout = "mixed78";
};

int run_featurize(const FeaturizeArgs& a) {
  const auto frames = read_landmarks(a.input);
  std::size_t skipped = 0;
  FeatureTable table;
  try {
    table = featurize_all(frames, FeatureConfig{parse_layout(a.layout)}, &skipped);
  } catch (const Error& e) {
    rethrow_with_path(e, a.input);
  }
  auto out = open_output(a.output);
  write_feature_csv(table, out);
  std::cerr << "featurize: " << frames.size() << " frames, " << table.frames.size() << " written, " << skipped
            << " skipped\n";
  return 0;
}

struct WindowsArgs {
  std::string input, output;
  std::size_t window_len = 30, stride = 30;
};

int run_windows(const WindowsArgs& a) {
  const auto windows = read_windows_any(a.input, a.window_len, a.stride);
  write_windows_file(windows, a.output);
  std::cerr << "windows: " << windows.size() << " written\n";
  return 0;
}

struct TrainArgs {
  std::string arch = "bilstm", config, data, output, record, report;
  std::uint64_t seed = 0;
  int epoch_cap = 0;
};

int run_train(const TrainArgs& a) {
  auto cfg = read_train_config(a.config);
  cfg.options.epoch_cap = a.epoch_cap;
  const auto windows = a.data.empty() ? synthetic_windows(0) : read_windows_any(a.data, 30, 30);
  const auto parts = training::split(windows, cfg.split);
  std::cerr << "train: " << parts.train.size() << " train, " << parts.val.size() << " val, " << parts.test.size()
            << " test windows\n";
  const auto r = training::train(parts.train, parts.val, cfg.hp, seqnet::parse_arch(a.arch), a.seed, cfg.options);
  seqnet::save_model_file(r.model, a.output);
  if (!a.record.empty()) {
    auto out = open_output(a.record);
    training::write_record_csv(r.record, out);
  }
  const auto& best = r.record.epochs[static_cast<std::size_t>(r.record.best_epoch)];
  std::cout << "epochs " << r.record.epochs.size() << " best_epoch " << best.epoch << " stop "
            << training::to_string(r.record.stop_reason) << " val_acc " << csv::fixed(best.val_accuracy, 4);
  if (!parts.test.empty()) {
    const auto e = eval::evaluate(r.model, parts.test);
    std::cout << " test_acc " << csv::fixed(e.report.accuracy, 4);
    if (!a.report.empty()) write_reports(e, a.report);
  }
  std::cout << "\n";
  return 0;
}

struct SearchArgs {
  std::string arch = "bilstm", config, data, ledger, best_config;
  int iters = 20;
  std::uint64_t seed = 0;
  int epoch_cap = 0;
};

int run_search(const SearchArgs& a) {
  auto cfg = read_train_config(a.config);
  cfg.options.epoch_cap = a.epoch_cap;
  const auto windows = a.data.empty() ? synthetic_windows(0) : read_windows_any(a.data, 30, 30);
  const auto parts = training::split(windows, cfg.split);
  const auto result = training::random_search(parts.train, parts.val, seqnet::parse_arch(a.arch), a.iters, a.seed,
                                              cfg.options, {}, [](const training::Trial& t) {
                                                std::cerr << "search: " << training::ledger_row(t);
                                              });
  if (a.ledger.empty()) {
    training::write_ledger(result.trials, std::cout);
  } else {
    auto out = open_output(a.ledger);
    training::write_ledger(result.trials, out);
  }
  const auto& b = result.best;
  std::cerr << "search: best trial " << result.best_trial << "\n";
  if (!a.best_config.empty()) {
    auto out = open_output(a.best_config);
    csv::write_or_throw(out, "units = " + std::to_string(b.units) + "\ndropout_rate = " + csv::fixed(b.dropout_rate, 6) +
                                 "\nlearning_rate = " + csv::fixed(b.learning_rate, 6) +
                                 "\nbatch_size = " + std::to_string(b.batch_size) +
                                 "\nepochs = " + std::to_string(b.epochs) + "\n");
  }
  return 0;
}

struct EvaluateArgs {
  std::string model, data, report;
};

int run_evaluate(const EvaluateArgs& a) {
  seqnet::SequenceModel model;
  try {
    model = seqnet::load_model_file(a.model);
  } catch (const Error& e) {
    rethrow_with_path(e, a.model);
  }
  const auto len = static_cast<std::size_t>(model.feature_config.window_len);
  const auto windows = read_windows_any(a.data, len, len);
  eval::Evaluation e;
  try {
    e = eval::evaluate(model, windows);
  } catch (const Error& err) {
    rethrow_with_path(err, a.data);
  }
  std::cout << eval::render_text(e.report);
  if (!a.report.empty()) write_reports(e, a.report);
  return 0;
}

struct CountArgs {
  std::string input, exercise, thresholds, output;
};

int run_count(const CountArgs& a) {
  const auto overrides = read_thresholds(a.thresholds);
  const auto frames = read_landmarks(a.input);
  repcount::RepSpec spec;
  try {
    spec = repcount::spec_for(a.exercise, overrides);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnknownExercise) throw;
    throw Error(e.kind(), "--exercise: no repetition spec for '" + a.exercise + "'");
  }
  const auto result = repcount::count_session(frames, spec);
  if (!a.output.empty()) {
    auto out = open_output(a.output);
    repcount::write_event_csv(result.events, out);
  }
  std::cout << a.exercise << " " << result.total << "\n";
  return 0;
}

struct StreamArgs {
  std::string input, model, thresholds;
  double fps = 30.0;
  bool no_throttle = false, sliding = false;
};

int run_stream_cmd(const StreamArgs& a) {
  seqnet::SequenceModel model;
  try {
    model = seqnet::load_model_file(a.model);
  } catch (const Error& e) {
    rethrow_with_path(e, a.model);
  }
  stream::SessionOptions so;
  so.cadence = a.sliding ? stream::Cadence::Sliding : stream::Cadence::Blocks;
  so.thresholds = read_thresholds(a.thresholds);
  stream::StreamSession session(&model, so);
  stream::RunOptions ro;
  ro.fps = a.no_throttle ? 0.0 : a.fps;

  stream::RunSummary s;
  if (a.input == "-") {
    s = stream::run_stream(std::cin, std::cout, session, ro);
  } else {
    auto in = open_input(a.input);
    try {
      s = stream::run_stream(in, std::cout, session, ro);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NoModelLoaded || exit_code(e.kind()) != 3) throw;
      rethrow_with_path(e, a.input);
    }
  }
  std::cerr << "stream: " << s.frames << " frames, " << s.skipped << " skipped, " << s.classified << " classified, "
            << s.reps << " reps, " << csv::fixed(s.frames / std::max(s.wall_seconds, 1e-9), 1) << " frames/s\n";
  return 0;
}

struct SynthArgs {
  std::string output, scripted;
  std::size_t videos = 4, frames = 300, period = 60;
  int cycles = 3;
  double noise = 0.003;
  std::uint64_t seed = 0;
  bool pose33 = false;
};

int run_synth(const SynthArgs& a) {
  std::vector<LandmarkFrame> frames;
  if (!a.scripted.empty()) {
    if (!is_canonical_label(a.scripted)) throw Error(ErrorKind::Usage, "--scripted: unknown exercise '" + a.scripted + "'");
    frames = synth::scripted_cycles(a.scripted, a.cycles, a.period);
  } else {
    synth::DatasetOptions d;
    d.videos_per_exercise = a.videos;
    d.clip.frames = a.frames;
    d.clip.noise = a.noise;
    frames = synth::make_dataset(d, a.seed);
  }
  auto out = open_output(a.output);
  if (a.pose33) write_pose33_csv(frames, out);
  else write_landmark_csv(frames, out);
  std::cerr << "synth: " << frames.size() << " frames\n";
  return 0;
}

struct BaselineArgs {
  std::string arch = "dnn", data, config, report;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int batch_size = 32, epochs = 50;
};

int run_baseline(const BaselineArgs& a) {
  auto cfg = read_train_config(a.config);
  // frames of one video are near duplicates, so partitions are drawn by video
  cfg.split.granularity = training::Granularity::Video;
  std::vector<FeatureFrame> frames;
  if (a.data.empty()) {
    frames = featurize_all(synth::make_dataset({}, 0), FeatureConfig{}).frames;
  } else {
    frames = read_features(a.data).frames;
  }
  std::vector<WindowSample> handles(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    handles[i].label = frames[i].label;
    handles[i].source_video = frames[i].source_video;
    handles[i].start_frame = i;
  }
  const auto parts = training::split(handles, cfg.split);
  auto pick = [&](const std::vector<WindowSample>& hs) {
    std::vector<FeatureFrame> out;
    out.reserve(hs.size());
    for (const auto& h : hs) out.push_back(frames[h.start_frame]);
    return out;
  };
  const auto train = pick(parts.train), val = pick(parts.val), test = pick(parts.test);
  const auto arch = baseline::parse_frame_arch(a.arch);
  const auto r = baseline::train_frame_model(train, val, arch, {a.learning_rate, a.batch_size, a.epochs}, a.seed,
                                             cfg.options);
  std::cerr << "baseline: " << train.size() << " train, " << val.size() << " val, " << test.size() << " test frames, "
            << r.record.epochs.size() << " epochs\n";
  if (test.empty()) return 0;

  std::vector<std::size_t> truth;
  for (const auto& f : test) truth.push_back(r.model.labels.index(f.label));
  const auto per_frame = eval::evaluate_predictions(
      truth, eval::argmax_columns(r.model.predict_proba(baseline::frame_columns(test))), r.model.labels);
  const auto voted = baseline::vote_by_video(r.model, test, baseline::default_voter(arch));
  std::cout << "per-frame\n" << eval::render_text(per_frame.report);
  if (!a.report.empty()) write_reports(per_frame, a.report, "frame_");
  if (voted.truth.empty()) {
    std::cerr << "baseline: no test video is long enough to vote\n";
    return 0;
  }
  const auto v = eval::evaluate_predictions(voted.truth, voted.predicted, r.model.labels);
  std::cout << "\nvoted\n" << eval::render_text(v.report);
  if (!a.report.empty()) write_reports(v, a.report, "voted_");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exercise recognition from pose landmarks"};
  app.require_subcommand(1);
  const std::vector<std::string> archs{"lstm", "bilstm"};

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "Raw landmark CSV to feature CSV");
  featurize->add_option("input", fa.input, "Raw landmark CSV")->required();
  featurize->add_option("--layout", fa.layout)->check(CLI::IsMember({"mixed78", "invariant20", "raw99"}));
  featurize->add_option("-o,--output", fa.output)->required();

  WindowsArgs wa;
  auto* windows = app.add_subcommand("windows", "Feature CSV to window file");
  windows->add_option("input", wa.input, "Feature CSV")->required();
  windows->add_option("--window", wa.window_len)->check(CLI::PositiveNumber);
  windows->add_option("--stride", wa.stride)->check(CLI::PositiveNumber);
  windows->add_option("-o,--output", wa.output)->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a sequence classifier");
  train->add_option("--arch", ta.arch)->check(CLI::IsMember(archs));
  train->add_option("--config", ta.config, "Key-value config file");
  train->add_option("--seed", ta.seed);
  train->add_option("--data", ta.data, "Feature CSV or window file (default: synthetic)");
  train->add_option("-o,--output", ta.output, "Model file")->required();
  train->add_option("--record", ta.record, "Per-epoch CSV");
  train->add_option("--report", ta.report, "Directory for the test-split report");
  train->add_option("--epoch-cap", ta.epoch_cap)->check(CLI::NonNegativeNumber);

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Random hyperparameter search");
  search->add_option("--iters", sa.iters)->check(CLI::PositiveNumber);
  search->add_option("--seed", sa.seed);
  search->add_option("--arch", sa.arch)->check(CLI::IsMember(archs));
  search->add_option("--config", sa.config, "Split and callback settings");
  search->add_option("--data", sa.data, "Feature CSV or window file (default: synthetic)");
  search->add_option("--ledger", sa.ledger, "Trial ledger CSV (default: stdout)");
  search->add_option("--best-config", sa.best_config, "Write the winning hyperparameters");
  search->add_option("--epoch-cap", sa.epoch_cap)->check(CLI::NonNegativeNumber);

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Classification report for a model");
  evaluate->add_option("model", ea.model)->required();
  evaluate->add_option("data", ea.data, "Feature CSV or window file")->required();
  evaluate->add_option("--report", ea.report, "Output directory");

  CountArgs ca;
  auto* count = app.add_subcommand("count", "Count repetitions in a raw landmark CSV");
  count->add_option("input", ca.input)->required();
  count->add_option("--exercise", ca.exercise)->required();
  count->add_option("--thresholds", ca.thresholds, "Threshold override file");
  count->add_option("-o,--output", ca.output, "Rep event CSV");

  StreamArgs sta;
  auto* stream_cmd = app.add_subcommand("stream", "Replay landmarks through the live classifier");
  stream_cmd->add_option("input", sta.input, "Raw landmark CSV or - for stdin")->required();
  stream_cmd->add_option("--model", sta.model)->required();
  auto* fps = stream_cmd->add_option("--fps", sta.fps)->check(CLI::PositiveNumber);
  stream_cmd->add_flag("--no-throttle", sta.no_throttle)->excludes(fps);
  stream_cmd->add_flag("--sliding", sta.sliding, "Classify on every frame once the buffer is full");
  stream_cmd->add_option("--thresholds", sta.thresholds, "Threshold override file");

  SynthArgs ya;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic landmark data");
  synth_cmd->add_option("-o,--output", ya.output)->required();
  synth_cmd->add_option("--videos", ya.videos, "Videos per exercise")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frames", ya.frames, "Frames per video")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", ya.noise)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", ya.seed);
  synth_cmd->add_option("--scripted", ya.scripted, "Noise-free clip of one exercise");
  synth_cmd->add_option("--cycles", ya.cycles)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--period", ya.period)->check(CLI::PositiveNumber);
  synth_cmd->add_flag("--pose33", ya.pose33, "Write all 33 pose points");

  BaselineArgs ba;
  auto* base = app.add_subcommand("baseline", "Train and evaluate a per-frame baseline");
  base->add_option("--arch", ba.arch)->check(CLI::IsMember({"dnn", "cnn"}));
  base->add_option("--data", ba.data, "Feature CSV (default: synthetic)");
  base->add_option("--config", ba.config, "Split and callback settings");
  base->add_option("--seed", ba.seed);
  base->add_option("--lr", ba.learning_rate)->check(CLI::PositiveNumber);
  base->add_option("--batch", ba.batch_size)->check(CLI::PositiveNumber);
  base->add_option("--epochs", ba.epochs)->check(CLI::PositiveNumber);
  base->add_option("--report", ba.report, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: Usage: " << e.what() << "\n";
    return exit_code(ErrorKind::Usage);
  }

  try {
    if (*featurize) return run_featurize(fa);
    if (*windows) return run_windows(wa);
    if (*train) return run_train(ta);
    if (*search) return run_search(sa);
    if (*evaluate) return run_evaluate(ea);
    if (*count) return run_count(ca);
    if (*stream_cmd) return run_stream_cmd(sta);
    if (*synth_cmd) return run_synth(ya);
    if (*base) return run_baseline(ba);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return exit_code(ErrorKind::Internal);
  }
  return exit_code(ErrorKind::Internal);
}
