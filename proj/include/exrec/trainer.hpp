#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "exrec/config.hpp"
#include "exrec/csv.hpp"
#include "exrec/error.hpp"
#include "exrec/features.hpp"
#include "exrec/rng.hpp"
#include "exrec/seqnet/adam.hpp"
#include "exrec/seqnet/model.hpp"
#include "exrec/seqnet/network.hpp"

namespace exrec::training {

// Hyperparameters ------------------------------------------------------------

struct HyperParams {
  int units = 64;
  double dropout_rate = 0.3;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 50;

  bool operator==(const HyperParams&) const = default;

  void validate() const {
    if (units < 1 || batch_size < 1 || epochs < 1 || !(learning_rate > 0.0) || !std::isfinite(learning_rate) ||
        !(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw Error(ErrorKind::InvalidField, "hyperparameters out of domain");
    }
  }
};

/// Search space; integers inclusive.
struct HyperParamRanges {
  int units_min = 50, units_max = 150;
  double dropout_min = 0.2, dropout_max = 0.5;
  double learning_rate_min = 1e-4, learning_rate_max = 1e-3;
  int batch_min = 32, batch_max = 64;
  int epochs_min = 50, epochs_max = 100;

  bool contains(const HyperParams& hp) const {
    return hp.units >= units_min && hp.units <= units_max && hp.dropout_rate >= dropout_min &&
           hp.dropout_rate <= dropout_max && hp.learning_rate >= learning_rate_min &&
           hp.learning_rate <= learning_rate_max && hp.batch_size >= batch_min && hp.batch_size <= batch_max &&
           hp.epochs >= epochs_min && hp.epochs <= epochs_max;
  }
};

/// Draw order: units, dropout, learning rate, batch size, epochs.
inline HyperParams sample_hyperparams(Rng& rng, const HyperParamRanges& r = {}) {
  HyperParams hp;
  hp.units = static_cast<int>(rng.uniform_int(r.units_min, r.units_max));
  hp.dropout_rate = rng.uniform(r.dropout_min, r.dropout_max);
  hp.learning_rate = rng.uniform(r.learning_rate_min, r.learning_rate_max);
  hp.batch_size = static_cast<int>(rng.uniform_int(r.batch_min, r.batch_max));
  hp.epochs = static_cast<int>(rng.uniform_int(r.epochs_min, r.epochs_max));
  if (!r.contains(hp)) throw Error(ErrorKind::Internal, "hyperparameter draw escaped its range");
  return hp;
}

// Splitting ------------------------------------------------------------------

enum class Granularity : std::uint8_t { Window, Video };

inline std::string_view to_string(Granularity g) { return g == Granularity::Window ? "window" : "video"; }

inline Granularity parse_granularity(std::string_view text) {
  if (text == "window") return Granularity::Window;
  if (text == "video") return Granularity::Video;
  throw Error(ErrorKind::InvalidField, "unknown split granularity '" + std::string(text) + "'");
}

struct SplitSpec {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
  Granularity granularity = Granularity::Window;
  std::uint64_t seed = 0;

  void validate() const {
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
      throw Error(ErrorKind::InvalidField, "split fractions must be non-negative and sum to 1");
    }
  }
};

struct Split {
  std::vector<WindowSample> train, val, test;
};

/// Largest-remainder apportionment of `n` units over the three fractions;
/// ties go to the earlier partition.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitSpec& spec) {
  const std::array<double, 3> f{spec.train, spec.val, spec.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = f[i] * static_cast<double>(n);
    // guard against 0.7 * 100 = 69.99999999999999
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (remainder[i] > remainder[best] + 1e-12) best = i;
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  return counts;
}

/// Stratified by label at the chosen granularity. Each partition keeps the
/// input order of its samples.
inline Split split(const std::vector<WindowSample>& samples, const SplitSpec& spec) {
  spec.validate();
  if (samples.empty()) throw Error(ErrorKind::EmptyTrainingSet, "nothing to split");

  // unit = one window, or all windows of one video
  std::vector<std::vector<std::size_t>> units;
  std::vector<ExerciseLabel> unit_label;
  if (spec.granularity == Granularity::Window) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      units.push_back({i});
      unit_label.push_back(samples[i].label);
    }
  } else {
    std::map<std::string, std::size_t> by_video;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto [it, fresh] = by_video.emplace(samples[i].source_video, units.size());
      if (fresh) {
        units.emplace_back();
        unit_label.push_back(samples[i].label);
      }
      units[it->second].push_back(i);
    }
  }

  std::map<ExerciseLabel, std::vector<std::size_t>> per_class;
  for (std::size_t u = 0; u < units.size(); ++u) per_class[unit_label[u]].push_back(u);

  std::vector<int> part(samples.size(), 0);
  std::size_t class_index = 0;
  for (auto& [label, members] : per_class) {
    if (members.size() < 3) {
      throw Error(ErrorKind::TooFewSamples, "class '" + label + "' has " + std::to_string(members.size()) + " " +
                                                std::string(to_string(spec.granularity)) + "(s); at least 3 needed");
    }
    Rng rng(derive_seed(spec.seed, 0x5b117, class_index++));
    rng.shuffle(std::span(members));
    const auto counts = apportion(members.size(), spec);
    for (std::size_t k = 0; k < members.size(); ++k) {
      const int p = k < counts[0] ? 0 : k < counts[0] + counts[1] ? 1 : 2;
      for (std::size_t i : units[members[k]]) part[i] = p;
    }
  }

  Split out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (part[i] == 0 ? out.train : part[i] == 1 ? out.val : out.test).push_back(samples[i]);
  }
  return out;
}

// Training loop --------------------------------------------------------------

enum class StopReason : std::uint8_t { Completed, EarlyStop, Diverged };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Completed: return "completed";
    case StopReason::EarlyStop: return "early_stop";
    default: return "diverged";
  }
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  StopReason stop_reason = StopReason::Completed;
  double wall_seconds = 0.0;

  /// Equality ignoring wall time.
  bool same_trajectory(const TrainRecord& o) const {
    return epochs == o.epochs && best_epoch == o.best_epoch && best_val_loss == o.best_val_loss &&
           stop_reason == o.stop_reason;
  }
};

/// Thrown when a loss turns NaN or infinite; carries the record so far.
class DivergedLoss : public Error {
 public:
  DivergedLoss(const std::string& what, TrainRecord record)
      : Error(ErrorKind::DivergedLoss, what), record_(std::move(record)) {}
  const TrainRecord& record() const { return record_; }

 private:
  TrainRecord record_;
};

struct FitOptions {
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  int early_stop_patience = 10;
  int lr_patience = 5;
  double lr_factor = 0.5;
  double lr_floor = 1e-6;
  double lr_min_delta = 1e-4;
  std::uint64_t seed = 0;
};

struct BatchOutcome {
  double loss = 0.0;  // batch mean
  std::size_t correct = 0;
  std::vector<std::span<const double>> grads;
};

struct EvalOutcome {
  double loss = 0.0;
  double accuracy = 0.0;
};

inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;
inline constexpr std::uint64_t kDropoutStream = 3;

/// Mini-batch Adam with early stopping (restore best) and learning-rate
/// reduction on plateau, both on validation loss, or training loss when no
/// validation set is given.
///
/// Net provides:
///   std::vector<std::span<double>> parameters();
///   BatchOutcome train_batch(std::span<const std::size_t> indices, std::uint64_t seed);
///   EvalOutcome evaluate_val();
///   Snapshot snapshot() const;  void restore(const Snapshot&);
template <typename Net>
TrainRecord fit(Net& net, std::size_t train_size, bool has_val, const FitOptions& opt) {
  if (train_size == 0) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
  const auto t0 = std::chrono::steady_clock::now();
  TrainRecord record;
  seqnet::AdamState adam(net.parameters(), opt.learning_rate);
  auto best = net.snapshot();
  double plateau_best = std::numeric_limits<double>::infinity();
  int wait = 0, plateau_wait = 0;

  std::vector<std::size_t> order(train_size);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(opt.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(std::span(order));

    EpochStats stats;
    stats.epoch = epoch;
    stats.learning_rate = adam.learning_rate;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::uint64_t batch_index = 0;
    for (std::size_t begin = 0; begin < train_size; begin += opt.batch_size, ++batch_index) {
      const std::size_t n = std::min(opt.batch_size, train_size - begin);
      const auto seed = derive_seed(opt.seed, kDropoutStream, (static_cast<std::uint64_t>(epoch) << 32) | batch_index);
      const auto out = net.train_batch(std::span(order).subspan(begin, n), seed);
      if (!std::isfinite(out.loss)) {
        record.stop_reason = StopReason::Diverged;
        record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        throw DivergedLoss("non-finite training loss in epoch " + std::to_string(epoch), record);
      }
      seqnet::adam_step(adam, net.parameters(), out.grads);
      loss_sum += out.loss * static_cast<double>(n);
      correct += out.correct;
    }
    stats.train_loss = loss_sum / static_cast<double>(train_size);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_size);
    if (has_val) {
      const auto v = net.evaluate_val();
      stats.val_loss = v.loss;
      stats.val_accuracy = v.accuracy;
    } else {
      stats.val_loss = stats.train_loss;
      stats.val_accuracy = stats.train_accuracy;
    }
    record.epochs.push_back(stats);
    const double monitor = stats.val_loss;
    if (!std::isfinite(monitor)) {
      record.stop_reason = StopReason::Diverged;
      record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      throw DivergedLoss("non-finite monitored loss in epoch " + std::to_string(epoch), record);
    }

    if (monitor < record.best_val_loss) {
      record.best_val_loss = monitor;
      record.best_epoch = epoch;
      best = net.snapshot();
      wait = 0;
    } else if (++wait >= opt.early_stop_patience) {
      record.stop_reason = StopReason::EarlyStop;
      break;
    }

    if (monitor < plateau_best - opt.lr_min_delta) {
      plateau_best = monitor;
      plateau_wait = 0;
    } else if (++plateau_wait >= opt.lr_patience) {
      if (adam.learning_rate > opt.lr_floor) adam.learning_rate = std::max(adam.learning_rate * opt.lr_factor, opt.lr_floor);
      plateau_wait = 0;
    }
  }
  net.restore(best);
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

// Sequence models ------------------------------------------------------------

namespace detail {

inline std::size_t argmax(const Eigen::MatrixXd& p, Eigen::Index col) {
  Eigen::Index best = 0;
  p.col(col).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

inline const Eigen::MatrixXd& identity(const Eigen::MatrixXd& m) { return m; }

}  // namespace detail

/// Scaled windows plus class indices, ready for batching.
struct EncodedSet {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<std::size_t> targets;
};

inline EncodedSet encode(const std::vector<WindowSample>& windows, const StandardScaler& scaler, const LabelTable& labels) {
  EncodedSet set;
  set.inputs.reserve(windows.size());
  for (const auto& w : windows) {
    set.inputs.push_back(w.matrix);
    scaler.transform_in_place(set.inputs.back());
    set.targets.push_back(labels.index(w.label));
  }
  return set;
}

inline Eigen::MatrixXd one_hot_columns(std::span<const std::size_t> targets, std::size_t classes) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(targets.size()));
  for (std::size_t n = 0; n < targets.size(); ++n) y(static_cast<Eigen::Index>(targets[n]), static_cast<Eigen::Index>(n)) = 1.0;
  return y;
}

/// Loss and accuracy of `params` on an encoded set, inference mode.
inline EvalOutcome evaluate_encoded(const seqnet::NetworkSpec& spec, const seqnet::NetworkParams& params,
                                    const EncodedSet& set, std::size_t chunk = 256) {
  EvalOutcome out;
  if (set.inputs.empty()) return out;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<Eigen::MatrixXd> slice;
  for (std::size_t begin = 0; begin < set.inputs.size(); begin += chunk) {
    const std::size_t end = std::min(set.inputs.size(), begin + chunk);
    const auto batch = seqnet::make_batch(std::span(set.inputs).subspan(begin, end - begin), detail::identity);
    const auto p = seqnet::forward(spec, params, batch, false, 0).probabilities;
    const auto targets = std::span(set.targets).subspan(begin, end - begin);
    loss_sum += seqnet::cross_entropy(p, one_hot_columns(targets, static_cast<std::size_t>(p.rows()))) *
                static_cast<double>(end - begin);
    for (std::size_t n = 0; n < targets.size(); ++n) correct += detail::argmax(p, static_cast<Eigen::Index>(n)) == targets[n];
  }
  out.loss = loss_sum / static_cast<double>(set.inputs.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(set.inputs.size());
  return out;
}

class SequenceTrainee {
 public:
  using Snapshot = seqnet::NetworkParams;

  SequenceTrainee(seqnet::NetworkSpec spec, seqnet::NetworkParams params, const EncodedSet& train, const EncodedSet& val)
      : spec_(std::move(spec)), params_(std::move(params)), train_(train), val_(val) {}

  std::vector<std::span<double>> parameters() { return params_.views(); }

  BatchOutcome train_batch(std::span<const std::size_t> indices, std::uint64_t seed) {
    std::vector<std::size_t> targets;
    targets.reserve(indices.size());
    for (std::size_t i : indices) targets.push_back(train_.targets[i]);
    const auto batch = seqnet::make_batch(indices, [&](std::size_t i) -> const Eigen::MatrixXd& { return train_.inputs[i]; });
    last_ = seqnet::loss_and_grads(spec_, params_, batch, one_hot_columns(targets, static_cast<std::size_t>(spec_.classes())),
                                   true, seed);
    BatchOutcome out;
    out.loss = last_.loss;
    for (std::size_t n = 0; n < targets.size(); ++n) out.correct += detail::argmax(last_.probabilities, static_cast<Eigen::Index>(n)) == targets[n];
    out.grads = std::as_const(last_.grads).views();
    return out;
  }

  EvalOutcome evaluate_val() const { return evaluate_encoded(spec_, params_, val_); }

  Snapshot snapshot() const { return params_; }
  void restore(const Snapshot& s) { params_ = s; }

  const seqnet::NetworkParams& params() const { return params_; }

 private:
  seqnet::NetworkSpec spec_;
  seqnet::NetworkParams params_;
  const EncodedSet& train_;
  const EncodedSet& val_;
  seqnet::LossAndGrads last_;
};

struct TrainOptions {
  int early_stop_patience = 10;
  int lr_patience = 5;
  double lr_factor = 0.5;
  double lr_floor = 1e-6;
  bool bidirectional_second = true;
  int epoch_cap = 0;  // 0 = no cap
};

struct TrainResult {
  seqnet::SequenceModel model;
  TrainRecord record;
};

inline void check_windows(const std::vector<WindowSample>& windows, const WindowSample& ref) {
  for (const auto& w : windows) {
    if (w.layout != ref.layout || w.matrix.rows() != ref.matrix.rows() || w.matrix.cols() != ref.matrix.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "windows differ in layout or shape");
    }
  }
}

inline TrainResult train(const std::vector<WindowSample>& train_set, const std::vector<WindowSample>& val_set,
                         const HyperParams& hp, seqnet::Arch arch, std::uint64_t seed, const TrainOptions& opt = {}) {
  hp.validate();
  if (train_set.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training windows");
  check_windows(train_set, train_set.front());
  check_windows(val_set, train_set.front());

  std::vector<ExerciseLabel> all_labels;
  for (const auto* set : {&train_set, &val_set})
    for (const auto& w : *set) all_labels.push_back(w.label);

  seqnet::SequenceModel model;
  model.labels = encode_labels(all_labels);
  model.scaler = fit_scaler(train_set);
  model.feature_config.layout = train_set.front().layout;
  model.feature_config.window_len = static_cast<int>(train_set.front().matrix.rows());
  model.spec = seqnet::make_architecture(arch, model.feature_config.window_len, static_cast<int>(train_set.front().matrix.cols()),
                                         hp.units, hp.dropout_rate, static_cast<int>(model.labels.size()),
                                         opt.bidirectional_second);

  const auto train_enc = encode(train_set, model.scaler, model.labels);
  const auto val_enc = encode(val_set, model.scaler, model.labels);
  SequenceTrainee net(model.spec, seqnet::init_params(model.spec, derive_seed(seed, kInitStream)), train_enc, val_enc);

  FitOptions fo;
  fo.epochs = opt.epoch_cap > 0 ? std::min(hp.epochs, opt.epoch_cap) : hp.epochs;
  fo.batch_size = static_cast<std::size_t>(hp.batch_size);
  fo.learning_rate = hp.learning_rate;
  fo.early_stop_patience = opt.early_stop_patience;
  fo.lr_patience = opt.lr_patience;
  fo.lr_factor = opt.lr_factor;
  fo.lr_floor = opt.lr_floor;
  fo.seed = seed;

  TrainResult result;
  result.record = fit(net, train_enc.inputs.size(), !val_enc.inputs.empty(), fo);
  model.params = net.params();
  result.model = std::move(model);
  return result;
}

// Random search --------------------------------------------------------------

struct Trial {
  int index = 0;
  HyperParams hp;
  double val_accuracy = -std::numeric_limits<double>::infinity();
  double val_loss = std::numeric_limits<double>::infinity();
  StopReason stop_reason = StopReason::Completed;
  int epochs_run = 0;
};

struct SearchResult {
  HyperParams best;
  int best_trial = -1;
  std::vector<Trial> trials;
};

inline constexpr std::uint64_t kSearchStream = 4;
inline constexpr std::uint64_t kTrialStream = 5;

/// Orders trials by validation accuracy, then lower loss, then index.
inline bool better_trial(const Trial& a, const Trial& b) {
  if (a.val_accuracy != b.val_accuracy) return a.val_accuracy > b.val_accuracy;
  if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
  return a.index < b.index;
}

inline SearchResult random_search(const std::vector<WindowSample>& train_set, const std::vector<WindowSample>& val_set,
                                  seqnet::Arch arch, int n_iter, std::uint64_t seed, const TrainOptions& opt = {},
                                  const HyperParamRanges& ranges = {},
                                  const std::function<void(const Trial&)>& on_trial = {}) {
  if (n_iter < 1) throw Error(ErrorKind::Usage, "search needs at least one iteration");
  SearchResult result;
  Rng draws(derive_seed(seed, kSearchStream));
  for (int i = 0; i < n_iter; ++i) {
    Trial t;
    t.index = i;
    t.hp = sample_hyperparams(draws, ranges);
    try {
      const auto r = train(train_set, val_set, t.hp, arch, derive_seed(seed, kTrialStream, static_cast<std::uint64_t>(i)), opt);
      const auto& best = r.record.epochs[static_cast<std::size_t>(r.record.best_epoch)];
      t.val_accuracy = best.val_accuracy;
      t.val_loss = best.val_loss;
      t.stop_reason = r.record.stop_reason;
      t.epochs_run = static_cast<int>(r.record.epochs.size());
    } catch (const DivergedLoss& e) {
      t.stop_reason = StopReason::Diverged;
      t.epochs_run = static_cast<int>(e.record().epochs.size());
    }
    if (on_trial) on_trial(t);
    result.trials.push_back(t);
  }
  const auto best = std::min_element(result.trials.begin(), result.trials.end(), better_trial);
  if (best->stop_reason == StopReason::Diverged) throw Error(ErrorKind::DivergedLoss, "every trial diverged");
  result.best = best->hp;
  result.best_trial = best->index;
  return result;
}

inline std::string ledger_header() {
  return "trial,units,dropout_rate,learning_rate,batch_size,epochs,val_acc,val_loss,stop_reason\n";
}

inline std::string ledger_row(const Trial& t) {
  auto real = [](double v) { return std::isfinite(v) ? csv::fixed(v, 6) : (v > 0 ? "inf" : "-inf"); };
  return std::to_string(t.index) + "," + std::to_string(t.hp.units) + "," + csv::fixed(t.hp.dropout_rate, 6) + "," +
         csv::fixed(t.hp.learning_rate, 8) + "," + std::to_string(t.hp.batch_size) + "," + std::to_string(t.hp.epochs) +
         "," + real(t.val_accuracy) + "," + real(t.val_loss) + "," + std::string(to_string(t.stop_reason)) + "\n";
}

inline void write_ledger(const std::vector<Trial>& trials, std::ostream& sink) {
  std::string text = ledger_header();
  for (const auto& t : trials) text += ledger_row(t);
  csv::write_or_throw(sink, text);
}

inline void write_record_csv(const TrainRecord& r, std::ostream& sink) {
  std::string text = "epoch,train_loss,train_acc,val_loss,val_acc,learning_rate\n";
  for (const auto& e : r.epochs) {
    text += std::to_string(e.epoch) + "," + csv::fixed(e.train_loss, 6) + "," + csv::fixed(e.train_accuracy, 6) + "," +
            csv::fixed(e.val_loss, 6) + "," + csv::fixed(e.val_accuracy, 6) + "," + csv::fixed(e.learning_rate, 8) + "\n";
  }
  csv::write_or_throw(sink, text);
}

// Config files -----------------------------------------------------------------

struct TrainConfig {
  HyperParams hp;
  SplitSpec split;
  TrainOptions options;
};

/// Keys: units, dropout_rate, learning_rate, batch_size, epochs,
/// split.train, split.val, split.test, split.granularity, split.seed,
/// early_stop_patience, lr_patience, lr_factor, lr_floor, bidirectional_second.
inline TrainConfig parse_train_config(std::istream& in, TrainConfig cfg = {}) {
  const auto entries = config::parse(in);
  config::reject_unknown(entries, {"units", "dropout_rate", "learning_rate", "batch_size", "epochs", "split.train",
                                   "split.val", "split.test", "split.granularity", "split.seed", "early_stop_patience",
                                   "lr_patience", "lr_factor", "lr_floor", "bidirectional_second"});
  for (const auto& e : entries) {
    if (e.key == "units") cfg.hp.units = static_cast<int>(config::as_integer(e));
    else if (e.key == "dropout_rate") cfg.hp.dropout_rate = config::as_real(e);
    else if (e.key == "learning_rate") cfg.hp.learning_rate = config::as_real(e);
    else if (e.key == "batch_size") cfg.hp.batch_size = static_cast<int>(config::as_integer(e));
    else if (e.key == "epochs") cfg.hp.epochs = static_cast<int>(config::as_integer(e));
    else if (e.key == "split.train") cfg.split.train = config::as_real(e);
    else if (e.key == "split.val") cfg.split.val = config::as_real(e);
    else if (e.key == "split.test") cfg.split.test = config::as_real(e);
    else if (e.key == "split.granularity") cfg.split.granularity = parse_granularity(e.value);
    else if (e.key == "split.seed") cfg.split.seed = static_cast<std::uint64_t>(config::as_integer(e));
    else if (e.key == "early_stop_patience") cfg.options.early_stop_patience = static_cast<int>(config::as_integer(e));
    else if (e.key == "lr_patience") cfg.options.lr_patience = static_cast<int>(config::as_integer(e));
    else if (e.key == "lr_factor") cfg.options.lr_factor = config::as_real(e);
    else if (e.key == "lr_floor") cfg.options.lr_floor = config::as_real(e);
    else if (e.key == "bidirectional_second") cfg.options.bidirectional_second = config::as_bool(e);
  }
  cfg.hp.validate();
  cfg.split.validate();
  return cfg;
}

}  // namespace exrec::training
