#pragma once

// Real-time loop: buffer usable frames, classify each full window, and route
// the tracked angle of every later frame to the counter of the predicted
// exercise.

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "exrec/csv.hpp"
#include "exrec/error.hpp"
#include "exrec/evaluator.hpp"
#include "exrec/features.hpp"
#include "exrec/landmarks.hpp"
#include "exrec/repcount.hpp"
#include "exrec/seqnet/model.hpp"

namespace exrec::stream {

enum class EventKind : std::uint8_t { Classified, Rep, SkippedFrame };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Classified: return "classified";
    case EventKind::Rep: return "rep";
    default: return "skipped_frame";
  }
}

struct StreamEvent {
  EventKind kind = EventKind::Classified;
  std::size_t frame_index = 0;
  ExerciseLabel label;      // classified: predicted, rep: exercise
  double confidence = 0.0;  // classified
  long count = 0;           // rep: count after the event
  double angle = 0.0;       // rep
  std::string reason;       // skipped_frame
};

/// One JSON object per line.
inline std::string to_json_line(const StreamEvent& e) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(e.kind);
  j["frame_index"] = e.frame_index;
  switch (e.kind) {
    case EventKind::Classified:
      j["label"] = e.label;
      j["confidence"] = e.confidence;
      break;
    case EventKind::Rep:
      j["exercise"] = e.label;
      j["count"] = e.count;
      j["angle"] = e.angle;
      break;
    case EventKind::SkippedFrame:
      j["reason"] = e.reason;
      break;
  }
  return j.dump() + "\n";
}

enum class Cadence : std::uint8_t {
  Blocks,   // classify, then clear the buffer
  Sliding,  // classify on every frame once the buffer is full
};

struct SessionOptions {
  Cadence cadence = Cadence::Blocks;
  std::map<std::string, repcount::RepSpec> thresholds;  // overrides by exercise
};

class StreamSession {
 public:
  /// `model` may be null; stepping then fails with NoModelLoaded.
  explicit StreamSession(const seqnet::SequenceModel* model, SessionOptions options = {})
      : model_(model), options_(std::move(options)) {
    if (model_) capacity_ = static_cast<std::size_t>(model_->feature_config.window_len);
  }

  std::vector<StreamEvent> step(const LandmarkFrame& frame) {
    if (!model_) throw Error(ErrorKind::NoModelLoaded, "stream session has no model");
    std::vector<StreamEvent> events;
    const std::size_t index = frames_seen_++;
    if (!frame_is_usable(frame)) {
      events.push_back({EventKind::SkippedFrame, index, {}, 0.0, 0, 0.0, "essential landmarks missing"});
      return events;
    }
    buffer_.push_back(featurize(frame, model_->feature_config).values);
    if (buffer_.size() > capacity_) buffer_.pop_front();
    if (buffer_.size() == capacity_) {
      classify(index, events);
      if (options_.cadence == Cadence::Blocks) buffer_.clear();
    }
    if (current_) {
      if (auto* counter = counter_for(*current_)) {
        if (const auto rep = counter->feed(frame)) events.push_back({EventKind::Rep, index, *current_, 0.0, rep->count, rep->angle, {}});
      }
    }
    return events;
  }

  std::size_t frames_seen() const { return frames_seen_; }
  std::size_t buffered() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::optional<ExerciseLabel>& current_label() const { return current_; }
  double current_confidence() const { return confidence_; }

  /// Count so far for an exercise, 0 if it never had a counter.
  long count(const std::string& exercise) const {
    const auto it = counters_.find(exercise);
    return it != counters_.end() && it->second ? it->second->state().count : 0;
  }

 private:
  void classify(std::size_t index, std::vector<StreamEvent>& events) {
    WindowSample w;
    w.layout = model_->feature_config.layout;
    w.matrix.resize(static_cast<Eigen::Index>(capacity_), static_cast<Eigen::Index>(model_->feature_config.dim()));
    for (std::size_t r = 0; r < capacity_; ++r)
      w.matrix.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(buffer_[r].data(), w.matrix.cols());
    const Eigen::VectorXd p = model_->predict_proba({w}).col(0);
    const auto k = eval::argmax(p);
    const auto& label = model_->labels.decode(k);
    if (!current_ || *current_ != label) {
      // a new exercise starts from an unknown stage
      if (auto* counter = counter_for(label)) counter->reset();
    }
    current_ = label;
    confidence_ = p(static_cast<Eigen::Index>(k));
    events.push_back({EventKind::Classified, index, label, confidence_, 0, 0.0, {}});
  }

  repcount::RepCounter* counter_for(const std::string& exercise) {
    auto it = counters_.find(exercise);
    if (it == counters_.end()) {
      std::optional<repcount::RepCounter> counter;
      try {
        counter.emplace(repcount::spec_for(exercise, options_.thresholds));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnknownExercise) throw;
      }
      it = counters_.emplace(exercise, std::move(counter)).first;
    }
    return it->second ? &*it->second : nullptr;
  }

  const seqnet::SequenceModel* model_;
  SessionOptions options_;
  std::size_t capacity_ = 30;
  std::deque<std::vector<double>> buffer_;
  std::size_t frames_seen_ = 0;
  std::optional<ExerciseLabel> current_;
  double confidence_ = 0.0;
  std::map<std::string, std::optional<repcount::RepCounter>> counters_;  // nullopt: no spec for that label
};

// Runner ---------------------------------------------------------------------

struct RunOptions {
  double fps = 30.0;  // <= 0 disables throttling
  std::size_t queue_capacity = 256;
};

struct RunSummary {
  std::size_t frames = 0;
  std::size_t skipped = 0;
  std::size_t classified = 0;
  std::size_t reps = 0;
  double wall_seconds = 0.0;
};

namespace detail {

/// Single-producer single-consumer queue with a fixed capacity.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    items_.push_back(std::move(value));
    not_empty_.notify_one();
  }

  T pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty(); });
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  std::mutex mutex_;
  std::condition_variable not_full_, not_empty_;
};

struct EndOfInput {};
using Item = std::variant<LandmarkFrame, EndOfInput, Error>;

}  // namespace detail

/// Reads raw landmark rows (an optional header line is skipped) on a reader
/// thread, steps the session in frame order and writes one JSON line per
/// event. With a positive fps, frames are paced to that rate.
inline RunSummary run_stream(std::istream& source, std::ostream& sink, StreamSession& session, const RunOptions& opt = {}) {
  detail::BoundedQueue<detail::Item> queue(std::max<std::size_t>(1, opt.queue_capacity));
  std::thread reader([&] {
    std::string line;
    std::size_t row = 0;
    try {
      const std::string header = exrec::detail::join_header(landmark_csv_header());
      while (csv::read_line(source, line)) {
        ++row;
        if (line.empty() || (row == 1 && line + "\n" == header)) continue;
        queue.push(parse_landmark_row(line, row));
      }
      if (source.bad()) throw Error(ErrorKind::SourceFailure, "read failed");
      queue.push(detail::EndOfInput{});
    } catch (const Error& e) {
      queue.push(e);
    } catch (const std::exception& e) {
      queue.push(Error(ErrorKind::Internal, e.what()));
    }
  });

  RunSummary summary;
  const auto t0 = std::chrono::steady_clock::now();
  const auto period = opt.fps > 0 ? std::chrono::duration<double>(1.0 / opt.fps) : std::chrono::duration<double>(0);
  std::optional<Error> failure;
  bool reader_done = false;
  for (;;) {
    auto item = queue.pop();
    if (std::holds_alternative<detail::EndOfInput>(item)) {
      reader_done = true;
      break;
    }
    if (auto* e = std::get_if<Error>(&item)) {
      reader_done = true;
      failure = *e;
      break;
    }
    if (opt.fps > 0) {
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                             period * static_cast<double>(summary.frames)));
    }
    try {
      for (const auto& ev : session.step(std::get<LandmarkFrame>(item))) {
        summary.skipped += ev.kind == EventKind::SkippedFrame;
        summary.classified += ev.kind == EventKind::Classified;
        summary.reps += ev.kind == EventKind::Rep;
        csv::write_or_throw(sink, to_json_line(ev));
      }
      if (opt.fps > 0) sink.flush();
    } catch (const Error& e) {
      failure = e;
      break;
    }
    ++summary.frames;
  }
  // drain so a blocked reader can finish
  while (!reader_done) reader_done = !std::holds_alternative<LandmarkFrame>(queue.pop());
  reader.join();
  sink.flush();
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (failure) throw *failure;
  return summary;
}

}  // namespace exrec::stream
