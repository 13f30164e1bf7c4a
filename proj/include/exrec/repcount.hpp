#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "exrec/config.hpp"
#include "exrec/csv.hpp"
#include "exrec/error.hpp"
#include "exrec/features.hpp"
#include "exrec/landmarks.hpp"

namespace exrec::repcount {

enum class Stage : std::uint8_t { Unknown, Up, Down };

constexpr std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Up: return "up";
    case Stage::Down: return "down";
    default: return "unknown";
  }
}

/// Joints of the tracked angle; the side is chosen per frame.
struct TrackedAngle {
  Joint a;
  Joint vertex;
  Joint c;

  AngleSpec on(Side side) const { return {landmark(side, a), landmark(side, vertex), landmark(side, c)}; }
};

/// Two threshold regions separated by a dead band. The down region lies on
/// the `enter_down` side of the band, the up region on the `enter_up` side.
/// A repetition completes on re-entering `count_on` after visiting the other
/// region.
struct RepSpec {
  ExerciseLabel exercise;
  TrackedAngle tracked;
  double enter_down = 0.0;
  double enter_up = 0.0;
  Stage count_on = Stage::Down;

  bool down_is_high() const { return enter_down > enter_up; }

  bool in_down(double angle) const { return down_is_high() ? angle >= enter_down : angle <= enter_down; }
  bool in_up(double angle) const { return down_is_high() ? angle <= enter_up : angle >= enter_up; }

  void validate() const {
    if (!(enter_down != enter_up) || !std::isfinite(enter_down) || !std::isfinite(enter_up)) {
      throw Error(ErrorKind::InvalidField, exercise + ": thresholds must differ");
    }
    if (count_on == Stage::Unknown) throw Error(ErrorKind::InvalidField, exercise + ": count_on must be up or down");
  }
};

inline constexpr TrackedAngle kElbowAngle{Joint::Shoulder, Joint::Elbow, Joint::Wrist};
inline constexpr TrackedAngle kKneeAngle{Joint::Hip, Joint::Knee, Joint::Ankle};

inline RepSpec default_spec(std::string_view exercise) {
  if (exercise == labels::kBarbellBicepsCurl) return {std::string(exercise), kElbowAngle, 160.0, 60.0, Stage::Down};
  if (exercise == labels::kSquat) return {std::string(exercise), kKneeAngle, 100.0, 160.0, Stage::Up};
  if (exercise == labels::kPushUp) return {std::string(exercise), kElbowAngle, 95.0, 150.0, Stage::Up};
  if (exercise == labels::kShoulderPress) return {std::string(exercise), kElbowAngle, 90.0, 150.0, Stage::Down};
  throw Error(ErrorKind::UnknownExercise, "no repetition spec for '" + std::string(exercise) + "'");
}

struct RepCounterState {
  Stage stage = Stage::Unknown;
  long count = 0;
  double last_angle = std::numeric_limits<double>::quiet_NaN();
  long frames_in_stage = 0;
  bool last_clamped = false;

  bool operator==(const RepCounterState&) const = default;
};

struct RepEvent {
  long count = 0;  // count after this event
  double angle = 0.0;
};

struct StepResult {
  RepCounterState state;
  std::optional<RepEvent> event;
};

/// One transition of the hysteresis machine. Angles outside [0, 180] are
/// clamped and flagged in the returned state.
inline StepResult step(RepCounterState state, const RepSpec& spec, double angle) {
  StepResult out;
  state.last_clamped = !(angle >= 0.0 && angle <= 180.0);
  if (std::isnan(angle)) angle = 0.0;
  angle = std::clamp(angle, 0.0, 180.0);
  state.last_angle = angle;

  Stage region = Stage::Unknown;
  if (spec.in_down(angle)) region = Stage::Down;
  else if (spec.in_up(angle)) region = Stage::Up;

  if (region == Stage::Unknown || region == state.stage) {
    ++state.frames_in_stage;
  } else {
    const bool completes = state.stage != Stage::Unknown && region == spec.count_on;
    state.stage = region;
    state.frames_in_stage = 1;
    if (completes) {
      ++state.count;
      out.event = RepEvent{state.count, angle};
    }
  }
  out.state = state;
  return out;
}

// Threshold overrides ------------------------------------------------------

/// Reads `exercise.enter_down = value` / `exercise.enter_up = value` lines.
inline std::map<std::string, RepSpec> parse_threshold_overrides(std::istream& in) {
  std::map<std::string, RepSpec> specs;
  for (const auto& e : config::parse(in)) {
    const auto dot = e.key.rfind('.');
    if (dot == std::string::npos) {
      throw Error(ErrorKind::InvalidField, "line " + std::to_string(e.line) + ": key '" + e.key + "' lacks an exercise prefix");
    }
    const std::string exercise = e.key.substr(0, dot);
    const std::string field = e.key.substr(dot + 1);
    auto it = specs.find(exercise);
    if (it == specs.end()) it = specs.emplace(exercise, default_spec(exercise)).first;
    if (field == "enter_down") it->second.enter_down = config::as_real(e);
    else if (field == "enter_up") it->second.enter_up = config::as_real(e);
    else throw Error(ErrorKind::InvalidField, "line " + std::to_string(e.line) + ": unknown threshold '" + field + "'");
  }
  for (const auto& [_, spec] : specs) spec.validate();
  return specs;
}

inline RepSpec spec_for(std::string_view exercise, const std::map<std::string, RepSpec>& overrides) {
  const auto it = overrides.find(std::string(exercise));
  return it != overrides.end() ? it->second : default_spec(exercise);
}

// Sessions -------------------------------------------------------------------

inline constexpr long kSideStickyFrames = 30;

/// Folds frames into one state machine. The side with more present
/// landmarks is chosen (left on a tie) and kept for 30 frames unless its
/// tracked points disappear.
class RepCounter {
 public:
  explicit RepCounter(RepSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const RepSpec& spec() const { return spec_; }
  const RepCounterState& state() const { return state_; }

  void reset() {
    state_ = {};
    side_.reset();
    side_age_ = 0;
  }

  /// Tracked angle for this frame, or nullopt when neither side has it.
  std::optional<double> angle_of(const LandmarkFrame& frame) {
    if (!side_ || side_age_ >= kSideStickyFrames || !has_tracked(frame, *side_)) {
      const auto left = frame.present_count(Side::Left);
      const auto right = frame.present_count(Side::Right);
      Side pick = right > left ? Side::Right : Side::Left;
      if (!has_tracked(frame, pick)) pick = pick == Side::Left ? Side::Right : Side::Left;
      if (!has_tracked(frame, pick)) return std::nullopt;
      if (pick != side_) side_age_ = 0;
      side_ = pick;
    }
    ++side_age_;
    return angle_feature(frame, spec_.tracked.on(*side_));
  }

  /// Frames lacking the tracked points leave the state untouched.
  std::optional<RepEvent> feed(const LandmarkFrame& frame) {
    const auto angle = angle_of(frame);
    if (!angle) return std::nullopt;
    return feed_angle(*angle);
  }

  std::optional<RepEvent> feed_angle(double angle) {
    auto r = step(state_, spec_, angle);
    state_ = r.state;
    return r.event;
  }

 private:
  bool has_tracked(const LandmarkFrame& frame, Side side) const {
    const auto a = spec_.tracked.on(side);
    return frame.has(a.a) && frame.has(a.vertex) && frame.has(a.c);
  }

  RepSpec spec_;
  RepCounterState state_;
  std::optional<Side> side_;
  long side_age_ = 0;
};

struct RepLogEntry {
  std::size_t frame_index = 0;
  ExerciseLabel exercise;
  long count_after_event = 0;
  double angle_at_event = 0.0;
};

struct SessionCount {
  long total = 0;
  std::vector<RepLogEntry> events;
};

inline SessionCount count_session(const std::vector<LandmarkFrame>& frames, const RepSpec& spec) {
  RepCounter counter(spec);
  SessionCount out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (const auto e = counter.feed(frames[i])) out.events.push_back({i, spec.exercise, e->count, e->angle});
  }
  out.total = counter.state().count;
  return out;
}

inline SessionCount count_session(const std::vector<LandmarkFrame>& frames, std::string_view exercise) {
  return count_session(frames, default_spec(exercise));
}

inline void write_event_csv(const std::vector<RepLogEntry>& events, std::ostream& sink) {
  std::string text = "frame_index,exercise,count_after_event,angle_at_event\n";
  for (const auto& e : events) {
    csv::check_cell_text(e.exercise, "exercise");
    text += std::to_string(e.frame_index) + "," + e.exercise + "," + std::to_string(e.count_after_event) + ",";
    csv::append_fixed6(text, e.angle_at_event);
    text += "\n";
  }
  csv::write_or_throw(sink, text);
}

}  // namespace exrec::repcount
