#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "exrec/csv.hpp"
#include "exrec/error.hpp"

namespace exrec {

using Point3 = Eigen::Vector3d;

enum class Side : std::uint8_t { Left = 0, Right = 1 };

enum class Joint : std::uint8_t {
  Shoulder,
  Elbow,
  Wrist,
  Hip,
  Knee,
  Ankle,
  Heel,
  FootIndex,
  Pinky,
  Index,
  Thumb,
};

inline constexpr std::size_t kJointsPerSide = 11;
inline constexpr std::size_t kLandmarkCount = 2 * kJointsPerSide;

/// The 22 tracked landmarks. Ordinal order is the serialization order: the
/// eleven left-side joints, then the same eleven on the right.
enum class LandmarkId : std::uint8_t {
  LeftShoulder, LeftElbow, LeftWrist, LeftHip, LeftKnee, LeftAnkle,
  LeftHeel, LeftFootIndex, LeftPinky, LeftIndex, LeftThumb,
  RightShoulder, RightElbow, RightWrist, RightHip, RightKnee, RightAnkle,
  RightHeel, RightFootIndex, RightPinky, RightIndex, RightThumb,
};

constexpr LandmarkId landmark(Side side, Joint joint) {
  return static_cast<LandmarkId>(static_cast<std::size_t>(side) * kJointsPerSide + static_cast<std::size_t>(joint));
}

constexpr std::size_t index_of(LandmarkId id) { return static_cast<std::size_t>(id); }

constexpr Side side_of(LandmarkId id) { return index_of(id) < kJointsPerSide ? Side::Left : Side::Right; }

constexpr Joint joint_of(LandmarkId id) { return static_cast<Joint>(index_of(id) % kJointsPerSide); }

inline constexpr std::array<std::string_view, kLandmarkCount> kLandmarkNames = {
    "LEFT_SHOULDER",  "LEFT_ELBOW",      "LEFT_WRIST",  "LEFT_HIP",    "LEFT_KNEE",   "LEFT_ANKLE",
    "LEFT_HEEL",      "LEFT_FOOT_INDEX", "LEFT_PINKY",  "LEFT_INDEX",  "LEFT_THUMB",  "RIGHT_SHOULDER",
    "RIGHT_ELBOW",    "RIGHT_WRIST",     "RIGHT_HIP",   "RIGHT_KNEE",  "RIGHT_ANKLE", "RIGHT_HEEL",
    "RIGHT_FOOT_INDEX", "RIGHT_PINKY",   "RIGHT_INDEX", "RIGHT_THUMB",
};

constexpr std::string_view landmark_name(LandmarkId id) { return kLandmarkNames[index_of(id)]; }

// Full 33-point pose topology, in the estimator's own ordering.
inline constexpr std::size_t kPoseLandmarkCount = 33;

inline constexpr std::array<std::string_view, kPoseLandmarkCount> kPoseLandmarkNames = {
    "NOSE",           "LEFT_EYE_INNER", "LEFT_EYE",         "LEFT_EYE_OUTER",  "RIGHT_EYE_INNER",
    "RIGHT_EYE",      "RIGHT_EYE_OUTER", "LEFT_EAR",        "RIGHT_EAR",       "MOUTH_LEFT",
    "MOUTH_RIGHT",    "LEFT_SHOULDER",  "RIGHT_SHOULDER",   "LEFT_ELBOW",      "RIGHT_ELBOW",
    "LEFT_WRIST",     "RIGHT_WRIST",    "LEFT_PINKY",       "RIGHT_PINKY",     "LEFT_INDEX",
    "RIGHT_INDEX",    "LEFT_THUMB",     "RIGHT_THUMB",      "LEFT_HIP",        "RIGHT_HIP",
    "LEFT_KNEE",      "RIGHT_KNEE",     "LEFT_ANKLE",       "RIGHT_ANKLE",     "LEFT_HEEL",
    "RIGHT_HEEL",     "LEFT_FOOT_INDEX", "RIGHT_FOOT_INDEX",
};

/// Position of each tracked landmark within the 33-point pose.
inline constexpr std::array<std::size_t, kLandmarkCount> kPoseIndexOfLandmark = {
    11, 13, 15, 23, 25, 27, 29, 31, 17, 19, 21,  // left
    12, 14, 16, 24, 26, 28, 30, 32, 18, 20, 22,  // right
};

using PosePoints = std::array<Point3, kPoseLandmarkCount>;

// Exercise labels --------------------------------------------------------

using ExerciseLabel = std::string;

namespace labels {
inline constexpr std::string_view kBarbellBicepsCurl = "barbell_biceps_curl";
inline constexpr std::string_view kPushUp = "push_up";
inline constexpr std::string_view kShoulderPress = "shoulder_press";
inline constexpr std::string_view kSquat = "squat";
}  // namespace labels

/// Canonical classes in alphabetical order.
inline constexpr std::array<std::string_view, 4> kCanonicalLabels = {
    labels::kBarbellBicepsCurl, labels::kPushUp, labels::kShoulderPress, labels::kSquat};

inline bool is_canonical_label(std::string_view label) {
  for (auto l : kCanonicalLabels)
    if (l == label) return true;
  return false;
}

/// Lowercase snake_case: [a-z0-9_]+ not starting with '_' or a digit.
inline bool is_label_text(std::string_view label) {
  if (label.empty() || label.front() == '_' || (label.front() >= '0' && label.front() <= '9')) return false;
  for (char c : label)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  return true;
}

// Frames -----------------------------------------------------------------

inline bool is_placeholder(const Point3& p) { return p.x() == 0.0 && p.y() == 0.0 && p.z() == 0.0; }

struct LandmarkFrame {
  std::string video_id;
  ExerciseLabel label;
  std::array<Point3, kLandmarkCount> points{};
  std::array<bool, kLandmarkCount> present{};
  /// Populated only by the extended 33-landmark reader or generator.
  std::optional<PosePoints> full_pose;

  LandmarkFrame() {
    points.fill(Point3::Zero());
    present.fill(false);
  }

  const Point3& point(LandmarkId id) const { return points[index_of(id)]; }
  bool has(LandmarkId id) const { return present[index_of(id)]; }

  /// Also updates the matching point of `full_pose` when there is one.
  void set(LandmarkId id, const Point3& p) {
    points[index_of(id)] = p;
    present[index_of(id)] = !is_placeholder(p);
    if (full_pose) (*full_pose)[kPoseIndexOfLandmark[index_of(id)]] = p;
  }

  void clear(LandmarkId id) { set(id, Point3::Zero()); }

  /// Recomputes every presence flag from the placeholder sentinel.
  void refresh_presence() {
    for (std::size_t i = 0; i < kLandmarkCount; ++i) present[i] = !is_placeholder(points[i]);
  }

  std::size_t present_count(Side side) const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < kJointsPerSide; ++j) n += present[static_cast<std::size_t>(side) * kJointsPerSide + j];
    return n;
  }

  bool operator==(const LandmarkFrame& other) const {
    return video_id == other.video_id && label == other.label && points == other.points && present == other.present &&
           full_pose == other.full_pose;
  }
};

/// Builds the 22-landmark frame view of a full 33-point pose.
inline LandmarkFrame frame_from_pose(const PosePoints& pose, std::string video_id, ExerciseLabel label) {
  LandmarkFrame frame;
  frame.video_id = std::move(video_id);
  frame.label = std::move(label);
  for (std::size_t i = 0; i < kLandmarkCount; ++i) frame.points[i] = pose[kPoseIndexOfLandmark[i]];
  frame.refresh_presence();
  frame.full_pose = pose;
  return frame;
}

// Usability --------------------------------------------------------------

inline constexpr std::array<Joint, 6> kEssentialJoints = {Joint::Shoulder, Joint::Elbow, Joint::Wrist,
                                                          Joint::Hip,      Joint::Knee,  Joint::Ankle};

/// Which joints must be fully present on one side for a frame to be kept.
/// Per-exercise overrides replace the common set when a hint is given.
struct UsabilityRules {
  std::vector<Joint> essentials{kEssentialJoints.begin(), kEssentialJoints.end()};
  std::map<ExerciseLabel, std::vector<Joint>, std::less<>> per_exercise;

  const std::vector<Joint>& essentials_for(const std::optional<ExerciseLabel>& hint) const {
    if (hint) {
      if (auto it = per_exercise.find(*hint); it != per_exercise.end()) return it->second;
    }
    return essentials;
  }
};

inline bool side_is_valid(const LandmarkFrame& frame, Side side, const std::vector<Joint>& essentials) {
  for (Joint j : essentials)
    if (!frame.has(landmark(side, j))) return false;
  return true;
}

inline bool frame_is_usable(const LandmarkFrame& frame, const std::optional<ExerciseLabel>& exercise_hint = std::nullopt,
                            const UsabilityRules& rules = {}) {
  const auto& essentials = rules.essentials_for(exercise_hint);
  return side_is_valid(frame, Side::Left, essentials) || side_is_valid(frame, Side::Right, essentials);
}

// CSV schema -------------------------------------------------------------

namespace detail {

template <std::size_t N>
std::vector<std::string> coordinate_header(const std::array<std::string_view, N>& names) {
  std::vector<std::string> header{"video_id", "label"};
  for (auto name : names) {
    for (const char* axis : {"_x", "_y", "_z"}) header.push_back(std::string(name) + axis);
  }
  return header;
}

inline std::string join_header(const std::vector<std::string>& header) {
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  line += '\n';
  return line;
}

inline void check_header(const std::string& line, const std::vector<std::string>& expected) {
  const auto cells = csv::split(line);
  if (cells.size() != expected.size()) {
    throw Error(ErrorKind::MalformedHeader, "expected " + std::to_string(expected.size()) + " columns, found " +
                                                std::to_string(cells.size()));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] != expected[i]) {
      throw Error(ErrorKind::MalformedHeader, "column " + std::to_string(i) + " is '" + std::string(cells[i]) +
                                                  "', expected '" + expected[i] + "'");
    }
  }
}

template <std::size_t N>
void parse_points(const std::vector<std::string_view>& cells, std::size_t row, const std::vector<std::string>& header,
                  std::array<Point3, N>& out) {
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      const std::size_t col = 2 + 3 * i + a;
      out[i][static_cast<Eigen::Index>(a)] = csv::parse_real(cells[col], row, header[col]);
    }
  }
}

inline void check_label(const std::string& label, std::size_t row, std::vector<std::string>* warnings) {
  if (!is_label_text(label)) {
    throw Error(ErrorKind::InvalidField, "row " + std::to_string(row) + ": label '" + label + "' is not snake_case");
  }
  if (!is_canonical_label(label) && warnings) {
    warnings->push_back("row " + std::to_string(row) + ": unknown label '" + label + "' passed through");
  }
}

template <std::size_t N>
void append_points(std::string& line, const std::array<Point3, N>& points) {
  for (const auto& p : points) {
    for (Eigen::Index a = 0; a < 3; ++a) {
      line += ',';
      csv::append_fixed6(line, p[a]);
    }
  }
}

}  // namespace detail

inline const std::vector<std::string>& landmark_csv_header() {
  static const auto header = detail::coordinate_header(kLandmarkNames);
  return header;
}

inline const std::vector<std::string>& pose33_csv_header() {
  static const auto header = detail::coordinate_header(kPoseLandmarkNames);
  return header;
}

/// Reads the 68-column raw landmark CSV. Unknown labels are appended to
/// `warnings` (when given) and kept as-is.
inline std::vector<LandmarkFrame> parse_landmark_csv(std::istream& source, std::vector<std::string>* warnings = nullptr) {
  const auto& header = landmark_csv_header();
  std::string line;
  if (!csv::read_line(source, line)) throw Error(ErrorKind::MalformedHeader, "missing header row");
  detail::check_header(line, header);

  std::vector<LandmarkFrame> frames;
  std::size_t row = 0;
  while (csv::read_line(source, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::InvalidField, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                                 " cells, expected " + std::to_string(header.size()));
    }
    LandmarkFrame frame;
    frame.video_id = std::string(cells[0]);
    frame.label = std::string(cells[1]);
    detail::check_label(frame.label, row, warnings);
    detail::parse_points(cells, row, header, frame.points);
    frame.refresh_presence();
    frames.push_back(std::move(frame));
  }
  if (source.bad()) throw Error(ErrorKind::SourceFailure, "read failed");
  return frames;
}

/// Parses one data row of the raw landmark schema (the stream line format).
inline LandmarkFrame parse_landmark_row(std::string_view line, std::size_t row = 0) {
  const auto& header = landmark_csv_header();
  const auto cells = csv::split(line);
  if (cells.size() != header.size()) {
    throw Error(ErrorKind::InvalidField, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                               " cells, expected " + std::to_string(header.size()));
  }
  LandmarkFrame frame;
  frame.video_id = std::string(cells[0]);
  frame.label = std::string(cells[1]);
  detail::parse_points(cells, row, header, frame.points);
  frame.refresh_presence();
  return frame;
}

inline std::string format_landmark_row(const LandmarkFrame& frame) {
  csv::check_cell_text(frame.video_id, "video_id");
  csv::check_cell_text(frame.label, "label");
  std::string line = frame.video_id + ',' + frame.label;
  detail::append_points(line, frame.points);
  line += '\n';
  return line;
}

/// Writes the header and one six-decimal row per frame; returns rows written.
inline std::size_t write_landmark_csv(const std::vector<LandmarkFrame>& frames, std::ostream& sink) {
  csv::write_or_throw(sink, detail::join_header(landmark_csv_header()));
  for (const auto& frame : frames) csv::write_or_throw(sink, format_landmark_row(frame));
  sink.flush();
  if (!sink) throw Error(ErrorKind::SinkFailure, "flush failed");
  return frames.size();
}

/// Reads the 101-column extended CSV carrying all 33 pose points.
inline std::vector<LandmarkFrame> parse_pose33_csv(std::istream& source, std::vector<std::string>* warnings = nullptr) {
  const auto& header = pose33_csv_header();
  std::string line;
  if (!csv::read_line(source, line)) throw Error(ErrorKind::MalformedHeader, "missing header row");
  detail::check_header(line, header);

  std::vector<LandmarkFrame> frames;
  std::size_t row = 0;
  while (csv::read_line(source, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::InvalidField, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                                 " cells, expected " + std::to_string(header.size()));
    }
    PosePoints pose;
    detail::parse_points(cells, row, header, pose);
    std::string label(cells[1]);
    detail::check_label(label, row, warnings);
    frames.push_back(frame_from_pose(pose, std::string(cells[0]), std::move(label)));
  }
  if (source.bad()) throw Error(ErrorKind::SourceFailure, "read failed");
  return frames;
}

inline std::size_t write_pose33_csv(const std::vector<LandmarkFrame>& frames, std::ostream& sink) {
  csv::write_or_throw(sink, detail::join_header(pose33_csv_header()));
  for (const auto& frame : frames) {
    if (!frame.full_pose) throw Error(ErrorKind::LayoutMismatch, "frame of video '" + frame.video_id + "' has no 33-point pose");
    csv::check_cell_text(frame.video_id, "video_id");
    csv::check_cell_text(frame.label, "label");
    std::string line = frame.video_id + ',' + frame.label;
    detail::append_points(line, *frame.full_pose);
    line += '\n';
    csv::write_or_throw(sink, line);
  }
  sink.flush();
  if (!sink) throw Error(ErrorKind::SinkFailure, "flush failed");
  return frames.size();
}

}  // namespace exrec
