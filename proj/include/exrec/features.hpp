#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "exrec/csv.hpp"
#include "exrec/error.hpp"
#include "exrec/landmarks.hpp"

namespace exrec {

// Geometry ---------------------------------------------------------------

inline constexpr double kMinVectorNorm = 1e-9;

/// Angle at `vertex` between the rays to `a` and `c`, in degrees on [0, 180].
/// Degenerate rays (norm below 1e-9) give 0.
inline double joint_angle(const Point3& a, const Point3& vertex, const Point3& c) {
  const Point3 u = a - vertex;
  const Point3 v = c - vertex;
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < kMinVectorNorm || nv < kMinVectorNorm) return 0.0;
  const double cosine = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(cosine) * (180.0 / std::numbers::pi);
}

/// Euclidean distance over `scale`; throws DegenerateScale when scale <= 1e-9.
inline double normalized_distance(const Point3& p, const Point3& q, double scale) {
  if (!(scale > kMinVectorNorm)) throw Error(ErrorKind::DegenerateScale, "scale " + std::to_string(scale));
  return (p - q).norm() / scale;
}

// Feature definitions ----------------------------------------------------

struct AngleSpec {
  LandmarkId a;
  LandmarkId vertex;
  LandmarkId c;
};

struct DistanceSpec {
  LandmarkId p;
  LandmarkId q;
};

namespace detail {
constexpr AngleSpec angle(Side s, Joint a, Joint v, Joint c) { return {landmark(s, a), landmark(s, v), landmark(s, c)}; }
constexpr DistanceSpec dist(Side s, Joint p, Joint q) { return {landmark(s, p), landmark(s, q)}; }
constexpr auto L = Side::Left;
constexpr auto R = Side::Right;
using J = Joint;
}  // namespace detail

/// The twelve angles of the mixed layout, in table order.
inline constexpr std::array<AngleSpec, 12> kMixedAngles = {
    detail::angle(detail::L, detail::J::Hip, detail::J::Shoulder, detail::J::Elbow),
    detail::angle(detail::R, detail::J::Hip, detail::J::Shoulder, detail::J::Elbow),
    detail::angle(detail::L, detail::J::Shoulder, detail::J::Elbow, detail::J::Wrist),
    detail::angle(detail::R, detail::J::Shoulder, detail::J::Elbow, detail::J::Wrist),
    detail::angle(detail::L, detail::J::Hip, detail::J::Knee, detail::J::Ankle),
    detail::angle(detail::R, detail::J::Hip, detail::J::Knee, detail::J::Ankle),
    detail::angle(detail::L, detail::J::Shoulder, detail::J::Hip, detail::J::Knee),
    detail::angle(detail::R, detail::J::Shoulder, detail::J::Hip, detail::J::Knee),
    detail::angle(detail::L, detail::J::Knee, detail::J::Ankle, detail::J::Heel),
    detail::angle(detail::R, detail::J::Knee, detail::J::Ankle, detail::J::Heel),
    detail::angle(detail::L, detail::J::Ankle, detail::J::Heel, detail::J::FootIndex),
    detail::angle(detail::R, detail::J::Ankle, detail::J::Heel, detail::J::FootIndex),
};

/// The eight angles of the invariant layout.
inline constexpr std::array<AngleSpec, 8> kInvariantAngles = {
    detail::angle(detail::L, detail::J::Shoulder, detail::J::Elbow, detail::J::Wrist),
    detail::angle(detail::R, detail::J::Shoulder, detail::J::Elbow, detail::J::Wrist),
    detail::angle(detail::L, detail::J::Hip, detail::J::Knee, detail::J::Ankle),
    detail::angle(detail::R, detail::J::Hip, detail::J::Knee, detail::J::Ankle),
    detail::angle(detail::L, detail::J::Shoulder, detail::J::Hip, detail::J::Knee),
    detail::angle(detail::R, detail::J::Shoulder, detail::J::Hip, detail::J::Knee),
    detail::angle(detail::L, detail::J::Hip, detail::J::Shoulder, detail::J::Elbow),
    detail::angle(detail::R, detail::J::Hip, detail::J::Shoulder, detail::J::Elbow),
};

/// The twelve torso-normalized distances of the invariant layout.
inline constexpr std::array<DistanceSpec, 12> kInvariantDistances = {
    DistanceSpec{LandmarkId::LeftShoulder, LandmarkId::RightShoulder},
    DistanceSpec{LandmarkId::LeftHip, LandmarkId::RightHip},
    detail::dist(detail::L, detail::J::Hip, detail::J::Knee),
    detail::dist(detail::R, detail::J::Hip, detail::J::Knee),
    detail::dist(detail::L, detail::J::Shoulder, detail::J::Hip),
    detail::dist(detail::R, detail::J::Shoulder, detail::J::Hip),
    detail::dist(detail::L, detail::J::Elbow, detail::J::Knee),
    detail::dist(detail::R, detail::J::Elbow, detail::J::Knee),
    detail::dist(detail::L, detail::J::Wrist, detail::J::Shoulder),
    detail::dist(detail::R, detail::J::Wrist, detail::J::Shoulder),
    detail::dist(detail::L, detail::J::Wrist, detail::J::Hip),
    detail::dist(detail::R, detail::J::Wrist, detail::J::Hip),
};

enum class Layout : std::uint8_t { Mixed78, Raw99, Invariant20 };

constexpr std::size_t feature_dim(Layout layout) {
  switch (layout) {
    case Layout::Mixed78: return 78;
    case Layout::Raw99: return 99;
    case Layout::Invariant20: return 20;
  }
  return 0;
}

constexpr std::string_view to_string(Layout layout) {
  switch (layout) {
    case Layout::Mixed78: return "mixed78";
    case Layout::Raw99: return "raw99";
    case Layout::Invariant20: return "invariant20";
  }
  return "?";
}

inline Layout parse_layout(std::string_view text) {
  if (text == "mixed78") return Layout::Mixed78;
  if (text == "raw99") return Layout::Raw99;
  if (text == "invariant20") return Layout::Invariant20;
  throw Error(ErrorKind::Usage, "unknown layout '" + std::string(text) + "'");
}

struct FeatureConfig {
  Layout layout = Layout::Mixed78;
  int window_len = 30;

  std::size_t dim() const { return feature_dim(layout); }
  bool operator==(const FeatureConfig&) const = default;
};

struct FeatureFrame {
  std::vector<double> values;
  std::string source_video;
  ExerciseLabel label;
  /// Set when the torso normalizer was degenerate and 1.0 was used instead.
  bool degenerate_scale = false;
};

inline double angle_feature(const LandmarkFrame& frame, const AngleSpec& spec) {
  if (!frame.has(spec.a) || !frame.has(spec.vertex) || !frame.has(spec.c)) return 0.0;
  return joint_angle(frame.point(spec.a), frame.point(spec.vertex), frame.point(spec.c));
}

/// Mean shoulder-to-hip length over the sides where both points are present;
/// 0 when neither side is available.
inline double torso_length(const LandmarkFrame& frame) {
  double sum = 0.0;
  int sides = 0;
  for (Side s : {Side::Left, Side::Right}) {
    const auto sh = landmark(s, Joint::Shoulder);
    const auto hip = landmark(s, Joint::Hip);
    if (frame.has(sh) && frame.has(hip)) {
      sum += (frame.point(sh) - frame.point(hip)).norm();
      ++sides;
    }
  }
  return sides ? sum / sides : 0.0;
}

inline FeatureFrame featurize(const LandmarkFrame& frame, const FeatureConfig& config) {
  FeatureFrame out;
  out.source_video = frame.video_id;
  out.label = frame.label;
  out.values.reserve(config.dim());

  switch (config.layout) {
    case Layout::Mixed78:
      for (const auto& p : frame.points) out.values.insert(out.values.end(), {p.x(), p.y(), p.z()});
      for (const auto& spec : kMixedAngles) out.values.push_back(angle_feature(frame, spec));
      break;
    case Layout::Raw99:
      if (!frame.full_pose) {
        throw Error(ErrorKind::LayoutMismatch, "raw99 needs the 33-point pose (video '" + frame.video_id + "')");
      }
      for (const auto& p : *frame.full_pose) out.values.insert(out.values.end(), {p.x(), p.y(), p.z()});
      break;
    case Layout::Invariant20: {
      for (const auto& spec : kInvariantAngles) out.values.push_back(angle_feature(frame, spec));
      double scale = torso_length(frame);
      if (!(scale > kMinVectorNorm)) {
        scale = 1.0;
        out.degenerate_scale = true;
      }
      for (const auto& spec : kInvariantDistances) {
        out.values.push_back(frame.has(spec.p) && frame.has(spec.q)
                                 ? normalized_distance(frame.point(spec.p), frame.point(spec.q), scale)
                                 : 0.0);
      }
      break;
    }
  }
  return out;
}

// Windows ----------------------------------------------------------------

struct WindowSample {
  Eigen::MatrixXd matrix;  // window_len x feature_dim, one row per frame
  ExerciseLabel label;
  std::string source_video;
  std::size_t start_frame = 0;
  Layout layout = Layout::Mixed78;
};

/// Number of windows a run of `frames` consecutive frames yields.
constexpr std::size_t window_count(std::size_t frames, std::size_t window_len, std::size_t stride) {
  return frames < window_len ? 0 : (frames - window_len) / stride + 1;
}

/// Cuts each video's frames (consecutive runs of equal source_video) into
/// windows. Windows never span videos; a trailing remainder is dropped.
/// `start_frame` is the index into `frames`.
inline std::vector<WindowSample> window(const std::vector<FeatureFrame>& frames, std::size_t window_len, std::size_t stride,
                                        Layout layout = Layout::Mixed78) {
  if (window_len == 0 || stride == 0) throw Error(ErrorKind::Usage, "window length and stride must be positive");
  std::vector<WindowSample> out;
  std::size_t begin = 0;
  while (begin < frames.size()) {
    std::size_t end = begin;
    while (end < frames.size() && frames[end].source_video == frames[begin].source_video) ++end;
    const std::size_t n = window_count(end - begin, window_len, stride);
    for (std::size_t w = 0; w < n; ++w) {
      const std::size_t start = begin + w * stride;
      const auto dim = static_cast<Eigen::Index>(frames[start].values.size());
      WindowSample sample;
      sample.matrix.resize(static_cast<Eigen::Index>(window_len), dim);
      for (std::size_t r = 0; r < window_len; ++r) {
        const auto& v = frames[start + r].values;
        if (static_cast<Eigen::Index>(v.size()) != dim) throw Error(ErrorKind::ShapeMismatch, "ragged feature frames");
        for (Eigen::Index c = 0; c < dim; ++c) sample.matrix(static_cast<Eigen::Index>(r), c) = v[static_cast<std::size_t>(c)];
      }
      sample.label = frames[start].label;
      sample.source_video = frames[start].source_video;
      sample.start_frame = start;
      sample.layout = layout;
      out.push_back(std::move(sample));
    }
    begin = end;
  }
  return out;
}

// Scaling ----------------------------------------------------------------

inline constexpr double kStddevFloor = 1e-8;

struct StandardScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  void transform_in_place(Eigen::MatrixXd& rows) const {
    if (rows.cols() != mean.size()) throw Error(ErrorKind::ShapeMismatch, "scaler dimension differs from sample");
    rows = ((rows.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array()).matrix();
  }

  WindowSample apply(WindowSample sample) const {
    transform_in_place(sample.matrix);
    return sample;
  }

  Eigen::MatrixXd inverse(const Eigen::MatrixXd& rows) const {
    return ((rows.array().rowwise() * stddev.transpose().array()).rowwise() + mean.transpose().array()).matrix();
  }
};

/// Per-feature population mean/stddev over every frame of every window.
inline StandardScaler fit_scaler(const std::vector<WindowSample>& train) {
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "cannot fit a scaler on zero windows");
  const Eigen::Index dim = train.front().matrix.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  double rows = 0.0;
  for (const auto& w : train) {
    if (w.matrix.cols() != dim) throw Error(ErrorKind::ShapeMismatch, "ragged windows");
    sum += w.matrix.colwise().sum().transpose();
    rows += static_cast<double>(w.matrix.rows());
  }
  StandardScaler scaler;
  scaler.mean = sum / rows;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (const auto& w : train) sq += (w.matrix.rowwise() - scaler.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  scaler.stddev = (sq / rows).cwiseSqrt().cwiseMax(kStddevFloor);
  return scaler;
}

// Labels -----------------------------------------------------------------

class LabelTable {
 public:
  LabelTable() = default;

  /// Distinct labels in alphabetical order.
  explicit LabelTable(std::vector<ExerciseLabel> labels) : classes_(std::move(labels)) {
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  }

  std::size_t size() const { return classes_.size(); }
  const std::vector<ExerciseLabel>& classes() const { return classes_; }

  std::size_t index(std::string_view label) const {
    const auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
    if (it == classes_.end() || *it != label) throw Error(ErrorKind::UnknownLabel, "'" + std::string(label) + "'");
    return static_cast<std::size_t>(it - classes_.begin());
  }

  bool contains(std::string_view label) const { return std::binary_search(classes_.begin(), classes_.end(), label); }

  const ExerciseLabel& decode(std::size_t index) const {
    if (index >= classes_.size()) throw Error(ErrorKind::UnknownLabel, "class index " + std::to_string(index));
    return classes_[index];
  }

  Eigen::VectorXd one_hot(std::string_view label) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes_.size()));
    v(static_cast<Eigen::Index>(index(label))) = 1.0;
    return v;
  }

  bool operator==(const LabelTable&) const = default;

 private:
  std::vector<ExerciseLabel> classes_;
};

inline LabelTable encode_labels(const std::vector<ExerciseLabel>& labels) {
  if (labels.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no labels to encode");
  return LabelTable(labels);
}

// Feature CSV ------------------------------------------------------------

inline std::vector<std::string> feature_csv_header(Layout layout) {
  std::vector<std::string> header{"video_id", "label"};
  auto add_points = [&](auto const& names) {
    for (auto name : names)
      for (const char* axis : {"_x", "_y", "_z"}) header.push_back(std::string(name) + axis);
  };
  switch (layout) {
    case Layout::Mixed78:
      add_points(kLandmarkNames);
      for (int i = 0; i < 12; ++i) header.push_back("angle_" + std::to_string(i));
      break;
    case Layout::Raw99:
      add_points(kPoseLandmarkNames);
      break;
    case Layout::Invariant20:
      for (int i = 0; i < 8; ++i) header.push_back("angle_" + std::to_string(i));
      for (int i = 0; i < 12; ++i) header.push_back("dist_" + std::to_string(i));
      break;
  }
  return header;
}

struct FeatureTable {
  Layout layout = Layout::Mixed78;
  std::vector<FeatureFrame> frames;
};

inline std::size_t write_feature_csv(const FeatureTable& table, std::ostream& sink) {
  const auto header = feature_csv_header(table.layout);
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  line += '\n';
  csv::write_or_throw(sink, line);
  for (const auto& f : table.frames) {
    if (f.values.size() != feature_dim(table.layout)) throw Error(ErrorKind::LayoutMismatch, "frame length differs from layout");
    csv::check_cell_text(f.source_video, "video_id");
    csv::check_cell_text(f.label, "label");
    line = f.source_video + ',' + f.label;
    for (double v : f.values) {
      line += ',';
      csv::append_fixed6(line, v);
    }
    line += '\n';
    csv::write_or_throw(sink, line);
  }
  sink.flush();
  return table.frames.size();
}

/// Reads a feature CSV; the layout is recognized from the header.
inline FeatureTable parse_feature_csv(std::istream& source) {
  std::string line;
  if (!csv::read_line(source, line)) throw Error(ErrorKind::MalformedHeader, "missing header row");
  const auto cells = csv::split(line);
  FeatureTable table;
  std::vector<std::string> header;
  bool matched = false;
  for (Layout layout : {Layout::Mixed78, Layout::Raw99, Layout::Invariant20}) {
    header = feature_csv_header(layout);
    if (cells.size() == header.size() && std::equal(cells.begin(), cells.end(), header.begin())) {
      table.layout = layout;
      matched = true;
      break;
    }
  }
  if (!matched) throw Error(ErrorKind::MalformedHeader, "header matches no feature layout (" + std::to_string(cells.size()) + " columns)");

  std::size_t row = 0;
  while (csv::read_line(source, line)) {
    ++row;
    if (line.empty()) continue;
    const auto row_cells = csv::split(line);
    if (row_cells.size() != header.size()) {
      throw Error(ErrorKind::InvalidField, "row " + std::to_string(row) + " has " + std::to_string(row_cells.size()) + " cells");
    }
    FeatureFrame f;
    f.source_video = std::string(row_cells[0]);
    f.label = std::string(row_cells[1]);
    f.values.reserve(header.size() - 2);
    for (std::size_t c = 2; c < row_cells.size(); ++c) f.values.push_back(csv::parse_real(row_cells[c], row, header[c]));
    table.frames.push_back(std::move(f));
  }
  if (source.bad()) throw Error(ErrorKind::SourceFailure, "read failed");
  return table;
}

/// Featurizes every usable frame, preserving input order.
inline FeatureTable featurize_all(const std::vector<LandmarkFrame>& frames, const FeatureConfig& config,
                                  std::size_t* skipped = nullptr, const UsabilityRules& rules = {}) {
  FeatureTable table;
  table.layout = config.layout;
  std::size_t dropped = 0;
  for (const auto& frame : frames) {
    if (!frame_is_usable(frame, std::nullopt, rules)) {
      ++dropped;
      continue;
    }
    table.frames.push_back(featurize(frame, config));
  }
  if (skipped) *skipped = dropped;
  return table;
}

}  // namespace exrec
