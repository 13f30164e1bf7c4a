#pragma once

// Stick-figure generator for the four canonical exercises. Each exercise is a
// periodic pose driven by a phase in [0, 1); the driven joint angle follows
// lo + (hi - lo) * (1 + cos(2 pi phase)) / 2 exactly before noise, so the
// number of full cycles in a clip is known.

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "exrec/error.hpp"
#include "exrec/landmarks.hpp"
#include "exrec/rng.hpp"

namespace exrec::synth {

struct Body {
  double torso = 0.25;  // hip to shoulder
  double upper_arm = 0.15;
  double forearm = 0.14;
  double thigh = 0.22;
  double shin = 0.21;
  double shoulder_width = 0.10;
  double hip_width = 0.07;
};

/// Similarity transform plus noise applied after the pose is built.
struct Placement {
  double scale = 1.0;
  double yaw_deg = 0.0;   // about the vertical axis
  double roll_deg = 0.0;  // in the image plane
  Eigen::Vector2d center{0.5, 0.55};
};

struct Motion {
  double rest_angle;    // driven angle at phase 0
  double active_angle;  // driven angle at phase 0.5
};

/// Driven joint angle range per exercise: the elbow for curl, push-up and
/// press, the knee for squat.
inline Motion motion_of(std::string_view exercise) {
  if (exercise == labels::kBarbellBicepsCurl) return {168.0, 38.0};
  if (exercise == labels::kSquat) return {172.0, 80.0};
  if (exercise == labels::kPushUp) return {162.0, 82.0};
  if (exercise == labels::kShoulderPress) return {78.0, 166.0};
  throw Error(ErrorKind::UnknownExercise, "no synthetic motion for '" + std::string(exercise) + "'");
}

inline double driven_angle(std::string_view exercise, double phase) {
  const auto m = motion_of(exercise);
  const double c = (1.0 - std::cos(2.0 * std::numbers::pi * phase)) / 2.0;
  return m.rest_angle + (m.active_angle - m.rest_angle) * c;
}

namespace detail {

inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Sagittal plane, x forward, y up.
inline Eigen::Vector2d ray(double deg, double length) {
  return {length * std::cos(rad(deg)), length * std::sin(rad(deg))};
}

struct Limbs {
  Eigen::Vector2d shoulder, elbow, wrist, hip, knee, ankle;
  double forearm_dir = 0.0;
  double torso_dir = 90.0;
};

// Interior angle at a joint between an incoming segment at direction `in` and
// the outgoing one is `interior` when out = in + 180 - interior.
inline double bend(double in_dir, double interior, double sign = 1.0) { return in_dir + sign * (180.0 - interior); }

inline Limbs sagittal_pose(std::string_view exercise, double phase, const Body& b) {
  const auto m = motion_of(exercise);
  const double angle = driven_angle(exercise, phase);
  const double c = (angle - m.rest_angle) / (m.active_angle - m.rest_angle);
  Limbs l;
  if (exercise == labels::kSquat) {
    l.torso_dir = 90.0 - 38.0 * c;
    const double thigh_dir = -90.0 + 0.6 * (180.0 - angle);
    const double shin_dir = bend(thigh_dir + 180.0, angle, -1.0) - 180.0;
    l.knee = b.thigh * Eigen::Vector2d(std::cos(rad(thigh_dir)), std::sin(rad(thigh_dir)));
    l.ankle = l.knee + ray(shin_dir, b.shin);
    l.hip = Eigen::Vector2d::Zero();
    l.shoulder = ray(l.torso_dir, b.torso);
    const double arm_dir = -5.0 + 10.0 * c;
    l.elbow = l.shoulder + ray(arm_dir, b.upper_arm);
    l.forearm_dir = arm_dir + 8.0;
    l.wrist = l.elbow + ray(l.forearm_dir, b.forearm);
  } else if (exercise == labels::kPushUp) {
    // wrists on the floor; build upward from the hand
    l.torso_dir = 168.0 + 6.0 * c;
    const double forearm_up = 95.0 - 10.0 * c;  // wrist to elbow
    l.wrist = Eigen::Vector2d::Zero();
    l.elbow = l.wrist + ray(forearm_up, b.forearm);
    const double upper_up = bend(forearm_up, angle, -1.0);  // elbow to shoulder
    l.shoulder = l.elbow + ray(upper_up, b.upper_arm);
    l.forearm_dir = forearm_up + 180.0;
    l.hip = l.shoulder - ray(l.torso_dir, b.torso);
    const double thigh_dir = l.torso_dir + 180.0;
    l.knee = l.hip + ray(thigh_dir, b.thigh);
    l.ankle = l.knee + ray(thigh_dir - 4.0, b.shin);
  } else {
    const bool press = exercise == labels::kShoulderPress;
    l.torso_dir = 90.0 + (press ? -2.0 : 3.0) * c;
    l.hip = Eigen::Vector2d::Zero();
    l.shoulder = ray(l.torso_dir, b.torso);
    l.knee = ray(-90.0 + 2.0 * c, b.thigh);
    l.ankle = l.knee + ray(-93.0, b.shin);
    const double arm_dir = press ? 5.0 + 75.0 * c : -85.0 + 6.0 * c;
    l.elbow = l.shoulder + ray(arm_dir, b.upper_arm);
    l.forearm_dir = bend(arm_dir, angle, 1.0);
    l.wrist = l.elbow + ray(l.forearm_dir, b.forearm);
  }
  return l;
}

}  // namespace detail

/// 33-point pose in normalized image coordinates (x right, y down, z depth).
inline PosePoints pose_at(std::string_view exercise, double phase, const Body& body = {}, const Placement& place = {}) {
  const auto l = detail::sagittal_pose(exercise, phase, body);
  PosePoints pose;
  for (auto& p : pose) p.setZero();

  // sagittal (x forward, y up) -> body frame (x forward, y up, z lateral)
  auto at = [](const Eigen::Vector2d& v, double lateral) { return Point3(v.x(), v.y(), lateral); };
  const double sw = body.shoulder_width / 2, hw = body.hip_width / 2;
  auto side = [&](int sign, std::size_t shoulder, std::size_t elbow, std::size_t wrist, std::size_t pinky,
                  std::size_t index, std::size_t thumb, std::size_t hip, std::size_t knee, std::size_t ankle,
                  std::size_t heel, std::size_t foot) {
    pose[shoulder] = at(l.shoulder, sign * sw);
    pose[elbow] = at(l.elbow, sign * sw);
    pose[wrist] = at(l.wrist, sign * sw);
    const Eigen::Vector2d hand = detail::ray(l.forearm_dir, 0.03);
    pose[pinky] = at(l.wrist + hand, sign * (sw - 0.012));
    pose[index] = at(l.wrist + hand, sign * (sw + 0.008));
    pose[thumb] = at(l.wrist + 0.6 * hand, sign * (sw + 0.018));
    pose[hip] = at(l.hip, sign * hw);
    pose[knee] = at(l.knee, sign * hw);
    pose[ankle] = at(l.ankle, sign * hw);
    const Eigen::Vector2d foot_dir = (l.ankle - l.knee).normalized();
    const Eigen::Vector2d forward(-foot_dir.y(), foot_dir.x());
    pose[heel] = at(l.ankle - 0.02 * forward + 0.015 * foot_dir, sign * hw);
    pose[foot] = at(l.ankle + 0.06 * forward + 0.02 * foot_dir, sign * hw);
  };
  side(-1, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31);
  side(+1, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32);

  const Eigen::Vector2d up = detail::ray(l.torso_dir, 1.0);
  const Eigen::Vector2d fwd(up.y(), -up.x());
  const Eigen::Vector2d head = l.shoulder + 0.35 * body.torso * up;
  pose[0] = at(head + 0.05 * fwd, 0.0);
  const double eye_side[3] = {0.008, 0.016, 0.024};
  for (int k = 0; k < 3; ++k) {
    pose[1 + k] = at(head + 0.04 * fwd + 0.012 * up, -eye_side[k]);
    pose[4 + k] = at(head + 0.04 * fwd + 0.012 * up, eye_side[k]);
  }
  pose[7] = at(head, -0.035);
  pose[8] = at(head, 0.035);
  pose[9] = at(head + 0.045 * fwd - 0.02 * up, -0.012);
  pose[10] = at(head + 0.045 * fwd - 0.02 * up, 0.012);

  // similarity placement; every step preserves angles
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(detail::rad(place.roll_deg), Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(detail::rad(place.yaw_deg), Eigen::Vector3d::UnitY()))
                                  .toRotationMatrix();
  Point3 mid = Point3::Zero();
  for (const auto& p : pose) mid += p;
  mid /= static_cast<double>(pose.size());
  for (auto& p : pose) {
    const Point3 q = place.scale * (rot * (p - mid));
    // flip y for image coordinates
    p = Point3(place.center.x() + q.x(), place.center.y() - q.y(), q.z());
  }
  return pose;
}

struct ClipOptions {
  std::size_t frames = 300;
  double period_min = 40.0;
  double period_max = 80.0;
  double noise = 0.003;  // per-coordinate Gaussian stddev
  double scale_min = 0.8;
  double scale_max = 1.2;
  double yaw_max_deg = 25.0;
  double roll_max_deg = 8.0;
  bool random_start_phase = true;
};

struct Clip {
  std::vector<LandmarkFrame> frames;  // full_pose populated
  double period = 0.0;
  double start_phase = 0.0;
};

inline Clip make_clip(std::string_view exercise, const std::string& video_id, const ClipOptions& opt, Rng& rng) {
  Clip clip;
  clip.period = rng.uniform(opt.period_min, opt.period_max);
  clip.start_phase = opt.random_start_phase ? rng.uniform() : 0.0;
  Placement place;
  place.scale = rng.uniform(opt.scale_min, opt.scale_max);
  place.yaw_deg = rng.uniform(-opt.yaw_max_deg, opt.yaw_max_deg);
  place.roll_deg = rng.uniform(-opt.roll_max_deg, opt.roll_max_deg);
  place.center = {rng.uniform(0.4, 0.6), rng.uniform(0.45, 0.65)};
  Body body;
  const double build = rng.uniform(0.92, 1.08);
  body.upper_arm *= build;
  body.forearm *= build;
  body.thigh *= rng.uniform(0.95, 1.05);

  clip.frames.reserve(opt.frames);
  for (std::size_t t = 0; t < opt.frames; ++t) {
    auto pose = pose_at(exercise, clip.start_phase + static_cast<double>(t) / clip.period, body, place);
    if (opt.noise > 0)
      for (auto& p : pose)
        for (int a = 0; a < 3; ++a) p[a] += rng.normal(0.0, opt.noise);
    for (auto& p : pose)
      if (is_placeholder(p)) p.x() = 1e-6;
    clip.frames.push_back(frame_from_pose(pose, video_id, ExerciseLabel(exercise)));
  }
  return clip;
}

/// Noise-free clip of exactly `cycles` periods, starting and ending at rest.
inline std::vector<LandmarkFrame> scripted_cycles(std::string_view exercise, int cycles, std::size_t period,
                                                  const std::string& video_id = "scripted") {
  std::vector<LandmarkFrame> frames;
  const std::size_t n = static_cast<std::size_t>(cycles) * period + 1;
  for (std::size_t t = 0; t < n; ++t) {
    const auto pose = pose_at(exercise, static_cast<double>(t) / static_cast<double>(period));
    frames.push_back(frame_from_pose(pose, video_id, ExerciseLabel(exercise)));
  }
  return frames;
}

struct DatasetOptions {
  std::vector<std::string> exercises{kCanonicalLabels.begin(), kCanonicalLabels.end()};
  std::size_t videos_per_exercise = 4;
  ClipOptions clip;
};

/// Videos are emitted exercise by exercise; ids are "<exercise>_<n>".
inline std::vector<LandmarkFrame> make_dataset(const DatasetOptions& opt, std::uint64_t seed) {
  std::vector<LandmarkFrame> out;
  for (std::size_t e = 0; e < opt.exercises.size(); ++e) {
    for (std::size_t v = 0; v < opt.videos_per_exercise; ++v) {
      Rng rng(derive_seed(seed, e, v));
      auto clip = make_clip(opt.exercises[e], opt.exercises[e] + "_" + std::to_string(v), opt.clip, rng);
      out.insert(out.end(), std::make_move_iterator(clip.frames.begin()), std::make_move_iterator(clip.frames.end()));
    }
  }
  return out;
}

}  // namespace exrec::synth
