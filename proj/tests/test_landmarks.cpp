#include <catch_amalgamated.hpp>

#include <bitset>
#include <sstream>

#include "exrec/landmarks.hpp"
#include "exrec/rng.hpp"

using namespace exrec;

namespace {

std::string header_line() {
  std::string h;
  for (const auto& c : landmark_csv_header()) h += (h.empty() ? "" : ",") + c;
  return h + "\n";
}

LandmarkFrame random_frame(Rng& rng, const std::string& video, const std::string& label) {
  LandmarkFrame f;
  f.video_id = video;
  f.label = label;
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    if (rng.bernoulli(0.15)) continue;
    // values on the six-decimal grid so that text round-trips exactly
    Point3 p;
    for (int a = 0; a < 3; ++a) p[a] = static_cast<double>(rng.uniform_int(-999999, 1999999)) / 1e6;
    if (!is_placeholder(p)) f.set(static_cast<LandmarkId>(i), p);
  }
  return f;
}

}  // namespace

TEST_CASE("landmark ordinal order and names", "[landmarks]") {
  STATIC_REQUIRE(kLandmarkCount == 22);
  CHECK(landmark_name(LandmarkId::LeftShoulder) == "LEFT_SHOULDER");
  CHECK(landmark_name(LandmarkId::RightThumb) == "RIGHT_THUMB");
  CHECK(landmark(Side::Right, Joint::FootIndex) == LandmarkId::RightFootIndex);
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    const auto id = static_cast<LandmarkId>(i);
    CHECK(landmark(side_of(id), joint_of(id)) == id);
    // the 33-point mapping must land on the same name
    CHECK(kPoseLandmarkNames[kPoseIndexOfLandmark[i]] == landmark_name(id));
  }
}

TEST_CASE("header columns follow landmark ordinal order", "[landmarks]") {
  const auto& h = landmark_csv_header();
  REQUIRE(h.size() == 68);
  CHECK(h[0] == "video_id");
  CHECK(h[1] == "label");
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    CHECK(h[2 + 3 * i] == std::string(kLandmarkNames[i]) + "_x");
    CHECK(h[4 + 3 * i] == std::string(kLandmarkNames[i]) + "_z");
  }
}

TEST_CASE("canonical labels sort alphabetically", "[landmarks]") {
  CHECK(std::is_sorted(kCanonicalLabels.begin(), kCanonicalLabels.end()));
  CHECK(is_label_text("squat"));
  CHECK_FALSE(is_label_text("Squat"));
  CHECK_FALSE(is_label_text("push-up"));
}

TEST_CASE("parse: all-zero row is fully absent", "[landmarks][parse]") {
  std::string text = header_line() + "v1,squat";
  for (int i = 0; i < 66; ++i) text += ",0.000000";
  text += "\n";
  std::istringstream in(text);
  const auto frames = parse_landmark_csv(in);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].video_id == "v1");
  for (bool p : frames[0].present) CHECK_FALSE(p);
}

TEST_CASE("parse: single present point", "[landmarks][parse]") {
  std::string text = header_line() + "v1,squat,0.5,0.4,-0.1";
  for (int i = 3; i < 66; ++i) text += ",0";
  std::istringstream in(text + "\n");
  const auto frames = parse_landmark_csv(in);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].present[0]);
  CHECK(frames[0].point(LandmarkId::LeftShoulder).isApprox(Point3(0.5, 0.4, -0.1)));
  for (std::size_t i = 1; i < kLandmarkCount; ++i) CHECK_FALSE(frames[0].present[i]);
}

TEST_CASE("parse errors", "[landmarks][parse]") {
  SECTION("wrong column count") {
    std::istringstream in("video_id,label,LEFT_SHOULDER_x\n");
    REQUIRE_THROWS_MATCHES(parse_landmark_csv(in), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::MalformedHeader;
                           }));
  }
  SECTION("renamed column") {
    auto h = header_line();
    h.replace(h.find("LEFT_ELBOW_y"), 12, "LEFT_ELBOW_q");
    std::istringstream in(h);
    try {
      parse_landmark_csv(in);
      FAIL("expected MalformedHeader");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MalformedHeader);
    }
  }
  SECTION("non-numeric cell names row and column") {
    std::string text = header_line() + "v1,squat,0.1,abc";
    for (int i = 2; i < 66; ++i) text += ",0";
    std::istringstream in(text + "\n");
    try {
      parse_landmark_csv(in);
      FAIL("expected NonNumericCell");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonNumericCell);
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("row 1") &&
                               Catch::Matchers::ContainsSubstring("LEFT_SHOULDER_y"));
    }
  }
  SECTION("unknown label is a warning only") {
    std::string text = header_line() + "v1,lunge";
    for (int i = 0; i < 66; ++i) text += ",0.1";
    std::istringstream in(text + "\n");
    std::vector<std::string> warnings;
    const auto frames = parse_landmark_csv(in, &warnings);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].label == "lunge");
    CHECK(warnings.size() == 1);
  }
}

TEST_CASE("write: empty and small inputs", "[landmarks][write]") {
  std::ostringstream out;
  CHECK(write_landmark_csv({}, out) == 0);
  CHECK(out.str() == header_line());

  Rng rng(3);
  std::vector<LandmarkFrame> frames;
  for (int i = 0; i < 3; ++i) frames.push_back(random_frame(rng, "v", "squat"));
  std::ostringstream out3;
  CHECK(write_landmark_csv(frames, out3) == 3);
  const auto text = out3.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("write rejects identifiers that break the record", "[landmarks][write]") {
  LandmarkFrame f;
  f.video_id = "a,b";
  f.label = "squat";
  std::ostringstream out;
  CHECK_THROWS_AS(write_landmark_csv({f}, out), Error);
}

TEST_CASE("text fixture round-trips byte-identically", "[landmarks][roundtrip]") {
  Rng rng(11);
  std::string text = header_line();
  for (int row = 0; row < 10; ++row) {
    text += "clip_" + std::to_string(row / 4) + ",push_up";
    for (int c = 0; c < 66; ++c) {
      const double v = rng.bernoulli(0.1) ? 0.0 : rng.uniform(-1.0, 2.0);
      text += "," + csv::fixed(v, 6);
    }
    text += "\n";
  }
  std::istringstream in(text);
  const auto frames = parse_landmark_csv(in);
  std::ostringstream out;
  write_landmark_csv(frames, out);
  CHECK(out.str() == text);
}

TEST_CASE("parse(write(frames)) == frames on random frame sets", "[landmarks][roundtrip][property]") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    std::vector<LandmarkFrame> frames;
    const auto n = rng.uniform_int(0, 20);
    for (int i = 0; i < n; ++i) frames.push_back(random_frame(rng, "vid" + std::to_string(i / 5), "shoulder_press"));
    std::stringstream buffer;
    write_landmark_csv(frames, buffer);
    const auto back = parse_landmark_csv(buffer);
    REQUIRE(back == frames);
    for (const auto& f : back)
      for (std::size_t i = 0; i < kLandmarkCount; ++i) CHECK(f.present[i] == !is_placeholder(f.points[i]));
  }
}

TEST_CASE("pose33 CSV round-trips and selects the tracked 22", "[landmarks][roundtrip]") {
  Rng rng(5);
  PosePoints pose;
  for (auto& p : pose) p = Point3(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(-0.5, 0.5));
  pose[0] = Point3::Zero();
  std::vector<LandmarkFrame> frames{frame_from_pose(pose, "v", "squat")};
  std::stringstream buffer;
  write_pose33_csv(frames, buffer);
  const auto back = parse_pose33_csv(buffer);
  REQUIRE(back.size() == 1);
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    CHECK((back[0].points[i] - pose[kPoseIndexOfLandmark[i]]).norm() < 1e-6);
  }
  CHECK(pose33_csv_header().size() == 101);
}

TEST_CASE("frame_is_usable", "[landmarks][usable]") {
  LandmarkFrame all;
  for (std::size_t i = 0; i < kLandmarkCount; ++i) all.set(static_cast<LandmarkId>(i), Point3(0.1, 0.2, 0.3));
  CHECK(frame_is_usable(all));

  SECTION("left essentials only") {
    LandmarkFrame f = all;
    for (std::size_t j = 0; j < kJointsPerSide; ++j) f.clear(landmark(Side::Right, static_cast<Joint>(j)));
    CHECK(frame_is_usable(f));
  }
  SECTION("left wrist and right ankle missing") {
    LandmarkFrame f = all;
    f.clear(LandmarkId::LeftWrist);
    f.clear(LandmarkId::RightAnkle);
    CHECK_FALSE(frame_is_usable(f));
  }
  SECTION("per-exercise override") {
    LandmarkFrame f = all;
    f.clear(LandmarkId::LeftAnkle);
    f.clear(LandmarkId::RightAnkle);
    UsabilityRules rules;
    rules.per_exercise["barbell_biceps_curl"] = {Joint::Shoulder, Joint::Elbow, Joint::Wrist};
    CHECK_FALSE(frame_is_usable(f, std::nullopt, rules));
    CHECK(frame_is_usable(f, std::string("barbell_biceps_curl"), rules));
    CHECK_FALSE(frame_is_usable(f, std::string("squat"), rules));
  }
}

TEST_CASE("frame_is_usable matches a brute-force predicate on all 4096 patterns", "[landmarks][usable][property]") {
  // bit k (0..5) = left essential k present, bit 6+k = right essential k present
  const std::array<Joint, 6> essentials = {Joint::Shoulder, Joint::Elbow, Joint::Wrist, Joint::Hip, Joint::Knee, Joint::Ankle};
  Rng rng(99);
  for (unsigned mask = 0; mask < 4096; ++mask) {
    LandmarkFrame f;
    // non-essential joints are randomized; they must not matter
    for (std::size_t i = 0; i < kLandmarkCount; ++i)
      if (rng.bernoulli(0.5)) f.set(static_cast<LandmarkId>(i), Point3(0.3, 0.3, 0.3));
    for (int k = 0; k < 6; ++k) {
      for (int s = 0; s < 2; ++s) {
        const auto id = landmark(static_cast<Side>(s), essentials[static_cast<std::size_t>(k)]);
        if (mask & (1u << (6 * s + k))) {
          f.set(id, Point3(0.5, 0.5, 0.5));
        } else {
          f.clear(id);
        }
      }
    }
    const std::bitset<12> bits(mask);
    const bool left = (mask & 0x3F) == 0x3F;
    const bool right = ((mask >> 6) & 0x3F) == 0x3F;
    INFO("mask " << bits);
    CHECK(frame_is_usable(f) == (left || right));
  }
}

TEST_CASE("set and clear keep the 33-point pose in step", "[landmarks][roundtrip]") {
  PosePoints pose;
  for (std::size_t i = 0; i < pose.size(); ++i) pose[i] = Point3(0.1 + 0.01 * static_cast<double>(i), 0.5, 0.2);
  auto frame = frame_from_pose(pose, "v", "squat");
  frame.clear(LandmarkId::RightKnee);
  frame.set(LandmarkId::LeftWrist, Point3(0.3, 0.4, 0.5));
  const auto k = index_of(LandmarkId::RightKnee);
  CHECK((*frame.full_pose)[kPoseIndexOfLandmark[k]] == Point3::Zero());
  CHECK((*frame.full_pose)[kPoseIndexOfLandmark[index_of(LandmarkId::LeftWrist)]] == Point3(0.3, 0.4, 0.5));

  std::stringstream buffer;
  write_pose33_csv({frame}, buffer);
  const auto back = parse_pose33_csv(buffer);
  REQUIRE(back.size() == 1);
  CHECK_FALSE(back[0].present[k]);
  CHECK(back[0].present == frame.present);
}
