#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lidkit/config.h"
#include "lidkit/error.h"
#include "lidkit/landmarks.h"

using namespace lidkit;

namespace {

RawLandmarkFrame make_frame(std::size_t index, double t, std::size_t count) {
  RawLandmarkFrame f;
  f.frame_index = index;
  f.timestamp = t;
  f.detected = true;
  f.image_width = 640;
  f.image_height = 480;
  for (std::size_t i = 0; i < count; ++i) {
    f.landmarks.emplace_back(0.001 * static_cast<double>(i), 0.5 - 0.0005 * static_cast<double>(i),
                             -0.01 * static_cast<double>(i % 7));
  }
  return f;
}

std::string jsonl_record(std::size_t frame, double t, const std::string& lm) {
  std::ostringstream os;
  os << R"({"frame":)" << frame << R"(,"t":)" << t
     << R"(,"detected":true,"w":640,"h":480,"T":[1,0,0,0,0,1,0,0,0,0,1,-50,0,0,0,1],"lm":)" << lm << "}";
  return os.str();
}

}  // namespace

TEST_SUITE("landmark_ingest") {

TEST_CASE("empty stream parses to no frames") {
  std::istringstream in("");
  CHECK(parse_landmark_stream(in, StreamFormat::jsonl).empty());
  std::istringstream csv("");
  CHECK(parse_landmark_stream(csv, StreamFormat::csv).empty());
}

TEST_CASE("three JSONL records come back in order") {
  std::istringstream in(jsonl_record(0, 0.0, "[0.1,0.2,0.3]") + "\n" + jsonl_record(1, 0.1, "[0.4,0.5,0.6]") +
                        "\n" + jsonl_record(2, 0.2, "[0.7,0.8,0.9]") + "\n");
  const auto frames = parse_landmark_stream(in, StreamFormat::jsonl);
  REQUIRE(frames.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(frames[i].frame_index == i);
  CHECK(frames[1].landmarks[0].y() == 0.5);
  CHECK(frames[2].transform(2, 3) == -50.0);
}

TEST_CASE("two coordinates per landmark is a parse error naming the field and line") {
  std::istringstream in(jsonl_record(0, 0.0, "[0.1,0.2,0.3]") + "\n" + jsonl_record(1, 0.1, "[0.1,0.2,0.4,0.5]") + "\n");
  try {
    parse_landmark_stream(in, StreamFormat::jsonl);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("'lm'") != std::string::npos);
  }
}

TEST_CASE("non-increasing timestamps are rejected") {
  std::istringstream in(jsonl_record(0, 0.5, "[0,0,0]") + "\n" + jsonl_record(1, 0.5, "[0,0,0]") + "\n");
  CHECK_THROWS_AS(parse_landmark_stream(in, StreamFormat::jsonl), ParseError);
}

TEST_CASE("undetected frames keep their timestamp and carry no landmarks") {
  std::istringstream in(R"({"frame":0,"t":0,"detected":false,"w":640,"h":480})"
                        "\n" +
                        jsonl_record(1, 0.1, "[0,0,0]") + "\n");
  const auto frames = parse_landmark_stream(in, StreamFormat::jsonl);
  REQUIRE(frames.size() == 2);
  CHECK_FALSE(frames[0].detected);
  CHECK(frames[0].landmarks.empty());
}

TEST_CASE("JSONL and CSV writers round-trip exactly") {
  std::vector<RawLandmarkFrame> frames = {make_frame(0, 0.0, 5), make_frame(1, 1.0 / 30.0, 5),
                                          make_frame(2, 2.0 / 30.0, 5)};
  frames[1].detected = false;
  frames[1].landmarks.clear();
  frames[2].transform(0, 1) = 0.125;
  for (auto format : {StreamFormat::jsonl, StreamFormat::csv}) {
    std::ostringstream os;
    write_landmark_stream(os, frames, format);
    std::istringstream in(os.str());
    const auto back = parse_landmark_stream(in, format);
    REQUIRE(back.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      CHECK(back[i].timestamp == frames[i].timestamp);
      CHECK(back[i].detected == frames[i].detected);
      CHECK(back[i].landmarks == frames[i].landmarks);
      if (frames[i].detected) CHECK(back[i].transform == frames[i].transform);
    }
  }
}

TEST_CASE("transform entries are read row-major") {
  // T[0][1] = 2 is the second number on the wire.
  std::istringstream in(
      R"({"frame":0,"t":0,"detected":true,"w":4,"h":4,"T":[1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16],"lm":[0,0,0]})");
  const auto frames = parse_landmark_stream(in, StreamFormat::jsonl);
  CHECK(frames[0].transform(0, 1) == 2.0);
  CHECK(frames[0].transform(1, 0) == 5.0);
  CHECK(frames[0].transform(2, 2) == 11.0);
}

TEST_CASE("depth heuristic and aspect correction") {
  RawLandmarkFrame f = make_frame(0, 0.0, 1);
  f.landmarks[0] = Vec3(0.3, 0.4, 0.1);
  f.image_width = f.image_height = 500;
  LandmarkFrame n = normalize_frame(f);
  CHECK(n.landmarks[0].z() == doctest::Approx(0.17).epsilon(1e-12));
  CHECK(n.landmarks[0].y() == 0.4);
  CHECK(n.landmarks[0].x() == 0.3);

  f.image_width = 1920;
  f.image_height = 1080;
  f.landmarks[0] = Vec3(0.3, 0.5, 0.1);
  n = normalize_frame(f);
  CHECK(n.landmarks[0].y() == 0.28125);

  NormalizeOptions opt;
  opt.z_scale = 2.0;
  CHECK(normalize_frame(f, opt).landmarks[0].z() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("z ratio equals 1.7 T22 for every landmark") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RawLandmarkFrame f = make_frame(0, 0.0, 20);
    for (auto& p : f.landmarks) p = Vec3(u(rng), u(rng), u(rng) + 1.5);
    f.transform(2, 2) = 0.5 + std::abs(u(rng));
    const LandmarkFrame n = normalize_frame(f);
    for (std::size_t i = 0; i < f.landmarks.size(); ++i) {
      CHECK(n.landmarks[i].z() / f.landmarks[i].z() == doctest::Approx(1.7 * f.transform(2, 2)).epsilon(1e-14));
    }
  }
}

TEST_CASE("yaw comes from the rotation block") {
  for (double yaw_deg : {-60.0, -20.0, 0.0, 15.0, 45.0}) {
    const double yaw = yaw_deg * M_PI / 180.0;
    // Rotation about the vertical axis written out by hand.
    Mat4 t = Mat4::Identity();
    t(0, 0) = std::cos(yaw);
    t(0, 2) = std::sin(yaw);
    t(2, 0) = -std::sin(yaw);
    t(2, 2) = std::cos(yaw);
    t(2, 3) = -40.0;
    CHECK(extract_yaw(t) == doctest::Approx(yaw).epsilon(1e-12));
    // A uniform scale in the block does not change the extracted yaw.
    Mat4 scaled = t;
    scaled.topLeftCorner<3, 3>() *= 3.0;
    CHECK(extract_yaw(scaled) == doctest::Approx(yaw).epsilon(1e-12));
  }
}

TEST_CASE("detection ratio counts detected frames") {
  std::vector<RawLandmarkFrame> frames(10, make_frame(0, 0.0, 3));
  CHECK(detection_ratio(frames) == 1.0);
  for (auto& f : frames) f.detected = false;
  CHECK(detection_ratio(frames) == 0.0);
  std::vector<RawLandmarkFrame> four(4, make_frame(0, 0.0, 3));
  four[2].detected = false;
  CHECK(detection_ratio(four) == 0.75);
  std::reverse(four.begin(), four.end());
  CHECK(detection_ratio(four) == 0.75);
}

TEST_CASE("eyelid selection follows the configured order") {
  RawLandmarkFrame raw = make_frame(0, 0.0, 30);
  raw.image_width = raw.image_height = 100;
  raw.transform(2, 2) = 1.0 / 1.7;
  const LandmarkFrame frame = normalize_frame(raw);
  EyelidIndexConfig cfg;
  cfg.left.upper = {0, 1, 2, 3, 4, 5, 6};
  cfg.left.lower = {7, 8, 9, 10, 11, 12, 13};
  cfg.right.upper = {14, 15, 16, 17, 18, 19, 20};
  cfg.right.lower = {21, 22, 23, 24, 25, 26, 27};
  auto lids = select_eyelids(frame, cfg);
  for (int k = 0; k < 7; ++k) {
    CHECK(Vec3(lids.left_upper.col(k)) == frame.landmarks[static_cast<std::size_t>(k)]);
    CHECK(Vec3(lids.right_lower.col(k)) == frame.landmarks[static_cast<std::size_t>(21 + k)]);
  }
  std::reverse(cfg.left.upper.begin(), cfg.left.upper.end());
  const auto reversed = select_eyelids(frame, cfg);
  for (int k = 0; k < 7; ++k) CHECK(reversed.left_upper.col(k) == lids.left_upper.col(6 - k));

  // The selection is a copy.
  lids.left_upper.setZero();
  CHECK(frame.landmarks[3] != Vec3::Zero());

  cfg.left.upper[0] = 9999;
  CHECK_THROWS_AS(select_eyelids(frame, cfg), InvalidArgument);
  CHECK_THROWS_AS(cfg.validate(478), InvalidArgument);
}

TEST_CASE("eyelid index config file") {
  const auto def = EyelidIndexConfig::mediapipe_default();
  CHECK(def.max_index() < 478);
  CHECK_NOTHROW(def.validate(478));
  CHECK_THROWS_AS(def.validate(468 - 10), InvalidArgument);

  const auto loaded = EyelidIndexConfig::load(std::string(LIDKIT_DATA_DIR) + "/eyelid_mediapipe.conf");
  CHECK(loaded.left.upper == def.left.upper);
  CHECK(loaded.left.lower == def.left.lower);
  CHECK(loaded.right.upper == def.right.upper);
  CHECK(loaded.right.lower == def.right.lower);
  CHECK(loaded.left.ear == def.left.ear);
  CHECK(loaded.right.ear == def.right.ear);

  CHECK_THROWS_AS(EyelidIndexConfig::parse("left.upper = 1,2,3\n"), ParseError);
  CHECK_THROWS_AS(EyelidIndexConfig::parse("left.upper = 1,1,2,3,4,5,6\nleft.lower = 1,2,3,4,5,6,7\n"
                                           "right.upper = 1,2,3,4,5,6,7\nright.lower = 1,2,3,4,5,6,7\n"),
                  InvalidArgument);
}

TEST_CASE("config parser") {
  const auto cfg = KeyValueConfig::parse("# comment\na = 1.5\nb = x, y ,z  # trailing\n\nflag = yes\n");
  CHECK(cfg.number("a") == 1.5);
  CHECK(cfg.list("b") == std::vector<std::string>{"x", "y", "z"});
  CHECK(cfg.boolean_or("flag", false));
  CHECK(cfg.number_or("missing", 2.0) == 2.0);
  CHECK_THROWS_AS(cfg.number("b"), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), ParseError);
}

}
