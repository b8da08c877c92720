#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lidkit/error.h"
#include "lidkit/evaluation.h"
#include "support.h"

using namespace lidkit;

namespace {

using W = std::vector<FrameWindow>;

BlinkDistributions dists() { return BlinkDistributions::load(testing::data_path("blink_params.conf")); }

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("detection accuracy worked examples") {
  auto s = detection_accuracy(W{{12, 18}}, W{{10, 20}});
  CHECK(s.tp == 1);
  CHECK(s.fp == 0);
  CHECK(s.fn == 0);
  CHECK(s.da == 100.0);

  s = detection_accuracy(W{{30, 40}}, W{{10, 20}});
  CHECK(s.tp == 0);
  CHECK(s.fp == 1);
  CHECK(s.fn == 1);
  CHECK(s.da == 0.0);

  s = detection_accuracy(W{{10, 20}, {25, 35}, {60, 70}}, W{{5, 40}});
  CHECK(s.tp == 2);
  CHECK(s.fp == 1);
  CHECK(s.fn == 0);
  CHECK(s.labels_hit == 1);
  CHECK(s.da == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("detection accuracy edge cases") {
  CHECK(detection_accuracy(W{}, W{}).da == 100.0);
  CHECK(detection_accuracy(W{}, W{{1, 2}}).fn == 1);
  // Touching at one frame counts as overlap.
  CHECK(detection_accuracy(W{{20, 30}}, W{{10, 20}}).tp == 1);
  CHECK_THROWS_AS(detection_accuracy(W{{10, 20}, {15, 25}}, W{}), InvalidArgument);
  CHECK_THROWS_AS(detection_accuracy(W{}, W{{9, 3}}), InvalidArgument);
}

TEST_CASE("detection accuracy properties") {
  std::mt19937_64 rng(3);
  auto random_windows = [&](std::size_t count) {
    W w;
    std::size_t at = rng() % 10;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t len = rng() % 12;
      w.push_back({at, at + len});
      at += len + 1 + rng() % 20;
    }
    return w;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const W det = random_windows(rng() % 15);
    const W gt = random_windows(rng() % 15);
    const auto s = detection_accuracy(det, gt);
    CHECK(s.da >= 0.0);
    CHECK(s.da <= 100.0);
    CHECK(s.tp + s.fp == det.size());
    CHECK(s.fn <= gt.size());
    CHECK(s.labels_hit + s.fn == gt.size());

    const std::size_t shift = 1 + rng() % 500;
    W det2 = det, gt2 = gt;
    for (auto& w : det2) w = {w.start + shift, w.end + shift};
    for (auto& w : gt2) w = {w.start + shift, w.end + shift};
    const auto s2 = detection_accuracy(det2, gt2);
    CHECK(s2.tp == s.tp);
    CHECK(s2.fp == s.fp);
    CHECK(s2.fn == s.fn);
  }
}

TEST_CASE("annotation files") {
  std::istringstream in(R"({"start_frame": 3, "end_frame": 9, "label": "blink", "onset": 0.1}
{"start_frame": 20, "end_frame": 25}
)");
  const auto ann = parse_annotations_jsonl(in);
  REQUIRE(ann.size() == 2);
  CHECK(ann[0].window.end == 9);
  CHECK(ann[1].label == "blink");
  std::istringstream bad(R"({"start_frame": "x"})");
  CHECK_THROWS_AS(parse_annotations_jsonl(bad), ParseError);
}

TEST_CASE("synthetic detection run") {
  SynthScenario sc;
  sc.duration = 60.0;
  sc.noise_std = 1.0;
  sc.seed = 31;
  const auto run = run_detection(sc, dists());
  CHECK(run.score.da >= 90.0);
  std::ostringstream csv;
  write_detection_csv(csv, run.score);
  CHECK(csv.str().rfind("tp,fp,fn,da,labels_hit\n", 0) == 0);
}

TEST_CASE("single pose has no variance") {
  SynthScenario sc;
  sc.duration = 2.0;
  const auto v = ear_ela_variance(sc, 60.0);
  CHECK(v.var_ela == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(v.var_ear == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(v.ela.size() == 60);
  CHECK(v.ela[10] == doctest::Approx(60.0).epsilon(1e-9));
}

TEST_CASE("yaw sweep moves EAR but not ELA") {
  const auto sc = SynthScenario::load(testing::data_path("scenarios/yaw_sweep_60.conf"));
  const auto v = ear_ela_variance(sc, 60.0);
  CHECK(v.var_ear > 0.0);
  CHECK(v.var_ela * 10.0 <= v.var_ear);
  std::ostringstream csv;
  write_variance_csv(csv, v);
  CHECK(csv.str().rfind("pitch_deg,yaw_deg,ela_deg,ear\n", 0) == 0);
}

TEST_CASE("error sweep grows with landmark jitter") {
  SynthScenario sc;
  sc.duration = 4.0;
  sc.seed = 8;
  sc.pose = {{0.0, 0.0, -20.0}, {4.0, 0.0, 20.0}};
  const std::vector<double> set = {30.0};
  double prev = -1.0;
  for (double jitter : {0.0, 0.002, 0.005, 0.01, 0.02}) {
    sc.landmark_jitter = jitter;
    const auto r = ela_error_sweep(set, sc);
    REQUIRE(!r.rows.empty());
    const auto& all = r.rows.front();
    CHECK_FALSE(all.pitch_bin.has_value());
    CHECK(all.frames == 120);
    if (jitter == 0.0) CHECK(all.mae < 0.5);
    CHECK(all.mae > prev);
    CHECK(all.mse >= all.mae * all.mae - 1e-12);
    prev = all.mae;
  }
}

TEST_CASE("pose bins partition the frames") {
  const auto sc = SynthScenario::load(testing::data_path("scenarios/error_sweep.conf"));
  const std::vector<double> set = {20.0, 60.0};
  const auto r = ela_error_sweep(set, sc);
  for (double e : set) {
    std::size_t total = 0, binned = 0;
    for (const auto& row : r.rows) {
      if (row.set_ela != e) continue;
      if (!row.yaw_bin) {
        total = row.frames;
      } else {
        CHECK(*row.yaw_bin % kPoseBinDegrees == 0);
        binned += row.frames;
      }
    }
    CHECK(total == sc.frame_count());
    CHECK(binned == total);
  }
  std::ostringstream a, b;
  write_sweep_csv(a, r);
  write_sweep_csv(b, ela_error_sweep(set, sc));
  CHECK(a.str() == b.str());
}

TEST_CASE("durations converge as the frame rate rises") {
  SynthScenario sc;
  sc.duration = 120.0;
  sc.noise_std = 1.0;
  sc.seed = 40;
  const std::vector<double> rates = {10.0, 50.0, 100.0, 200.0};
  const auto rep = framerate_bias_report(sc, dists(), rates);
  REQUIRE(rep.rows.size() == 4);
  for (std::size_t k = 0; k < 3; ++k) {
    const double a = *rep.rows[2].mean[k];
    const double b = *rep.rows[3].mean[k];
    CHECK(std::abs(a - b) <= 0.1 * std::max(a, b));
  }
  const double err10 = std::abs(*rep.rows[0].mean[0] - rep.truth_closing);
  const double err50 = std::abs(*rep.rows[1].mean[0] - rep.truth_closing);
  CHECK(err10 > err50);
  std::ostringstream csv;
  write_framerate_csv(csv, rep);
  CHECK(csv.str().find("truth,") != std::string::npos);
  CHECK_THROWS_AS(framerate_bias_report(sc, dists(), std::vector<double>{}), InvalidArgument);
}

TEST_CASE("labeled epochs carry the recording state") {
  SynthScenario sc;
  sc.duration = 90.0;
  sc.noise_std = 1.0;
  sc.seed = 2;
  sc.state = SynthState::drowsy;
  const auto e = labeled_epochs(sc, dists(), "p1");
  REQUIRE(!e.empty());
  for (const auto& v : e) {
    CHECK(v.label == Vigilance::drowsy);
    CHECK(v.subject == "p1");
    CHECK(v.values.size() == 18);
  }
}

}
