#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lidkit/error.h"
#include "lidkit/features.h"
#include "lidkit/synth.h"
#include "support.h"

using namespace lidkit;

namespace {

ElaSeries series_of(std::vector<double> v, double fps) {
  ElaSeries s;
  s.values = std::move(v);
  s.fps = fps;
  return s;
}

// 40 deg baseline, down to 10 over `close` frames, held `hold` frames, back
// up over `open` frames. Closing starts at frame 50.
ElaSeries trapezoid(int close, int hold, int open, double fps = 100.0) {
  std::vector<double> v(150, 40.0);
  for (int k = 0; k <= close; ++k) v[50 + k] = 40.0 - 30.0 * k / close;
  for (int k = 0; k <= hold; ++k) v[50 + close + k] = 10.0;
  for (int k = 0; k <= open; ++k) v[50 + close + hold + k] = 10.0 + 30.0 * k / open;
  return series_of(v, fps);
}

Blink blink_at_extrema(const ElaSeries& s, std::size_t lo = 0, std::size_t hi = 0) {
  const auto d = central_derivative(s);
  if (hi == 0) hi = s.size();
  const auto b = d.begin() + static_cast<std::ptrdiff_t>(lo);
  const auto e = d.begin() + static_cast<std::ptrdiff_t>(hi);
  const auto m1 = static_cast<std::size_t>(std::min_element(b, e) - d.begin());
  const auto m2 = static_cast<std::size_t>(std::max_element(b, e) - d.begin());
  return build_blink_window(s, d, m1, m2);
}

}  // namespace

TEST_SUITE("blink_features") {

TEST_CASE("tangent corners of a trapezoid") {
  const auto s = trapezoid(10, 5, 15);
  const Blink b = blink_at_extrema(s);
  const auto f = compute_features(s, b, std::nullopt);
  const double dt = 1.0 / s.fps;
  CHECK(std::abs(f.t1 - 0.50) <= dt);
  CHECK(std::abs(f.t2 - 0.60) <= dt);
  CHECK(std::abs(f.t3 - 0.65) <= dt);
  CHECK(std::abs(f.t4 - 0.80) <= dt);
  CHECK(f.closing_d1 == doctest::Approx(0.10).epsilon(1e-9));
  CHECK(f.closed_d2 == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(f.reopening_d3 == doctest::Approx(0.15).epsilon(1e-9));
  CHECK(f.peropening == doctest::Approx(0.5));
  CHECK(f.amplitude == doctest::Approx(0.75));
  // Linear rise over d3, then flat at the end level for another d3.
  CHECK(f.normal_area == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(f.av_ratio == doctest::Approx(30.0 / b.m2));
  CHECK_FALSE(f.previous_time.has_value());
}

TEST_CASE("PERCLOS counts frames under the threshold since the previous blink") {
  const auto s = trapezoid(10, 5, 15);
  const Blink b = blink_at_extrema(s);
  // Below 20 deg: frames 57..69.
  auto f = compute_features(s, b, std::nullopt);
  CHECK(f.perclos == doctest::Approx(13.0 / 81.0));
  f = compute_features(s, b, PreviousBlink{0.1, 40});
  CHECK(f.perclos == doctest::Approx(13.0 / 40.0));
  CHECK(*f.previous_time == doctest::Approx(f.t1 - 0.1));
  FeatureOptions opt;
  opt.perclos_threshold_deg = 5.0;
  CHECK(compute_features(s, b, std::nullopt, opt).perclos == 0.0);
  opt.perclos_threshold_deg = 100.0;
  CHECK(compute_features(s, b, std::nullopt, opt).perclos == 1.0);
}

TEST_CASE("a V shape has no closed phase") {
  const auto s = trapezoid(10, 0, 15);
  const auto f = compute_features(s, blink_at_extrema(s), std::nullopt);
  CHECK(std::abs(f.closed_d2) <= 1.0 / s.fps);
  CHECK(f.t2 <= f.t3);
  CHECK(f.closing_d1 == doctest::Approx(0.10).epsilon(1e-6));
}

TEST_CASE("crossing tangents collapse onto their intersection") {
  // Cusp: the flanks steepen towards the minimum, so the tangents meet above it.
  std::vector<double> v(80, 40.0);
  for (int i = 20; i <= 60; ++i) v[static_cast<std::size_t>(i)] = 10.0 + 30.0 * std::sqrt(std::abs(i - 40) / 20.0);
  const auto s = series_of(v, 100.0);
  const Blink b = blink_at_extrema(s);
  const auto tt = tangent_intersections(s, b);
  CHECK(tt.t2 == tt.t3);
  CHECK(tt.t1 <= tt.t2);
  CHECK(tt.t3 <= tt.t4);
}

TEST_CASE("synthetic blink recovered at 50 fps") {
  const auto d = BlinkDistributions::load(testing::data_path("blink_params.conf"));
  SynthScenario sc;
  sc.fps = 50.0;
  sc.duration = 2.0;
  const PlacedBlink pb{0.5, {0.1, 0.05, 0.15}};
  const auto sig = assemble_ela_signal(d.drowsy, std::span(&pb, 1), sc);
  const auto sm = gaussian_smooth(sig.series);
  const auto f = compute_features(sm, blink_at_extrema(sm), std::nullopt);
  CHECK(f.closing_d1 == doctest::Approx(0.10).epsilon(0.2));
  CHECK(f.closed_d2 == doctest::Approx(0.05).epsilon(0.2));
  CHECK(f.reopening_d3 == doctest::Approx(0.15).epsilon(0.2));
}

TEST_CASE("feature ranges and time-shift invariance") {
  const auto d = BlinkDistributions::load(testing::data_path("blink_params.conf"));
  SynthScenario sc;
  sc.duration = 60.0;
  sc.noise_std = 1.0;
  sc.seed = 17;
  const auto sig = generate_ela_signal(SynthState::drowsy, sc, d);
  auto sm = gaussian_smooth(sig.series);
  const auto blinks = detect_blinks(sm);
  REQUIRE(blinks.size() > 5);
  auto shifted = sm;
  shifted.start_time += 7.25;
  for (const auto& b : blinks) {
    BlinkFeatures f, g;
    try {
      f = compute_features(sm, b, std::nullopt);
      g = compute_features(shifted, b, std::nullopt);
    } catch (const DegenerateGeometry&) {
      continue;
    }
    CHECK(f.perclos >= 0.0);
    CHECK(f.perclos <= 1.0);
    CHECK(f.amplitude >= 0.0);
    CHECK(f.amplitude <= 1.0);
    CHECK(f.peropening >= 0.0);
    CHECK(f.peropening <= 1.0);
    CHECK(f.closing_d1 >= 0.0);
    CHECK(f.closed_d2 >= 0.0);
    CHECK(f.reopening_d3 >= 0.0);
    CHECK(f.t1 <= f.t2);
    CHECK(f.t2 <= f.t3);
    CHECK(f.t3 <= f.t4);
    CHECK(g.t1 == doctest::Approx(f.t1 + 7.25));
    CHECK(g.closing_d1 == doctest::Approx(f.closing_d1));
    CHECK(g.closed_d2 == doctest::Approx(f.closed_d2));
    CHECK(g.reopening_d3 == doctest::Approx(f.reopening_d3));
    CHECK(g.normal_area == doctest::Approx(f.normal_area));
  }
}

TEST_CASE("flat tangents are rejected") {
  const auto s = trapezoid(10, 5, 15);
  Blink b = blink_at_extrema(s);
  b.m1 = 0.0;
  CHECK_THROWS_AS(compute_features(s, b, std::nullopt), DegenerateGeometry);
}

TEST_CASE("normal area is clipped to the series") {
  const auto s = trapezoid(10, 5, 15);
  // Window runs past the end: only the available part is integrated.
  const double full = normal_area(s, 0.65, 0.15, 10.0, 40.0);
  const double clipped = normal_area(s, 1.40, 0.15, 10.0, 40.0);
  CHECK(full == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(clipped < full);
  CHECK(normal_area(s, 0.65, 0.0, 10.0, 40.0) == 0.0);
}

TEST_CASE("features CSV round trip") {
  const auto s = trapezoid(10, 5, 15);
  const Blink b = blink_at_extrema(s);
  std::vector<BlinkFeatures> fs = {compute_features(s, b, std::nullopt),
                                   compute_features(s, b, PreviousBlink{0.2, 10})};
  std::stringstream ss;
  write_features_csv(ss, fs);
  const auto back = parse_features_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK_FALSE(back[0].previous_time.has_value());
  CHECK(*back[1].previous_time == doctest::Approx(*fs[1].previous_time).epsilon(1e-12));
  CHECK(back[1].normal_area == doctest::Approx(fs[1].normal_area).epsilon(1e-12));
  CHECK(back[0].t4 == doctest::Approx(fs[0].t4).epsilon(1e-12));

  std::istringstream bad("t1,t2\n1,2\n");
  CHECK_THROWS(parse_features_csv(bad));
}

}
