#include "lidkit/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "lidkit/error.h"
#include "lidkit/io.h"

namespace lidkit {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kMaxDraws = 100;
// Depth of the closed-phase dip below the flank lines, and of the blend
// back to baseline, as fractions of the blink amplitude.
constexpr double kSagFraction = 0.02;
constexpr double kBlendFraction = 0.05;
}  // namespace

std::string to_string(SynthState s) { return s == SynthState::alert ? "alert" : "drowsy"; }

SynthState parse_synth_state(const std::string& text) {
  if (text == "alert") return SynthState::alert;
  if (text == "drowsy") return SynthState::drowsy;
  throw ParseError("unknown state '" + text + "' (expected alert or drowsy)");
}

double TruncatedNormal::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> dist(mean, std);
  for (int i = 0; i < kMaxDraws; ++i) {
    const double x = std > 0.0 ? dist(rng) : mean;
    if (x >= lo && x <= hi && x > 0.0) return x;
  }
  throw InsufficientData("truncated normal: no admissible draw in 100 attempts");
}

void BlinkShapeParams::validate() const {
  if (!(min_ela < baseline_ela)) throw InvalidArgument("blink params: min_ela must be below baseline_ela");
  for (const auto* d : {&closing, &closed, &reopening, &interval}) {
    if (!(d->std >= 0.0) || !(d->lo > 0.0) || !(d->hi >= d->lo) || !(d->mean > 0.0)) {
      throw InvalidArgument("blink params: distributions need mean > 0, std >= 0, 0 < lo <= hi");
    }
  }
}

namespace {

TruncatedNormal read_distribution(const KeyValueConfig& cfg, const std::string& key) {
  const auto v = cfg.numbers(key);
  if (v.size() != 4) throw ParseError("config key '" + key + "' needs mean, std, lo, hi");
  return {v[0], v[1], v[2], v[3]};
}

BlinkShapeParams read_params(const KeyValueConfig& cfg, SynthState state) {
  const std::string p = to_string(state) + ".";
  BlinkShapeParams params;
  params.state = state;
  params.baseline_ela = cfg.number(p + "baseline_ela");
  params.min_ela = cfg.number(p + "min_ela");
  params.closing = read_distribution(cfg, p + "closing");
  params.closed = read_distribution(cfg, p + "closed");
  params.reopening = read_distribution(cfg, p + "reopening");
  params.interval = read_distribution(cfg, p + "interval");
  params.validate();
  return params;
}

}  // namespace

BlinkDistributions BlinkDistributions::from_config(const KeyValueConfig& cfg) {
  return {read_params(cfg, SynthState::alert), read_params(cfg, SynthState::drowsy)};
}

BlinkDistributions BlinkDistributions::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

namespace {
// Cubic Hermite between (x0, y0, slope m0) and (x1, y1, slope m1).
double hermite(double x, double x0, double y0, double m0, double x1, double y1, double m1) {
  const double h = x1 - x0;
  if (!(h > 0.0)) return y1;
  const double s = (x - x0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * m1;
}

// Fritsch-Carlson style limit: an end slope no steeper than three times the
// secant keeps a Hermite piece with a flat other end monotone.
double limit_slope(double slope, double secant) {
  const double cap = 3.0 * std::abs(secant);
  return std::clamp(slope, -cap, cap);
}
}  // namespace

BlinkWaveform::BlinkWaveform(double baseline_ela, double min_ela, const BlinkTiming& timing)
    : baseline_(baseline_ela), min_(min_ela), timing_(timing) {
  if (!(timing.closing > 0.0) || !(timing.reopening > 0.0) || !(timing.closed >= 0.0)) {
    throw InvalidArgument("blink waveform: closing/reopening must be positive, closed non-negative");
  }
  const double amp = baseline_ - min_;
  if (!(amp > 0.0)) throw InvalidArgument("blink waveform: baseline must exceed min_ela");
  sag_ = kSagFraction * amp;
  closing_slope_ = -amp / timing.closing;
  reopening_slope_ = amp / timing.reopening;
  const double t3 = timing.closing + timing.closed;
  const double t4 = t3 + timing.reopening;
  closed_begin_ = timing.closing * (1.0 - kSagFraction);
  closed_end_ = t3 + timing.reopening * kSagFraction;
  closed_mid_ = 0.5 * (closed_begin_ + closed_end_);
  blend_begin_ = t4 - timing.reopening * kBlendFraction;
  blend_end_ = t4 + timing.reopening * kBlendFraction;
}

double BlinkWaveform::operator()(double t) const {
  if (t <= 0.0 || t >= blend_end_) return baseline_;
  if (t < closed_begin_) return baseline_ + closing_slope_ * t;
  const double lip = min_ + sag_;
  if (t < closed_mid_) {
    const double m0 = limit_slope(closing_slope_, sag_ / (closed_mid_ - closed_begin_));
    return hermite(t, closed_begin_, lip, m0, closed_mid_, min_, 0.0);
  }
  if (t < closed_end_) {
    const double m1 = limit_slope(reopening_slope_, sag_ / (closed_end_ - closed_mid_));
    return hermite(t, closed_mid_, min_, 0.0, closed_end_, lip, m1);
  }
  const double t3 = timing_.closing + timing_.closed;
  if (t < blend_begin_) return min_ + reopening_slope_ * (t - t3);
  const double from = min_ + reopening_slope_ * (blend_begin_ - t3);
  return hermite(t, blend_begin_, from, reopening_slope_, blend_end_, baseline_, 0.0);
}

WaveformSegment generate_blink_waveform(const BlinkShapeParams& params, const BlinkTiming& timing,
                                        double fps) {
  if (!(fps > 0.0)) throw InvalidArgument("generate_blink_waveform: fps must be positive");
  const BlinkWaveform wave(params.baseline_ela, params.min_ela, timing);
  WaveformSegment seg;
  seg.annotation = timing;
  const double frame = 1.0 / fps;
  seg.degenerate = timing.closing < frame || timing.reopening < frame ||
                   (timing.closed > 0.0 && timing.closed < frame);
  const auto count = static_cast<std::size_t>(std::ceil(wave.support() * fps)) + 1;
  seg.values.reserve(count);
  for (std::size_t k = 0; k < count; ++k) seg.values.push_back(wave(static_cast<double>(k) / fps));
  return seg;
}

WaveformSegment generate_blink_waveform(const BlinkShapeParams& params, double fps,
                                        std::mt19937_64& rng) {
  BlinkTiming timing;
  timing.closing = params.closing.sample(rng);
  timing.closed = params.closed.sample(rng);
  timing.reopening = params.reopening.sample(rng);
  return generate_blink_waveform(params, timing, fps);
}

void SynthScenario::validate() const {
  if (!(fps > 0.0)) throw InvalidArgument("scenario: fps must be positive");
  if (!(duration > 0.0)) throw InvalidArgument("scenario: duration must be positive");
  if (!(noise_std >= 0.0) || !(landmark_jitter >= 0.0)) {
    throw InvalidArgument("scenario: noise levels must be non-negative");
  }
  if (image_width <= 0 || image_height <= 0) throw InvalidArgument("scenario: image size must be positive");
  double prev = -1.0;
  for (const auto& k : pose) {
    if (k.time < 0.0 || k.time > duration || k.time < prev) {
      throw InvalidArgument("scenario: pose keyframes must be ordered and inside [0, duration]");
    }
    if (std::abs(k.pitch_deg) > 89.0 || std::abs(k.yaw_deg) > 89.0) {
      throw InvalidArgument("scenario: pose pitch/yaw must stay within +-89 degrees");
    }
    prev = k.time;
  }
  if (set_ela && (*set_ela < 0.0 || *set_ela > 90.0)) {
    throw InvalidArgument("scenario: set_ela must lie in [0, 90] degrees");
  }
}

std::size_t SynthScenario::frame_count() const {
  return static_cast<std::size_t>(std::llround(std::floor(duration * fps + 1e-9)));
}

SynthScenario SynthScenario::from_config(const KeyValueConfig& cfg) {
  SynthScenario s;
  s.state = parse_synth_state(cfg.string_or("state", "alert"));
  s.duration = cfg.number_or("duration", s.duration);
  s.fps = cfg.number_or("fps", s.fps);
  s.noise_std = cfg.number_or("noise_std", s.noise_std);
  s.seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 0));
  if (cfg.has("set_ela")) s.set_ela = cfg.number("set_ela");
  s.landmark_jitter = cfg.number_or("landmark_jitter", s.landmark_jitter);
  s.projection = cfg.boolean_or("projection", s.projection);
  s.depth_error = cfg.number_or("depth_error", s.depth_error);
  s.image_width = static_cast<int>(cfg.integer_or("image_width", s.image_width));
  s.image_height = static_cast<int>(cfg.integer_or("image_height", s.image_height));
  if (cfg.has("pose")) {
    for (const auto& item : cfg.list("pose")) {
      const auto parts = split(item, ':');
      if (parts.size() != 3) throw ParseError("pose keyframe '" + item + "' must be time:pitch:yaw");
      s.pose.push_back({parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])});
    }
  }
  s.validate();
  return s;
}

SynthScenario SynthScenario::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

SynthSignal assemble_ela_signal(const BlinkShapeParams& params, std::span<const PlacedBlink> blinks,
                                const SynthScenario& scenario) {
  scenario.validate();
  const std::size_t n = scenario.frame_count();
  SynthSignal out;
  out.truth.state = params.state;
  out.series.fps = scenario.fps;
  out.series.values.assign(n, scenario.set_ela ? *scenario.set_ela : params.baseline_ela);

  if (!scenario.set_ela) {
    for (const auto& b : blinks) {
      const BlinkWaveform wave(params.baseline_ela, params.min_ela, b.timing);
      const double end = b.onset + wave.support();
      if (b.onset < 0.0 || end > scenario.duration) {
        throw InvalidArgument("assemble_ela_signal: blink outside the scenario duration");
      }
      const auto first = static_cast<std::size_t>(std::floor(b.onset * scenario.fps));
      const auto last = std::min(n - 1, static_cast<std::size_t>(std::ceil(end * scenario.fps)));
      for (std::size_t k = first; k <= last; ++k) {
        out.series.values[k] = wave(static_cast<double>(k) / scenario.fps - b.onset);
      }
      if (!out.truth.blinks.empty() && first <= out.truth.blinks.back().end_frame) {
        throw InvalidArgument("assemble_ela_signal: blinks overlap");
      }
      out.truth.blinks.push_back({first, last, b.onset, b.timing});
    }
  }
  out.truth.ela = out.series.values;
  if (scenario.noise_std > 0.0) {
    // Noise gets its own stream so it never shifts the blink draws.
    std::mt19937_64 rng(scenario.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, scenario.noise_std);
    for (auto& v : out.series.values) v += noise(rng);
  }
  return out;
}

SynthSignal generate_ela_signal(SynthState state, const SynthScenario& scenario,
                                const BlinkDistributions& distributions) {
  scenario.validate();
  const BlinkShapeParams& params = distributions.for_state(state);
  params.validate();
  std::vector<PlacedBlink> placed;
  if (!scenario.set_ela) {
    std::mt19937_64 rng(scenario.seed);
    double t = params.interval.sample(rng);
    while (true) {
      BlinkTiming timing;
      timing.closing = params.closing.sample(rng);
      timing.closed = params.closed.sample(rng);
      timing.reopening = params.reopening.sample(rng);
      const BlinkWaveform wave(params.baseline_ela, params.min_ela, timing);
      if (t + wave.support() > scenario.duration) break;
      placed.push_back({t, timing});
      t += wave.support() + params.interval.sample(rng);
    }
  }
  SynthSignal out = assemble_ela_signal(params, placed, scenario);
  out.truth.state = state;
  return out;
}

PoseKeyframe pose_at(std::span<const PoseKeyframe> keyframes, double t) {
  if (keyframes.empty()) return {t, 0.0, 0.0};
  if (t <= keyframes.front().time) return {t, keyframes.front().pitch_deg, keyframes.front().yaw_deg};
  if (t >= keyframes.back().time) return {t, keyframes.back().pitch_deg, keyframes.back().yaw_deg};
  auto it = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                             [](double x, const PoseKeyframe& k) { return x < k.time; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double span = b.time - a.time;
  const double f = span > 0.0 ? (t - a.time) / span : 1.0;
  return {t, a.pitch_deg + f * (b.pitch_deg - a.pitch_deg), a.yaw_deg + f * (b.yaw_deg - a.yaw_deg)};
}

Eigen::Matrix3d head_rotation(double pitch_deg, double yaw_deg) {
  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(yaw_deg * kDegToRad, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d pitch = Eigen::AngleAxisd(pitch_deg * kDegToRad, Eigen::Vector3d::UnitX()).toRotationMatrix();
  return yaw * pitch;
}

namespace {

// Face frame: x to the image right, y up, z toward the camera; eye centres
// one unit apart. The subject's right eye appears on the image left.
constexpr double kEyeWidth = 0.30;
constexpr double kLidHeight = 0.10;
constexpr double kUpperShare = 0.75;  // share of the opening carried by the upper lid
constexpr double kImageScale = 0.25;  // face units -> fraction of image width
constexpr double kCameraDistance = 8.0;

struct EyeGeometry {
  Vec3 inner;
  Vec3 outward;  // unit, inner -> outer canthus
  int inner_index;
  int outer_index;
  const EyeIndices* indices;
};

std::vector<Vec3> face_landmarks(double ela_deg, const EyelidIndexConfig& cfg) {
  std::vector<Vec3> lm(kSynthLandmarkCount);
  // Filler points on a face ellipsoid (golden-angle spiral over the front).
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < lm.size(); ++i) {
    const double h = 1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(lm.size());
    const double r = std::sqrt(1.0 - h * h);
    const double phi = golden * static_cast<double>(i);
    lm[i] = Vec3(0.9 * r * std::cos(phi), -0.3 + 1.2 * h, -0.6 + 0.6 * std::abs(r * std::sin(phi)));
  }
  const double upper = kUpperShare * ela_deg * kDegToRad;
  const double lower = (1.0 - kUpperShare) * ela_deg * kDegToRad;
  const Vec3 up_dir(0.0, std::sin(upper), std::cos(upper));
  const Vec3 low_dir(0.0, -std::sin(lower), std::cos(lower));
  const EyeGeometry eyes[2] = {
      {Vec3(0.5 - kEyeWidth / 2, 0.0, 0.0), Vec3::UnitX(), 362, 263, &cfg.left},
      {Vec3(-0.5 + kEyeWidth / 2, 0.0, 0.0), -Vec3::UnitX(), 133, 33, &cfg.right},
  };
  for (const auto& eye : eyes) {
    lm[static_cast<std::size_t>(eye.inner_index)] = eye.inner;
    lm[static_cast<std::size_t>(eye.outer_index)] = eye.inner + kEyeWidth * eye.outward;
    for (std::size_t k = 0; k < 7; ++k) {
      const double f = static_cast<double>(k + 1) / 8.0;
      const Vec3 along = eye.inner + f * kEyeWidth * eye.outward;
      const double bulge = kLidHeight * std::sin(std::numbers::pi * f);
      lm[static_cast<std::size_t>(eye.indices->upper[k])] = along + bulge * up_dir;
      lm[static_cast<std::size_t>(eye.indices->lower[k])] = along + bulge * low_dir;
    }
  }
  return lm;
}

}  // namespace

std::vector<RawLandmarkFrame> generate_landmark_sequence(std::span<const double> true_ela,
                                                         const SynthScenario& scenario) {
  scenario.validate();
  const EyelidIndexConfig cfg = EyelidIndexConfig::mediapipe_default();
  std::mt19937_64 rng(scenario.seed ^ 0x5851f42d4c957f2dULL);
  std::normal_distribution<double> jitter(0.0, scenario.landmark_jitter > 0.0 ? scenario.landmark_jitter : 1.0);
  const double w = scenario.image_width;
  const double h = scenario.image_height;

  std::vector<RawLandmarkFrame> frames;
  frames.reserve(true_ela.size());
  for (std::size_t k = 0; k < true_ela.size(); ++k) {
    if (true_ela[k] < 0.0 || true_ela[k] > 90.0) {
      throw InvalidArgument("generate_landmark_sequence: true ELA must lie in [0, 90] degrees");
    }
    const double t = static_cast<double>(k) / scenario.fps;
    const PoseKeyframe pose = pose_at(scenario.pose, t);
    const Eigen::Matrix3d rot = head_rotation(pose.pitch_deg, pose.yaw_deg);

    RawLandmarkFrame frame;
    frame.frame_index = k;
    frame.timestamp = t;
    frame.detected = true;
    frame.image_width = scenario.image_width;
    frame.image_height = scenario.image_height;
    frame.transform.setIdentity();
    frame.transform.topLeftCorner<3, 3>() = rot;
    frame.transform(2, 3) = -60.0;
    const double depth_factor = 1.7 * rot(2, 2);

    const auto model = face_landmarks(true_ela[k], cfg);
    frame.landmarks.reserve(model.size());
    for (const auto& p : model) {
      Vec3 cam = rot * p;
      if (scenario.landmark_jitter > 0.0) cam += Vec3(jitter(rng), jitter(rng), jitter(rng));
      double persp = 1.0;
      double depth_scale = 1.0;
      if (scenario.projection) {
        persp = kCameraDistance / (kCameraDistance - cam.z());
        depth_scale = scenario.depth_error;
      }
      // Image x right, y down; depth negative toward the camera.
      const double x = 0.5 + kImageScale * cam.x() * persp;
      const double y_width_units = 0.5 * h / w - kImageScale * cam.y() * persp;
      const double z = -kImageScale * cam.z() * depth_scale;
      frame.landmarks.emplace_back(x, y_width_units * w / h, z / depth_factor);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_annotations_jsonl(std::ostream& out, const GroundTruth& truth) {
  for (const auto& b : truth.blinks) {
    nlohmann::ordered_json j;
    j["start_frame"] = b.start_frame;
    j["end_frame"] = b.end_frame;
    j["label"] = "blink";
    j["onset"] = b.onset;
    j["d1"] = b.timing.closing;
    j["d2"] = b.timing.closed;
    j["d3"] = b.timing.reopening;
    j["state"] = to_string(truth.state);
    out << j.dump() << '\n';
  }
}

void write_animation_curve(std::ostream& out, const ElaSeries& series) {
  out << "time_s,ela_deg\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_double(series.time_at(static_cast<double>(i))) << ','
        << format_double(series.values[i]) << '\n';
  }
}

void export_animation_curve(const ElaSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_animation_curve(out, series);
  if (!out) throw InvalidArgument("write failed: " + path.string());
}

AnimationCurve parse_animation_curve(std::istream& in) {
  const CsvTable table = parse_csv(in);
  const auto ct = table.column("time_s");
  const auto ce = table.column("ela_deg");
  AnimationCurve curve;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      curve.time_s.push_back(parse_double(table.rows[r][ct]));
      curve.ela_deg.push_back(parse_double(table.rows[r][ce]));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), r + 2);
    }
  }
  return curve;
}

}  // namespace lidkit
