#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lidkit/config.h"
#include "lidkit/landmarks.h"
#include "lidkit/signal.h"

namespace lidkit {

enum class SynthState { alert, drowsy };

std::string to_string(SynthState s);
SynthState parse_synth_state(const std::string& text);

// Normal distribution restricted to [lo, hi] by rejection.
struct TruncatedNormal {
  double mean = 0.0;
  double std = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  /// Throws InsufficientData after 100 rejected draws.
  double sample(std::mt19937_64& rng) const;
};

struct BlinkShapeParams {
  SynthState state = SynthState::alert;
  double baseline_ela = 0.0;
  double min_ela = 0.0;
  TruncatedNormal closing;
  TruncatedNormal closed;
  TruncatedNormal reopening;
  TruncatedNormal interval;  // gap from the end of one blink to the next onset

  void validate() const;
};

// Alert and drowsy parameter sets. There are deliberately no built-in
// values: they come from a distribution config file (see data/).
struct BlinkDistributions {
  BlinkShapeParams alert;
  BlinkShapeParams drowsy;

  const BlinkShapeParams& for_state(SynthState s) const { return s == SynthState::alert ? alert : drowsy; }

  static BlinkDistributions from_config(const KeyValueConfig& cfg);
  static BlinkDistributions load(const std::filesystem::path& path);
};

struct BlinkTiming {
  double closing = 0.0;
  double closed = 0.0;
  double reopening = 0.0;
};

// Continuous blink shape: a linear closing flank, a monotone cubic closed
// phase that touches min_ela, a linear reopening flank and a short monotone
// cubic blend back to baseline. The flanks lie on the lines that define the
// tangent-intersection durations exactly.
class BlinkWaveform {
 public:
  BlinkWaveform(double baseline_ela, double min_ela, const BlinkTiming& timing);

  double operator()(double t) const;  // t measured from blink onset
  double support() const { return blend_end_; }
  const BlinkTiming& timing() const { return timing_; }

 private:
  double baseline_;
  double min_;
  BlinkTiming timing_;
  double sag_;
  double closing_slope_;
  double reopening_slope_;
  double closed_begin_;
  double closed_mid_;
  double closed_end_;
  double blend_begin_;
  double blend_end_;
};

struct WaveformSegment {
  std::vector<double> values;  // sampled at k / fps, k = 0 .. until support ends
  BlinkTiming annotation;
  bool degenerate = false;  // some phase is shorter than one frame
};

WaveformSegment generate_blink_waveform(const BlinkShapeParams& params, const BlinkTiming& timing,
                                        double fps);
/// Draws the phase durations from params' distributions.
WaveformSegment generate_blink_waveform(const BlinkShapeParams& params, double fps,
                                        std::mt19937_64& rng);

struct PoseKeyframe {
  double time = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
};

struct SynthScenario {
  SynthState state = SynthState::alert;
  double duration = 10.0;
  double fps = 30.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::vector<PoseKeyframe> pose;  // empty = frontal
  std::optional<double> set_ela;   // benchmark mode: constant ELA, no blinks
  double landmark_jitter = 0.0;    // std of per-landmark noise, face units
  bool projection = false;         // perspective x,y and heuristic depth
  double depth_error = 0.8;        // z scale error applied in projection mode
  int image_width = 1280;
  int image_height = 720;

  void validate() const;
  std::size_t frame_count() const;

  /// Reads scenario keys. Blink parameters live in a separate
  /// distribution file (BlinkDistributions).
  static SynthScenario from_config(const KeyValueConfig& cfg);
  static SynthScenario load(const std::filesystem::path& path);
};

struct BlinkAnnotation {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  double onset = 0.0;
  BlinkTiming timing;
};

struct GroundTruth {
  std::vector<double> ela;
  std::vector<BlinkAnnotation> blinks;
  SynthState state = SynthState::alert;
};

struct SynthSignal {
  ElaSeries series;
  GroundTruth truth;
};

struct PlacedBlink {
  double onset = 0.0;
  BlinkTiming timing;
};

/// Blinks at the given onsets on a baseline, plus the scenario's noise.
SynthSignal assemble_ela_signal(const BlinkShapeParams& params, std::span<const PlacedBlink> blinks,
                                const SynthScenario& scenario);

/// Samples blink timings and gaps for `state`, then assembles the signal.
/// Everything drawn before the noise depends only on the seed, so the same
/// seed at different frame rates produces the same underlying blinks.
SynthSignal generate_ela_signal(SynthState state, const SynthScenario& scenario,
                                const BlinkDistributions& distributions);

/// Interpolated head pose at time t (degrees).
PoseKeyframe pose_at(std::span<const PoseKeyframe> keyframes, double t);
Eigen::Matrix3d head_rotation(double pitch_deg, double yaw_deg);

/// Canonical two-eye model posed and emitted in the landmark stream format
/// (478 MediaPipe-topology landmarks; unused slots sit on a face ellipsoid).
/// The transform carries the head rotation so the depth heuristic and yaw
/// extraction invert the emitted coordinates.
std::vector<RawLandmarkFrame> generate_landmark_sequence(std::span<const double> true_ela,
                                                         const SynthScenario& scenario);

inline constexpr std::size_t kSynthLandmarkCount = 478;

void write_annotations_jsonl(std::ostream& out, const GroundTruth& truth);

struct AnimationCurve {
  std::vector<double> time_s;
  std::vector<double> ela_deg;
};

void export_animation_curve(const ElaSeries& series, const std::filesystem::path& path);
void write_animation_curve(std::ostream& out, const ElaSeries& series);
AnimationCurve parse_animation_curve(std::istream& in);

}  // namespace lidkit
