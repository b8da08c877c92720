#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidkit/drowsiness.h"
#include "lidkit/pipeline.h"
#include "lidkit/synth.h"

namespace lidkit {

// TP counts detections that overlap at least one label, FN labels that no
// detection overlaps, FP detections that overlap no label. labels_hit is the
// number of labels overlapped by some detection.
struct DetectionScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double da = 0.0;  // percent; 100 when there is nothing to detect and nothing detected
  std::size_t labels_hit = 0;
};

/// Throws InvalidArgument when windows inside one list overlap or have
/// start > end.
DetectionScore detection_accuracy(std::span<const FrameWindow> detected,
                                  std::span<const FrameWindow> ground_truth);

// Generic annotation format, one JSON object per line:
// {"start_frame": int, "end_frame": int, "label": string}. Extra keys are ignored.
struct LabeledWindow {
  FrameWindow window;
  std::string label;
};

std::vector<LabeledWindow> parse_annotations_jsonl(std::istream& in);
std::vector<LabeledWindow> read_annotations_jsonl(const std::filesystem::path& path);
std::vector<FrameWindow> annotation_windows(std::span<const BlinkAnnotation> blinks);

struct DetectionRun {
  SynthSignal signal;
  AnalysisResult analysis;
  DetectionScore score;
};

/// Generates the scenario's signal, runs the blink pipeline and scores it
/// against the generated annotations.
DetectionRun run_detection(const SynthScenario& scenario, const BlinkDistributions& distributions,
                           const AnalysisOptions& options = {});

struct PoseBinError {
  double set_ela = 0.0;
  std::optional<int> pitch_bin;  // lower edge in degrees; empty = all poses
  std::optional<int> yaw_bin;
  std::size_t frames = 0;
  double mae = 0.0;
  double mse = 0.0;
  double var_ela = 0.0;
  double var_ear = 0.0;
};

struct SweepReport {
  std::vector<PoseBinError> rows;  // per set ELA: an all-poses row, then 5 degree pose bins
};

inline constexpr int kPoseBinDegrees = 5;

/// For each set ELA, generates the pose sweep of `scenario` in benchmark
/// mode, measures ELA from the landmarks and reports the error against the
/// set value. Frames with no usable eye count as missing, not as error.
SweepReport ela_error_sweep(std::span<const double> set_elas, const SynthScenario& scenario);

struct VarianceReport {
  double var_ela = 0.0;  // degrees^2
  double var_ear = 0.0;  // dimensionless ratio squared
  std::vector<double> ela;
  std::vector<double> ear;
  std::vector<PoseKeyframe> pose;
};

/// Population variance of the measured ELA and of the two-eye mean EAR over
/// the scenario's pose sweep at a constant set ELA.
VarianceReport ear_ela_variance(const SynthScenario& scenario, double set_ela);

struct FramerateRow {
  double fps = 0.0;
  std::size_t blinks = 0;
  std::array<std::optional<double>, 9> mean;  // kFeatureNames order
};

struct FramerateReport {
  std::vector<FramerateRow> rows;
  double truth_closing = 0.0;
  double truth_closed = 0.0;
  double truth_reopening = 0.0;
};

/// Same seed, hence the same underlying blinks, sampled at each frame rate.
FramerateReport framerate_bias_report(const SynthScenario& scenario,
                                      const BlinkDistributions& distributions,
                                      std::span<const double> fps_list,
                                      const AnalysisOptions& options = {});

/// Epoch vectors for one synthetic recording, labeled with its state.
std::vector<EpochFeatureVector> labeled_epochs(const SynthScenario& scenario,
                                               const BlinkDistributions& distributions,
                                               const std::string& subject,
                                               const AnalysisOptions& options = {});

void write_detection_csv(std::ostream& out, const DetectionScore& score);
void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_variance_csv(std::ostream& out, const VarianceReport& report);
void write_framerate_csv(std::ostream& out, const FramerateReport& report);

}  // namespace lidkit
