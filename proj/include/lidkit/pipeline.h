#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidkit/blinks.h"
#include "lidkit/ela.h"
#include "lidkit/features.h"
#include "lidkit/signal.h"

namespace lidkit {

enum class DetectionMode { whole, sliding };

DetectionMode parse_detection_mode(const std::string& name);

struct AnalysisOptions {
  std::uint64_t seed = 0;
  DetectionMode mode = DetectionMode::whole;
  std::optional<double> sigma_override;
  SegmentOptions segments;
  SlidingOptions sliding;
  FeatureOptions features;
};

struct AnalysisResult {
  std::vector<ElaSeries> smoothed;
  std::vector<BlinkRecord> blinks;
  std::vector<BlinkFeatures> features;
};

/// Gap-split and smoothed segments of a combined ELA stream.
std::vector<ElaSeries> smoothed_segments(std::span<const ElaSample> samples,
                                         const AnalysisOptions& options = {});

/// Blinks ordered by time. In sliding mode a blink that overlaps one already
/// kept is dropped, so the result is always non-overlapping.
std::vector<BlinkRecord> detect_blink_records(std::span<const ElaSeries> smoothed,
                                              const AnalysisOptions& options = {});

/// Features for each record, recomputed on the smoothed segments. Blinks
/// with degenerate tangents are skipped.
std::vector<BlinkFeatures> features_for_records(std::span<const ElaSeries> smoothed,
                                                std::span<const BlinkRecord> records,
                                                const FeatureOptions& options = {});

/// Rebuilds the smoothed segments from ELA samples using the sigma recorded
/// with the blinks (so a separate features stage sees the detection signal).
std::vector<BlinkFeatures> features_from_samples(std::span<const ElaSample> samples,
                                                 std::span<const BlinkRecord> records,
                                                 const AnalysisOptions& options = {});

AnalysisResult analyze(std::span<const ElaSample> samples, const AnalysisOptions& options = {});

/// ELA series in sample form, e.g. for feeding a synthetic signal through
/// the same path as a measured one.
std::vector<ElaSample> samples_from_series(const ElaSeries& series);

// Inclusive stream frame range.
struct FrameWindow {
  std::size_t start = 0;
  std::size_t end = 0;
};

std::vector<FrameWindow> blink_windows(std::span<const BlinkRecord> records);

}  // namespace lidkit
