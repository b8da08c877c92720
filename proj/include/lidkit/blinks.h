#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "lidkit/signal.h"

namespace lidkit {

// One detected blink. Indices are positions in the series it was detected
// on (segment-local); add the series' frame_offset for stream frames.
struct Blink {
  std::size_t i_start = 0;
  std::size_t i_end = 0;
  std::size_t m1_index = 0;  // steepest descent
  std::size_t m2_index = 0;  // steepest ascent
  double m1 = 0.0;           // deg/s, negative
  double m2 = 0.0;           // deg/s, positive
  double ela_start = 0.0;
  double ela_end = 0.0;
  double ela_min = 0.0;
  int segment_id = 0;
};

struct PeakClusters {
  std::vector<std::size_t> blink;  // indices into the input values
  std::vector<std::size_t> noise;
};

/// Two-means on |value|, seeded at the smallest and largest magnitude. The
/// cluster with the larger mean magnitude is the blink class. Needs at
/// least four values. The procedure is deterministic; `seed` is accepted
/// so every stage of the pipeline shares one signature.
PeakClusters cluster_peaks(std::span<const double> peak_values, std::uint64_t seed = 0);

/// Pairs each descent with the first ascent after it. Further descents that
/// occur before that ascent are dropped, as are ascents with no descent.
std::vector<std::pair<std::size_t, std::size_t>> pair_flanks(std::span<const std::size_t> neg_peaks,
                                                             std::span<const std::size_t> pos_peaks);

/// Window from the nearest local maximum at or before m1_index to the first
/// local maximum at or after m2_index; clamps to the series ends.
Blink build_blink_window(const ElaSeries& signal, std::size_t m1_index, std::size_t m2_index);
Blink build_blink_window(const ElaSeries& signal, std::span<const double> derivative,
                         std::size_t m1_index, std::size_t m2_index);

/// True when the signal between the two flanks rises above the window's
/// start or end level, i.e. two blinks were merged into one window.
bool reject_merged(const ElaSeries& signal, const Blink& blink);

/// Full detector on a smoothed series. Returns sorted, non-overlapping
/// blinks; empty if there are too few derivative peaks to cluster.
std::vector<Blink> detect_blinks(const ElaSeries& signal, std::uint64_t seed = 0);

struct AnalysisEpoch {
  double epoch_end_time = 0.0;
  double window_span = 90.0;
  double period = 60.0;
  std::vector<Blink> blinks;
};

struct SlidingOptions {
  double window_span = 90.0;
  double period = 60.0;
  std::optional<double> sigma_override;
};

/// Every `period` seconds, detects blinks on the trailing `window_span`
/// seconds of each (already smoothed) segment. A blink already reported by an
/// earlier epoch (same m1 frame within one frame) is not reported again.
std::vector<AnalysisEpoch> sliding_analysis(std::span<const ElaSeries> smoothed_segments,
                                            std::uint64_t seed = 0,
                                            const SlidingOptions& options = {});

// Blink JSONL: one object per blink, carrying the detection context (fps,
// smoothing sigma, frame offset) needed to recompute features from ela.csv.
struct BlinkRecord {
  Blink blink;
  double fps = 30.0;
  double sigma = 1.0;
  std::size_t frame_offset = 0;
  double t_m1 = 0.0;
  std::optional<double> epoch_end_time;
};

void write_blinks_jsonl(std::ostream& out, std::span<const BlinkRecord> records);
std::vector<BlinkRecord> parse_blinks_jsonl(std::istream& in);
std::vector<BlinkRecord> read_blinks_jsonl(const std::filesystem::path& path);

}  // namespace lidkit
