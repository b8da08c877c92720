#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lidkit/ela.h"

namespace lidkit {

// Uniformly sampled ELA trace. frame_offset is the stream frame index of
// values[0]; segments split at long detection gaps keep their offsets so
// blink windows can be reported in stream frames.
struct ElaSeries {
  std::vector<double> values;
  double fps = 30.0;
  double start_time = 0.0;
  int segment_id = 0;
  std::size_t frame_offset = 0;

  std::size_t size() const { return values.size(); }
  double time_at(double index) const { return start_time + index / fps; }
};

/// Gaussian kernel width in samples for a given frame rate (fps / 30).
double smoothing_sigma(double fps);

/// Sampled, truncated (4 sigma) and renormalized Gaussian kernel.
std::vector<double> gaussian_kernel(double sigma);

/// Convolves with a Gaussian of sigma = fps/30 samples (or `sigma_override`)
/// using half-sample symmetric reflection at both ends.
ElaSeries gaussian_smooth(const ElaSeries& series, std::optional<double> sigma_override = {});

/// Central differences in units per second; one-sided at the ends.
std::vector<double> central_derivative(const ElaSeries& series);

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;
};

/// i is a maximum when v[i-1] < v[i] and the series next moves down after
/// any run of equal samples; plateaus are reported at their first sample.
Extrema local_extrema(std::span<const double> values);

struct SegmentOptions {
  double max_gap_seconds = 0.5;
  std::optional<double> fps;  // default: mean rate of the stream
};

/// Mean frame rate of a timestamped stream, (n - 1) / (t_last - t_first).
double mean_fps(std::span<const ElaSample> samples);

/// Turns combined ELA samples into gap-free uniform segments. Gaps up to
/// max_gap_seconds are linearly interpolated; longer gaps start a new segment.
std::vector<ElaSeries> build_segments(std::span<const ElaSample> samples,
                                      const SegmentOptions& options = {});

}  // namespace lidkit
