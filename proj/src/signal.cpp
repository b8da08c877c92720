#include "lidkit/signal.h"

#include <cmath>

#include "lidkit/error.h"

namespace lidkit {

double smoothing_sigma(double fps) {
  if (!(fps > 0.0)) throw InvalidArgument("frame rate must be positive");
  return fps / 30.0;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;
  return kernel;
}

namespace {
// Index into the symmetric extension  ... c b a | a b c ... c | c b a ...
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<std::ptrdiff_t>(n)) j = period - 1 - j;
  return static_cast<std::size_t>(j);
}
}  // namespace

ElaSeries gaussian_smooth(const ElaSeries& series, std::optional<double> sigma_override) {
  ElaSeries out = series;
  const std::size_t n = series.size();
  if (n == 0) return out;
  const double sigma = sigma_override ? *sigma_override : smoothing_sigma(series.fps);
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      acc += kernel[static_cast<std::size_t>(k + radius)] *
             series.values[reflect_index(static_cast<std::ptrdiff_t>(i) + k, n)];
    }
    out.values[i] = acc;
  }
  return out;
}

std::vector<double> central_derivative(const ElaSeries& series) {
  const auto& v = series.values;
  const std::size_t n = v.size();
  if (n < 3) throw InsufficientData("central_derivative: need at least 3 samples");
  std::vector<double> d(n);
  d[0] = (v[1] - v[0]) * series.fps;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) * series.fps / 2.0;
  d[n - 1] = (v[n - 1] - v[n - 2]) * series.fps;
  return d;
}

Extrema local_extrema(std::span<const double> v) {
  Extrema ex;
  const std::size_t n = v.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const bool up = v[i - 1] < v[i];
    const bool down = v[i - 1] > v[i];
    if (!up && !down) continue;
    std::size_t j = i + 1;
    while (j < n && v[j] == v[i]) ++j;
    if (j == n) continue;
    if (up && v[j] < v[i]) ex.maxima.push_back(i);
    if (down && v[j] > v[i]) ex.minima.push_back(i);
  }
  return ex;
}

double mean_fps(std::span<const ElaSample> samples) {
  if (samples.size() < 2) throw InsufficientData("mean_fps: need at least 2 samples");
  const double span = samples.back().timestamp - samples.front().timestamp;
  if (!(span > 0.0)) throw InvalidArgument("mean_fps: timestamps do not advance");
  return static_cast<double>(samples.size() - 1) / span;
}

std::vector<ElaSeries> build_segments(std::span<const ElaSample> samples,
                                      const SegmentOptions& options) {
  std::vector<ElaSeries> segments;
  if (samples.empty()) return segments;
  const double fps = options.fps ? *options.fps : mean_fps(samples);
  if (!(fps > 0.0)) throw InvalidArgument("build_segments: fps must be positive");
  const double t0 = samples.front().timestamp;

  // Variable frame rates are treated as constant at `fps`, so the position
  // in the stream is the frame index.
  std::optional<std::size_t> last;
  ElaSeries current;
  auto flush = [&] {
    if (!current.values.empty()) {
      current.segment_id = static_cast<int>(segments.size());
      segments.push_back(std::move(current));
    }
    current = ElaSeries{};
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& value = samples[i].ela_combined;
    if (!value) continue;
    if (!std::isfinite(*value)) throw InvalidArgument("build_segments: non-finite ELA value");
    if (last) {
      const std::size_t gap_frames = i - *last;
      const double gap_seconds = samples[i].timestamp - samples[*last].timestamp;
      if (gap_seconds > options.max_gap_seconds) {
        flush();
      } else {
        const double a = current.values.back();
        for (std::size_t k = 1; k < gap_frames; ++k) {
          const double f = static_cast<double>(k) / static_cast<double>(gap_frames);
          current.values.push_back(a + f * (*value - a));
        }
      }
    }
    if (current.values.empty()) {
      current.fps = fps;
      current.frame_offset = i;
      current.start_time = t0 + static_cast<double>(i) / fps;
    }
    current.values.push_back(*value);
    last = i;
  }
  flush();
  return segments;
}

}  // namespace lidkit
