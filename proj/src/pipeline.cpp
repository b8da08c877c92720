#include "lidkit/pipeline.h"

#include <algorithm>
#include <map>

#include "lidkit/error.h"

namespace lidkit {

DetectionMode parse_detection_mode(const std::string& name) {
  if (name == "whole") return DetectionMode::whole;
  if (name == "sliding") return DetectionMode::sliding;
  throw InvalidArgument("unknown detection mode '" + name + "' (expected whole or sliding)");
}

std::vector<ElaSeries> smoothed_segments(std::span<const ElaSample> samples,
                                         const AnalysisOptions& options) {
  std::vector<ElaSeries> out;
  for (const auto& seg : build_segments(samples, options.segments)) {
    if (seg.size() < 3) continue;
    out.push_back(gaussian_smooth(seg, options.sigma_override));
  }
  return out;
}

namespace {

double sigma_for(const ElaSeries& seg, const std::optional<double>& sigma_override) {
  return sigma_override ? *sigma_override : smoothing_sigma(seg.fps);
}

BlinkRecord make_record(const ElaSeries& seg, const Blink& b, double sigma,
                        std::optional<double> epoch_end) {
  BlinkRecord r;
  r.blink = b;
  r.fps = seg.fps;
  r.sigma = sigma;
  r.frame_offset = seg.frame_offset;
  r.t_m1 = seg.time_at(static_cast<double>(b.m1_index));
  r.epoch_end_time = epoch_end;
  return r;
}

}  // namespace

std::vector<BlinkRecord> detect_blink_records(std::span<const ElaSeries> smoothed,
                                              const AnalysisOptions& options) {
  std::vector<BlinkRecord> records;
  std::map<int, const ElaSeries*> by_id;
  for (const auto& seg : smoothed) by_id[seg.segment_id] = &seg;

  if (options.mode == DetectionMode::whole) {
    for (const auto& seg : smoothed) {
      const double sigma = sigma_for(seg, options.sigma_override);
      for (const auto& b : detect_blinks(seg, options.seed)) {
        records.push_back(make_record(seg, b, sigma, std::nullopt));
      }
    }
    return records;
  }

  SlidingOptions sliding = options.sliding;
  sliding.sigma_override = options.sigma_override;
  for (const auto& epoch : sliding_analysis(smoothed, options.seed, sliding)) {
    for (const auto& b : epoch.blinks) {
      const ElaSeries& seg = *by_id.at(b.segment_id);
      records.push_back(
          make_record(seg, b, sigma_for(seg, options.sigma_override), epoch.epoch_end_time));
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const BlinkRecord& a, const BlinkRecord& b) {
    return a.frame_offset + a.blink.i_start < b.frame_offset + b.blink.i_start;
  });
  std::vector<BlinkRecord> kept;
  for (const auto& r : records) {
    if (!kept.empty() && kept.back().frame_offset + kept.back().blink.i_end >= r.frame_offset + r.blink.i_start) {
      continue;
    }
    kept.push_back(r);
  }
  return kept;
}

std::vector<BlinkFeatures> features_for_records(std::span<const ElaSeries> smoothed,
                                                std::span<const BlinkRecord> records,
                                                const FeatureOptions& options) {
  std::map<int, const ElaSeries*> by_id;
  for (const auto& seg : smoothed) by_id[seg.segment_id] = &seg;

  std::vector<BlinkFeatures> out;
  std::optional<PreviousBlink> previous;
  int previous_segment = -1;
  for (const auto& r : records) {
    const auto it = by_id.find(r.blink.segment_id);
    if (it == by_id.end()) {
      throw InvalidArgument("blink refers to segment " + std::to_string(r.blink.segment_id) +
                            " which is not present in the ELA stream");
    }
    const ElaSeries& seg = *it->second;
    if (r.blink.i_end >= seg.size()) throw InvalidArgument("blink window lies outside its segment");
    std::optional<PreviousBlink> prev = previous;
    if (prev && previous_segment != r.blink.segment_id) prev->i_end.reset();
    try {
      BlinkFeatures f = compute_features(seg, r.blink, prev, options);
      previous = PreviousBlink{f.t1, r.blink.i_end};
      previous_segment = r.blink.segment_id;
      out.push_back(f);
    } catch (const DegenerateGeometry&) {
      // No usable tangent; the blink still bounds the next PERCLOS interval.
    }
  }
  return out;
}

std::vector<BlinkFeatures> features_from_samples(std::span<const ElaSample> samples,
                                                 std::span<const BlinkRecord> records,
                                                 const AnalysisOptions& options) {
  std::map<int, double> sigma;
  for (const auto& r : records) sigma.emplace(r.blink.segment_id, r.sigma);
  std::vector<ElaSeries> smoothed;
  for (const auto& seg : build_segments(samples, options.segments)) {
    const auto it = sigma.find(seg.segment_id);
    if (it == sigma.end()) continue;
    smoothed.push_back(gaussian_smooth(seg, it->second));
  }
  return features_for_records(smoothed, records, options.features);
}

AnalysisResult analyze(std::span<const ElaSample> samples, const AnalysisOptions& options) {
  AnalysisResult result;
  result.smoothed = smoothed_segments(samples, options);
  result.blinks = detect_blink_records(result.smoothed, options);
  result.features = features_for_records(result.smoothed, result.blinks, options.features);
  return result;
}

std::vector<ElaSample> samples_from_series(const ElaSeries& series) {
  std::vector<ElaSample> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    out[i].timestamp = series.time_at(static_cast<double>(i));
    out[i].ela_combined = series.values[i];
  }
  return out;
}

std::vector<FrameWindow> blink_windows(std::span<const BlinkRecord> records) {
  std::vector<FrameWindow> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.frame_offset + r.blink.i_start, r.frame_offset + r.blink.i_end});
  }
  return out;
}

}  // namespace lidkit
