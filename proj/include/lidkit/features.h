#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lidkit/blinks.h"

namespace lidkit {

struct TangentTimes {
  double t1 = 0.0;  // descending tangent reaches ela_start
  double t2 = 0.0;  // descending tangent reaches ela_min
  double t3 = 0.0;  // ascending tangent leaves ela_min
  double t4 = 0.0;  // ascending tangent reaches ela_end
};

/// Tangent lines through the steepest descent and ascent samples,
/// intersected with the start, minimum and end levels of the blink. When the
/// two tangents cross above the minimum level (no closed phase) t2 and t3
/// collapse onto the crossing time.
TangentTimes tangent_intersections(const ElaSeries& signal, const Blink& blink);

struct BlinkFeatures {
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
  double closing_d1 = 0.0;
  double closed_d2 = 0.0;
  double reopening_d3 = 0.0;
  std::optional<double> previous_time;
  double amplitude = 0.0;
  double av_ratio = 0.0;
  double normal_area = 0.0;
  double perclos = 0.0;
  double peropening = 0.0;
};

struct FeatureOptions {
  double perclos_threshold_deg = 20.0;
};

// The blink before this one. i_end is set only when it lies in the same
// series, which bounds the PERCLOS interval.
struct PreviousBlink {
  double t1 = 0.0;
  std::optional<std::size_t> i_end;
};

BlinkFeatures compute_features(const ElaSeries& signal, const Blink& blink,
                               const std::optional<PreviousBlink>& previous,
                               const FeatureOptions& options = {});

/// Reopening-shape area: integral of (ELA - ela_min) over [t3, t3 + 2 d3],
/// clipped to the end of the series, divided by (ela_end - ela_min) * 2 d3.
double normal_area(const ElaSeries& signal, double t3, double d3, double ela_min, double ela_end);

// Feature vector layout shared with the drowsiness classifier.
inline constexpr std::array<std::string_view, 9> kFeatureNames = {
    "closing_d1", "closed_d2", "reopening_d3", "previous_time", "amplitude",
    "av_ratio",   "normal_area", "perclos",    "peropening"};

/// Values in kFeatureNames order; absent previous_time stays empty.
std::array<std::optional<double>, 9> feature_values(const BlinkFeatures& f);

void write_features_csv(std::ostream& out, std::span<const BlinkFeatures> features);
std::vector<BlinkFeatures> parse_features_csv(std::istream& in);
std::vector<BlinkFeatures> read_features_csv(const std::filesystem::path& path);

}  // namespace lidkit
