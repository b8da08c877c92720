#include "lidkit/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "lidkit/config.h"
#include "lidkit/error.h"
#include "lidkit/io.h"

namespace lidkit {

TangentTimes tangent_intersections(const ElaSeries& signal, const Blink& blink) {
  if (blink.m1 == 0.0 || blink.m2 == 0.0) {
    throw DegenerateGeometry("tangent_intersections: zero tangent slope");
  }
  const double tm1 = signal.time_at(static_cast<double>(blink.m1_index));
  const double tm2 = signal.time_at(static_cast<double>(blink.m2_index));
  const double v1 = signal.values.at(blink.m1_index);
  const double v2 = signal.values.at(blink.m2_index);

  TangentTimes t;
  t.t1 = tm1 + (blink.ela_start - v1) / blink.m1;
  t.t2 = tm1 + (blink.ela_min - v1) / blink.m1;
  t.t3 = tm2 + (blink.ela_min - v2) / blink.m2;
  t.t4 = tm2 + (blink.ela_end - v2) / blink.m2;
  if (t.t2 > t.t3) {
    const double cross = (v2 - v1 + blink.m1 * tm1 - blink.m2 * tm2) / (blink.m1 - blink.m2);
    t.t2 = t.t3 = std::clamp(cross, t.t1, t.t4);
  }
  return t;
}

double normal_area(const ElaSeries& signal, double t3, double d3, double ela_min, double ela_end) {
  const double denom = (ela_end - ela_min) * 2.0 * d3;
  if (!(denom > 0.0) || signal.size() < 2) return 0.0;
  const double series_end = signal.time_at(static_cast<double>(signal.size() - 1));
  const double a = std::max(t3, signal.start_time);
  const double b = std::min(t3 + 2.0 * d3, series_end);
  if (!(b > a)) return 0.0;

  auto value_at = [&](double t) {
    const double x = (t - signal.start_time) * signal.fps;
    const auto i = std::min(static_cast<std::size_t>(std::floor(x)), signal.size() - 2);
    const double f = x - static_cast<double>(i);
    return signal.values[i] + f * (signal.values[i + 1] - signal.values[i]);
  };
  // Trapezoids on the sample grid, with interpolated end points.
  double area = 0.0;
  double prev_t = a;
  double prev_v = value_at(a) - ela_min;
  const auto first = static_cast<std::size_t>(std::floor((a - signal.start_time) * signal.fps)) + 1;
  for (std::size_t i = first; i < signal.size(); ++i) {
    const double t = signal.time_at(static_cast<double>(i));
    if (t >= b) break;
    const double v = signal.values[i] - ela_min;
    area += 0.5 * (v + prev_v) * (t - prev_t);
    prev_t = t;
    prev_v = v;
  }
  area += 0.5 * (value_at(b) - ela_min + prev_v) * (b - prev_t);
  return area / denom;
}

BlinkFeatures compute_features(const ElaSeries& signal, const Blink& blink,
                               const std::optional<PreviousBlink>& previous,
                               const FeatureOptions& options) {
  const TangentTimes tt = tangent_intersections(signal, blink);
  BlinkFeatures f;
  f.t1 = tt.t1;
  f.t2 = tt.t2;
  f.t3 = tt.t3;
  f.t4 = tt.t4;
  f.closing_d1 = tt.t2 - tt.t1;
  f.closed_d2 = tt.t3 - tt.t2;
  f.reopening_d3 = tt.t4 - tt.t3;
  const double total = f.closing_d1 + f.closed_d2 + f.reopening_d3;
  if (!(total > 0.0)) throw DegenerateGeometry("compute_features: blink has zero duration");
  f.peropening = f.reopening_d3 / total;
  if (previous) f.previous_time = f.t1 - previous->t1;

  const auto first = signal.values.begin() + static_cast<std::ptrdiff_t>(blink.i_start);
  const auto last = signal.values.begin() + static_cast<std::ptrdiff_t>(blink.i_end) + 1;
  const auto [lo, hi] = std::minmax_element(first, last);
  f.amplitude = *hi > 0.0 ? std::clamp((*hi - *lo) / *hi, 0.0, 1.0) : 0.0;
  f.av_ratio = (blink.ela_end - blink.ela_min) / blink.m2;
  f.normal_area = normal_area(signal, f.t3, f.reopening_d3, blink.ela_min, blink.ela_end);

  const std::size_t from = previous && previous->i_end ? *previous->i_end + 1 : 0;
  std::size_t closed = 0, frames = 0;
  for (std::size_t i = from; i <= blink.i_end; ++i) {
    ++frames;
    if (signal.values[i] < options.perclos_threshold_deg) ++closed;
  }
  f.perclos = frames ? static_cast<double>(closed) / static_cast<double>(frames) : 0.0;
  return f;
}

std::array<std::optional<double>, 9> feature_values(const BlinkFeatures& f) {
  return {f.closing_d1, f.closed_d2,   f.reopening_d3, f.previous_time, f.amplitude,
          f.av_ratio,   f.normal_area, f.perclos,      f.peropening};
}

namespace {
constexpr std::array<const char*, 13> kColumns = {
    "t1",         "t2",        "t3",        "t4",          "closing_d1",
    "closed_d2",  "reopening_d3", "previous_time", "amplitude", "av_ratio",
    "normal_area", "perclos",  "peropening"};
}

void write_features_csv(std::ostream& out, std::span<const BlinkFeatures> features) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& f : features) {
    out << format_double(f.t1) << ',' << format_double(f.t2) << ',' << format_double(f.t3) << ','
        << format_double(f.t4) << ',' << format_double(f.closing_d1) << ','
        << format_double(f.closed_d2) << ',' << format_double(f.reopening_d3) << ','
        << format_optional(f.previous_time) << ',' << format_double(f.amplitude) << ','
        << format_double(f.av_ratio) << ',' << format_double(f.normal_area) << ','
        << format_double(f.perclos) << ',' << format_double(f.peropening) << '\n';
  }
}

std::vector<BlinkFeatures> parse_features_csv(std::istream& in) {
  const CsvTable table = parse_csv(in);
  std::array<std::size_t, kColumns.size()> col{};
  for (std::size_t i = 0; i < kColumns.size(); ++i) col[i] = table.column(kColumns[i]);
  std::vector<BlinkFeatures> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      auto num = [&](std::size_t c) { return parse_double(row[col[c]]); };
      BlinkFeatures f;
      f.t1 = num(0);
      f.t2 = num(1);
      f.t3 = num(2);
      f.t4 = num(3);
      f.closing_d1 = num(4);
      f.closed_d2 = num(5);
      f.reopening_d3 = num(6);
      if (!row[col[7]].empty()) f.previous_time = num(7);
      f.amplitude = num(8);
      f.av_ratio = num(9);
      f.normal_area = num(10);
      f.perclos = num(11);
      f.peropening = num(12);
      out.push_back(f);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), r + 2);
    }
  }
  return out;
}

std::vector<BlinkFeatures> read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_features_csv(in);
}

}  // namespace lidkit
