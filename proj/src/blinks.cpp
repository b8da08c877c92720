#include "lidkit/blinks.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "lidkit/config.h"
#include "lidkit/error.h"

namespace lidkit {

namespace {
constexpr std::size_t kMinPeaks = 4;
constexpr int kMaxIterations = 100;
}  // namespace

PeakClusters cluster_peaks(std::span<const double> peak_values, std::uint64_t /*seed*/) {
  const std::size_t n = peak_values.size();
  if (n < kMinPeaks) {
    throw InsufficientData("cluster_peaks: need at least 4 peaks, got " + std::to_string(n));
  }
  std::vector<double> mag(n);
  std::transform(peak_values.begin(), peak_values.end(), mag.begin(),
                 [](double v) { return std::abs(v); });
  const auto [lo_it, hi_it] = std::minmax_element(mag.begin(), mag.end());
  double lo = *lo_it;
  double hi = *hi_it;

  PeakClusters out;
  if (lo == hi) {
    out.blink.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.blink[i] = i;
    return out;
  }

  std::vector<char> high(n, 0);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char h = std::abs(mag[i] - hi) <= std::abs(mag[i] - lo) ? 1 : 0;
      if (h != high[i]) {
        high[i] = h;
        changed = true;
      }
    }
    if (!changed) break;
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (high[i]) {
        sum_hi += mag[i];
        ++n_hi;
      } else {
        sum_lo += mag[i];
        ++n_lo;
      }
    }
    if (n_lo) lo = sum_lo / static_cast<double>(n_lo);
    if (n_hi) hi = sum_hi / static_cast<double>(n_hi);
  }
  for (std::size_t i = 0; i < n; ++i) (high[i] ? out.blink : out.noise).push_back(i);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_flanks(std::span<const std::size_t> neg_peaks,
                                                             std::span<const std::size_t> pos_peaks) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t ni = 0, pi = 0;
  while (ni < neg_peaks.size()) {
    const std::size_t neg = neg_peaks[ni];
    while (pi < pos_peaks.size() && pos_peaks[pi] <= neg) ++pi;
    if (pi == pos_peaks.size()) break;
    const std::size_t pos = pos_peaks[pi++];
    pairs.emplace_back(neg, pos);
    while (ni < neg_peaks.size() && neg_peaks[ni] < pos) ++ni;
  }
  return pairs;
}

Blink build_blink_window(const ElaSeries& signal, std::span<const double> derivative,
                         std::size_t m1_index, std::size_t m2_index) {
  const auto& v = signal.values;
  const std::size_t n = v.size();
  if (!(m1_index < m2_index) || m2_index >= n || derivative.size() != n) {
    throw InvalidArgument("build_blink_window: need m1_index < m2_index inside the series");
  }
  Blink b;
  b.m1_index = m1_index;
  b.m2_index = m2_index;
  b.m1 = derivative[m1_index];
  b.m2 = derivative[m2_index];
  b.segment_id = signal.segment_id;

  // Walk uphill away from each flank; the first sample that stops rising is
  // the nearest local maximum (plateaus end at the sample closest to the
  // blink).
  std::size_t s = m1_index;
  while (s > 0 && v[s - 1] > v[s]) --s;
  std::size_t e = m2_index;
  while (e + 1 < n && v[e + 1] > v[e]) ++e;
  b.i_start = s;
  b.i_end = e;
  b.ela_start = v[s];
  b.ela_end = v[e];
  b.ela_min = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(s),
                                v.begin() + static_cast<std::ptrdiff_t>(e) + 1);
  return b;
}

Blink build_blink_window(const ElaSeries& signal, std::size_t m1_index, std::size_t m2_index) {
  const auto d = central_derivative(signal);
  return build_blink_window(signal, d, m1_index, m2_index);
}

bool reject_merged(const ElaSeries& signal, const Blink& blink) {
  if (blink.m2_index <= blink.m1_index + 1) return false;
  const auto first = signal.values.begin() + static_cast<std::ptrdiff_t>(blink.m1_index) + 1;
  const auto last = signal.values.begin() + static_cast<std::ptrdiff_t>(blink.m2_index);
  const double interior = *std::max_element(first, last);
  return interior > blink.ela_start || interior > blink.ela_end;
}

std::vector<Blink> detect_blinks(const ElaSeries& signal, std::uint64_t seed) {
  std::vector<Blink> blinks;
  if (signal.size() < 3) return blinks;
  const auto d = central_derivative(signal);
  const auto ex = local_extrema(d);

  std::vector<std::size_t> neg, pos;
  std::vector<double> neg_val, pos_val;
  for (auto i : ex.minima) {
    if (d[i] < 0.0) {
      neg.push_back(i);
      neg_val.push_back(d[i]);
    }
  }
  for (auto i : ex.maxima) {
    if (d[i] > 0.0) {
      pos.push_back(i);
      pos_val.push_back(d[i]);
    }
  }

  std::vector<std::size_t> neg_blink, pos_blink;
  try {
    for (auto k : cluster_peaks(neg_val, seed).blink) neg_blink.push_back(neg[k]);
    for (auto k : cluster_peaks(pos_val, seed).blink) pos_blink.push_back(pos[k]);
  } catch (const InsufficientData&) {
    return blinks;
  }
  std::sort(neg_blink.begin(), neg_blink.end());
  std::sort(pos_blink.begin(), pos_blink.end());

  for (const auto& [m1, m2] : pair_flanks(neg_blink, pos_blink)) {
    Blink b = build_blink_window(signal, d, m1, m2);
    if (reject_merged(signal, b)) continue;
    if (!blinks.empty() && b.i_start <= blinks.back().i_end) {
      // Neighbours may share their boundary maximum; give it to the earlier one.
      b.i_start = blinks.back().i_end + 1;
      if (b.i_start > b.m1_index) continue;
      b.ela_start = signal.values[b.i_start];
      b.ela_min = *std::min_element(signal.values.begin() + static_cast<std::ptrdiff_t>(b.i_start),
                                    signal.values.begin() + static_cast<std::ptrdiff_t>(b.i_end) + 1);
      if (reject_merged(signal, b)) continue;
    }
    blinks.push_back(b);
  }
  return blinks;
}

std::vector<AnalysisEpoch> sliding_analysis(std::span<const ElaSeries> segments, std::uint64_t seed,
                                            const SlidingOptions& options) {
  std::vector<AnalysisEpoch> epochs;
  if (segments.empty()) return epochs;
  if (!(options.period > 0.0) || options.window_span < options.period) {
    throw InvalidArgument("sliding_analysis: need period > 0 and window_span >= period");
  }
  const auto& first = segments.front();
  const double t0 = first.start_time - static_cast<double>(first.frame_offset) / first.fps;
  double stream_end = t0;
  for (const auto& s : segments) {
    stream_end = std::max(stream_end, s.start_time + static_cast<double>(s.size()) / s.fps);
  }
  const double eps = 1e-9 * options.period;

  std::vector<std::size_t> reported;  // stream frame of m1 for every blink emitted so far
  for (int k = 1;; ++k) {
    const double end = t0 + k * options.period;
    if (end > stream_end + eps) break;
    const double begin = end - options.window_span;
    AnalysisEpoch epoch;
    epoch.epoch_end_time = end;
    epoch.window_span = options.window_span;
    epoch.period = options.period;
    for (const auto& seg : segments) {
      const double lo_f = std::ceil((begin - seg.start_time) * seg.fps - 1e-6);
      const double hi_f = std::floor((end - seg.start_time) * seg.fps + 1e-6);
      const auto lo = static_cast<std::size_t>(std::max(0.0, lo_f));
      const auto hi = static_cast<std::size_t>(
          std::clamp(hi_f, 0.0, static_cast<double>(seg.size())));
      if (hi <= lo || hi - lo < 3) continue;
      ElaSeries window;
      window.values.assign(seg.values.begin() + static_cast<std::ptrdiff_t>(lo),
                           seg.values.begin() + static_cast<std::ptrdiff_t>(hi));
      window.fps = seg.fps;
      window.start_time = seg.time_at(static_cast<double>(lo));
      window.segment_id = seg.segment_id;
      window.frame_offset = seg.frame_offset + lo;
      for (Blink b : detect_blinks(window, seed)) {
        b.i_start += lo;
        b.i_end += lo;
        b.m1_index += lo;
        b.m2_index += lo;
        const std::size_t frame = seg.frame_offset + b.m1_index;
        const bool seen = std::any_of(reported.begin(), reported.end(), [&](std::size_t f) {
          return (f > frame ? f - frame : frame - f) <= 1;
        });
        if (seen) continue;
        reported.push_back(frame);
        epoch.blinks.push_back(b);
      }
    }
    std::sort(epoch.blinks.begin(), epoch.blinks.end(), [&](const Blink& a, const Blink& b) {
      return std::pair(a.segment_id, a.i_start) < std::pair(b.segment_id, b.i_start);
    });
    epochs.push_back(std::move(epoch));
  }
  return epochs;
}

void write_blinks_jsonl(std::ostream& out, std::span<const BlinkRecord> records) {
  for (const auto& r : records) {
    const Blink& b = r.blink;
    nlohmann::ordered_json j;
    j["segment"] = b.segment_id;
    j["start_frame"] = r.frame_offset + b.i_start;
    j["end_frame"] = r.frame_offset + b.i_end;
    j["i_start"] = b.i_start;
    j["i_end"] = b.i_end;
    j["m1_index"] = b.m1_index;
    j["m2_index"] = b.m2_index;
    j["m1"] = b.m1;
    j["m2"] = b.m2;
    j["ela_start"] = b.ela_start;
    j["ela_end"] = b.ela_end;
    j["ela_min"] = b.ela_min;
    j["t_m1"] = r.t_m1;
    j["fps"] = r.fps;
    j["sigma"] = r.sigma;
    j["frame_offset"] = r.frame_offset;
    if (r.epoch_end_time) j["epoch_end_time"] = *r.epoch_end_time;
    out << j.dump() << '\n';
  }
}

std::vector<BlinkRecord> parse_blinks_jsonl(std::istream& in) {
  std::vector<BlinkRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      BlinkRecord r;
      Blink& b = r.blink;
      b.segment_id = j.at("segment").get<int>();
      b.i_start = j.at("i_start").get<std::size_t>();
      b.i_end = j.at("i_end").get<std::size_t>();
      b.m1_index = j.at("m1_index").get<std::size_t>();
      b.m2_index = j.at("m2_index").get<std::size_t>();
      b.m1 = j.at("m1").get<double>();
      b.m2 = j.at("m2").get<double>();
      b.ela_start = j.at("ela_start").get<double>();
      b.ela_end = j.at("ela_end").get<double>();
      b.ela_min = j.at("ela_min").get<double>();
      r.t_m1 = j.at("t_m1").get<double>();
      r.fps = j.at("fps").get<double>();
      r.sigma = j.at("sigma").get<double>();
      r.frame_offset = j.at("frame_offset").get<std::size_t>();
      if (j.contains("epoch_end_time")) r.epoch_end_time = j["epoch_end_time"].get<double>();
      if (!(b.i_start <= b.m1_index && b.m1_index < b.m2_index && b.m2_index <= b.i_end)) {
        throw ParseError("blink window indices out of order", lineno);
      }
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad blink record: ") + e.what(), lineno);
    }
  }
  return out;
}

std::vector<BlinkRecord> read_blinks_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_blinks_jsonl(in);
}

}  // namespace lidkit
