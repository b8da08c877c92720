#include "lidkit/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "lidkit/error.h"
#include "lidkit/io.h"

namespace lidkit {

namespace {

void check_windows(std::span<const FrameWindow> windows, const char* what) {
  std::vector<FrameWindow> sorted(windows.begin(), windows.end());
  for (const auto& w : sorted) {
    if (w.start > w.end) throw InvalidArgument(std::string(what) + ": window with start > end");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const FrameWindow& a, const FrameWindow& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start <= sorted[i - 1].end) {
      throw InvalidArgument(std::string(what) + ": overlapping windows");
    }
  }
}

bool overlaps(const FrameWindow& a, const FrameWindow& b) {
  return a.start <= b.end && b.start <= a.end;
}

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

int pose_bin(double deg) {
  return static_cast<int>(std::floor(deg / kPoseBinDegrees)) * kPoseBinDegrees;
}

}  // namespace

DetectionScore detection_accuracy(std::span<const FrameWindow> detected,
                                  std::span<const FrameWindow> ground_truth) {
  check_windows(detected, "detected");
  check_windows(ground_truth, "ground truth");
  DetectionScore s;
  for (const auto& d : detected) {
    const bool hit = std::any_of(ground_truth.begin(), ground_truth.end(),
                                 [&](const FrameWindow& g) { return overlaps(d, g); });
    if (hit) ++s.tp; else ++s.fp;
  }
  for (const auto& g : ground_truth) {
    const bool hit = std::any_of(detected.begin(), detected.end(),
                                 [&](const FrameWindow& d) { return overlaps(d, g); });
    if (hit) ++s.labels_hit; else ++s.fn;
  }
  const std::size_t denom = s.tp + s.fn + s.fp;
  s.da = denom > 0 ? 100.0 * static_cast<double>(s.tp) / static_cast<double>(denom) : 100.0;
  return s;
}

std::vector<LabeledWindow> parse_annotations_jsonl(std::istream& in) {
  std::vector<LabeledWindow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledWindow w;
      w.window.start = j.at("start_frame").get<std::size_t>();
      w.window.end = j.at("end_frame").get<std::size_t>();
      w.label = j.value("label", std::string("blink"));
      if (w.window.start > w.window.end) throw ParseError("start_frame > end_frame");
      out.push_back(std::move(w));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<LabeledWindow> read_annotations_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_annotations_jsonl(in);
}

std::vector<FrameWindow> annotation_windows(std::span<const BlinkAnnotation> blinks) {
  std::vector<FrameWindow> out;
  for (const auto& b : blinks) out.push_back({b.start_frame, b.end_frame});
  return out;
}

DetectionRun run_detection(const SynthScenario& scenario, const BlinkDistributions& distributions,
                           const AnalysisOptions& options) {
  DetectionRun run;
  run.signal = generate_ela_signal(scenario.state, scenario, distributions);
  const auto samples = samples_from_series(run.signal.series);
  run.analysis = analyze(samples, options);
  const auto detected = blink_windows(run.analysis.blinks);
  const auto truth = annotation_windows(run.signal.truth.blinks);
  run.score = detection_accuracy(detected, truth);
  return run;
}

namespace {

struct MeasuredSweep {
  std::vector<std::optional<double>> ela;
  std::vector<std::optional<double>> ear;
  std::vector<PoseKeyframe> pose;
};

MeasuredSweep measure_sweep(const SynthScenario& scenario, double set_ela) {
  SynthScenario s = scenario;
  s.set_ela = set_ela;
  const std::vector<double> truth(s.frame_count(), set_ela);
  const auto frames = generate_landmark_sequence(truth, s);
  const auto cfg = EyelidIndexConfig::mediapipe_default();
  MeasuredSweep m;
  for (const auto& raw : frames) {
    const LandmarkFrame frame = normalize_frame(raw);
    const ElaSample sample = compute_ela_sample(frame, cfg);
    m.ela.push_back(sample.ela_combined);
    const auto l = select_ear_points(frame, cfg, Eye::left);
    const auto r = select_ear_points(frame, cfg, Eye::right);
    m.ear.push_back(0.5 * (ear(l) + ear(r)));
    m.pose.push_back(pose_at(s.pose, raw.timestamp));
  }
  return m;
}

PoseBinError summarize(double set_ela, const MeasuredSweep& m, const std::vector<std::size_t>& idx) {
  PoseBinError row;
  row.set_ela = set_ela;
  std::vector<double> ela, ear_values;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i : idx) {
    ear_values.push_back(*m.ear[i]);
    if (!m.ela[i]) continue;
    const double e = *m.ela[i] - set_ela;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    ela.push_back(*m.ela[i]);
  }
  row.frames = ela.size();
  if (!ela.empty()) {
    row.mae = abs_sum / static_cast<double>(ela.size());
    row.mse = sq_sum / static_cast<double>(ela.size());
  }
  row.var_ela = population_variance(ela);
  row.var_ear = population_variance(ear_values);
  return row;
}

}  // namespace

SweepReport ela_error_sweep(std::span<const double> set_elas, const SynthScenario& scenario) {
  SweepReport report;
  for (double set_ela : set_elas) {
    const MeasuredSweep m = measure_sweep(scenario, set_ela);
    std::vector<std::size_t> all(m.ela.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    report.rows.push_back(summarize(set_ela, m, all));

    std::map<std::pair<int, int>, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < m.pose.size(); ++i) {
      bins[{pose_bin(m.pose[i].pitch_deg), pose_bin(m.pose[i].yaw_deg)}].push_back(i);
    }
    for (const auto& [key, idx] : bins) {
      PoseBinError row = summarize(set_ela, m, idx);
      row.pitch_bin = key.first;
      row.yaw_bin = key.second;
      report.rows.push_back(row);
    }
  }
  return report;
}

VarianceReport ear_ela_variance(const SynthScenario& scenario, double set_ela) {
  const MeasuredSweep m = measure_sweep(scenario, set_ela);
  VarianceReport r;
  for (std::size_t i = 0; i < m.ela.size(); ++i) {
    if (!m.ela[i]) continue;
    r.ela.push_back(*m.ela[i]);
    r.ear.push_back(*m.ear[i]);
    r.pose.push_back(m.pose[i]);
  }
  r.var_ela = population_variance(r.ela);
  r.var_ear = population_variance(r.ear);
  return r;
}

FramerateReport framerate_bias_report(const SynthScenario& scenario,
                                      const BlinkDistributions& distributions,
                                      std::span<const double> fps_list,
                                      const AnalysisOptions& options) {
  if (fps_list.empty()) throw InvalidArgument("framerate_bias_report: no frame rates given");
  FramerateReport report;
  bool truth_set = false;
  for (double fps : fps_list) {
    SynthScenario s = scenario;
    s.fps = fps;
    const SynthSignal signal = generate_ela_signal(s.state, s, distributions);
    if (!truth_set) {
      const auto& b = signal.truth.blinks;
      for (const auto& a : b) {
        report.truth_closing += a.timing.closing;
        report.truth_closed += a.timing.closed;
        report.truth_reopening += a.timing.reopening;
      }
      if (!b.empty()) {
        const double n = static_cast<double>(b.size());
        report.truth_closing /= n;
        report.truth_closed /= n;
        report.truth_reopening /= n;
      }
      truth_set = true;
    }
    const auto samples = samples_from_series(signal.series);
    const AnalysisResult result = analyze(samples, options);
    FramerateRow row;
    row.fps = fps;
    row.blinks = result.features.size();
    for (std::size_t k = 0; k < kFeatureNames.size(); ++k) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& f : result.features) {
        const auto v = feature_values(f)[k];
        if (!v) continue;
        sum += *v;
        ++n;
      }
      if (n > 0) row.mean[k] = sum / static_cast<double>(n);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<EpochFeatureVector> labeled_epochs(const SynthScenario& scenario,
                                               const BlinkDistributions& distributions,
                                               const std::string& subject,
                                               const AnalysisOptions& options) {
  const SynthSignal signal = generate_ela_signal(scenario.state, scenario, distributions);
  const auto samples = samples_from_series(signal.series);
  const AnalysisResult result = analyze(samples, options);
  auto vectors = rolling_epochs(result.features);
  const Vigilance label = scenario.state == SynthState::alert ? Vigilance::alert : Vigilance::drowsy;
  for (auto& v : vectors) {
    v.label = label;
    v.subject = subject;
  }
  return vectors;
}

void write_detection_csv(std::ostream& out, const DetectionScore& s) {
  out << "tp,fp,fn,da,labels_hit\n"
      << s.tp << ',' << s.fp << ',' << s.fn << ',' << format_double(s.da) << ',' << s.labels_hit << '\n';
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "set_ela,pitch_bin,yaw_bin,frames,mae,mse,var_ela,var_ear\n";
  for (const auto& r : report.rows) {
    out << format_double(r.set_ela) << ',' << (r.pitch_bin ? std::to_string(*r.pitch_bin) : "")
        << ',' << (r.yaw_bin ? std::to_string(*r.yaw_bin) : "") << ',' << r.frames << ','
        << format_double(r.mae) << ',' << format_double(r.mse) << ',' << format_double(r.var_ela)
        << ',' << format_double(r.var_ear) << '\n';
  }
}

void write_variance_csv(std::ostream& out, const VarianceReport& report) {
  out << "pitch_deg,yaw_deg,ela_deg,ear\n";
  for (std::size_t i = 0; i < report.ela.size(); ++i) {
    out << format_double(report.pose[i].pitch_deg) << ',' << format_double(report.pose[i].yaw_deg)
        << ',' << format_double(report.ela[i]) << ',' << format_double(report.ear[i]) << '\n';
  }
}

void write_framerate_csv(std::ostream& out, const FramerateReport& report) {
  out << "fps,blinks";
  for (auto name : kFeatureNames) out << ",mean_" << name;
  out << '\n';
  for (const auto& r : report.rows) {
    out << format_double(r.fps) << ',' << r.blinks;
    for (const auto& m : r.mean) out << ',' << format_optional(m);
    out << '\n';
  }
  // Ground-truth durations of the underlying blinks, in the same columns.
  out << "truth,," << format_double(report.truth_closing) << ',' << format_double(report.truth_closed)
      << ',' << format_double(report.truth_reopening) << ",,,,,,\n";
}

}  // namespace lidkit
