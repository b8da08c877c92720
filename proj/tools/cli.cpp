#include "cli.h"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lidkit/drowsiness.h"
#include "lidkit/error.h"
#include "lidkit/evaluation.h"
#include "lidkit/io.h"
#include "lidkit/landmarks.h"
#include "lidkit/pipeline.h"
#include "lidkit/synth.h"

namespace lidkit::cli {

namespace {

namespace fs = std::filesystem;

struct AssertionFailed : Error {
  using Error::Error;
};

// Everything is rendered to memory first so a failing command never leaves
// a half-written file behind.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text(path, text);
  }
}

StreamFormat format_for(const std::string& name, const std::string& path) {
  if (!name.empty()) return parse_stream_format(name);
  return fs::path(path).extension() == ".csv" ? StreamFormat::csv : StreamFormat::jsonl;
}

EyelidIndexConfig eyelid_config(const std::string& path) {
  return path.empty() ? EyelidIndexConfig::mediapipe_default() : EyelidIndexConfig::load(path);
}

struct GeometryArgs {
  std::string format;
  std::string eyelid_config;
  double z_scale = 1.7;

  void add(CLI::App* app) {
    app->add_option("--format", format, "Landmark stream format (jsonl or csv; default from extension)");
    app->add_option("--eyelid-config", eyelid_config, "Eyelid index config (default: MediaPipe 478)")
        ->check(CLI::ExistingFile);
    app->add_option("--z-scale", z_scale, "Depth rescale factor");
  }
};

struct AnalysisArgs {
  std::uint64_t seed = 0;
  std::string mode = "whole";
  double fps = 0.0;
  double smooth_sigma = 0.0;
  double max_gap = 0.5;
  double perclos_threshold = 20.0;
  CLI::Option* fps_opt = nullptr;
  CLI::Option* sigma_opt = nullptr;

  void add_detection(CLI::App* app) {
    app->add_option("--seed", seed, "Seed for the peak clustering");
    app->add_option("--mode", mode, "whole (one pass per segment) or sliding (90 s windows every 60 s)")
        ->check(CLI::IsMember({"whole", "sliding"}));
    add_segments(app);
    sigma_opt = app->add_option("--smooth-sigma-override", smooth_sigma,
                                "Gaussian sigma in samples instead of fps/30");
  }
  void add_segments(CLI::App* app) {
    fps_opt = app->add_option("--fps", fps, "Frame rate (default: mean rate of the stream)");
    app->add_option("--max-gap", max_gap, "Longest gap in seconds that is interpolated");
  }
  void add_features(CLI::App* app) {
    app->add_option("--perclos-threshold", perclos_threshold, "Closure threshold in degrees");
  }

  AnalysisOptions options() const {
    AnalysisOptions o;
    o.seed = seed;
    o.mode = parse_detection_mode(mode);
    if (sigma_opt && *sigma_opt) o.sigma_override = smooth_sigma;
    o.segments.max_gap_seconds = max_gap;
    if (fps_opt && *fps_opt) o.segments.fps = fps;
    o.features.perclos_threshold_deg = perclos_threshold;
    return o;
  }
};

struct ScenarioArgs {
  std::string config;
  std::string distributions;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Scenario config file")->required()->check(CLI::ExistingFile);
    app->add_option("--distributions", distributions, "Blink distribution config (overrides the scenario's)")
        ->check(CLI::ExistingFile);
    seed_opt = app->add_option("--seed", seed, "Seed (overrides the scenario's)");
  }

  KeyValueConfig raw() const { return KeyValueConfig::load(config); }

  SynthScenario scenario() const {
    SynthScenario s = SynthScenario::load(config);
    if (*seed_opt) s.seed = seed;
    return s;
  }

  BlinkDistributions blink_distributions() const {
    if (!distributions.empty()) return BlinkDistributions::load(distributions);
    const KeyValueConfig cfg = raw();
    if (cfg.has("distributions")) {
      fs::path p = cfg.raw("distributions");
      if (p.is_relative()) p = fs::path(config).parent_path() / p;
      return BlinkDistributions::load(p);
    }
    if (cfg.has("alert.closing")) return BlinkDistributions::from_config(cfg);
    throw InvalidArgument("scenario " + config +
                          " has no blink distributions; add `distributions = <file>` or pass --distributions");
  }

  SynthSignal signal(const SynthScenario& s) const {
    if (s.set_ela) {
      BlinkShapeParams unused;
      unused.state = s.state;
      return assemble_ela_signal(unused, {}, s);
    }
    return generate_ela_signal(s.state, s, blink_distributions());
  }
};

std::string render_ela(std::span<const ElaSample> samples) {
  std::ostringstream os;
  write_ela_csv(os, samples);
  return os.str();
}

std::string render_blinks(std::span<const BlinkRecord> records) {
  std::ostringstream os;
  write_blinks_jsonl(os, records);
  return os.str();
}

std::string render_features(std::span<const BlinkFeatures> features) {
  std::ostringstream os;
  write_features_csv(os, features);
  return os.str();
}

std::vector<EpochFeatureVector> labeled_dataset(const std::vector<std::string>& features,
                                                const std::vector<std::string>& labels,
                                                double window) {
  if (features.size() != labels.size()) {
    throw InvalidArgument("every --features file needs a matching --labels file");
  }
  std::vector<EpochFeatureVector> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto vectors = rolling_epochs(read_features_csv(features[i]), window);
    const auto spans = read_labels_csv(labels[i]);
    const auto labeled = apply_labels(vectors, spans, fs::path(features[i]).stem().string());
    out.insert(out.end(), labeled.begin(), labeled.end());
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item));
  return out;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw AssertionFailed("assertion failed: " + what);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lidkit: eyelid-angle blink and drowsiness analysis"};
  app.name("lidkit");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a landmark stream and report its detection ratio");
  std::string ingest_in, ingest_out;
  GeometryArgs ingest_geo;
  ingest->add_option("--in", ingest_in, "Landmark stream")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Summary JSON (default: stdout)");
  ingest_geo.add(ingest);

  // ela
  auto* ela = app.add_subcommand("ela", "Landmark stream -> per-frame eyelid angles (CSV)");
  std::string ela_in, ela_out;
  GeometryArgs ela_geo;
  ela->add_option("--in", ela_in, "Landmark stream")->required()->check(CLI::ExistingFile);
  ela->add_option("--out", ela_out, "ELA CSV (default: stdout)");
  ela_geo.add(ela);

  // blinks
  auto* blinks = app.add_subcommand("blinks", "ELA CSV -> detected blinks (JSONL)");
  std::string blinks_in, blinks_out;
  AnalysisArgs blinks_args;
  blinks->add_option("--in", blinks_in, "ELA CSV")->required()->check(CLI::ExistingFile);
  blinks->add_option("--out", blinks_out, "Blink JSONL (default: stdout)");
  blinks_args.add_detection(blinks);

  // features
  auto* features = app.add_subcommand("features", "ELA CSV + blinks -> per-blink features (CSV)");
  std::string features_ela, features_blinks, features_out;
  AnalysisArgs features_args;
  features->add_option("--ela", features_ela, "ELA CSV the blinks were detected on")
      ->required()->check(CLI::ExistingFile);
  features->add_option("--blinks", features_blinks, "Blink JSONL")->required()->check(CLI::ExistingFile);
  features->add_option("--out", features_out, "Features CSV (default: stdout)");
  features_args.add_segments(features);
  features_args.add_features(features);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Landmark stream -> ela.csv, blinks.jsonl, features.csv");
  std::string pipeline_in, pipeline_dir;
  GeometryArgs pipeline_geo;
  AnalysisArgs pipeline_args;
  pipeline->add_option("--in", pipeline_in, "Landmark stream")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--out-dir", pipeline_dir, "Output directory")->required();
  pipeline_geo.add(pipeline);
  pipeline_args.add_detection(pipeline);
  pipeline_args.add_features(pipeline);

  // drowsy
  auto* drowsy = app.add_subcommand("drowsy", "Drowsiness classifier");
  drowsy->require_subcommand(1);
  std::vector<std::string> fit_features, fit_labels, cv_features, cv_labels;
  std::string fit_model, predict_model, predict_features, predict_out, cv_out;
  double fit_window = 60.0, predict_window = 60.0, cv_window = 60.0;
  FitOptions fit_opts, cv_opts;
  int cv_folds = 5;

  auto* fit = drowsy->add_subcommand("fit", "Train on labeled feature files");
  fit->add_option("--features", fit_features, "Features CSV (repeatable)")->required()->check(CLI::ExistingFile);
  fit->add_option("--labels", fit_labels, "Labels CSV per features file")->required()->check(CLI::ExistingFile);
  fit->add_option("--model", fit_model, "Model file to write")->required();
  fit->add_option("--k", fit_opts.k, "Neighbours");
  fit->add_option("--components", fit_opts.components, "Principal components");
  fit->add_flag("--binary", fit_opts.binary, "Merge low_vigilant into drowsy");
  fit->add_option("--window", fit_window, "Aggregation window in seconds");

  auto* predict = drowsy->add_subcommand("predict", "Classify the epochs of a features file");
  predict->add_option("--model", predict_model, "Model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--features", predict_features, "Features CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", predict_out, "Predictions CSV (default: stdout)");
  predict->add_option("--window", predict_window, "Aggregation window in seconds");

  auto* cv = drowsy->add_subcommand("cv", "Subject-grouped cross-validation");
  cv->add_option("--features", cv_features, "Features CSV (repeatable)")->required()->check(CLI::ExistingFile);
  cv->add_option("--labels", cv_labels, "Labels CSV per features file")->required()->check(CLI::ExistingFile);
  cv->add_option("--folds", cv_folds, "Folds");
  cv->add_option("--k", cv_opts.k, "Neighbours");
  cv->add_option("--components", cv_opts.components, "Principal components");
  cv->add_flag("--binary", cv_opts.binary, "Merge low_vigilant into drowsy");
  cv->add_option("--window", cv_window, "Aggregation window in seconds");
  cv->add_option("--out", cv_out, "Per-fold accuracy CSV (default: stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "Synthetic ground truth");
  synth->require_subcommand(1);
  ScenarioArgs signal_sc, landmarks_sc, curve_sc;
  std::string signal_out, signal_truth, signal_labels, signal_subject;
  std::string landmarks_out, landmarks_truth, landmarks_format;
  std::string curve_out;

  auto* signal = synth->add_subcommand("signal", "Synthetic ELA signal (ELA CSV) with annotations");
  signal_sc.add(signal);
  signal->add_option("--out", signal_out, "ELA CSV (default: stdout)");
  signal->add_option("--truth", signal_truth, "Blink annotations JSONL");
  signal->add_option("--labels", signal_labels, "Recording label CSV for drowsy fit");
  signal->add_option("--subject", signal_subject, "Subject name written to --labels");

  auto* landmarks = synth->add_subcommand("landmarks", "Synthetic landmark stream");
  landmarks_sc.add(landmarks);
  landmarks->add_option("--out", landmarks_out, "Landmark stream (default: stdout)");
  landmarks->add_option("--format", landmarks_format, "jsonl or csv (default from extension)");
  landmarks->add_option("--truth", landmarks_truth, "Blink annotations JSONL");

  auto* curve = synth->add_subcommand("curve", "Animation curve (time_s, ela_deg) for an external rig");
  curve_sc.add(curve);
  curve->add_option("--out", curve_out, "Curve CSV (default: stdout)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation reports");
  eval->require_subcommand(1);
  ScenarioArgs da_sc, sweep_sc, variance_sc, fps_sc;
  AnalysisArgs da_args, fps_args;
  std::string da_out, da_detected, da_annotations, sweep_out, sweep_elas, variance_out, fps_out;
  std::string fps_list = "10,30,50";
  bool da_assert = false, sweep_assert = false, variance_assert = false, fps_assert = false;
  double da_min = 90.0, sweep_max_mae = 0.5, variance_set_ela = 0.0;
  CLI::Option* variance_set_opt = nullptr;

  auto* da = eval->add_subcommand("da", "Blink detection accuracy against annotations");
  da->add_option("--config", da_sc.config, "Scenario config (generate and score)")->check(CLI::ExistingFile);
  da->add_option("--distributions", da_sc.distributions, "Blink distribution config")->check(CLI::ExistingFile);
  da_sc.seed_opt = da->add_option("--seed-scenario", da_sc.seed, "Scenario seed override");
  da->add_option("--detected", da_detected, "Blink JSONL to score instead of generating")->check(CLI::ExistingFile);
  da->add_option("--annotations", da_annotations, "Annotation JSONL (start_frame, end_frame, label)")
      ->check(CLI::ExistingFile);
  da->add_option("--out", da_out, "Report CSV (default: stdout)");
  da->add_flag("--assert", da_assert, "Exit 2 when DA is below --min-da");
  da->add_option("--min-da", da_min, "Threshold for --assert, percent");
  da_args.add_detection(da);

  auto* sweep = eval->add_subcommand("sweep", "ELA error per set angle and pose bin");
  sweep_sc.add(sweep);
  sweep->add_option("--set-elas", sweep_elas, "Comma separated set angles (default: scenario set_elas or 0..70)");
  sweep->add_option("--out", sweep_out, "Report CSV (default: stdout)");
  sweep->add_flag("--assert", sweep_assert, "Exit 2 when any all-pose MAE reaches --max-mae");
  sweep->add_option("--max-mae", sweep_max_mae, "Threshold for --assert, degrees");

  auto* variance = eval->add_subcommand("variance", "ELA vs EAR variance over a pose sweep");
  variance_sc.add(variance);
  variance_set_opt = variance->add_option("--set-ela", variance_set_ela, "Set angle (default: scenario set_ela or 60)");
  variance->add_option("--out", variance_out, "Per-frame CSV (default: stdout)");
  variance->add_flag("--assert", variance_assert, "Exit 2 unless ELA variance is below EAR variance");

  auto* fpsr = eval->add_subcommand("fps", "Mean blink features of one waveform at several frame rates");
  fpsr->add_option("--config", fps_sc.config, "Scenario config")->required()->check(CLI::ExistingFile);
  fpsr->add_option("--distributions", fps_sc.distributions, "Blink distribution config")->check(CLI::ExistingFile);
  fps_sc.seed_opt = fpsr->add_option("--seed-scenario", fps_sc.seed, "Scenario seed override");
  fpsr->add_option("--fps-list", fps_list, "Comma separated frame rates");
  fpsr->add_option("--out", fps_out, "Report CSV (default: stdout)");
  fpsr->add_flag("--assert", fps_assert, "Exit 2 unless closing duration shrinks from the lowest to the highest rate");
  fps_args.add_detection(fpsr);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*ingest) {
      const auto format = format_for(ingest_geo.format, ingest_in);
      const auto frames = read_landmark_stream(ingest_in, format);
      const auto cfg = eyelid_config(ingest_geo.eyelid_config);
      std::size_t detected = 0, landmarks_per_frame = 0;
      for (const auto& f : frames) {
        if (!f.detected) continue;
        ++detected;
        landmarks_per_frame = f.landmarks.size();
        cfg.validate(f.landmarks.size());
        normalize_frame(f, NormalizeOptions{ingest_geo.z_scale});
      }
      nlohmann::ordered_json j;
      j["frames"] = frames.size();
      j["detected"] = detected;
      j["detection_ratio"] = detection_ratio(frames);
      j["landmarks"] = landmarks_per_frame;
      if (frames.size() > 1) {
        j["duration_s"] = frames.back().timestamp - frames.front().timestamp;
      }
      emit(ingest_out, j.dump(2) + "\n", out);
      return kExitOk;
    }

    if (*ela) {
      const auto frames = read_landmark_stream(ela_in, format_for(ela_geo.format, ela_in));
      const auto samples =
          compute_ela_stream(frames, eyelid_config(ela_geo.eyelid_config), NormalizeOptions{ela_geo.z_scale});
      emit(ela_out, render_ela(samples), out);
      return kExitOk;
    }

    if (*blinks) {
      const auto samples = read_ela_csv(blinks_in);
      const auto opts = blinks_args.options();
      const auto smoothed = smoothed_segments(samples, opts);
      emit(blinks_out, render_blinks(detect_blink_records(smoothed, opts)), out);
      return kExitOk;
    }

    if (*features) {
      const auto samples = read_ela_csv(features_ela);
      const auto records = read_blinks_jsonl(features_blinks);
      auto opts = features_args.options();
      // Segment the stream at the rate the blinks were detected at.
      if (!opts.segments.fps && !records.empty()) opts.segments.fps = records.front().fps;
      emit(features_out, render_features(features_from_samples(samples, records, opts)), out);
      return kExitOk;
    }

    if (*pipeline) {
      const auto frames = read_landmark_stream(pipeline_in, format_for(pipeline_geo.format, pipeline_in));
      const auto samples = compute_ela_stream(frames, eyelid_config(pipeline_geo.eyelid_config),
                                              NormalizeOptions{pipeline_geo.z_scale});
      const auto result = analyze(samples, pipeline_args.options());
      fs::create_directories(pipeline_dir);
      const fs::path dir(pipeline_dir);
      write_text(dir / "ela.csv", render_ela(samples));
      write_text(dir / "blinks.jsonl", render_blinks(result.blinks));
      write_text(dir / "features.csv", render_features(result.features));
      err << "lidkit: " << frames.size() << " frames, detection ratio "
          << format_double(detection_ratio(frames)) << ", " << result.blinks.size() << " blinks\n";
      return kExitOk;
    }

    if (*fit) {
      const auto data = labeled_dataset(fit_features, fit_labels, fit_window);
      const auto model = DrowsinessModel::fit(data, fit_opts);
      std::ostringstream os;
      model.save(os);
      emit(fit_model, os.str(), out);
      err << "lidkit: trained on " << data.size() << " epoch vectors\n";
      return kExitOk;
    }

    if (*predict) {
      const auto model = DrowsinessModel::load(fs::path(predict_model));
      const auto vectors = rolling_epochs(read_features_csv(predict_features), predict_window);
      std::ostringstream os;
      os << "epoch_end_time,blink_count,prediction\n";
      for (const auto& v : vectors) {
        os << format_double(v.epoch_end_time) << ',' << v.blink_count << ',' << to_string(model.predict(v)) << '\n';
      }
      emit(predict_out, os.str(), out);
      return kExitOk;
    }

    if (*cv) {
      const auto data = labeled_dataset(cv_features, cv_labels, cv_window);
      const auto result = cross_validate(data, cv_folds, cv_opts);
      std::ostringstream os;
      os << "fold,accuracy\n";
      for (std::size_t i = 0; i < result.fold_accuracy.size(); ++i) {
        os << i << ',' << format_double(result.fold_accuracy[i]) << '\n';
      }
      os << "mean," << format_double(result.mean_accuracy) << '\n';
      emit(cv_out, os.str(), out);
      return kExitOk;
    }

    if (*signal) {
      const SynthScenario s = signal_sc.scenario();
      const SynthSignal sig = signal_sc.signal(s);
      emit(signal_out, render_ela(samples_from_series(sig.series)), out);
      if (!signal_truth.empty()) {
        std::ostringstream os;
        write_annotations_jsonl(os, sig.truth);
        write_text(signal_truth, os.str());
      }
      if (!signal_labels.empty()) {
        const LabelSpan span{0.0, s.duration,
                             s.state == SynthState::alert ? Vigilance::alert : Vigilance::drowsy,
                             signal_subject};
        std::ostringstream os;
        write_labels_csv(os, std::span<const LabelSpan>(&span, 1));
        write_text(signal_labels, os.str());
      }
      return kExitOk;
    }

    if (*landmarks) {
      const SynthScenario s = landmarks_sc.scenario();
      const SynthSignal sig = landmarks_sc.signal(s);
      // The lids follow the noisy angle, so noise_std reaches the landmarks.
      std::vector<double> driven = sig.series.values;
      for (auto& v : driven) v = std::clamp(v, 0.0, 90.0);
      const auto frames = generate_landmark_sequence(driven, s);
      std::ostringstream os;
      write_landmark_stream(os, frames, format_for(landmarks_format, landmarks_out));
      emit(landmarks_out, os.str(), out);
      if (!landmarks_truth.empty()) {
        std::ostringstream ts;
        write_annotations_jsonl(ts, sig.truth);
        write_text(landmarks_truth, ts.str());
      }
      return kExitOk;
    }

    if (*curve) {
      const SynthScenario s = curve_sc.scenario();
      std::ostringstream os;
      write_animation_curve(os, curve_sc.signal(s).series);
      emit(curve_out, os.str(), out);
      return kExitOk;
    }

    if (*da) {
      DetectionScore score;
      if (!da_detected.empty() || !da_annotations.empty()) {
        if (da_detected.empty() || da_annotations.empty()) {
          throw InvalidArgument("--detected and --annotations go together");
        }
        const auto detected = blink_windows(read_blinks_jsonl(da_detected));
        std::vector<FrameWindow> truth;
        for (const auto& a : read_annotations_jsonl(da_annotations)) truth.push_back(a.window);
        score = detection_accuracy(detected, truth);
      } else {
        if (da_sc.config.empty()) throw InvalidArgument("eval da needs --config or --detected/--annotations");
        const SynthScenario s = da_sc.scenario();
        score = run_detection(s, da_sc.blink_distributions(), da_args.options()).score;
      }
      std::ostringstream os;
      write_detection_csv(os, score);
      emit(da_out, os.str(), out);
      if (da_assert) check(score.da >= da_min, "DA " + format_double(score.da) + " < " + format_double(da_min));
      return kExitOk;
    }

    if (*sweep) {
      const SynthScenario s = sweep_sc.scenario();
      const KeyValueConfig cfg = sweep_sc.raw();
      std::vector<double> elas;
      if (!sweep_elas.empty()) {
        elas = parse_number_list(sweep_elas);
      } else if (cfg.has("set_elas")) {
        elas = cfg.numbers("set_elas");
      } else {
        elas = {0, 10, 20, 30, 40, 50, 60, 70};
      }
      const SweepReport report = ela_error_sweep(elas, s);
      std::ostringstream os;
      write_sweep_csv(os, report);
      emit(sweep_out, os.str(), out);
      if (sweep_assert) {
        for (const auto& row : report.rows) {
          if (row.pitch_bin) continue;
          check(row.mae < sweep_max_mae, "MAE " + format_double(row.mae) + " at set ELA " +
                                             format_double(row.set_ela) + " >= " + format_double(sweep_max_mae));
        }
      }
      return kExitOk;
    }

    if (*variance) {
      const SynthScenario s = variance_sc.scenario();
      const double set_ela = *variance_set_opt ? variance_set_ela : s.set_ela.value_or(60.0);
      const VarianceReport report = ear_ela_variance(s, set_ela);
      std::ostringstream os;
      write_variance_csv(os, report);
      emit(variance_out, os.str(), out);
      err << "lidkit: var_ela " << format_double(report.var_ela) << ", var_ear " << format_double(report.var_ear)
          << '\n';
      if (variance_assert) check(report.var_ela < report.var_ear, "ELA variance is not below EAR variance");
      return kExitOk;
    }

    if (*fpsr) {
      const SynthScenario s = fps_sc.scenario();
      auto rates = parse_number_list(fps_list);
      if (rates.size() < 2) throw InvalidArgument("--fps-list needs at least two frame rates");
      const FramerateReport report =
          framerate_bias_report(s, fps_sc.blink_distributions(), rates, fps_args.options());
      std::ostringstream os;
      write_framerate_csv(os, report);
      emit(fps_out, os.str(), out);
      if (fps_assert) {
        const auto lo = std::min_element(report.rows.begin(), report.rows.end(),
                                         [](const auto& a, const auto& b) { return a.fps < b.fps; });
        const auto hi = std::max_element(report.rows.begin(), report.rows.end(),
                                         [](const auto& a, const auto& b) { return a.fps < b.fps; });
        check(lo->mean[0] && hi->mean[0] && *hi->mean[0] < *lo->mean[0],
              "closing duration does not shrink with frame rate");
      }
      return kExitOk;
    }
  } catch (const AssertionFailed& e) {
    err << "lidkit: " << e.what() << '\n';
    return kExitAssert;
  } catch (const std::exception& e) {
    err << "lidkit: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace lidkit::cli
