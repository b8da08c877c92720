#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lidkit/features.h"

namespace lidkit {

enum class Vigilance { alert = 0, low_vigilant = 1, drowsy = 2 };

std::string to_string(Vigilance v);
Vigilance parse_vigilance(const std::string& text);
/// Two-class view: low_vigilant and drowsy both map to drowsy.
Vigilance to_binary(Vigilance v);

// Mean and sample standard deviation of every blink feature over one
// analysis window, interleaved: mean_f0, std_f0, mean_f1, std_f1, ...
struct EpochFeatureVector {
  double epoch_end_time = 0.0;
  std::vector<double> values;
  std::size_t blink_count = 0;
  std::optional<Vigilance> label;
  std::string subject;
};

std::vector<std::string> epoch_feature_names();

EpochFeatureVector aggregate_epoch(std::span<const BlinkFeatures> features,
                                   double epoch_end_time = 0.0);

/// One vector per blink, aggregating the blinks whose t1 falls in the
/// trailing `window_seconds` up to and including that blink.
std::vector<EpochFeatureVector> rolling_epochs(std::span<const BlinkFeatures> features,
                                               double window_seconds = 60.0);

struct FitOptions {
  int k = 10;
  int components = 5;
  bool binary = false;
};

/// Standardize -> PCA -> kNN. Immutable once fitted.
class DrowsinessModel {
 public:
  static DrowsinessModel fit(std::span<const EpochFeatureVector> train, const FitOptions& options = {});

  Vigilance predict(const EpochFeatureVector& vector) const;
  Eigen::VectorXd project(std::span<const double> values) const;

  bool fitted() const { return fitted_; }
  int k() const { return k_; }
  bool binary() const { return binary_; }
  std::size_t input_dims() const { return input_dims_; }
  const std::vector<std::size_t>& kept_dims() const { return kept_; }
  const Eigen::MatrixXd& components() const { return components_; }
  const Eigen::MatrixXd& train_points() const { return train_points_; }
  const std::vector<Vigilance>& train_labels() const { return train_labels_; }

  void save(std::ostream& out) const;
  static DrowsinessModel load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static DrowsinessModel load(const std::filesystem::path& path);

 private:
  bool fitted_ = false;
  int k_ = 10;
  bool binary_ = false;
  std::size_t input_dims_ = 0;
  std::vector<std::size_t> kept_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  Eigen::VectorXd pca_mean_;
  Eigen::MatrixXd components_;    // rows are orthonormal principal directions
  Eigen::MatrixXd train_points_;  // one projected training vector per row
  std::vector<Vigilance> train_labels_;
};

double accuracy(const DrowsinessModel& model, std::span<const EpochFeatureVector> test);

struct CrossValidation {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

/// Subject-grouped k-fold: subjects (sorted by name) are dealt round-robin
/// into folds, so no subject appears in both train and test.
CrossValidation cross_validate(std::span<const EpochFeatureVector> dataset, int folds = 5,
                               const FitOptions& options = {});

// Recording-level labels: columns start_s,end_s,label,subject (subject may
// be empty). A vector takes the label of the span containing its
// epoch_end_time; spans are closed intervals.
struct LabelSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  Vigilance label = Vigilance::alert;
  std::string subject;
};

std::vector<LabelSpan> parse_labels_csv(std::istream& in);
std::vector<LabelSpan> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(std::ostream& out, std::span<const LabelSpan> spans);

/// Labels the vectors that fall inside a span and drops the rest.
/// `default_subject` is used where the span has none.
std::vector<EpochFeatureVector> apply_labels(std::span<const EpochFeatureVector> vectors,
                                             std::span<const LabelSpan> spans,
                                             const std::string& default_subject);

}  // namespace lidkit
