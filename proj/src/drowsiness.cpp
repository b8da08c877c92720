#include "lidkit/drowsiness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/SVD>

#include "lidkit/config.h"
#include "lidkit/error.h"
#include "lidkit/io.h"

namespace lidkit {

std::string to_string(Vigilance v) {
  switch (v) {
    case Vigilance::alert: return "alert";
    case Vigilance::low_vigilant: return "low_vigilant";
    case Vigilance::drowsy: return "drowsy";
  }
  return "alert";
}

Vigilance parse_vigilance(const std::string& text) {
  if (text == "alert") return Vigilance::alert;
  if (text == "low_vigilant") return Vigilance::low_vigilant;
  if (text == "drowsy") return Vigilance::drowsy;
  throw ParseError("unknown label '" + text + "' (expected alert, low_vigilant or drowsy)");
}

Vigilance to_binary(Vigilance v) { return v == Vigilance::alert ? v : Vigilance::drowsy; }

std::vector<std::string> epoch_feature_names() {
  std::vector<std::string> names;
  for (auto name : kFeatureNames) {
    names.push_back("mean_" + std::string(name));
    names.push_back("std_" + std::string(name));
  }
  return names;
}

EpochFeatureVector aggregate_epoch(std::span<const BlinkFeatures> features, double epoch_end_time) {
  if (features.empty()) throw InsufficientData("aggregate_epoch: no blinks in epoch");
  EpochFeatureVector out;
  out.epoch_end_time = epoch_end_time;
  out.blink_count = features.size();
  out.values.reserve(2 * kFeatureNames.size());
  for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
    std::vector<double> xs;
    for (const auto& b : features) {
      if (auto v = feature_values(b)[f]) xs.push_back(*v);
    }
    double mean = 0.0, sd = 0.0;
    if (!xs.empty()) {
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
      }
    }
    out.values.push_back(mean);
    out.values.push_back(sd);
  }
  return out;
}

std::vector<EpochFeatureVector> rolling_epochs(std::span<const BlinkFeatures> features,
                                               double window_seconds) {
  std::vector<EpochFeatureVector> out;
  std::size_t first = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double end = features[i].t1;
    while (first < i && features[first].t1 <= end - window_seconds) ++first;
    out.push_back(aggregate_epoch(features.subspan(first, i - first + 1), end));
  }
  return out;
}

namespace {
constexpr double kMinScale = 1e-12;
}

DrowsinessModel DrowsinessModel::fit(std::span<const EpochFeatureVector> train,
                                     const FitOptions& options) {
  if (options.k < 1 || options.components < 1) throw InvalidArgument("fit: k and components must be positive");
  const std::size_t need = std::max<std::size_t>(11, static_cast<std::size_t>(options.k) + 1);
  if (train.size() < need) {
    throw InsufficientData("fit: need at least " + std::to_string(need) + " training vectors, got " +
                           std::to_string(train.size()));
  }
  const std::size_t dims = train.front().values.size();
  std::set<Vigilance> classes;
  for (const auto& v : train) {
    if (!v.label) throw InvalidArgument("fit: training vector without label");
    if (v.values.size() != dims) throw InvalidArgument("fit: inconsistent vector length");
    for (double x : v.values) {
      if (!std::isfinite(x)) throw InvalidArgument("fit: non-finite feature value");
    }
    classes.insert(options.binary ? to_binary(*v.label) : *v.label);
  }
  if (classes.size() < 2) throw InsufficientData("fit: training data has a single class");

  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(dims));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dims; ++c) raw(r, static_cast<Eigen::Index>(c)) = train[static_cast<std::size_t>(r)].values[c];
  }

  DrowsinessModel m;
  m.k_ = options.k;
  m.binary_ = options.binary;
  m.input_dims_ = dims;
  std::vector<double> means, scales;
  for (std::size_t c = 0; c < dims; ++c) {
    const auto col = raw.col(static_cast<Eigen::Index>(c));
    const double mu = col.mean();
    const double sd = std::sqrt((col.array() - mu).square().sum() / static_cast<double>(n - 1));
    if (sd > kMinScale) {
      m.kept_.push_back(c);
      means.push_back(mu);
      scales.push_back(sd);
    }
  }
  if (m.kept_.empty()) throw InsufficientData("fit: every feature column is constant");
  const auto kept = static_cast<Eigen::Index>(m.kept_.size());
  m.mean_ = Eigen::Map<Eigen::VectorXd>(means.data(), kept);
  m.scale_ = Eigen::Map<Eigen::VectorXd>(scales.data(), kept);

  Eigen::MatrixXd z(n, kept);
  for (Eigen::Index c = 0; c < kept; ++c) {
    z.col(c) = (raw.col(static_cast<Eigen::Index>(m.kept_[static_cast<std::size_t>(c)])).array() - m.mean_(c)) / m.scale_(c);
  }
  m.pca_mean_ = z.colwise().mean().transpose();
  const Eigen::MatrixXd centered = z.rowwise() - m.pca_mean_.transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::Index ncomp = std::min<Eigen::Index>({options.components, kept, svd.matrixV().cols()});
  m.components_ = svd.matrixV().leftCols(ncomp).transpose();
  for (Eigen::Index r = 0; r < ncomp; ++r) {
    Eigen::Index at = 0;
    m.components_.row(r).cwiseAbs().maxCoeff(&at);
    if (m.components_(r, at) < 0.0) m.components_.row(r) *= -1.0;
  }
  m.train_points_ = centered * m.components_.transpose();
  for (const auto& v : train) m.train_labels_.push_back(options.binary ? to_binary(*v.label) : *v.label);
  m.fitted_ = true;
  return m;
}

Eigen::VectorXd DrowsinessModel::project(std::span<const double> values) const {
  if (!fitted_) throw InvalidArgument("predict: model is not fitted");
  if (values.size() != input_dims_) {
    throw InvalidArgument("predict: expected " + std::to_string(input_dims_) + " features, got " +
                          std::to_string(values.size()));
  }
  Eigen::VectorXd z(static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t c = 0; c < kept_.size(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    z(i) = (values[kept_[c]] - mean_(i)) / scale_(i) - pca_mean_(i);
  }
  return components_ * z;
}

Vigilance DrowsinessModel::predict(const EpochFeatureVector& vector) const {
  const Eigen::VectorXd p = project(vector.values);
  const auto n = static_cast<std::size_t>(train_points_.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = {(train_points_.row(static_cast<Eigen::Index>(i)).transpose() - p).norm(), i};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

  std::array<int, 3> votes{};
  std::array<double, 3> summed{};
  for (std::size_t j = 0; j < k; ++j) {
    const auto label = static_cast<std::size_t>(train_labels_[dist[j].second]);
    ++votes[label];
    summed[label] += dist[j].first;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < 3; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && votes[c] > 0 && summed[c] < summed[best])) {
      best = c;
    }
  }
  return static_cast<Vigilance>(best);
}

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw ParseError("model file: bad number '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw ParseError("model file: expected '" + word + "', got '" + got + "'");
}

template <typename T>
T read_value(std::istream& in, const std::string& what) {
  T v{};
  if (!(in >> v)) throw ParseError("model file: cannot read " + what);
  return v;
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ParseError("model file: truncated");
  return unhex(token);
}

constexpr const char* kMagic = "lidkit-drowsiness-model";
constexpr int kVersion = 1;

}  // namespace

// Text layout, one field per line, doubles as C99 hex floats:
//   lidkit-drowsiness-model 1
//   k <int>
//   binary <0|1>
//   input_dims <int>
//   kept <m> <index>...
//   mean <m> <x>...          standardization offsets
//   scale <m> <x>...         standardization divisors
//   pca_mean <m> <x>...
//   components <c> <m>       followed by c rows of m values
//   train <n> <c>            followed by n rows: <label> <c values>
void DrowsinessModel::save(std::ostream& out) const {
  if (!fitted_) throw InvalidArgument("save: model is not fitted");
  const auto m = kept_.size();
  out << kMagic << ' ' << kVersion << '\n';
  out << "k " << k_ << '\n';
  out << "binary " << (binary_ ? 1 : 0) << '\n';
  out << "input_dims " << input_dims_ << '\n';
  out << "kept " << m;
  for (auto i : kept_) out << ' ' << i;
  out << '\n';
  auto vec = [&](const char* name, const Eigen::VectorXd& v) {
    out << name << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << hex(v(i));
    out << '\n';
  };
  vec("mean", mean_);
  vec("scale", scale_);
  vec("pca_mean", pca_mean_);
  out << "components " << components_.rows() << ' ' << components_.cols() << '\n';
  for (Eigen::Index r = 0; r < components_.rows(); ++r) {
    for (Eigen::Index c = 0; c < components_.cols(); ++c) out << (c ? " " : "") << hex(components_(r, c));
    out << '\n';
  }
  out << "train " << train_points_.rows() << ' ' << train_points_.cols() << '\n';
  for (Eigen::Index r = 0; r < train_points_.rows(); ++r) {
    out << to_string(train_labels_[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < train_points_.cols(); ++c) out << ' ' << hex(train_points_(r, c));
    out << '\n';
  }
}

DrowsinessModel DrowsinessModel::load(std::istream& in) {
  DrowsinessModel m;
  expect(in, kMagic);
  const int version = read_value<int>(in, "version");
  if (version != kVersion) throw ParseError("model file: unsupported version " + std::to_string(version));
  expect(in, "k");
  m.k_ = read_value<int>(in, "k");
  expect(in, "binary");
  m.binary_ = read_value<int>(in, "binary") != 0;
  expect(in, "input_dims");
  m.input_dims_ = read_value<std::size_t>(in, "input_dims");
  expect(in, "kept");
  const auto kept = read_value<std::size_t>(in, "kept count");
  for (std::size_t i = 0; i < kept; ++i) {
    const auto idx = read_value<std::size_t>(in, "kept index");
    if (idx >= m.input_dims_) throw ParseError("model file: kept index out of range");
    m.kept_.push_back(idx);
  }
  auto vec = [&](const char* name, Eigen::VectorXd& v) {
    expect(in, name);
    const auto len = read_value<std::size_t>(in, name);
    if (len != kept) throw ParseError(std::string("model file: ") + name + " has wrong length");
    v.resize(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_double(in);
  };
  vec("mean", m.mean_);
  vec("scale", m.scale_);
  vec("pca_mean", m.pca_mean_);
  expect(in, "components");
  const auto rows = read_value<Eigen::Index>(in, "component rows");
  const auto cols = read_value<Eigen::Index>(in, "component cols");
  if (cols != static_cast<Eigen::Index>(kept)) throw ParseError("model file: component width mismatch");
  m.components_.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m.components_(r, c) = read_double(in);
  }
  expect(in, "train");
  const auto n = read_value<Eigen::Index>(in, "train rows");
  const auto dims = read_value<Eigen::Index>(in, "train cols");
  if (dims != rows) throw ParseError("model file: training width mismatch");
  m.train_points_.resize(n, dims);
  for (Eigen::Index r = 0; r < n; ++r) {
    m.train_labels_.push_back(parse_vigilance(read_value<std::string>(in, "label")));
    for (Eigen::Index c = 0; c < dims; ++c) m.train_points_(r, c) = read_double(in);
  }
  m.fitted_ = true;
  return m;
}

void DrowsinessModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  save(out);
}

DrowsinessModel DrowsinessModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return load(in);
}

double accuracy(const DrowsinessModel& model, std::span<const EpochFeatureVector> test) {
  if (test.empty()) throw InsufficientData("accuracy: empty test set");
  std::size_t hits = 0;
  for (const auto& v : test) {
    if (!v.label) throw InvalidArgument("accuracy: test vector without label");
    const Vigilance truth = model.binary() ? to_binary(*v.label) : *v.label;
    if (model.predict(v) == truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

CrossValidation cross_validate(std::span<const EpochFeatureVector> dataset, int folds,
                               const FitOptions& options) {
  if (folds < 2) throw InvalidArgument("cross_validate: need at least 2 folds");
  std::set<std::string> subjects;
  for (const auto& v : dataset) subjects.insert(v.subject);
  if (subjects.size() < static_cast<std::size_t>(folds)) {
    throw InsufficientData("cross_validate: " + std::to_string(subjects.size()) + " subjects for " +
                           std::to_string(folds) + " folds");
  }
  std::map<std::string, int> fold_of;
  int next = 0;
  for (const auto& s : subjects) fold_of[s] = next++ % folds;

  CrossValidation cv;
  for (int f = 0; f < folds; ++f) {
    std::vector<EpochFeatureVector> train, test;
    for (const auto& v : dataset) (fold_of[v.subject] == f ? test : train).push_back(v);
    const auto model = DrowsinessModel::fit(train, options);
    cv.fold_accuracy.push_back(accuracy(model, test));
  }
  double sum = 0.0;
  for (double a : cv.fold_accuracy) sum += a;
  cv.mean_accuracy = sum / static_cast<double>(folds);
  return cv;
}

std::vector<LabelSpan> parse_labels_csv(std::istream& in) {
  const CsvTable table = parse_csv(in);
  const auto cs = table.column("start_s");
  const auto ce = table.column("end_s");
  const auto cl = table.column("label");
  const auto subject = table.find_column("subject");
  std::vector<LabelSpan> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      LabelSpan s;
      s.start_s = parse_double(row.at(cs));
      s.end_s = parse_double(row.at(ce));
      s.label = parse_vigilance(row.at(cl));
      if (subject) s.subject = row.at(*subject);
      if (s.end_s < s.start_s) throw ParseError("end_s before start_s");
      out.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), r + 2);
    } catch (const std::out_of_range&) {
      throw ParseError("missing column", r + 2);
    }
  }
  return out;
}

std::vector<LabelSpan> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_labels_csv(in);
}

void write_labels_csv(std::ostream& out, std::span<const LabelSpan> spans) {
  out << "start_s,end_s,label,subject\n";
  for (const auto& s : spans) {
    out << format_double(s.start_s) << ',' << format_double(s.end_s) << ',' << to_string(s.label)
        << ',' << s.subject << '\n';
  }
}

std::vector<EpochFeatureVector> apply_labels(std::span<const EpochFeatureVector> vectors,
                                             std::span<const LabelSpan> spans,
                                             const std::string& default_subject) {
  std::vector<EpochFeatureVector> out;
  for (const auto& v : vectors) {
    const auto it = std::find_if(spans.begin(), spans.end(), [&](const LabelSpan& s) {
      return v.epoch_end_time >= s.start_s && v.epoch_end_time <= s.end_s;
    });
    if (it == spans.end()) continue;
    EpochFeatureVector labeled = v;
    labeled.label = it->label;
    labeled.subject = it->subject.empty() ? default_subject : it->subject;
    out.push_back(std::move(labeled));
  }
  return out;
}

}  // namespace lidkit
