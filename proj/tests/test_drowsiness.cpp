#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>

#include "lidkit/drowsiness.h"
#include "lidkit/error.h"

using namespace lidkit;

namespace {

BlinkFeatures blink(double t1, double d1) {
  BlinkFeatures f;
  f.t1 = t1;
  f.closing_d1 = d1;
  f.closed_d2 = 0.05;
  f.reopening_d3 = 0.2;
  f.amplitude = 0.8;
  return f;
}

EpochFeatureVector vec(std::vector<double> values, Vigilance label, std::string subject = "s") {
  EpochFeatureVector v;
  v.values = std::move(values);
  v.label = label;
  v.subject = std::move(subject);
  return v;
}

// Two Gaussian blobs `gap` standard deviations apart along every axis.
std::vector<EpochFeatureVector> blobs(std::size_t per_class, double gap, std::uint64_t seed,
                                      std::size_t dims = 18, int subjects = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<EpochFeatureVector> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool drowsy = i % 2 == 1;
    std::vector<double> v(dims);
    for (std::size_t d = 0; d < dims; ++d) v[d] = 3.0 * d + g(rng) + (drowsy ? gap : 0.0);
    out.push_back(vec(v, drowsy ? Vigilance::drowsy : Vigilance::alert,
                      "subject" + std::to_string(static_cast<int>(i / 2) % subjects)));
  }
  return out;
}

}  // namespace

TEST_SUITE("drowsiness") {

TEST_CASE("epoch aggregation") {
  const std::vector<BlinkFeatures> one = {blink(1.0, 0.1)};
  auto v = aggregate_epoch(one, 60.0);
  REQUIRE(v.values.size() == 18);
  CHECK(v.blink_count == 1);
  CHECK(v.epoch_end_time == 60.0);
  CHECK(v.values[0] == doctest::Approx(0.1));
  CHECK(v.values[1] == 0.0);
  CHECK(epoch_feature_names()[0] == "mean_closing_d1");
  CHECK(epoch_feature_names()[17] == "std_peropening");

  const std::vector<BlinkFeatures> two = {blink(1.0, 0.1), blink(2.0, 0.3)};
  v = aggregate_epoch(two);
  CHECK(v.values[0] == doctest::Approx(0.2));
  CHECK(v.values[1] == doctest::Approx(std::sqrt(0.02)));
  CHECK(v.values[2] == doctest::Approx(0.05));
  CHECK(v.values[3] == doctest::Approx(0.0));

  CHECK_THROWS_AS(aggregate_epoch(std::span<const BlinkFeatures>{}), InsufficientData);
}

TEST_CASE("rolling epochs look back one window") {
  const std::vector<BlinkFeatures> fs = {blink(0.0, 0.1), blink(30.0, 0.2), blink(61.0, 0.3)};
  const auto e = rolling_epochs(fs, 60.0);
  REQUIRE(e.size() == 3);
  CHECK(e[0].blink_count == 1);
  CHECK(e[1].blink_count == 2);
  CHECK(e[2].blink_count == 2);
  CHECK(e[2].epoch_end_time == 61.0);
  CHECK(e[2].values[0] == doctest::Approx(0.25));
}

TEST_CASE("separable classes are learned") {
  const auto train = blobs(20, 6.0, 1);
  const auto test = blobs(20, 6.0, 2);
  const auto m = DrowsinessModel::fit(train);
  CHECK(m.fitted());
  CHECK(accuracy(m, test) >= 0.95);
}

TEST_CASE("fit preconditions") {
  auto train = blobs(10, 6.0, 3);
  for (auto& v : train) v.values[4] = 7.0;
  const auto m = DrowsinessModel::fit(train);
  CHECK(m.kept_dims().size() == 17);
  CHECK(std::find(m.kept_dims().begin(), m.kept_dims().end(), 4) == m.kept_dims().end());

  const auto few = blobs(2, 6.0, 3);
  CHECK_THROWS_AS(DrowsinessModel::fit(std::span(few).first(4)), InsufficientData);

  auto single = blobs(10, 6.0, 3);
  for (auto& v : single) v.label = Vigilance::alert;
  CHECK_THROWS_AS(DrowsinessModel::fit(single), InsufficientData);

  auto unlabeled = blobs(10, 6.0, 3);
  unlabeled[3].label.reset();
  CHECK_THROWS_AS(DrowsinessModel::fit(unlabeled), InvalidArgument);

  CHECK_THROWS_AS(m.predict(vec({1.0, 2.0}, Vigilance::alert)), InvalidArgument);
  CHECK_THROWS_AS(DrowsinessModel{}.predict(train[0]), InvalidArgument);
}

TEST_CASE("principal directions") {
  const auto train = blobs(30, 1.0, 4, 12);
  const auto m = DrowsinessModel::fit(train);
  const Eigen::MatrixXd& c = m.components();
  REQUIRE(c.rows() == 5);
  const Eigen::MatrixXd gram = c * c.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-9);

  // Standardize independently; the variance left after projecting onto five
  // directions equals the sum of the dropped covariance eigenvalues.
  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd z(n, 12);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index k = 0; k < 12; ++k) z(r, k) = train[static_cast<std::size_t>(r)].values[static_cast<std::size_t>(k)];
  for (Eigen::Index k = 0; k < 12; ++k) {
    const double mu = z.col(k).mean();
    const double sd = std::sqrt((z.col(k).array() - mu).square().sum() / static_cast<double>(n - 1));
    z.col(k) = (z.col(k).array() - mu) / sd;
  }
  const Eigen::MatrixXd scatter = z.transpose() * z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter);
  double dropped = 0.0;
  for (Eigen::Index k = 0; k < 7; ++k) dropped += es.eigenvalues()(k);  // ascending order
  const Eigen::MatrixXd residual = z - (z * c.transpose()) * c;
  CHECK(residual.squaredNorm() == doctest::Approx(dropped).epsilon(1e-9));

  // Training points are the projections of the training vectors.
  for (std::size_t i = 0; i < train.size(); i += 7) {
    const Eigen::VectorXd p = m.project(train[i].values);
    CHECK((p.transpose() - m.train_points().row(static_cast<Eigen::Index>(i))).norm() < 1e-9);
  }
}

TEST_CASE("per-feature affine changes do not change predictions") {
  const auto train = blobs(25, 1.5, 5);
  const auto test = blobs(25, 1.5, 6);
  std::vector<double> scale(18), offset(18);
  for (std::size_t d = 0; d < 18; ++d) {
    scale[d] = (d % 3 == 0 ? -1.0 : 1.0) * (0.5 + 0.25 * static_cast<double>(d));
    offset[d] = 10.0 - static_cast<double>(d);
  }
  auto warp = [&](std::vector<EpochFeatureVector> vs) {
    for (auto& v : vs)
      for (std::size_t d = 0; d < 18; ++d) v.values[d] = scale[d] * v.values[d] + offset[d];
    return vs;
  };
  const auto a = DrowsinessModel::fit(train);
  const auto b = DrowsinessModel::fit(warp(train));
  const auto wt = warp(test);
  for (std::size_t i = 0; i < test.size(); ++i) CHECK(a.predict(test[i]) == b.predict(wt[i]));
}

TEST_CASE("saved models reload identically") {
  const auto train = blobs(25, 1.0, 7);
  const auto test = blobs(25, 1.0, 8);
  FitOptions opt;
  opt.k = 7;
  opt.components = 4;
  const auto m = DrowsinessModel::fit(train, opt);
  std::stringstream ss;
  m.save(ss);
  const std::string text = ss.str();
  const auto back = DrowsinessModel::load(ss);
  CHECK(back.k() == 7);
  CHECK(back.components().rows() == 4);
  std::stringstream again;
  back.save(again);
  CHECK(again.str() == text);
  for (const auto& v : test) CHECK(back.predict(v) == m.predict(v));

  std::istringstream bad("not a model");
  CHECK_THROWS_AS(DrowsinessModel::load(bad), ParseError);
}

TEST_CASE("subject-grouped cross-validation") {
  const auto easy = blobs(50, 8.0, 9, 18, 5);
  const auto cv = cross_validate(easy, 5);
  REQUIRE(cv.fold_accuracy.size() == 5);
  CHECK(cv.mean_accuracy == doctest::Approx(1.0));

  auto shuffled = blobs(100, 0.0, 10, 18, 10);
  std::mt19937_64 rng(11);
  for (auto& v : shuffled) v.label = rng() % 2 ? Vigilance::drowsy : Vigilance::alert;
  const auto chance = cross_validate(shuffled, 5);
  CHECK(std::abs(chance.mean_accuracy - 0.5) <= 0.15);

  const auto three = blobs(20, 8.0, 12, 18, 3);
  CHECK_THROWS_AS(cross_validate(three, 5), InsufficientData);
}

TEST_CASE("binary mode merges the drowsy grades") {
  auto train = blobs(20, 6.0, 13);
  for (std::size_t i = 0; i < train.size(); i += 4) {
    if (*train[i].label == Vigilance::drowsy) train[i].label = Vigilance::low_vigilant;
  }
  for (std::size_t i = 1; i < train.size(); i += 4) train[i].label = Vigilance::low_vigilant;
  FitOptions opt;
  opt.binary = true;
  const auto m = DrowsinessModel::fit(train, opt);
  CHECK(m.binary());
  for (const auto& v : blobs(10, 6.0, 14)) CHECK(m.predict(v) != Vigilance::low_vigilant);
  CHECK(to_binary(Vigilance::low_vigilant) == Vigilance::drowsy);
  CHECK(parse_vigilance("low_vigilant") == Vigilance::low_vigilant);
  CHECK_THROWS_AS(parse_vigilance("sleepy"), ParseError);
}

TEST_CASE("label spans") {
  const std::vector<LabelSpan> spans = {{0.0, 100.0, Vigilance::alert, ""},
                                        {200.0, 300.0, Vigilance::drowsy, "p7"}};
  std::stringstream ss;
  write_labels_csv(ss, spans);
  const auto back = parse_labels_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].label == Vigilance::drowsy);
  CHECK(back[1].subject == "p7");
  CHECK(back[0].end_s == 100.0);

  std::vector<EpochFeatureVector> vs(4);
  vs[0].epoch_end_time = 50.0;
  vs[1].epoch_end_time = 150.0;
  vs[2].epoch_end_time = 200.0;
  vs[3].epoch_end_time = 100.0;
  const auto labeled = apply_labels(vs, back, "anon");
  REQUIRE(labeled.size() == 3);
  CHECK(labeled[0].subject == "anon");
  CHECK(labeled[1].label == Vigilance::drowsy);
  CHECK(labeled[1].subject == "p7");
  CHECK(labeled[2].epoch_end_time == 100.0);

  std::istringstream bad("start_s,end_s,label\n5,1,alert\n");
  CHECK_THROWS_AS(parse_labels_csv(bad), ParseError);
}

}
