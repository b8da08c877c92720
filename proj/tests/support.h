#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace testing {

// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix, written out
// by hand so the plane-fit checks do not lean on the library SVD they test.
struct SymEigen3 {
  std::array<double, 3> values{};
  std::array<std::array<double, 3>, 3> vectors{};  // vectors[k] pairs with values[k]
};

inline SymEigen3 jacobi_eigen(std::array<std::array<double, 3>, 3> a) {
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  SymEigen3 out;
  for (int k = 0; k < 3; ++k) {
    out.values[k] = a[k][k];
    for (int r = 0; r < 3; ++r) out.vectors[k][r] = v[r][k];
  }
  return out;
}

// Smallest-eigenvalue eigenvector of the scatter matrix of the points.
inline Eigen::Vector3d oracle_normal(const Eigen::Matrix3Xd& pts) {
  double c[3] = {0, 0, 0};
  const auto n = pts.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r) c[r] += pts(r, i) / static_cast<double>(n);
  std::array<std::array<double, 3>, 3> s{};
  for (Eigen::Index i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) s[r][k] += (pts(r, i) - c[r]) * (pts(k, i) - c[k]);
  const auto e = jacobi_eigen(s);
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (e.values[k] < e.values[best]) best = k;
  return {e.vectors[best][0], e.vectors[best][1], e.vectors[best][2]};
}

// Root-mean-square distance of the points to the plane through their
// centroid with the given unit normal.
inline double plane_rms(const Eigen::Matrix3Xd& pts, const Eigen::Vector3d& normal) {
  const Eigen::Vector3d c = pts.rowwise().mean();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const double d = (pts.col(i) - c).dot(normal);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pts.cols()));
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// Seven points along an arc from `a` to `b` bulging along `dir`.
inline Eigen::Matrix3Xd lid_arc(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                const Eigen::Vector3d& dir, double height) {
  Eigen::Matrix3Xd out(3, 7);
  for (int k = 0; k < 7; ++k) {
    const double f = (k + 1) / 8.0;
    out.col(k) = a + f * (b - a) + height * std::sin(M_PI * f) * dir;
  }
  return out;
}

inline std::string data_path(const std::string& name) { return std::string(LIDKIT_DATA_DIR) + "/" + name; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lidkit_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
