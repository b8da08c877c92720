#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lidkit/landmarks.h"

namespace lidkit {

struct FittedPlane {
  Vec3 normal = Vec3::UnitZ();
  Vec3 centroid = Vec3::Zero();
  double residual_rms = 0.0;
};

/// Least-squares plane through the columns of `points` (3 x n, n >= 3).
/// The normal is the left singular vector of the centered matrix with the
/// smallest singular value; its sign is whatever the SVD produced, so callers
/// that care about orientation go through orient_normal.
FittedPlane fit_plane(const Eigen::Ref<const Eigen::Matrix3Xd>& points);

/// Flips the normal so that sum_i n . (a_{i+1} x a_i) >= 0 over the ordered
/// centered points. The result does not depend on the input normal's sign.
FittedPlane orient_normal(const FittedPlane& plane,
                          const Eigen::Ref<const Eigen::Matrix3Xd>& centered_points);

FittedPlane fit_oriented_plane(const Eigen::Ref<const Eigen::Matrix3Xd>& points);

/// Angle between the oriented upper and lower lid planes, degrees in [0, 180].
double eyelid_angle(const Eigen::Ref<const Eigen::Matrix3Xd>& upper,
                    const Eigen::Ref<const Eigen::Matrix3Xd>& lower);

struct VisibilityWeights {
  double left;
  double right;
};

// sigmoid(-4 beta) for the left eye, sigmoid(4 beta) for the right eye.
// Positive yaw turns the face so the right eye faces the camera.
VisibilityWeights visibility_weights(double yaw);

double combine_ela(double left_deg, double right_deg, double yaw);

/// Yaw-weighted combination tolerating one missing eye; throws
/// InsufficientData when both are missing.
double combine_ela(const std::optional<double>& left_deg, const std::optional<double>& right_deg,
                   double yaw);

/// Eye aspect ratio (|p2-p6| + |p3-p5|) / (2 |p1-p4|).
double ear(std::span<const Vec2, 6> eye);

struct ElaSample {
  double timestamp = 0.0;
  std::optional<double> ela_left;
  std::optional<double> ela_right;
  std::optional<double> ela_combined;  // empty when the frame had no usable eye
  double yaw = 0.0;
};

/// Per-eye and combined ELA for one normalized frame. Eyes whose lid
/// geometry is degenerate are reported absent.
ElaSample compute_ela_sample(const LandmarkFrame& frame, const EyelidIndexConfig& cfg);

/// Runs normalize -> select -> ELA over a raw stream. Undetected frames yield
/// samples with no values so downstream gap handling can see them.
std::vector<ElaSample> compute_ela_stream(std::span<const RawLandmarkFrame> frames,
                                          const EyelidIndexConfig& cfg,
                                          const NormalizeOptions& options = {});

// CSV columns: timestamp,ela_left,ela_right,ela_combined,yaw (empty = absent).
void write_ela_csv(std::ostream& out, std::span<const ElaSample> samples);
std::vector<ElaSample> parse_ela_csv(std::istream& in);
std::vector<ElaSample> read_ela_csv(const std::filesystem::path& path);

}  // namespace lidkit
