#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lidkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;

// One frame exactly as the landmark detector reported it. x and y are
// normalized to image width and height; z is the detector's raw depth.
struct RawLandmarkFrame {
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  bool detected = false;
  std::vector<Vec3> landmarks;
  Mat4 transform = Mat4::Identity();  // row-major on the wire: T[r][c] = transform(r, c)
  int image_width = 0;
  int image_height = 0;
};

// Landmarks in a common metric-ish frame: y scaled into width units, z
// rescaled by the depth heuristic. yaw is rotation about the vertical axis.
struct LandmarkFrame {
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  bool detected = false;
  std::vector<Vec3> landmarks;
  Mat4 transform = Mat4::Identity();
  int image_width = 0;
  int image_height = 0;
  double yaw = 0.0;
};

enum class StreamFormat { jsonl, csv };

StreamFormat parse_stream_format(const std::string& name);

/// Parses a landmark stream. Undetected frames are kept with detected=false
/// and no landmarks. Throws ParseError with the offending line number.
std::vector<RawLandmarkFrame> parse_landmark_stream(std::istream& source, StreamFormat format);
std::vector<RawLandmarkFrame> read_landmark_stream(const std::filesystem::path& path,
                                                   StreamFormat format);

void write_landmark_stream(std::ostream& out, std::span<const RawLandmarkFrame> frames,
                           StreamFormat format);

struct NormalizeOptions {
  double z_scale = 1.7;
};

LandmarkFrame normalize_frame(const RawLandmarkFrame& frame, const NormalizeOptions& options = {});

// Yaw of the rotation block of `transform`, after projecting it onto the
// nearest proper rotation: atan2(-R20, hypot(R21, R22)).
double extract_yaw(const Mat4& transform);

double detection_ratio(std::span<const RawLandmarkFrame> frames);

using LidIndices = std::array<int, 7>;
using EarIndices = std::array<int, 6>;

// Landmark indices per eye. Lids are ordered inner corner -> outer corner.
// EAR points follow the usual p1..p6 layout: corner, two upper, corner, two lower.
struct EyeIndices {
  LidIndices upper{};
  LidIndices lower{};
  EarIndices ear{};
};

struct EyelidIndexConfig {
  EyeIndices left;
  EyeIndices right;

  /// MediaPipe Face Mesh eye-contour indices (478-landmark topology).
  static EyelidIndexConfig mediapipe_default();
  static EyelidIndexConfig parse(const std::string& text);
  static EyelidIndexConfig load(const std::filesystem::path& path);

  void validate(std::size_t landmark_count) const;
  int max_index() const;
};

using LidPoints = Eigen::Matrix<double, 3, 7>;

struct EyelidPoints {
  LidPoints left_upper;
  LidPoints left_lower;
  LidPoints right_upper;
  LidPoints right_lower;
};

enum class Eye { left, right };

EyelidPoints select_eyelids(const LandmarkFrame& frame, const EyelidIndexConfig& cfg);

// The six EAR points projected to the image plane (x, normalized y).
std::array<Vec2, 6> select_ear_points(const LandmarkFrame& frame, const EyelidIndexConfig& cfg,
                                      Eye eye);

}  // namespace lidkit
