#include "lidkit/ela.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "lidkit/config.h"
#include "lidkit/error.h"
#include "lidkit/io.h"

namespace lidkit {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Second singular value below this fraction of the first means the points
// span at most a line.
constexpr double kRankTolerance = 1e-10;
}  // namespace

FittedPlane fit_plane(const Eigen::Ref<const Eigen::Matrix3Xd>& points) {
  const auto n = points.cols();
  if (n < 3) throw DegenerateGeometry("fit_plane: need at least 3 points");
  if (!points.allFinite()) throw DegenerateGeometry("fit_plane: non-finite coordinates");

  FittedPlane plane;
  plane.centroid = points.rowwise().mean();
  const Eigen::Matrix3Xd centered = points.colwise() - plane.centroid;

  Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered, Eigen::ComputeFullU);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= kRankTolerance * sv(0)) {
    throw DegenerateGeometry("fit_plane: points are collinear or coincident");
  }
  plane.normal = svd.matrixU().col(2).normalized();
  plane.residual_rms = sv(2) / std::sqrt(static_cast<double>(n));
  return plane;
}

FittedPlane orient_normal(const FittedPlane& plane,
                          const Eigen::Ref<const Eigen::Matrix3Xd>& centered_points) {
  Vec3 swept = Vec3::Zero();
  for (Eigen::Index i = 0; i + 1 < centered_points.cols(); ++i) {
    swept += Vec3(centered_points.col(i + 1)).cross(Vec3(centered_points.col(i)));
  }
  FittedPlane out = plane;
  double s = plane.normal.dot(swept);
  if (s == 0.0) {
    // Symmetric traversal gives no hint; fall back to a fixed sign rule.
    Eigen::Index k = 0;
    plane.normal.cwiseAbs().maxCoeff(&k);
    s = plane.normal(k);
  }
  if (s < 0.0) out.normal = -plane.normal;
  return out;
}

FittedPlane fit_oriented_plane(const Eigen::Ref<const Eigen::Matrix3Xd>& points) {
  const FittedPlane plane = fit_plane(points);
  const Eigen::Matrix3Xd centered = points.colwise() - plane.centroid;
  return orient_normal(plane, centered);
}

double eyelid_angle(const Eigen::Ref<const Eigen::Matrix3Xd>& upper,
                    const Eigen::Ref<const Eigen::Matrix3Xd>& lower) {
  const Vec3 nu = fit_oriented_plane(upper).normal;
  const Vec3 nl = fit_oriented_plane(lower).normal;
  // atan2 of (|cross|, dot) equals arccos(dot) for unit vectors but stays
  // accurate near 0 and 180 degrees.
  const double dot = std::clamp(nl.dot(nu), -1.0, 1.0);
  return std::atan2(nl.cross(nu).norm(), dot) * kRadToDeg;
}

VisibilityWeights visibility_weights(double yaw) {
  // The smaller weight is computed directly and the larger as its
  // complement, which makes left + right == 1 exactly in binary64.
  const double small = 1.0 / (1.0 + std::exp(4.0 * std::abs(yaw)));
  const double large = 1.0 - small;
  return yaw >= 0.0 ? VisibilityWeights{small, large} : VisibilityWeights{large, small};
}

double combine_ela(double left_deg, double right_deg, double yaw) {
  const auto w = visibility_weights(yaw);
  return w.left * left_deg + w.right * right_deg;
}

double combine_ela(const std::optional<double>& left_deg, const std::optional<double>& right_deg,
                   double yaw) {
  if (left_deg && right_deg) return combine_ela(*left_deg, *right_deg, yaw);
  if (left_deg) return *left_deg;
  if (right_deg) return *right_deg;
  throw InsufficientData("combine_ela: both eyes absent");
}

double ear(std::span<const Vec2, 6> p) {
  for (const auto& v : p) {
    if (!v.allFinite()) throw InvalidArgument("ear: non-finite point");
  }
  const double horizontal = (p[0] - p[3]).norm();
  if (!(horizontal > 0.0)) throw DegenerateGeometry("ear: zero horizontal eye extent");
  return ((p[1] - p[5]).norm() + (p[2] - p[4]).norm()) / (2.0 * horizontal);
}

ElaSample compute_ela_sample(const LandmarkFrame& frame, const EyelidIndexConfig& cfg) {
  ElaSample sample;
  sample.timestamp = frame.timestamp;
  if (!frame.detected) return sample;
  sample.yaw = frame.yaw;
  const EyelidPoints lids = select_eyelids(frame, cfg);
  try {
    sample.ela_left = eyelid_angle(lids.left_upper, lids.left_lower);
  } catch (const DegenerateGeometry&) {
  }
  try {
    sample.ela_right = eyelid_angle(lids.right_upper, lids.right_lower);
  } catch (const DegenerateGeometry&) {
  }
  if (sample.ela_left || sample.ela_right) {
    sample.ela_combined = combine_ela(sample.ela_left, sample.ela_right, sample.yaw);
  }
  return sample;
}

std::vector<ElaSample> compute_ela_stream(std::span<const RawLandmarkFrame> frames,
                                          const EyelidIndexConfig& cfg,
                                          const NormalizeOptions& options) {
  std::vector<ElaSample> out;
  out.reserve(frames.size());
  bool validated = false;
  for (const auto& raw : frames) {
    if (!raw.detected) {
      ElaSample empty;
      empty.timestamp = raw.timestamp;
      out.push_back(empty);
      continue;
    }
    if (!validated) {
      cfg.validate(raw.landmarks.size());
      validated = true;
    }
    out.push_back(compute_ela_sample(normalize_frame(raw, options), cfg));
  }
  return out;
}

void write_ela_csv(std::ostream& out, std::span<const ElaSample> samples) {
  out << "timestamp,ela_left,ela_right,ela_combined,yaw\n";
  for (const auto& s : samples) {
    out << format_double(s.timestamp) << ',' << format_optional(s.ela_left) << ','
        << format_optional(s.ela_right) << ',' << format_optional(s.ela_combined) << ','
        << format_double(s.yaw) << '\n';
  }
}

std::vector<ElaSample> parse_ela_csv(std::istream& in) {
  const CsvTable table = parse_csv(in);
  const auto ct = table.column("timestamp");
  const auto cl = table.column("ela_left");
  const auto cr = table.column("ela_right");
  const auto cc = table.column("ela_combined");
  const auto cy = table.column("yaw");
  auto opt = [](const std::string& field) -> std::optional<double> {
    if (field.empty()) return std::nullopt;
    return parse_double(field);
  };
  std::vector<ElaSample> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      ElaSample s;
      s.timestamp = parse_double(row[ct]);
      s.ela_left = opt(row[cl]);
      s.ela_right = opt(row[cr]);
      s.ela_combined = opt(row[cc]);
      s.yaw = parse_double(row[cy]);
      if (!out.empty() && !(s.timestamp > out.back().timestamp)) {
        throw ParseError("timestamps must be strictly increasing");
      }
      out.push_back(s);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), r + 2);
    }
  }
  return out;
}

std::vector<ElaSample> read_ela_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_ela_csv(in);
}

}  // namespace lidkit
