#include "lidkit/landmarks.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <json.hpp>

#include "lidkit/config.h"
#include "lidkit/error.h"
#include "lidkit/io.h"

namespace lidkit {

using nlohmann::json;

StreamFormat parse_stream_format(const std::string& name) {
  if (name == "jsonl") return StreamFormat::jsonl;
  if (name == "csv") return StreamFormat::csv;
  throw InvalidArgument("unknown landmark stream format '" + name + "' (expected jsonl or csv)");
}

namespace {

void check_frame(RawLandmarkFrame& frame, std::size_t line) {
  if (!frame.detected) return;
  if (frame.landmarks.empty()) throw ParseError("detected frame has no landmarks", line);
  for (const auto& p : frame.landmarks) {
    if (!p.allFinite()) throw ParseError("non-finite landmark coordinate", line);
  }
}

RawLandmarkFrame frame_from_json(const json& rec, std::size_t line) {
  auto require = [&](const char* key) -> const json& {
    auto it = rec.find(key);
    if (it == rec.end()) throw ParseError(std::string("missing field '") + key + "'", line);
    return *it;
  };
  RawLandmarkFrame frame;
  try {
    frame.frame_index = require("frame").get<std::size_t>();
    frame.timestamp = require("t").get<double>();
    frame.detected = require("detected").get<bool>();
    frame.image_width = require("w").get<int>();
    frame.image_height = require("h").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field type: ") + e.what(), line);
  }
  if (auto it = rec.find("T"); it != rec.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 16) {
      throw ParseError("field 'T' must hold 16 numbers", line);
    }
    for (int i = 0; i < 16; ++i) {
      if (!(*it)[i].is_number()) throw ParseError("field 'T' must hold 16 numbers", line);
      frame.transform(i / 4, i % 4) = (*it)[i].get<double>();
    }
  } else if (frame.detected) {
    throw ParseError("missing field 'T'", line);
  }
  if (auto it = rec.find("lm"); it != rec.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("field 'lm' must be an array", line);
    if (it->size() % 3 != 0) {
      throw ParseError("field 'lm' must hold x,y,z triples (length " + std::to_string(it->size()) +
                           " is not a multiple of 3)",
                       line);
    }
    frame.landmarks.reserve(it->size() / 3);
    for (std::size_t i = 0; i < it->size(); i += 3) {
      if (!(*it)[i].is_number() || !(*it)[i + 1].is_number() || !(*it)[i + 2].is_number()) {
        throw ParseError("field 'lm' must hold numbers", line);
      }
      frame.landmarks.emplace_back((*it)[i].get<double>(), (*it)[i + 1].get<double>(),
                                   (*it)[i + 2].get<double>());
    }
  } else if (frame.detected) {
    throw ParseError("missing field 'lm'", line);
  }
  if (!frame.detected) frame.landmarks.clear();
  check_frame(frame, line);
  return frame;
}

std::vector<std::pair<RawLandmarkFrame, std::size_t>> parse_jsonl(std::istream& in) {
  std::vector<std::pair<RawLandmarkFrame, std::size_t>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!rec.is_object()) throw ParseError("record is not an object", lineno);
    out.emplace_back(frame_from_json(rec, lineno), lineno);
  }
  return out;
}

// Wide CSV: frame,t,detected,w,h,T00..T33,x0,y0,z0,x1,y1,z1,...
std::vector<std::pair<RawLandmarkFrame, std::size_t>> parse_csv_stream(std::istream& in) {
  std::vector<std::pair<RawLandmarkFrame, std::size_t>> out;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::size_t landmark_count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (header.empty()) {
      header = fields;
      const std::vector<std::string> fixed = {"frame", "t", "detected", "w", "h"};
      if (header.size() < fixed.size() + 16) throw ParseError("header too short", lineno);
      for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (header[i] != fixed[i]) throw ParseError("expected column '" + fixed[i] + "'", lineno);
      }
      for (int i = 0; i < 16; ++i) {
        const std::string expect = "T" + std::to_string(i / 4) + std::to_string(i % 4);
        if (header[5 + i] != expect) throw ParseError("expected column '" + expect + "'", lineno);
      }
      const std::size_t rest = header.size() - 21;
      if (rest % 3 != 0) throw ParseError("landmark columns must come in x,y,z triples", lineno);
      landmark_count = rest / 3;
      for (std::size_t k = 0; k < landmark_count; ++k) {
        const char* axes = "xyz";
        for (int a = 0; a < 3; ++a) {
          const std::string expect = std::string(1, axes[a]) + std::to_string(k);
          if (header[21 + 3 * k + a] != expect) {
            throw ParseError("expected column '" + expect + "'", lineno);
          }
        }
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    }
    RawLandmarkFrame frame;
    try {
      frame.frame_index = static_cast<std::size_t>(parse_long(fields[0]));
      frame.timestamp = parse_double(fields[1]);
      const std::string& det = fields[2];
      if (det == "1" || det == "true") {
        frame.detected = true;
      } else if (det == "0" || det == "false") {
        frame.detected = false;
      } else {
        throw ParseError("field 'detected' must be 0/1/true/false");
      }
      frame.image_width = static_cast<int>(parse_long(fields[3]));
      frame.image_height = static_cast<int>(parse_long(fields[4]));
      if (frame.detected) {
        for (int i = 0; i < 16; ++i) frame.transform(i / 4, i % 4) = parse_double(fields[5 + i]);
        frame.landmarks.reserve(landmark_count);
        for (std::size_t k = 0; k < landmark_count; ++k) {
          frame.landmarks.emplace_back(parse_double(fields[21 + 3 * k]),
                                       parse_double(fields[22 + 3 * k]),
                                       parse_double(fields[23 + 3 * k]));
        }
      }
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    check_frame(frame, lineno);
    out.emplace_back(std::move(frame), lineno);
  }
  return out;
}

}  // namespace

std::vector<RawLandmarkFrame> parse_landmark_stream(std::istream& source, StreamFormat format) {
  auto parsed = format == StreamFormat::jsonl ? parse_jsonl(source) : parse_csv_stream(source);
  std::vector<RawLandmarkFrame> frames;
  frames.reserve(parsed.size());
  std::size_t landmark_count = 0;
  for (auto& [frame, line] : parsed) {
    if (!frames.empty() && !(frame.timestamp > frames.back().timestamp)) {
      throw ParseError("timestamps must be strictly increasing", line);
    }
    if (frame.detected) {
      if (landmark_count == 0) {
        landmark_count = frame.landmarks.size();
      } else if (frame.landmarks.size() != landmark_count) {
        throw ParseError("inconsistent landmark count: expected " + std::to_string(landmark_count) +
                             ", got " + std::to_string(frame.landmarks.size()),
                         line);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<RawLandmarkFrame> read_landmark_stream(const std::filesystem::path& path,
                                                   StreamFormat format) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_landmark_stream(in, format);
}

void write_landmark_stream(std::ostream& out, std::span<const RawLandmarkFrame> frames,
                           StreamFormat format) {
  if (format == StreamFormat::jsonl) {
    for (const auto& f : frames) {
      nlohmann::ordered_json rec;
      rec["frame"] = f.frame_index;
      rec["t"] = f.timestamp;
      rec["detected"] = f.detected;
      rec["w"] = f.image_width;
      rec["h"] = f.image_height;
      if (f.detected) {
        auto& t = rec["T"] = nlohmann::ordered_json::array();
        for (int i = 0; i < 16; ++i) t.push_back(f.transform(i / 4, i % 4));
        auto& lm = rec["lm"] = nlohmann::ordered_json::array();
        for (const auto& p : f.landmarks) {
          lm.push_back(p.x());
          lm.push_back(p.y());
          lm.push_back(p.z());
        }
      }
      out << rec.dump() << '\n';
    }
    return;
  }
  std::size_t count = 0;
  for (const auto& f : frames) {
    if (f.detected) {
      count = f.landmarks.size();
      break;
    }
  }
  out << "frame,t,detected,w,h";
  for (int i = 0; i < 16; ++i) out << ",T" << i / 4 << i % 4;
  for (std::size_t k = 0; k < count; ++k) out << ",x" << k << ",y" << k << ",z" << k;
  out << '\n';
  for (const auto& f : frames) {
    out << f.frame_index << ',' << format_double(f.timestamp) << ',' << (f.detected ? 1 : 0) << ','
        << f.image_width << ',' << f.image_height;
    for (int i = 0; i < 16; ++i) out << ',' << (f.detected ? format_double(f.transform(i / 4, i % 4)) : "");
    for (std::size_t k = 0; k < count; ++k) {
      for (int a = 0; a < 3; ++a) {
        out << ',' << (f.detected ? format_double(f.landmarks[k][a]) : "");
      }
    }
    out << '\n';
  }
}

double extract_yaw(const Mat4& transform) {
  const Eigen::Matrix3d block = transform.topLeftCorner<3, 3>();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(block, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rot = svd.matrixU() * svd.matrixV().transpose();
  if (rot.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    rot = u * svd.matrixV().transpose();
  }
  return std::atan2(-rot(2, 0), std::hypot(rot(2, 1), rot(2, 2)));
}

LandmarkFrame normalize_frame(const RawLandmarkFrame& frame, const NormalizeOptions& options) {
  if (!frame.detected) throw InvalidArgument("normalize_frame: frame has no detection");
  if (frame.image_width <= 0 || frame.image_height <= 0) {
    throw InvalidArgument("normalize_frame: image dimensions must be positive");
  }
  if (!frame.transform.allFinite()) {
    throw InvalidArgument("normalize_frame: transform has non-finite entries");
  }
  LandmarkFrame out;
  out.frame_index = frame.frame_index;
  out.timestamp = frame.timestamp;
  out.detected = true;
  out.transform = frame.transform;
  out.image_width = frame.image_width;
  out.image_height = frame.image_height;
  const double aspect = static_cast<double>(frame.image_height) / frame.image_width;
  const double depth = options.z_scale * frame.transform(2, 2);
  out.landmarks.reserve(frame.landmarks.size());
  for (const auto& p : frame.landmarks) {
    out.landmarks.emplace_back(p.x(), p.y() * aspect, p.z() * depth);
  }
  out.yaw = extract_yaw(frame.transform);
  return out;
}

double detection_ratio(std::span<const RawLandmarkFrame> frames) {
  if (frames.empty()) throw InsufficientData("detection_ratio: empty frame sequence");
  const auto hits = std::count_if(frames.begin(), frames.end(),
                                  [](const RawLandmarkFrame& f) { return f.detected; });
  return static_cast<double>(hits) / static_cast<double>(frames.size());
}

EyelidIndexConfig EyelidIndexConfig::mediapipe_default() {
  EyelidIndexConfig cfg;
  // Subject's left eye: inner canthus 362, outer canthus 263.
  cfg.left.upper = {398, 384, 385, 386, 387, 388, 466};
  cfg.left.lower = {382, 381, 380, 374, 373, 390, 249};
  cfg.left.ear = {362, 385, 387, 263, 373, 380};
  // Subject's right eye: inner canthus 133, outer canthus 33.
  cfg.right.upper = {173, 157, 158, 159, 160, 161, 246};
  cfg.right.lower = {155, 154, 153, 145, 144, 163, 7};
  cfg.right.ear = {33, 160, 158, 133, 153, 144};
  return cfg;
}

namespace {
template <std::size_t N>
std::array<int, N> read_indices(const KeyValueConfig& kv, const std::string& key) {
  const auto items = kv.list(key);
  if (items.size() != N) {
    throw ParseError("config key '" + key + "' needs " + std::to_string(N) + " indices, got " +
                     std::to_string(items.size()));
  }
  std::array<int, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<int>(parse_long(items[i]));
  return out;
}

template <std::size_t N>
void check_unique(const std::array<int, N>& idx, const std::string& what) {
  std::set<int> seen(idx.begin(), idx.end());
  if (seen.size() != N) throw InvalidArgument("eyelid config: repeated index in " + what);
}
}  // namespace

EyelidIndexConfig EyelidIndexConfig::parse(const std::string& text) {
  const auto kv = KeyValueConfig::parse(text);
  EyelidIndexConfig cfg = mediapipe_default();
  cfg.left.upper = read_indices<7>(kv, "left.upper");
  cfg.left.lower = read_indices<7>(kv, "left.lower");
  cfg.right.upper = read_indices<7>(kv, "right.upper");
  cfg.right.lower = read_indices<7>(kv, "right.lower");
  if (kv.has("left.ear")) cfg.left.ear = read_indices<6>(kv, "left.ear");
  if (kv.has("right.ear")) cfg.right.ear = read_indices<6>(kv, "right.ear");
  for (const auto* eye : {&cfg.left, &cfg.right}) {
    check_unique(eye->upper, "upper lid");
    check_unique(eye->lower, "lower lid");
    check_unique(eye->ear, "EAR points");
  }
  return cfg;
}

EyelidIndexConfig EyelidIndexConfig::load(const std::filesystem::path& path) {
  return parse(read_text(path));
}

int EyelidIndexConfig::max_index() const {
  int m = -1;
  for (const auto* eye : {&left, &right}) {
    for (int i : eye->upper) m = std::max(m, i);
    for (int i : eye->lower) m = std::max(m, i);
    for (int i : eye->ear) m = std::max(m, i);
  }
  return m;
}

void EyelidIndexConfig::validate(std::size_t landmark_count) const {
  for (const auto* eye : {&left, &right}) {
    for (const auto* lid : {&eye->upper, &eye->lower}) {
      check_unique(*lid, "lid");
      for (int i : *lid) {
        if (i < 0 || static_cast<std::size_t>(i) >= landmark_count) {
          throw InvalidArgument("eyelid index " + std::to_string(i) + " out of range for " +
                                std::to_string(landmark_count) + " landmarks");
        }
      }
    }
  }
}

namespace {
LidPoints gather(const std::vector<Vec3>& lm, const LidIndices& idx) {
  LidPoints out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= lm.size()) {
      throw InvalidArgument("eyelid index " + std::to_string(idx[k]) + " out of range for " +
                            std::to_string(lm.size()) + " landmarks");
    }
    out.col(static_cast<Eigen::Index>(k)) = lm[static_cast<std::size_t>(idx[k])];
  }
  return out;
}
}  // namespace

EyelidPoints select_eyelids(const LandmarkFrame& frame, const EyelidIndexConfig& cfg) {
  if (!frame.detected) throw InvalidArgument("select_eyelids: frame has no detection");
  return {gather(frame.landmarks, cfg.left.upper), gather(frame.landmarks, cfg.left.lower),
          gather(frame.landmarks, cfg.right.upper), gather(frame.landmarks, cfg.right.lower)};
}

std::array<Vec2, 6> select_ear_points(const LandmarkFrame& frame, const EyelidIndexConfig& cfg,
                                      Eye eye) {
  const auto& idx = eye == Eye::left ? cfg.left.ear : cfg.right.ear;
  std::array<Vec2, 6> out;
  for (std::size_t k = 0; k < 6; ++k) {
    if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= frame.landmarks.size()) {
      throw InvalidArgument("EAR index " + std::to_string(idx[k]) + " out of range");
    }
    const auto& p = frame.landmarks[static_cast<std::size_t>(idx[k])];
    out[k] = Vec2(p.x(), p.y());
  }
  return out;
}

}  // namespace lidkit
