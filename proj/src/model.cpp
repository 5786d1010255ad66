#include "pedwatch/model.hpp"

#include <algorithm>
#include <cmath>

#include "pedwatch/error.hpp"

namespace pedwatch {

namespace {

constexpr std::array<std::string_view, 7> kLabelNames = {
    "person", "car", "bus", "truck", "bicycle", "motorcycle", "traffic_light"};

}  // namespace

std::string_view to_string(Label label) noexcept { return kLabelNames[static_cast<std::size_t>(label)]; }

std::optional<Label> label_from_string(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == text) return static_cast<Label>(i);
  }
  return std::nullopt;
}

std::string_view to_string(RoiKind kind) noexcept { return kind == RoiKind::dwell ? "dwell" : "crossing"; }

std::string_view to_string(EventKind kind) noexcept { return kind == EventKind::dwell ? "dwell" : "crossing"; }

double iou(const BBox& a, const BBox& b) noexcept {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

void validate(const VideoMeta& meta) {
  if (meta.camera_id.empty()) throw ValidationError("camera_id must not be empty");
  if (!(meta.fps > 0) || !std::isfinite(meta.fps)) throw ValidationError("fps must be positive");
  // Timestamps carry millisecond resolution; above 1000 fps consecutive
  // frames would collide.
  if (meta.fps > 1000) throw ValidationError("fps must not exceed 1000");
  if (meta.frame_count < 1) throw ValidationError("frame_count must be at least 1");
  if (meta.width <= 0 || meta.height <= 0) throw ValidationError("width and height must be positive");
  if (meta.stride < 1) throw ValidationError("stride must be at least 1");
}

void validate(const Detection& det, const VideoMeta& meta) {
  if (det.frame < 0) throw ValidationError("frame must be non-negative");
  if (det.frame >= meta.frame_count) {
    throw ValidationError("frame " + std::to_string(det.frame) + " beyond frame_count " +
                          std::to_string(meta.frame_count));
  }
  const BBox& b = det.bbox;
  if (!(std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) && std::isfinite(b.y2))) {
    throw ValidationError("bbox coordinates must be finite");
  }
  if (!(b.x1 < b.x2 && b.y1 < b.y2)) throw ValidationError("bbox requires x1 < x2 and y1 < y2");
  if (b.x1 < 0 || b.y1 < 0 || b.x2 > meta.width || b.y2 > meta.height) {
    throw ValidationError("bbox outside the frame");
  }
  if (!(det.confidence >= 0 && det.confidence <= 1)) throw ValidationError("confidence must lie in [0,1]");
}

std::string sanitize_id(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-';
    out.push_back(ok ? c : '-');
  }
  return out;
}

std::string video_key(const VideoMeta& meta) {
  return sanitize_id(meta.camera_id) + "_" +
         absl::FormatTime("%Y%m%dT%H%M%S", meta.start_ts, absl::FixedTimeZone(meta.utc_offset_s));
}

const RoiGroup* RoiConfig::find(std::string_view name) const noexcept {
  auto it = std::find_if(groups.begin(), groups.end(), [&](const RoiGroup& g) { return g.name == name; });
  return it == groups.end() ? nullptr : &*it;
}

}  // namespace pedwatch
