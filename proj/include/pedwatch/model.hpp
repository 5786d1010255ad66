#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

namespace pedwatch {

using FrameIndex = std::int64_t;
using Timestamp = absl::Time;

/// The seven object categories the detector reports.
enum class Label : std::uint8_t { person, car, bus, truck, bicycle, motorcycle, traffic_light };

std::string_view to_string(Label label) noexcept;
std::optional<Label> label_from_string(std::string_view text) noexcept;

struct Point {
  double x = 0;
  double y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Pixel-space box, x1 < x2 and y1 < y2.
struct BBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b) noexcept;

struct Detection {
  FrameIndex frame = 0;
  Label label = Label::person;
  BBox bbox;
  double confidence = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct VideoMeta {
  std::string camera_id;
  Timestamp start_ts = absl::UnixEpoch();
  /// UTC offset of `start_ts` as written in the source document, used to
  /// serialize it back unchanged and as the default reporting zone.
  int utc_offset_s = 0;
  double fps = 0;
  std::int64_t frame_count = 0;
  int width = 0;
  int height = 0;
  std::string source_uri;
  /// Analyzed-frame step of the detector (1 = every frame).
  int stride = 1;

  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

/// Throws ValidationError describing the first violated invariant.
void validate(const VideoMeta& meta);

/// `<camera>_<local start as YYYYMMDDTHHMMSS>` with the camera id reduced to
/// [A-Za-z0-9-]; identifies one recording.
std::string video_key(const VideoMeta& meta);

/// Maps every character outside [A-Za-z0-9-] to '-'.
std::string sanitize_id(std::string_view text);

/// Throws ValidationError when `det` violates a Detection invariant or does
/// not fit inside `meta`.
void validate(const Detection& det, const VideoMeta& meta);

using Polygon = std::vector<Point>;

enum class RoiKind : std::uint8_t { dwell, crossing };

std::string_view to_string(RoiKind kind) noexcept;

struct RoiGroup {
  std::string name;
  RoiKind kind = RoiKind::dwell;
  std::vector<Polygon> polygons;
  double min_session_time_s = 0;
  double min_no_detection_s = 0;
  Label target_label = Label::person;
  /// Road-transverse unit vector used by the crossing displacement gate.
  Point transverse_axis{1.0, 0.0};
  /// Minimum net displacement (pixels) along `transverse_axis`; 0 disables.
  double min_disp_px = 0;

  friend bool operator==(const RoiGroup&, const RoiGroup&) = default;
};

struct RoiConfig {
  std::string camera_id;
  std::vector<RoiGroup> groups;

  const RoiGroup* find(std::string_view name) const noexcept;

  friend bool operator==(const RoiConfig&, const RoiConfig&) = default;
};

/// Frame interval produced by the sessionization stages. `detections`
/// counts the ROI detections the interval covers.
struct FrameSpan {
  FrameIndex begin = 0;
  FrameIndex end = 0;
  std::size_t detections = 0;

  double duration_s(double fps) const noexcept { return static_cast<double>(end - begin) / fps; }

  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

struct Session {
  std::string roi_group;
  FrameIndex f_b = 0;
  FrameIndex f_e = 0;
  int p = 1;
  std::size_t detection_count = 1;
  Timestamp t_b = absl::UnixEpoch();
  Timestamp t_e = absl::UnixEpoch();

  friend bool operator==(const Session&, const Session&) = default;
};

enum class EventKind : std::uint8_t { crossing, dwell };

std::string_view to_string(EventKind kind) noexcept;

struct ClipRef {
  std::string event_id;
  std::string source_uri;
  FrameIndex start_frame = 0;
  FrameIndex end_frame = 0;
  Timestamp start_ts = absl::UnixEpoch();
  Timestamp end_ts = absl::UnixEpoch();
  std::string output_name;

  friend bool operator==(const ClipRef&, const ClipRef&) = default;
};

struct ActivityEvent {
  std::string event_id;
  EventKind kind = EventKind::dwell;
  std::string camera_id;
  Session session;
  absl::CivilDay date;
  int hour = 0;
  Point position;
  std::optional<ClipRef> clip;

  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

}  // namespace pedwatch
