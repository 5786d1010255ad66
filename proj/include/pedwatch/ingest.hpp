#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <absl/time/civil_time.h>

#include "pedwatch/model.hpp"

namespace pedwatch {

/// Validated, frame-sorted detections of one video.
struct DetectionLog {
  VideoMeta meta;
  std::vector<Detection> detections;
};

struct BoardingRecord {
  std::string stop_id;
  absl::CivilDay date;
  int hour = 0;
  std::int64_t boardings = 0;

  friend bool operator==(const BoardingRecord&, const BoardingRecord&) = default;
};

struct IngestOptions {
  /// Detections below this confidence are dropped. 0 keeps everything.
  double min_confidence = 0.0;
};

/// Default thresholds applied when a group omits them.
struct GroupDefaults {
  double min_session_time_s;
  double min_no_detection_s;
};
inline constexpr GroupDefaults kDwellDefaults{15.0, 5.0};
inline constexpr GroupDefaults kCrossingDefaults{1.0, 2.0};

VideoMeta parse_video_meta(std::string_view document);
std::string serialize_video_meta(const VideoMeta& meta);

/// Streams newline-delimited detection records; each record is validated as
/// soon as it is read. Blank lines are skipped. The result is stably sorted
/// by frame.
DetectionLog parse_detection_log(std::istream& in, const VideoMeta& meta, const IngestOptions& options = {});
DetectionLog parse_detection_log(std::string_view text, const VideoMeta& meta, const IngestOptions& options = {});

void write_detection_log(std::ostream& out, std::span<const Detection> detections);
std::string serialize_detection(const Detection& det);

RoiConfig parse_roi_config(std::string_view document);
std::string serialize_roi_config(const RoiConfig& config);

std::vector<BoardingRecord> parse_boardings(std::string_view csv);
std::string serialize_boardings(std::span<const BoardingRecord> records);

}  // namespace pedwatch
