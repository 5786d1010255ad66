#pragma once

#include <compare>
#include <string>
#include <utility>
#include <string_view>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include "pedwatch/model.hpp"

namespace pedwatch {

/// Local calendar date plus hour-of-day [0, 23]. Buckets are half-open:
/// hour h covers [h:00, h+1:00).
struct HourBucket {
  absl::CivilDay date;
  int hour = 0;

  friend bool operator==(const HourBucket&, const HourBucket&) = default;
  friend auto operator<=>(const HourBucket& a, const HourBucket& b) {
    if (a.date != b.date) return a.date < b.date ? std::strong_ordering::less : std::strong_ordering::greater;
    return a.hour <=> b.hour;
  }
};

/// start_ts + frame / fps, rounded to the nearest millisecond.
Timestamp frame_to_time(FrameIndex frame, const VideoMeta& meta);

HourBucket hour_bucket(Timestamp ts, const absl::TimeZone& tz);

/// Loads an IANA zone name ("America/Chicago") or a fixed offset written as
/// "+HH:MM" / "-HH:MM" / "UTC". Throws ValidationError when unknown.
absl::TimeZone load_time_zone(std::string_view name);

/// Fixed-offset zone matching the offset recorded in the video metadata.
absl::TimeZone meta_time_zone(const VideoMeta& meta);

/// RFC 3339 with numeric offset or Z. Returns the instant and the offset
/// in seconds. Throws ValidationError on malformed input.
std::pair<Timestamp, int> parse_rfc3339(std::string_view text);

/// RFC 3339 with millisecond precision in the given fixed offset.
std::string format_rfc3339(Timestamp ts, int utc_offset_s);

absl::CivilDay parse_date(std::string_view text);
std::string format_date(absl::CivilDay day);

}  // namespace pedwatch
