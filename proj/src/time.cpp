#include "pedwatch/time.hpp"

#include <cctype>
#include <cmath>

#include "pedwatch/error.hpp"

namespace pedwatch {

namespace {

// Parses "+HH:MM" / "-HH:MM"; returns false when `text` is not of that form.
bool parse_offset(std::string_view text, int& seconds) {
  if (text.size() != 6 || (text[0] != '+' && text[0] != '-') || text[3] != ':') return false;
  for (std::size_t i : {1u, 2u, 4u, 5u}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  }
  const int hh = (text[1] - '0') * 10 + (text[2] - '0');
  const int mm = (text[4] - '0') * 10 + (text[5] - '0');
  if (hh > 23 || mm > 59) return false;
  seconds = (hh * 3600 + mm * 60) * (text[0] == '-' ? -1 : 1);
  return true;
}

}  // namespace

Timestamp frame_to_time(FrameIndex frame, const VideoMeta& meta) {
  const long double ms = static_cast<long double>(frame) * 1000.0L / static_cast<long double>(meta.fps);
  return meta.start_ts + absl::Milliseconds(std::llround(ms));
}

HourBucket hour_bucket(Timestamp ts, const absl::TimeZone& tz) {
  const absl::CivilHour local = absl::ToCivilHour(ts, tz);
  return HourBucket{absl::CivilDay(local), local.hour()};
}

absl::TimeZone load_time_zone(std::string_view name) {
  if (name == "UTC" || name == "Z") return absl::UTCTimeZone();
  int offset = 0;
  if (parse_offset(name, offset)) return absl::FixedTimeZone(offset);
  absl::TimeZone tz;
  if (!absl::LoadTimeZone(std::string(name), &tz)) {
    throw ValidationError("unknown time zone '" + std::string(name) + "'");
  }
  return tz;
}

absl::TimeZone meta_time_zone(const VideoMeta& meta) { return absl::FixedTimeZone(meta.utc_offset_s); }

std::pair<Timestamp, int> parse_rfc3339(std::string_view text) {
  int offset = 0;
  if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) {
    offset = 0;
  } else if (text.size() < 6 || !parse_offset(text.substr(text.size() - 6), offset)) {
    throw ValidationError("timestamp '" + std::string(text) + "' lacks a UTC offset");
  }
  absl::Time t;
  std::string err;
  if (!absl::ParseTime(absl::RFC3339_full, std::string(text), &t, &err)) {
    throw ValidationError("malformed RFC 3339 timestamp '" + std::string(text) + "': " + err);
  }
  return {t, offset};
}

std::string format_rfc3339(Timestamp ts, int utc_offset_s) {
  return absl::FormatTime("%Y-%m-%dT%H:%M:%E3S%Ez", ts, absl::FixedTimeZone(utc_offset_s));
}

absl::CivilDay parse_date(std::string_view text) {
  absl::CivilDay day;
  if (text.size() != 10 || !absl::ParseCivilTime(std::string(text), &day)) {
    throw ValidationError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  return day;
}

std::string format_date(absl::CivilDay day) { return absl::FormatCivilTime(day); }

}  // namespace pedwatch
