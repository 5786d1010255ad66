#include "pedwatch/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/json.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

namespace {

Detection parse_detection_line(std::string_view line, std::size_t line_no, const VideoMeta& meta) {
  Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw ParseError(line_no, "", "not a JSON object");

  auto field = [&](const char* key) -> const Json& {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(line_no, key, "missing");
    return *it;
  };

  Detection det;
  const Json& frame = field("frame");
  if (!frame.is_number_integer() || frame.get<std::int64_t>() < 0) {
    throw ParseError(line_no, "frame", "expected a non-negative integer");
  }
  det.frame = frame.get<FrameIndex>();
  if (det.frame >= meta.frame_count) {
    throw ParseError(line_no, "frame",
                     "frame " + std::to_string(det.frame) + " beyond frame_count " + std::to_string(meta.frame_count));
  }

  const Json& label = field("label");
  if (!label.is_string()) throw ParseError(line_no, "label", "expected a string");
  auto parsed_label = label_from_string(label.get_ref<const std::string&>());
  if (!parsed_label) {
    throw ParseError(line_no, "label", "unknown category '" + label.get<std::string>() + "'");
  }
  det.label = *parsed_label;

  const Json& bbox = field("bbox");
  if (!bbox.is_array() || bbox.size() != 4 ||
      !std::all_of(bbox.begin(), bbox.end(), [](const Json& v) { return v.is_number(); })) {
    throw ParseError(line_no, "bbox", "expected [x1,y1,x2,y2]");
  }
  det.bbox = BBox{bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(), bbox[3].get<double>()};

  const Json& conf = field("conf");
  if (!conf.is_number()) throw ParseError(line_no, "conf", "expected a number");
  det.confidence = conf.get<double>();

  const BBox& b = det.bbox;
  if (!(b.x1 < b.x2 && b.y1 < b.y2)) throw ParseError(line_no, "bbox", "requires x1 < x2 and y1 < y2");
  if (b.x1 < 0 || b.y1 < 0 || b.x2 > meta.width || b.y2 > meta.height) {
    std::ostringstream msg;
    msg << "box [" << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2 << "] outside " << meta.width << "x"
        << meta.height << " frame " << det.frame;
    throw ParseError(line_no, "bbox", msg.str());
  }
  if (!(det.confidence >= 0 && det.confidence <= 1)) throw ParseError(line_no, "conf", "must lie in [0,1]");
  return det;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Point parse_vertex(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ValidationError(where + ": vertex must be [x, y]");
  }
  return Point{v[0].get<double>(), v[1].get<double>()};
}

double non_negative(const Json& g, const char* key, double fallback, const std::string& group) {
  auto it = g.find(key);
  if (it == g.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw ValidationError("group '" + group + "': " + key + " must be a number");
  const double v = it->get<double>();
  if (!(v >= 0)) throw ValidationError("group '" + group + "': " + key + " must be non-negative");
  return v;
}

}  // namespace

VideoMeta parse_video_meta(std::string_view document) {
  Json j = Json::parse(document, nullptr, false);
  if (j.is_discarded()) throw ValidationError("video metadata is not valid JSON");
  return video_meta_from_json(j);
}

std::string serialize_video_meta(const VideoMeta& meta) { return to_json(meta).dump(); }

DetectionLog parse_detection_log(std::istream& in, const VideoMeta& meta, const IngestOptions& options) {
  validate(meta);
  DetectionLog log{meta, {}};
  std::string line;
  std::size_t line_no = 0;
  bool sorted = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    Detection det = parse_detection_line(view, line_no, meta);
    if (det.confidence < options.min_confidence) continue;
    if (!log.detections.empty() && det.frame < log.detections.back().frame) sorted = false;
    log.detections.push_back(det);
  }
  if (!sorted) {
    std::stable_sort(log.detections.begin(), log.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
  }
  return log;
}

DetectionLog parse_detection_log(std::string_view text, const VideoMeta& meta, const IngestOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_detection_log(in, meta, options);
}

std::string serialize_detection(const Detection& det) {
  Json j{{"frame", det.frame},
         {"label", to_string(det.label)},
         {"bbox", {det.bbox.x1, det.bbox.y1, det.bbox.x2, det.bbox.y2}},
         {"conf", det.confidence}};
  return j.dump();
}

void write_detection_log(std::ostream& out, std::span<const Detection> detections) {
  for (const Detection& det : detections) out << serialize_detection(det) << '\n';
}

RoiConfig parse_roi_config(std::string_view document) {
  Json j = Json::parse(document, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("ROI config is not a JSON object");
  RoiConfig config;
  config.camera_id = j.value("camera_id", std::string{});
  auto groups = j.find("groups");
  if (groups == j.end() || !groups->is_array()) throw ValidationError("ROI config requires a 'groups' array");

  std::set<std::string> names;
  for (const Json& g : *groups) {
    if (!g.is_object() || !g.contains("name") || !g["name"].is_string()) {
      throw ValidationError("every ROI group needs a string 'name'");
    }
    RoiGroup group;
    group.name = g["name"].get<std::string>();
    if (group.name.empty()) throw ValidationError("ROI group name must not be empty");
    if (!names.insert(group.name).second) throw ValidationError("duplicate ROI group name '" + group.name + "'");

    const std::string kind = g.value("kind", std::string{});
    if (kind == "dwell") {
      group.kind = RoiKind::dwell;
    } else if (kind == "crossing") {
      group.kind = RoiKind::crossing;
    } else {
      throw ValidationError("group '" + group.name + "': kind must be \"dwell\" or \"crossing\"");
    }
    const GroupDefaults defaults = group.kind == RoiKind::dwell ? kDwellDefaults : kCrossingDefaults;
    group.min_session_time_s = non_negative(g, "min_session_time_s", defaults.min_session_time_s, group.name);
    group.min_no_detection_s = non_negative(g, "min_no_detection_s", defaults.min_no_detection_s, group.name);
    group.min_disp_px = non_negative(g, "min_disp_px", 0.0, group.name);

    if (auto it = g.find("target_label"); it != g.end() && !it->is_null()) {
      auto label = it->is_string() ? label_from_string(it->get<std::string>()) : std::nullopt;
      if (!label) throw ValidationError("group '" + group.name + "': unknown target_label");
      group.target_label = *label;
    }
    if (auto it = g.find("transverse_axis"); it != g.end() && !it->is_null()) {
      Point axis = parse_vertex(*it, "group '" + group.name + "' transverse_axis");
      const double norm = std::hypot(axis.x, axis.y);
      if (!(norm > 0)) throw ValidationError("group '" + group.name + "': transverse_axis must be non-zero");
      group.transverse_axis = Point{axis.x / norm, axis.y / norm};
    }

    auto polys = g.find("polygons");
    if (polys == g.end() || !polys->is_array() || polys->empty()) {
      throw ValidationError("group '" + group.name + "': at least one polygon required");
    }
    for (std::size_t pi = 0; pi < polys->size(); ++pi) {
      const Json& poly_json = (*polys)[pi];
      const std::string where = "group '" + group.name + "' polygon " + std::to_string(pi);
      if (!poly_json.is_array() || poly_json.size() < 3) {
        throw ValidationError(where + ": needs at least 3 vertices");
      }
      Polygon poly;
      for (const Json& v : poly_json) poly.push_back(parse_vertex(v, where));
      if (auto bad = first_non_convex_vertex(poly)) {
        throw ValidationError(where + ": not convex at vertex " + std::to_string(*bad));
      }
      group.polygons.push_back(std::move(poly));
    }
    config.groups.push_back(std::move(group));
  }
  return config;
}

std::string serialize_roi_config(const RoiConfig& config) { return to_json(config).dump(); }

std::vector<BoardingRecord> parse_boardings(std::string_view csv) {
  std::vector<BoardingRecord> records;
  std::map<std::tuple<std::string, absl::CivilDay, int>, std::size_t> seen;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!csv.empty()) {
    const std::size_t nl = csv.find('\n');
    std::string_view line = trim(csv.substr(0, nl));
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "stop_id,date,hour,boardings") {
        throw ParseError(line_no, "", "expected header 'stop_id,date,hour,boardings'");
      }
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cols.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 4) throw ParseError(line_no, "", "expected 4 columns");

    BoardingRecord rec;
    rec.stop_id = std::string(cols[0]);
    if (rec.stop_id.empty()) throw ParseError(line_no, "stop_id", "must not be empty");
    try {
      rec.date = parse_date(cols[1]);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, "date", e.what());
    }
    auto parse_int = [&](std::string_view text, const char* name) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size()) throw ParseError(line_no, name, "not an integer");
      return v;
    };
    const std::int64_t hour = parse_int(cols[2], "hour");
    if (hour < 0 || hour > 23) throw ParseError(line_no, "hour", "must lie in 0..23");
    rec.hour = static_cast<int>(hour);
    rec.boardings = parse_int(cols[3], "boardings");
    if (rec.boardings < 0) throw ParseError(line_no, "boardings", "must be non-negative");

    auto [it, inserted] = seen.emplace(std::make_tuple(rec.stop_id, rec.date, rec.hour), line_no);
    if (!inserted) {
      throw ParseError(line_no, "", "duplicate (stop_id,date,hour) also on line " + std::to_string(it->second));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string serialize_boardings(std::span<const BoardingRecord> records) {
  std::string out = "stop_id,date,hour,boardings\n";
  for (const BoardingRecord& r : records) {
    out += r.stop_id + "," + format_date(r.date) + "," + std::to_string(r.hour) + "," + std::to_string(r.boardings) +
           "\n";
  }
  return out;
}

}  // namespace pedwatch
