#include "pedwatch/json.hpp"

#include "pedwatch/error.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

Json to_json(const VideoMeta& meta) {
  Json j{{"camera_id", meta.camera_id},
         {"start_ts", format_rfc3339(meta.start_ts, meta.utc_offset_s)},
         {"fps", meta.fps},
         {"frame_count", meta.frame_count},
         {"width", meta.width},
         {"height", meta.height},
         {"source_uri", meta.source_uri}};
  if (meta.stride != 1) j["stride"] = meta.stride;
  return j;
}

VideoMeta video_meta_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("video metadata must be an object");
  auto require = [&](const char* key) -> const Json& {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("video metadata missing '") + key + "'");
    return *it;
  };
  VideoMeta meta;
  try {
    meta.camera_id = require("camera_id").get<std::string>();
    auto [ts, offset] = parse_rfc3339(require("start_ts").get<std::string>());
    meta.start_ts = ts;
    meta.utc_offset_s = offset;
    meta.fps = require("fps").get<double>();
    meta.frame_count = require("frame_count").get<std::int64_t>();
    meta.width = require("width").get<int>();
    meta.height = require("height").get<int>();
    meta.source_uri = require("source_uri").get<std::string>();
    meta.stride = j.value("stride", 1);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("video metadata: ") + e.what());
  }
  validate(meta);
  return meta;
}

Json to_json(const RoiGroup& group) {
  Json polys = Json::array();
  for (const Polygon& poly : group.polygons) {
    Json pts = Json::array();
    for (const Point& p : poly) pts.push_back({p.x, p.y});
    polys.push_back(std::move(pts));
  }
  return Json{{"name", group.name},
              {"kind", to_string(group.kind)},
              {"polygons", std::move(polys)},
              {"min_session_time_s", group.min_session_time_s},
              {"min_no_detection_s", group.min_no_detection_s},
              {"target_label", to_string(group.target_label)},
              {"transverse_axis", {group.transverse_axis.x, group.transverse_axis.y}},
              {"min_disp_px", group.min_disp_px}};
}

Json to_json(const RoiConfig& config) {
  Json groups = Json::array();
  for (const RoiGroup& g : config.groups) groups.push_back(to_json(g));
  return Json{{"camera_id", config.camera_id}, {"groups", std::move(groups)}};
}

Json to_json(const Session& s, int utc_offset_s) {
  return Json{{"roi_group", s.roi_group},
              {"f_b", s.f_b},
              {"f_e", s.f_e},
              {"p", s.p},
              {"detection_count", s.detection_count},
              {"t_b", format_rfc3339(s.t_b, utc_offset_s)},
              {"t_e", format_rfc3339(s.t_e, utc_offset_s)}};
}

Json to_json(const ClipRef& c, int utc_offset_s) {
  return Json{{"event_id", c.event_id},
              {"source_uri", c.source_uri},
              {"start_frame", c.start_frame},
              {"end_frame", c.end_frame},
              {"start_ts", format_rfc3339(c.start_ts, utc_offset_s)},
              {"end_ts", format_rfc3339(c.end_ts, utc_offset_s)},
              {"output_name", c.output_name}};
}

Json to_json(const ActivityEvent& e, int utc_offset_s) {
  Json j{{"event_id", e.event_id},
         {"kind", to_string(e.kind)},
         {"camera_id", e.camera_id},
         {"session", to_json(e.session, utc_offset_s)},
         {"date", format_date(e.date)},
         {"hour", e.hour},
         {"position", {e.position.x, e.position.y}}};
  j["clip"] = e.clip ? to_json(*e.clip, utc_offset_s) : Json(nullptr);
  return j;
}

ActivityEvent activity_event_from_json(const Json& j) {
  ActivityEvent e;
  e.event_id = j.at("event_id").get<std::string>();
  e.kind = j.at("kind").get<std::string>() == "dwell" ? EventKind::dwell : EventKind::crossing;
  e.camera_id = j.at("camera_id").get<std::string>();
  const Json& s = j.at("session");
  e.session.roi_group = s.at("roi_group").get<std::string>();
  e.session.f_b = s.at("f_b").get<FrameIndex>();
  e.session.f_e = s.at("f_e").get<FrameIndex>();
  e.session.p = s.at("p").get<int>();
  e.session.detection_count = s.at("detection_count").get<std::size_t>();
  e.session.t_b = parse_rfc3339(s.at("t_b").get<std::string>()).first;
  e.session.t_e = parse_rfc3339(s.at("t_e").get<std::string>()).first;
  e.date = parse_date(j.at("date").get<std::string>());
  e.hour = j.at("hour").get<int>();
  e.position = Point{j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
  if (auto it = j.find("clip"); it != j.end() && !it->is_null()) {
    ClipRef c;
    c.event_id = it->at("event_id").get<std::string>();
    c.source_uri = it->at("source_uri").get<std::string>();
    c.start_frame = it->at("start_frame").get<FrameIndex>();
    c.end_frame = it->at("end_frame").get<FrameIndex>();
    c.start_ts = parse_rfc3339(it->at("start_ts").get<std::string>()).first;
    c.end_ts = parse_rfc3339(it->at("end_ts").get<std::string>()).first;
    c.output_name = it->at("output_name").get<std::string>();
    e.clip = std::move(c);
  }
  return e;
}

}  // namespace pedwatch
