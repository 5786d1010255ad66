#pragma once

// Structured-document encodings of the domain types.

#include <json.hpp>

#include "pedwatch/model.hpp"

namespace pedwatch {

using Json = nlohmann::json;

Json to_json(const VideoMeta& meta);
VideoMeta video_meta_from_json(const Json& j);

Json to_json(const RoiGroup& group);
Json to_json(const RoiConfig& config);

Json to_json(const Session& session, int utc_offset_s);
Json to_json(const ClipRef& clip, int utc_offset_s);
Json to_json(const ActivityEvent& event, int utc_offset_s);
ActivityEvent activity_event_from_json(const Json& j);

}  // namespace pedwatch
