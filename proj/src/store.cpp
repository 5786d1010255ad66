#include "pedwatch/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pedwatch/error.hpp"

namespace pedwatch {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Store::Store(fs::path root) : root_(std::move(root)) {}

fs::path Store::manifest_path(const std::string& key) const { return clips_dir() / (key + ".manifest.json"); }

std::string Store::ingest(const DetectionLog& log, const RoiConfig& roi) const {
  const std::string key = video_key(log.meta);
  const fs::path dir = inputs_dir() / key;
  fs::create_directories(dir);
  write_file(dir / "meta.json", to_json(log.meta).dump(2) + "\n");
  write_file(dir / "roi.json", to_json(roi).dump(2) + "\n");
  std::ostringstream det;
  write_detection_log(det, log.detections);
  write_file(dir / "detections.jsonl", det.str());
  return key;
}

std::vector<StoredVideo> Store::videos() const {
  std::vector<StoredVideo> out;
  if (!fs::exists(inputs_dir())) return out;
  for (const auto& entry : fs::directory_iterator(inputs_dir())) {
    if (!entry.is_directory()) continue;
    StoredVideo v;
    v.key = entry.path().filename().string();
    v.meta = parse_video_meta(read_file(entry.path() / "meta.json"));
    v.roi = parse_roi_config(read_file(entry.path() / "roi.json"));
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end(), [](const StoredVideo& a, const StoredVideo& b) { return a.key < b.key; });
  return out;
}

DetectionLog Store::load_detections(const StoredVideo& video) const {
  std::ifstream in(inputs_dir() / video.key / "detections.jsonl", std::ios::binary);
  if (!in) throw NotFoundError("detections for " + video.key + " missing");
  return parse_detection_log(in, video.meta);
}

std::vector<ActivityEvent> Store::load_events() const {
  std::ifstream in(events_path());
  if (!in) throw NotFoundError("store has not been analyzed (missing " + events_path().string() + ")");
  std::vector<ActivityEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(activity_event_from_json(Json::parse(line)));
  }
  return events;
}

Json Store::load_json(const fs::path& path) const {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ValidationError(path.string() + " is not valid JSON");
  return j;
}

std::vector<ClipManifest> Store::load_manifests() const {
  std::vector<ClipManifest> out;
  if (!fs::exists(clips_dir())) return out;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(clips_dir())) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".manifest.json")) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const fs::path& p : paths) out.push_back(clip_manifest_from_json(load_json(p)));
  return out;
}

}  // namespace pedwatch
