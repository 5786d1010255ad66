#pragma once

// On-disk layout of an analysis store:
//
//   inputs/<video_key>/{meta.json, detections.jsonl, roi.json}
//   analysis/{config.json, events.jsonl, report.json, run.json}
//   analysis/correlation.{csv,json}
//   clips/<video_key>.manifest.json, clips/files/<output_name><ext>
//   clips/render_report.json
//   annotations.jsonl

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pedwatch/analytics.hpp"
#include "pedwatch/clips.hpp"
#include "pedwatch/ingest.hpp"
#include "pedwatch/json.hpp"
#include "pedwatch/model.hpp"

namespace pedwatch {

namespace fs = std::filesystem;

struct StoredVideo {
  std::string key;
  VideoMeta meta;
  RoiConfig roi;
};

class Store {
 public:
  explicit Store(fs::path root);

  const fs::path& root() const noexcept { return root_; }
  fs::path inputs_dir() const { return root_ / "inputs"; }
  fs::path analysis_dir() const { return root_ / "analysis"; }
  fs::path clips_dir() const { return root_ / "clips"; }
  fs::path clip_files_dir() const { return clips_dir() / "files"; }
  fs::path annotations_path() const { return root_ / "annotations.jsonl"; }
  fs::path events_path() const { return analysis_dir() / "events.jsonl"; }
  fs::path report_path() const { return analysis_dir() / "report.json"; }
  fs::path config_path() const { return analysis_dir() / "config.json"; }
  fs::path manifest_path(const std::string& video_key) const;

  /// Writes the validated inputs under inputs/<key>/, replacing an earlier
  /// ingest of the same video. Returns the key.
  std::string ingest(const DetectionLog& log, const RoiConfig& roi) const;

  /// Stored videos ordered by key.
  std::vector<StoredVideo> videos() const;
  DetectionLog load_detections(const StoredVideo& video) const;

  std::vector<ActivityEvent> load_events() const;
  Json load_json(const fs::path& path) const;
  std::vector<ClipManifest> load_manifests() const;

 private:
  fs::path root_;
};

/// Writes `content` to `path` atomically (temporary file then rename).
void write_file(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

}  // namespace pedwatch
