#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pedwatch/json.hpp"
#include "pedwatch/model.hpp"

namespace pedwatch {

inline constexpr double kDefaultClipPadS = 2.0;

/// One output clip and every event it shows.
struct ManifestEntry {
  ClipRef clip;
  std::vector<std::string> event_ids;
};

struct ClipManifest {
  VideoMeta video;
  std::vector<ManifestEntry> clips;

  /// Clip containing `event_id`, or nullptr.
  const ManifestEntry* find(std::string_view event_id) const noexcept;
};

/// Clip boundaries for `events` of the video `meta`: each event spans
/// [f_b - pad, f_e + pad] clamped to the video. With `merge_overlaps`,
/// overlapping or touching clips are coalesced. Throws ValidationError
/// naming the event when it lies outside the video.
ClipManifest cutlist(std::span<const ActivityEvent> events, const VideoMeta& meta, double pad_s, bool merge_overlaps);

/// `<camera_id>_<YYYY-MM-DD>_<event_id>` restricted to [A-Za-z0-9._-].
std::string clip_output_name(const VideoMeta& meta, const ActivityEvent& event);
bool is_filesystem_safe(std::string_view name) noexcept;

Json to_json(const ClipManifest& manifest);
ClipManifest clip_manifest_from_json(const Json& j);

struct CutterTemplate {
  std::string text;

  /// Throws ValidationError unless {source} {start_s} {duration_s} and
  /// {output} all appear.
  void validate() const;
  /// Expands placeholders; substituted values are shell-quoted.
  std::string expand(const std::string& source, double start_s, double duration_s, const std::string& output) const;
};

enum class ClipStatus { rendered, skipped_existing, failed };

std::string_view to_string(ClipStatus s) noexcept;

struct ClipResult {
  std::string output_name;
  std::filesystem::path output;
  ClipStatus status = ClipStatus::failed;
  int exit_code = 0;
  std::string command;
};

struct RenderReport {
  std::vector<ClipResult> results;

  std::size_t count(ClipStatus s) const noexcept;
};

struct RenderOptions {
  std::filesystem::path output_dir;
  std::string extension = ".mp4";
  unsigned workers = 1;
  /// Runs a shell command and returns its exit status. Defaults to
  /// std::system.
  std::function<int(const std::string&)> runner;
};

/// Invokes the cutter once per clip whose output does not exist yet. A
/// nonzero exit is recorded and processing continues. Throws
/// ValidationError for a bad template or a missing source file, before any
/// invocation.
RenderReport render_clips(const ClipManifest& manifest, const CutterTemplate& cutter, const RenderOptions& options);

Json to_json(const RenderReport& report);

}  // namespace pedwatch
