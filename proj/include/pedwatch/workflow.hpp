#pragma once

// Pipeline stages over a store, shared by the CLI and the review service.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedwatch/analytics.hpp"
#include "pedwatch/clips.hpp"
#include "pedwatch/inference.hpp"
#include "pedwatch/store.hpp"

namespace pedwatch {

/// Unset fields fall back to the ROI config, then to library defaults.
struct ThresholdOverrides {
  std::optional<double> dwell_min_session_s;
  std::optional<double> dwell_min_gap_s;
  std::optional<double> crossing_min_session_s;
  std::optional<double> crossing_min_gap_s;
  std::optional<double> min_disp_px;
  std::optional<int> stride;
  std::optional<double> iou_min;
  std::optional<double> track_gap_s;
};

/// Which groups feed the CRO, #SB and #NB series.
struct SeriesRoles {
  std::string cro;
  std::string sb;
  std::string nb;
};

struct AnalyzeOptions {
  /// IANA zone or fixed offset; empty means the offset of the first video.
  std::string tz;
  ThresholdOverrides overrides;
  unsigned workers = 1;
  SeriesRoles roles;
  std::optional<fs::path> boardings;
  /// Dwell group compared against the boarding records.
  std::string boardings_group;
  /// stop_id in the boarding file; defaults to `boardings_group`.
  std::string boardings_stop;
  /// Receives one human-readable line per notable step.
  std::function<void(const std::string&)> log;
};

/// Resolved parameters of one (video, group) pair.
struct ResolvedGroup {
  std::string video_key;
  RoiGroup group;
  SessionParams params;
};

/// Fills unset roles: the single crossing group becomes CRO; dwell groups
/// whose names start with "sb"/"nb" (case-insensitive) become #SB/#NB.
SeriesRoles resolve_roles(const SeriesRoles& requested, std::span<const StoredVideo> videos);

std::vector<ResolvedGroup> resolve_groups(std::span<const StoredVideo> videos, const ThresholdOverrides& overrides);

/// Recording window of every video that defines `group`.
RecordingWindow group_window(std::span<const StoredVideo> videos, const std::string& group, const absl::TimeZone& tz);

Json window_to_json(const RecordingWindow& window);
RecordingWindow window_from_json(const Json& j);

/// Summary of one group over a window: hourly matrix, per-hour box
/// statistics, daily totals and the outlier-filtered matrix.
Json summarize(const std::string& group, RoiKind kind, std::span<const ActivityEvent> events,
               const RecordingWindow& window);

struct AnalyzeResult {
  std::vector<ActivityEvent> events;
  Json report;
  Json config;
};

/// Runs inference and analytics over every stored video; writes
/// analysis/{config,events,report,run}.
AnalyzeResult analyze(const Store& store, const AnalyzeOptions& options);

/// Correlation table over the analyzed store, optionally limited to dates
/// in [from, to].
CorrelationTable correlate(const Store& store, const SeriesRoles& roles, std::optional<absl::CivilDay> from = {},
                           std::optional<absl::CivilDay> to = {});

/// Writes one manifest per video; returns them.
std::vector<ClipManifest> make_cutlists(const Store& store, double pad_s, bool merge_overlaps);

RenderReport render_store_clips(const Store& store, const CutterTemplate& cutter, unsigned workers,
                                const std::string& extension = ".mp4",
                                std::function<int(const std::string&)> runner = {});

/// BLAKE2b digest (hex) over the deterministic analysis files; run.json,
/// which carries the run timestamp, is excluded.
std::string analysis_digest(const Store& store);

}  // namespace pedwatch
