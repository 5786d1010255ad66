#pragma once

#include <span>
#include <vector>

#include <absl/time/time.h>

#include "pedwatch/ingest.hpp"
#include "pedwatch/model.hpp"

namespace pedwatch {

struct SessionParams {
  double min_session_time_s = 0;
  double min_no_detection_s = 0;
  /// Occupied analyzed frames at most this far apart are consecutive.
  int stride = 1;
  double iou_min = 0.3;
  double track_gap_s = 2.0;
  double fps = 0;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

/// Parameters for `group` against a video, with library defaults for the
/// tracking fields.
SessionParams session_params_for(const RoiGroup& group, const VideoMeta& meta);

/// Chain of IoU-associated detections.
struct TrackFragment {
  FrameIndex first_frame = 0;
  FrameIndex last_frame = 0;
  std::vector<FrameIndex> frames;
  std::vector<BBox> boxes;
};

/// Step 2: maximal runs whose consecutive occupied frames differ by at most
/// `stride`. Input must be frame-sorted.
std::vector<FrameSpan> sessionize(std::span<const Detection> d_roi, const SessionParams& params);

/// Step 3: coalesces neighbours whose gap (begin of next minus end of
/// previous, in seconds) is at most `min_no_detection_s`.
std::vector<FrameSpan> merge_sessions(std::span<const FrameSpan> s_d, const SessionParams& params);

/// Step 4: keeps spans lasting at least `min_session_time_s`.
std::vector<FrameSpan> filter_sessions(std::span<const FrameSpan> s_m, const SessionParams& params);

/// Greedy frame-order IoU association over the detections of `d_roi` that
/// fall inside `span`. Fragments expire after `track_gap_s` without a
/// match; the returned list is in opening order.
std::vector<TrackFragment> track_fragments(const FrameSpan& span, std::span<const Detection> d_roi,
                                           const SessionParams& params);

/// Step 5: number of fragments opened inside `span`.
int count_unique_persons(const FrameSpan& span, std::span<const Detection> d_roi, const SessionParams& params);

/// All three stage outputs, for inspection and oracle comparison.
struct PipelineStages {
  std::vector<FrameSpan> s_d;
  std::vector<FrameSpan> s_m;
  std::vector<FrameSpan> s_f;
};

PipelineStages run_stages(std::span<const Detection> d_roi, const SessionParams& params);

struct InferenceContext {
  absl::TimeZone tz = absl::UTCTimeZone();
};

/// Full pipeline for a dwell group: one event per final session carrying p.
std::vector<ActivityEvent> infer_dwell_sessions(const DetectionLog& log, const RoiGroup& group,
                                                const SessionParams& params, const InferenceContext& ctx = {});

/// Crossing inference. A final session is kept when its longest fragment
/// moved at least `min_disp_px` along the group's transverse axis (0
/// disables the gate); it then yields one event per fragment.
std::vector<ActivityEvent> infer_crossings(const DetectionLog& log, const RoiGroup& group,
                                           const SessionParams& params, double min_disp_px,
                                           const InferenceContext& ctx = {});

/// Dispatches on `group.kind`, using `group.min_disp_px` for crossings.
std::vector<ActivityEvent> infer_events(const DetectionLog& log, const RoiGroup& group, const SessionParams& params,
                                        const InferenceContext& ctx = {});

}  // namespace pedwatch
