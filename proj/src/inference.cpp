#include "pedwatch/inference.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

void SessionParams::validate() const {
  if (!(fps > 0)) throw ValidationError("fps must be positive");
  if (stride < 1) throw ValidationError("stride must be at least 1");
  if (!(iou_min > 0 && iou_min <= 1)) throw ValidationError("iou_min must lie in (0,1]");
  if (!(min_session_time_s >= 0)) throw ValidationError("min_session_time_s must be non-negative");
  if (!(min_no_detection_s >= 0)) throw ValidationError("min_no_detection_s must be non-negative");
  if (!(track_gap_s >= 0)) throw ValidationError("track_gap_s must be non-negative");
}

SessionParams session_params_for(const RoiGroup& group, const VideoMeta& meta) {
  SessionParams p;
  p.min_session_time_s = group.min_session_time_s;
  p.min_no_detection_s = group.min_no_detection_s;
  p.stride = meta.stride;
  p.fps = meta.fps;
  return p;
}

std::vector<FrameSpan> sessionize(std::span<const Detection> d_roi, const SessionParams& params) {
  std::vector<FrameSpan> out;
  for (const Detection& det : d_roi) {
    if (!out.empty() && det.frame - out.back().end <= params.stride) {
      out.back().end = det.frame;
      ++out.back().detections;
    } else {
      out.push_back(FrameSpan{det.frame, det.frame, 1});
    }
  }
  return out;
}

std::vector<FrameSpan> merge_sessions(std::span<const FrameSpan> s_d, const SessionParams& params) {
  std::vector<FrameSpan> out;
  for (const FrameSpan& span : s_d) {
    if (!out.empty()) {
      const double gap_s = static_cast<double>(span.begin - out.back().end) / params.fps;
      if (gap_s <= params.min_no_detection_s) {
        out.back().end = span.end;
        out.back().detections += span.detections;
        continue;
      }
    }
    out.push_back(span);
  }
  return out;
}

std::vector<FrameSpan> filter_sessions(std::span<const FrameSpan> s_m, const SessionParams& params) {
  std::vector<FrameSpan> out;
  std::copy_if(s_m.begin(), s_m.end(), std::back_inserter(out),
               [&](const FrameSpan& s) { return s.duration_s(params.fps) >= params.min_session_time_s; });
  return out;
}

namespace {

std::span<const Detection> detections_in(const FrameSpan& span, std::span<const Detection> d_roi) {
  auto lo = std::lower_bound(d_roi.begin(), d_roi.end(), span.begin,
                             [](const Detection& d, FrameIndex f) { return d.frame < f; });
  auto hi = std::upper_bound(lo, d_roi.end(), span.end, [](FrameIndex f, const Detection& d) { return f < d.frame; });
  return {lo, hi};
}

Point mean_anchor(std::span<const BBox> boxes) {
  Point sum;
  for (const BBox& b : boxes) {
    sum.x += (b.x1 + b.x2) / 2.0;
    sum.y += b.y2;
  }
  const auto n = static_cast<double>(boxes.size());
  return Point{sum.x / n, sum.y / n};
}

Point mean_anchor(std::span<const Detection> dets) {
  std::vector<BBox> boxes;
  boxes.reserve(dets.size());
  for (const Detection& d : dets) boxes.push_back(d.bbox);
  return mean_anchor(boxes);
}

std::string event_prefix(const VideoMeta& meta, const RoiGroup& group) {
  return video_key(meta) + "_" + sanitize_id(group.name);
}

ActivityEvent make_event(std::string id, EventKind kind, const VideoMeta& meta, const RoiGroup& group, FrameIndex f_b,
                         FrameIndex f_e, int p, std::size_t detections, Point position, const InferenceContext& ctx) {
  ActivityEvent ev;
  ev.event_id = std::move(id);
  ev.kind = kind;
  ev.camera_id = meta.camera_id;
  ev.session = Session{group.name, f_b, f_e, p, detections, frame_to_time(f_b, meta), frame_to_time(f_e, meta)};
  const Timestamp mid = ev.session.t_b + (ev.session.t_e - ev.session.t_b) / 2;
  const HourBucket bucket = hour_bucket(mid, ctx.tz);
  ev.date = bucket.date;
  ev.hour = bucket.hour;
  ev.position = position;
  return ev;
}

}  // namespace

std::vector<TrackFragment> track_fragments(const FrameSpan& span, std::span<const Detection> d_roi,
                                           const SessionParams& params) {
  const std::span<const Detection> dets = detections_in(span, d_roi);
  std::vector<TrackFragment> fragments;
  std::vector<std::size_t> active;

  std::size_t i = 0;
  while (i < dets.size()) {
    const FrameIndex frame = dets[i].frame;
    std::size_t j = i;
    while (j < dets.size() && dets[j].frame == frame) ++j;
    const std::span<const Detection> here = dets.subspan(i, j - i);

    std::erase_if(active, [&](std::size_t k) {
      return static_cast<double>(frame - fragments[k].last_frame) / params.fps > params.track_gap_s;
    });

    // (iou, fragment, detection) candidates, best first.
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const BBox& last = fragments[active[a]].boxes.back();
      for (std::size_t d = 0; d < here.size(); ++d) {
        const double overlap = iou(last, here[d].bbox);
        if (overlap >= params.iou_min) pairs.emplace_back(overlap, active[a], d);
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
      if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
      if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
      return std::get<2>(x) < std::get<2>(y);
    });

    std::vector<bool> det_taken(here.size(), false);
    std::vector<std::size_t> frag_taken;
    for (const auto& [overlap, frag, d] : pairs) {
      if (det_taken[d] || std::find(frag_taken.begin(), frag_taken.end(), frag) != frag_taken.end()) continue;
      det_taken[d] = true;
      frag_taken.push_back(frag);
      TrackFragment& f = fragments[frag];
      f.last_frame = frame;
      f.frames.push_back(frame);
      f.boxes.push_back(here[d].bbox);
    }
    for (std::size_t d = 0; d < here.size(); ++d) {
      if (det_taken[d]) continue;
      fragments.push_back(TrackFragment{frame, frame, {frame}, {here[d].bbox}});
      active.push_back(fragments.size() - 1);
    }
    i = j;
  }
  return fragments;
}

int count_unique_persons(const FrameSpan& span, std::span<const Detection> d_roi, const SessionParams& params) {
  return static_cast<int>(track_fragments(span, d_roi, params).size());
}

PipelineStages run_stages(std::span<const Detection> d_roi, const SessionParams& params) {
  PipelineStages st;
  st.s_d = sessionize(d_roi, params);
  st.s_m = merge_sessions(st.s_d, params);
  st.s_f = filter_sessions(st.s_m, params);
  return st;
}

std::vector<ActivityEvent> infer_dwell_sessions(const DetectionLog& log, const RoiGroup& group,
                                                const SessionParams& params, const InferenceContext& ctx) {
  params.validate();
  const std::vector<Detection> d_roi = filter_to_roi(log.detections, group);
  const PipelineStages st = run_stages(d_roi, params);
  const std::string prefix = event_prefix(log.meta, group);

  std::vector<ActivityEvent> events;
  for (const FrameSpan& span : st.s_f) {
    const int p = count_unique_persons(span, d_roi, params);
    events.push_back(make_event(prefix + "_" + std::to_string(span.begin), EventKind::dwell, log.meta, group,
                                span.begin, span.end, p, span.detections, mean_anchor(detections_in(span, d_roi)),
                                ctx));
  }
  return events;
}

std::vector<ActivityEvent> infer_crossings(const DetectionLog& log, const RoiGroup& group,
                                           const SessionParams& params, double min_disp_px,
                                           const InferenceContext& ctx) {
  params.validate();
  const std::vector<Detection> d_roi = filter_to_roi(log.detections, group);
  const PipelineStages st = run_stages(d_roi, params);
  const std::string prefix = event_prefix(log.meta, group);

  std::vector<ActivityEvent> events;
  for (const FrameSpan& span : st.s_f) {
    const std::vector<TrackFragment> frags = track_fragments(span, d_roi, params);
    if (min_disp_px > 0) {
      auto longest = std::max_element(frags.begin(), frags.end(), [](const TrackFragment& a, const TrackFragment& b) {
        return a.frames.size() < b.frames.size();
      });
      const BBox& first = longest->boxes.front();
      const BBox& last = longest->boxes.back();
      const double dx = (last.x1 + last.x2) / 2.0 - (first.x1 + first.x2) / 2.0;
      const double dy = last.y2 - first.y2;
      const double along = dx * group.transverse_axis.x + dy * group.transverse_axis.y;
      if (std::abs(along) < min_disp_px) continue;
    }
    for (std::size_t k = 0; k < frags.size(); ++k) {
      const TrackFragment& f = frags[k];
      events.push_back(make_event(prefix + "_" + std::to_string(span.begin) + "_" + std::to_string(k),
                                  EventKind::crossing, log.meta, group, f.first_frame, f.last_frame, 1,
                                  f.frames.size(), mean_anchor(f.boxes), ctx));
    }
  }
  return events;
}

std::vector<ActivityEvent> infer_events(const DetectionLog& log, const RoiGroup& group, const SessionParams& params,
                                        const InferenceContext& ctx) {
  return group.kind == RoiKind::dwell ? infer_dwell_sessions(log, group, params, ctx)
                                      : infer_crossings(log, group, params, group.min_disp_px, ctx);
}

}  // namespace pedwatch
