#include "pedwatch/clips.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "pedwatch/error.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

namespace {

bool safe_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
         c == '.';
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::filesystem::path source_path(const std::string& uri) {
  constexpr std::string_view kFile = "file://";
  if (uri.starts_with(kFile)) return uri.substr(kFile.size());
  return uri;
}

int system_runner(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace

bool is_filesystem_safe(std::string_view name) noexcept {
  return !name.empty() && name != "." && name != ".." && std::all_of(name.begin(), name.end(), safe_char);
}

std::string clip_output_name(const VideoMeta& meta, const ActivityEvent& event) {
  std::string raw = meta.camera_id + "_" + absl::FormatCivilTime(event.date) + "_" + event.event_id;
  std::string out;
  for (char c : raw) out.push_back(safe_char(c) ? c : '-');
  return out;
}

const ManifestEntry* ClipManifest::find(std::string_view event_id) const noexcept {
  for (const ManifestEntry& e : clips) {
    if (std::find(e.event_ids.begin(), e.event_ids.end(), event_id) != e.event_ids.end()) return &e;
  }
  return nullptr;
}

ClipManifest cutlist(std::span<const ActivityEvent> events, const VideoMeta& meta, double pad_s, bool merge_overlaps) {
  if (!(pad_s >= 0)) throw ValidationError("pad_s must be non-negative");
  const FrameIndex pad = std::llround(pad_s * meta.fps);
  const FrameIndex last_frame = meta.frame_count - 1;

  std::vector<const ActivityEvent*> order;
  for (const ActivityEvent& ev : events) {
    if (ev.session.f_b < 0 || ev.session.f_e > last_frame || ev.session.f_b > ev.session.f_e) {
      throw ValidationError("event " + ev.event_id + " lies outside video " + meta.source_uri);
    }
    order.push_back(&ev);
  }
  std::sort(order.begin(), order.end(), [](const ActivityEvent* a, const ActivityEvent* b) {
    if (a->session.f_b != b->session.f_b) return a->session.f_b < b->session.f_b;
    return a->event_id < b->event_id;
  });

  ClipManifest m;
  m.video = meta;
  for (const ActivityEvent* ev : order) {
    const FrameIndex start = std::max<FrameIndex>(0, ev->session.f_b - pad);
    const FrameIndex end = std::min(last_frame, ev->session.f_e + pad);
    if (merge_overlaps && !m.clips.empty() && start <= m.clips.back().clip.end_frame + 1) {
      ManifestEntry& cur = m.clips.back();
      cur.clip.end_frame = std::max(cur.clip.end_frame, end);
      cur.event_ids.push_back(ev->event_id);
      continue;
    }
    ManifestEntry entry;
    entry.clip.event_id = ev->event_id;
    entry.clip.source_uri = meta.source_uri;
    entry.clip.start_frame = start;
    entry.clip.end_frame = end;
    entry.clip.output_name = clip_output_name(meta, *ev);
    entry.event_ids.push_back(ev->event_id);
    m.clips.push_back(std::move(entry));
  }
  for (ManifestEntry& e : m.clips) {
    e.clip.start_ts = frame_to_time(e.clip.start_frame, meta);
    e.clip.end_ts = frame_to_time(e.clip.end_frame, meta);
  }
  return m;
}

Json to_json(const ClipManifest& manifest) {
  Json clips = Json::array();
  for (const ManifestEntry& e : manifest.clips) {
    const int off = manifest.video.utc_offset_s;
    clips.push_back(Json{{"event_id", e.clip.event_id},
                         {"event_ids", e.event_ids},
                         {"output_name", e.clip.output_name},
                         {"start_frame", e.clip.start_frame},
                         {"end_frame", e.clip.end_frame},
                         {"start_ts", format_rfc3339(e.clip.start_ts, off)},
                         {"end_ts", format_rfc3339(e.clip.end_ts, off)}});
  }
  return Json{{"video", to_json(manifest.video)}, {"clips", std::move(clips)}};
}

ClipManifest clip_manifest_from_json(const Json& j) {
  ClipManifest m;
  m.video = video_meta_from_json(j.at("video"));
  for (const Json& c : j.at("clips")) {
    ManifestEntry e;
    e.clip.event_id = c.at("event_id").get<std::string>();
    e.clip.source_uri = m.video.source_uri;
    e.clip.output_name = c.at("output_name").get<std::string>();
    e.clip.start_frame = c.at("start_frame").get<FrameIndex>();
    e.clip.end_frame = c.at("end_frame").get<FrameIndex>();
    e.clip.start_ts = parse_rfc3339(c.at("start_ts").get<std::string>()).first;
    e.clip.end_ts = parse_rfc3339(c.at("end_ts").get<std::string>()).first;
    e.event_ids = c.value("event_ids", std::vector<std::string>{e.clip.event_id});
    m.clips.push_back(std::move(e));
  }
  return m;
}

void CutterTemplate::validate() const {
  for (std::string_view ph : {"{source}", "{start_s}", "{duration_s}", "{output}"}) {
    if (text.find(ph) == std::string::npos) {
      throw ValidationError("cutter template is missing the " + std::string(ph) + " placeholder");
    }
  }
}

std::string CutterTemplate::expand(const std::string& source, double start_s, double duration_s,
                                   const std::string& output) const {
  const std::pair<std::string_view, std::string> subs[] = {{"{source}", shell_quote(source)},
                                                           {"{start_s}", fixed3(start_s)},
                                                           {"{duration_s}", fixed3(duration_s)},
                                                           {"{output}", shell_quote(output)}};
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    bool replaced = false;
    for (const auto& [ph, value] : subs) {
      if (text.compare(i, ph.size(), ph) == 0) {
        out += value;
        i += ph.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(text[i++]);
  }
  return out;
}

std::string_view to_string(ClipStatus s) noexcept {
  switch (s) {
    case ClipStatus::rendered: return "rendered";
    case ClipStatus::skipped_existing: return "skipped_existing";
    case ClipStatus::failed: break;
  }
  return "failed";
}

std::size_t RenderReport::count(ClipStatus s) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [&](const ClipResult& r) { return r.status == s; }));
}

RenderReport render_clips(const ClipManifest& manifest, const CutterTemplate& cutter, const RenderOptions& options) {
  cutter.validate();
  RenderReport report;
  if (manifest.clips.empty()) return report;

  const std::filesystem::path source = source_path(manifest.video.source_uri);
  if (!std::filesystem::exists(source)) {
    throw ValidationError("source video " + source.string() + " does not exist");
  }
  std::filesystem::create_directories(options.output_dir);
  const auto runner = options.runner ? options.runner : system_runner;

  report.results.resize(manifest.clips.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < manifest.clips.size(); i = next++) {
      const ClipRef& clip = manifest.clips[i].clip;
      ClipResult& r = report.results[i];
      r.output_name = clip.output_name;
      r.output = options.output_dir / (clip.output_name + options.extension);
      if (std::filesystem::exists(r.output)) {
        r.status = ClipStatus::skipped_existing;
        continue;
      }
      const double start_s = static_cast<double>(clip.start_frame) / manifest.video.fps;
      const double duration_s = static_cast<double>(clip.end_frame - clip.start_frame + 1) / manifest.video.fps;
      r.command = cutter.expand(source.string(), start_s, duration_s, r.output.string());
      r.exit_code = runner(r.command);
      r.status = r.exit_code == 0 ? ClipStatus::rendered : ClipStatus::failed;
      // A partial output would otherwise be skipped as done on the next run.
      std::error_code ec;
      if (r.status == ClipStatus::failed) std::filesystem::remove(r.output, ec);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(manifest.clips.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }
  return report;
}

Json to_json(const RenderReport& report) {
  Json results = Json::array();
  for (const ClipResult& r : report.results) {
    results.push_back(Json{{"output_name", r.output_name},
                           {"output", r.output.string()},
                           {"status", to_string(r.status)},
                           {"exit_code", r.exit_code}});
  }
  return Json{{"results", std::move(results)},
              {"rendered", report.count(ClipStatus::rendered)},
              {"skipped", report.count(ClipStatus::skipped_existing)},
              {"failed", report.count(ClipStatus::failed)}};
}

}  // namespace pedwatch
