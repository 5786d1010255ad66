#include "pedwatch/workflow.hpp"

#include <sodium.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <absl/time/clock.h>

#include "pedwatch/error.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string offset_name(int offset_s) {
  const char sign = offset_s < 0 ? '-' : '+';
  const int a = std::abs(offset_s);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, a / 3600, (a % 3600) / 60);
  return buf;
}

Json params_json(const SessionParams& p) {
  return Json{{"min_session_time_s", p.min_session_time_s},
              {"min_no_detection_s", p.min_no_detection_s},
              {"stride", p.stride},
              {"iou_min", p.iou_min},
              {"track_gap_s", p.track_gap_s},
              {"fps", p.fps}};
}

std::vector<std::string> group_names(std::span<const StoredVideo> videos) {
  std::set<std::string> names;
  for (const StoredVideo& v : videos) {
    for (const RoiGroup& g : v.roi.groups) names.insert(g.name);
  }
  return {names.begin(), names.end()};
}

std::optional<RoiKind> group_kind(std::span<const StoredVideo> videos, const std::string& name) {
  for (const StoredVideo& v : videos) {
    if (const RoiGroup* g = v.roi.find(name)) return g->kind;
  }
  return std::nullopt;
}

std::vector<ActivityEvent> events_of(std::span<const ActivityEvent> events, const std::string& group,
                                     std::optional<absl::CivilDay> from = {}, std::optional<absl::CivilDay> to = {}) {
  std::vector<ActivityEvent> out;
  for (const ActivityEvent& e : events) {
    if (e.session.roi_group != group) continue;
    if (from && e.date < *from) continue;
    if (to && e.date > *to) continue;
    out.push_back(e);
  }
  return out;
}

int offset_for(const ActivityEvent& e, const std::map<std::string, int>& offsets) {
  for (const auto& [key, off] : offsets) {
    if (e.event_id.starts_with(key + "_")) return off;
  }
  return 0;
}

absl::TimeZone analysis_zone(const std::string& tz, std::span<const StoredVideo> videos, std::string& name) {
  if (!tz.empty()) {
    name = tz;
    return load_time_zone(tz);
  }
  name = videos.empty() ? "UTC" : offset_name(videos.front().meta.utc_offset_s);
  return videos.empty() ? absl::UTCTimeZone() : meta_time_zone(videos.front().meta);
}

}  // namespace

SeriesRoles resolve_roles(const SeriesRoles& requested, std::span<const StoredVideo> videos) {
  SeriesRoles roles = requested;
  const std::vector<std::string> names = group_names(videos);
  if (roles.cro.empty()) {
    std::vector<std::string> crossing;
    for (const std::string& n : names) {
      if (group_kind(videos, n) == RoiKind::crossing) crossing.push_back(n);
    }
    if (crossing.size() == 1) roles.cro = crossing.front();
  }
  for (const std::string& n : names) {
    if (group_kind(videos, n) != RoiKind::dwell) continue;
    const std::string l = lower(n);
    if (roles.sb.empty() && l.starts_with("sb")) roles.sb = n;
    if (roles.nb.empty() && l.starts_with("nb")) roles.nb = n;
  }
  return roles;
}

std::vector<ResolvedGroup> resolve_groups(std::span<const StoredVideo> videos, const ThresholdOverrides& o) {
  std::vector<ResolvedGroup> out;
  for (const StoredVideo& v : videos) {
    for (RoiGroup g : v.roi.groups) {
      if (g.kind == RoiKind::dwell) {
        g.min_session_time_s = o.dwell_min_session_s.value_or(g.min_session_time_s);
        g.min_no_detection_s = o.dwell_min_gap_s.value_or(g.min_no_detection_s);
      } else {
        g.min_session_time_s = o.crossing_min_session_s.value_or(g.min_session_time_s);
        g.min_no_detection_s = o.crossing_min_gap_s.value_or(g.min_no_detection_s);
        g.min_disp_px = o.min_disp_px.value_or(g.min_disp_px);
      }
      SessionParams p = session_params_for(g, v.meta);
      p.stride = o.stride.value_or(p.stride);
      p.iou_min = o.iou_min.value_or(p.iou_min);
      p.track_gap_s = o.track_gap_s.value_or(p.track_gap_s);
      p.validate();
      out.push_back(ResolvedGroup{v.key, std::move(g), p});
    }
  }
  return out;
}

RecordingWindow group_window(std::span<const StoredVideo> videos, const std::string& group,
                             const absl::TimeZone& tz) {
  RecordingWindow w;
  for (const StoredVideo& v : videos) {
    if (v.roi.find(group)) w.add(v.meta, tz);
  }
  return w;
}

Json window_to_json(const RecordingWindow& window) {
  Json out = Json::array();
  for (const auto& [date, range] : window.ranges()) {
    out.push_back(Json{{"date", format_date(date)}, {"first_hour", range.first}, {"last_hour", range.second}});
  }
  return out;
}

RecordingWindow window_from_json(const Json& j) {
  RecordingWindow w;
  for (const Json& r : j) {
    w.add_hours(parse_date(r.at("date").get<std::string>()), r.at("first_hour").get<int>(),
                r.at("last_hour").get<int>());
  }
  return w;
}

Json summarize(const std::string& group, RoiKind kind, std::span<const ActivityEvent> events,
               const RecordingWindow& window) {
  const DailyHourMatrix matrix = hourly_counts(events, window);
  Json daily = Json::array();
  for (std::size_t d = 0; d < matrix.dates.size(); ++d) {
    double sum = 0;
    for (const auto& c : matrix.cells[d]) sum += c.value_or(0.0);
    daily.push_back(Json{{"date", format_date(matrix.dates[d])}, {"total", sum}});
  }
  Json boxes = Json::array();
  for (int h = matrix.first_hour; h <= matrix.last_hour; ++h) {
    const HourlySeries s = series_for_hour(matrix, h);
    if (s.values.empty()) continue;
    boxes.push_back(Json{{"hour", h}, {"stats", to_json(box_stats(s.values))}});
  }
  const OutlierFilterResult filtered = outlier_filter(matrix);
  Json removals = Json::array();
  for (const OutlierRemoval& r : filtered.removals) removals.push_back(to_json(r));

  std::size_t event_count = events.size();
  return Json{{"group", group},
              {"kind", to_string(kind)},
              {"window", window_to_json(window)},
              {"event_count", event_count},
              {"matrix", to_json(matrix)},
              {"daily_totals", std::move(daily)},
              {"hourly_box", std::move(boxes)},
              {"outlier_filter",
               Json{{"removals", std::move(removals)},
                    {"warnings", filtered.warnings},
                    {"filtered_matrix", to_json(filtered.filtered)}}}};
}

AnalyzeResult analyze(const Store& store, const AnalyzeOptions& options) {
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };
  const std::vector<StoredVideo> videos = store.videos();
  if (videos.empty()) throw ValidationError("store " + store.root().string() + " has no ingested videos");

  std::string tz_name;
  const absl::TimeZone tz = analysis_zone(options.tz, videos, tz_name);
  const std::vector<ResolvedGroup> resolved = resolve_groups(videos, options.overrides);
  const SeriesRoles roles = resolve_roles(options.roles, videos);

  std::map<std::string, int> offsets;
  for (const StoredVideo& v : videos) offsets[v.key] = v.meta.utc_offset_s;

  // One job per video; results land in their slot so output order is fixed.
  std::vector<std::vector<ActivityEvent>> per_video(videos.size());
  std::vector<std::string> errors(videos.size());
  std::atomic<std::size_t> next{0};
  const InferenceContext ctx{tz};
  auto work = [&] {
    for (std::size_t i = next++; i < videos.size(); i = next++) {
      try {
        const DetectionLog detections = store.load_detections(videos[i]);
        for (const ResolvedGroup& rg : resolved) {
          if (rg.video_key != videos[i].key) continue;
          std::vector<ActivityEvent> evs = infer_events(detections, rg.group, rg.params, ctx);
          per_video[i].insert(per_video[i].end(), evs.begin(), evs.end());
        }
      } catch (const std::exception& e) {
        errors[i] = videos[i].key + ": " + e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(videos.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error("inference failed for " + e);
  }

  AnalyzeResult result;
  for (auto& evs : per_video) result.events.insert(result.events.end(), evs.begin(), evs.end());
  log("inferred " + std::to_string(result.events.size()) + " events from " + std::to_string(videos.size()) +
      " videos");

  Json groups = Json::array();
  for (const std::string& name : group_names(videos)) {
    const std::vector<ActivityEvent> evs = events_of(result.events, name);
    groups.push_back(summarize(name, *group_kind(videos, name), evs, group_window(videos, name, tz)));
  }
  result.report = Json{{"tz", tz_name}, {"groups", std::move(groups)}};

  if (options.boardings) {
    const std::string group = options.boardings_group.empty() ? roles.sb : options.boardings_group;
    if (group.empty()) throw ValidationError("--boardings needs a dwell group to compare against");
    const std::vector<BoardingRecord> records = parse_boardings(read_file(*options.boardings));
    const std::vector<ActivityEvent> evs = events_of(result.events, group);
    const DailyHourMatrix m = hourly_counts(evs, group_window(videos, group, tz));
    const std::string stop = options.boardings_stop.empty() ? group : options.boardings_stop;
    Json acc = to_json(mae(m, records, stop));
    acc["group"] = group;
    acc["stop_id"] = stop;
    result.report["accuracy"] = std::move(acc);
    log("MAE against boarding records: " + result.report["accuracy"]["mae"].dump());
  }

  Json resolved_json = Json::array();
  for (const ResolvedGroup& rg : resolved) {
    resolved_json.push_back(
        Json{{"video_key", rg.video_key}, {"group", to_json(rg.group)}, {"params", params_json(rg.params)}});
  }
  result.config = Json{{"tz", tz_name},
                       {"roles", Json{{"cro", roles.cro}, {"sb", roles.sb}, {"nb", roles.nb}}},
                       {"workers", n},
                       {"groups", std::move(resolved_json)}};
  if (options.boardings) {
    result.config["boardings"] = Json{{"path", options.boardings->string()},
                                      {"group", result.report["accuracy"]["group"]},
                                      {"stop_id", result.report["accuracy"]["stop_id"]}};
  }

  // A correlation table from an earlier run no longer matches these events.
  for (const char* stale : {"correlation.csv", "correlation.json"}) fs::remove(store.analysis_dir() / stale);

  std::string events_text;
  for (const ActivityEvent& e : result.events) events_text += to_json(e, offset_for(e, offsets)).dump() + "\n";
  write_file(store.events_path(), events_text);
  write_file(store.report_path(), result.report.dump(2) + "\n");
  // Worker count does not affect results; keep it out of the hashed config.
  Json hashed_config = result.config;
  hashed_config.erase("workers");
  write_file(store.config_path(), hashed_config.dump(2) + "\n");
  write_file(store.analysis_dir() / "run.json",
             Json{{"generated_at", format_rfc3339(absl::Now(), 0)}, {"workers", n}}.dump(2) + "\n");
  return result;
}

CorrelationTable correlate(const Store& store, const SeriesRoles& requested, std::optional<absl::CivilDay> from,
                           std::optional<absl::CivilDay> to) {
  const std::vector<StoredVideo> videos = store.videos();
  SeriesRoles roles = requested;
  if (fs::exists(store.config_path())) {
    const Json cfg = store.load_json(store.config_path());
    if (roles.cro.empty()) roles.cro = cfg["roles"].value("cro", "");
    if (roles.sb.empty()) roles.sb = cfg["roles"].value("sb", "");
    if (roles.nb.empty()) roles.nb = cfg["roles"].value("nb", "");
  }
  roles = resolve_roles(roles, videos);
  if (roles.cro.empty() || roles.sb.empty() || roles.nb.empty()) {
    throw ValidationError("cannot determine CRO/#SB/#NB groups; pass them explicitly");
  }
  const Json report = store.load_json(store.report_path());
  const std::vector<ActivityEvent> events = store.load_events();

  auto matrix_for = [&](const std::string& group) {
    for (const Json& g : report.at("groups")) {
      if (g.at("group") != group) continue;
      RecordingWindow w = window_from_json(g.at("window"));
      if (from || to) w = w.restrict(from.value_or(absl::CivilDay::min()), to.value_or(absl::CivilDay::max()));
      return hourly_counts(events_of(events, group, from, to), w);
    }
    throw NotFoundError("group '" + group + "' not in the analysis report");
  };
  return correlation_table(matrix_for(roles.cro), matrix_for(roles.sb), matrix_for(roles.nb));
}

std::vector<ClipManifest> make_cutlists(const Store& store, double pad_s, bool merge_overlaps) {
  const std::vector<StoredVideo> videos = store.videos();
  const std::vector<ActivityEvent> events = store.load_events();
  std::vector<ClipManifest> out;
  for (const StoredVideo& v : videos) {
    std::vector<ActivityEvent> mine;
    for (const ActivityEvent& e : events) {
      if (e.event_id.starts_with(v.key + "_")) mine.push_back(e);
    }
    ClipManifest m = cutlist(mine, v.meta, pad_s, merge_overlaps);
    write_file(store.manifest_path(v.key), to_json(m).dump(2) + "\n");
    out.push_back(std::move(m));
  }
  return out;
}

RenderReport render_store_clips(const Store& store, const CutterTemplate& cutter, unsigned workers,
                                const std::string& extension, std::function<int(const std::string&)> runner) {
  cutter.validate();
  RenderReport all;
  for (const ClipManifest& m : store.load_manifests()) {
    RenderOptions opts;
    opts.output_dir = store.clip_files_dir();
    opts.extension = extension;
    opts.workers = workers;
    opts.runner = runner;
    RenderReport r = render_clips(m, cutter, opts);
    all.results.insert(all.results.end(), r.results.begin(), r.results.end());
  }
  write_file(store.clips_dir() / "render_report.json", to_json(all).dump(2) + "\n");
  return all;
}

std::string analysis_digest(const Store& store) {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  if (!fs::is_directory(store.analysis_dir())) {
    throw NotFoundError("store " + store.root().string() + " has not been analyzed");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(store.analysis_dir())) {
    if (entry.is_regular_file() && entry.path().filename() != "run.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  crypto_generichash_state st;
  unsigned char out[32];
  crypto_generichash_init(&st, nullptr, 0, sizeof out);
  for (const fs::path& f : files) {
    const std::string rel = fs::relative(f, store.analysis_dir()).generic_string();
    const std::string body = read_file(f);
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(rel.data()), rel.size() + 1);
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(body.data()), body.size());
  }
  crypto_generichash_final(&st, out, sizeof out);
  char hex[sizeof out * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, out, sizeof out);
  return hex;
}

}  // namespace pedwatch
