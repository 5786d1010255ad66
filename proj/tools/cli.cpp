#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <absl/time/clock.h>

#include "pedwatch/error.hpp"
#include "pedwatch/service.hpp"
#include "pedwatch/synth.hpp"
#include "pedwatch/time.hpp"
#include "pedwatch/workflow.hpp"

namespace pedwatch::cli {

namespace {

void log(std::string_view level, std::string_view stage, std::string_view msg) {
  std::cerr << format_rfc3339(absl::Now(), 0) << " level=" << level << " stage=" << stage << " msg=" << Json(msg).dump()
            << '\n';
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string slurp(const std::string& path) { return read_file(path); }

void cmd_ingest(const Options& o) {
  const VideoMeta meta = parse_video_meta(slurp(o.meta));
  const RoiConfig roi = parse_roi_config(slurp(o.roi));
  std::ifstream in(o.detections);
  if (!in) throw NotFoundError("cannot read detections file " + o.detections);
  const DetectionLog det = parse_detection_log(in, meta, IngestOptions{o.min_confidence});
  if (roi.camera_id != meta.camera_id) {
    log("warn", "ingest", "ROI camera_id '" + roi.camera_id + "' differs from video camera_id '" + meta.camera_id + "'");
  }
  const std::string key = Store(o.store).ingest(det, roi);
  log("info", "ingest", "stored " + std::to_string(det.detections.size()) + " detections as " + key);
}

void cmd_analyze(const Options& o) {
  AnalyzeOptions a;
  a.tz = o.tz;
  a.workers = worker_count(o.workers);
  a.overrides = ThresholdOverrides{o.dwell_session_s, o.dwell_gap_s, o.crossing_session_s, o.crossing_gap_s,
                                   o.min_disp_px,     o.stride,      o.iou_min,            o.track_gap_s};
  a.roles = SeriesRoles{o.cro, o.sb, o.nb};
  if (!o.boardings.empty()) a.boardings = o.boardings;
  a.boardings_group = o.boardings_group;
  a.boardings_stop = o.boardings_stop;
  a.log = [](const std::string& m) { log("info", "analyze", m); };

  const Store store(o.store);
  const auto videos = store.videos();
  for (const ResolvedGroup& rg : resolve_groups(videos, a.overrides)) {
    std::ostringstream s;
    s << rg.video_key << '/' << rg.group.name << ": min_session_time_s=" << rg.params.min_session_time_s
      << " min_no_detection_s=" << rg.params.min_no_detection_s << " stride=" << rg.params.stride
      << " iou_min=" << rg.params.iou_min << " track_gap_s=" << rg.params.track_gap_s;
    if (rg.group.kind == RoiKind::crossing) s << " min_disp_px=" << rg.group.min_disp_px;
    log("info", "analyze", s.str());
  }
  const AnalyzeResult r = analyze(store, a);
  for (const Json& g : r.report.at("groups")) {
    double total = 0;
    for (const Json& d : g.at("daily_totals")) total += d.at("total").get<double>();
    log("info", "analyze", g.at("group").get<std::string>() + ": " + Json(total).dump() + " counted over " +
                               std::to_string(g.at("daily_totals").size()) + " days");
  }
  log("info", "analyze", "digest " + analysis_digest(store));
}

void cmd_correlate(const Options& o) {
  const Store store(o.store);
  std::optional<absl::CivilDay> from, to;
  if (!o.from.empty()) from = parse_date(o.from);
  if (!o.to.empty()) to = parse_date(o.to);
  const CorrelationTable t = correlate(store, SeriesRoles{o.cro, o.sb, o.nb}, from, to);
  const std::string csv = correlation_csv(t);
  write_file(o.out, csv);
  write_file(store.analysis_dir() / "correlation.csv", csv);
  write_file(store.analysis_dir() / "correlation.json", to_json(t).dump(2) + "\n");
  log("info", "correlate", "wrote " + o.out);
}

void cmd_cutlist(const Options& o) {
  const auto manifests = make_cutlists(Store(o.store), o.pad_s, o.merge);
  std::size_t clips = 0;
  for (const auto& m : manifests) clips += m.clips.size();
  log("info", "cutlist", std::to_string(clips) + " clips in " + std::to_string(manifests.size()) + " manifests");
}

void cmd_render(const Options& o) {
  const RenderReport r =
      render_store_clips(Store(o.store), CutterTemplate{o.cutter}, worker_count(o.workers), o.extension);
  log("info", "render-clips",
      std::to_string(r.count(ClipStatus::rendered)) + " rendered, " +
          std::to_string(r.count(ClipStatus::skipped_existing)) + " skipped, " +
          std::to_string(r.count(ClipStatus::failed)) + " failed");
  if (r.count(ClipStatus::failed) > 0) throw Error("some clips failed to render; see clips/render_report.json");
}

void cmd_synth(const Options& o) {
  const synth::Scenario sc = synth::parse_scenario(slurp(o.scenario));
  const auto [det, truth] = synth::generate(sc);
  std::ostringstream body;
  write_detection_log(body, det.detections);
  write_file(o.out, body.str());
  fs::path stem(o.out);
  stem.replace_extension();
  write_file(stem.string() + ".meta.json", serialize_video_meta(sc.meta));
  write_file(stem.string() + ".roi.json", serialize_roi_config(sc.roi));
  write_file(stem.string() + ".truth.json", synth::to_json(truth).dump(2) + "\n");
  log("info", "synth",
      std::to_string(det.detections.size()) + " detections, " + std::to_string(truth.sessions.size()) +
          " truth sessions, " + std::to_string(truth.crossings.size()) + " truth crossings");
}

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--addr must be HOST:PORT");
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("--addr port is not a number");
  }
  if (port < 0 || port > 65535) throw ValidationError("--addr port out of range");
  return {addr.substr(0, colon), port};
}

void cmd_serve(const Options& o) {
  const auto [host, port] = split_addr(o.addr);
  ServiceOptions so;
  so.token_ttl = absl::Seconds(o.token_ttl_h * 3600);
  so.clip_extension = o.extension;
  ReviewService service(Store(o.store), UserDb::load(o.users), so);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  HttpServer server(service);
  const int bound = server.bind(host, port);
  log("info", "serve", "listening on " + host + ":" + std::to_string(bound));
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    log("info", "serve", "shutting down");
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
}

void cmd_passwd(const Options& o) {
  const auto role = role_from_string(o.role);
  if (!role) throw ValidationError("--role must be reviewer or admin");
  std::string password;
  std::getline(std::cin, password);
  if (password.empty()) throw ValidationError("empty password on standard input");
  UserDb db = fs::exists(o.users) ? UserDb::load(o.users) : UserDb{};
  db.upsert(o.user, password, *role);
  db.save(o.users);
  log("info", "passwd", "stored credentials for " + o.user);
}

void add_store(CLI::App* c, Options& o) {
  c->add_option("--store", o.store, "Store directory")->required();
}

void add_workers(CLI::App* c, Options& o) {
  c->add_option("--workers", o.workers, "Worker threads (0 = available parallelism)")->capture_default_str();
}

void add_roles(CLI::App* c, Options& o) {
  c->add_option("--cro", o.cro, "Crossing group for the CRO series");
  c->add_option("--sb", o.sb, "Dwell group for the #SB series");
  c->add_option("--nb", o.nb, "Dwell group for the #NB series");
}

}  // namespace

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>("Pedestrian activity analytics over traffic-camera detection logs", "pedwatch");
  app->require_subcommand(1);

  auto* ingest = app->add_subcommand("ingest", "Validate one video's detections, metadata and ROI into a store");
  ingest->add_option("--detections", o.detections, "Detection log (JSON lines)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--meta", o.meta, "Video metadata JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--roi", o.roi, "ROI configuration JSON")->required()->check(CLI::ExistingFile);
  add_store(ingest, o);
  ingest->add_option("--min-confidence", o.min_confidence, "Drop detections below this confidence")
      ->capture_default_str();

  auto* analyze = app->add_subcommand("analyze", "Infer events and hourly statistics for every stored video");
  add_store(analyze, o);
  analyze->add_option("--tz", o.tz, "Analysis time zone: IANA name or +HH:MM (default: first video's offset)");
  add_workers(analyze, o);
  analyze->add_option("--dwell-session-s", o.dwell_session_s, "Override min_session_time_s for dwell groups");
  analyze->add_option("--dwell-gap-s", o.dwell_gap_s, "Override min_no_detection_s for dwell groups");
  analyze->add_option("--crossing-session-s", o.crossing_session_s, "Override min_session_time_s for crossing groups");
  analyze->add_option("--crossing-gap-s", o.crossing_gap_s, "Override min_no_detection_s for crossing groups");
  analyze->add_option("--min-disp-px", o.min_disp_px, "Override the crossing displacement gate");
  analyze->add_option("--stride", o.stride, "Override the analyzed frame stride");
  analyze->add_option("--iou-min", o.iou_min, "Override the tracker IoU threshold");
  analyze->add_option("--track-gap-s", o.track_gap_s, "Override the tracker gap tolerance");
  add_roles(analyze, o);
  analyze->add_option("--boardings", o.boardings, "Boarding records CSV for the MAE report")
      ->check(CLI::ExistingFile);
  analyze->add_option("--boardings-group", o.boardings_group, "Dwell group compared against boardings");
  analyze->add_option("--boardings-stop", o.boardings_stop, "stop_id in the boardings file");

  auto* correlate = app->add_subcommand("correlate", "Write the CRO vs #SB/#NB/#BOTH correlation table");
  add_store(correlate, o);
  correlate->add_option("--out", o.out, "Output CSV path")->required();
  correlate->add_option("--from", o.from, "First date (YYYY-MM-DD)");
  correlate->add_option("--to", o.to, "Last date (YYYY-MM-DD)");
  add_roles(correlate, o);

  auto* cut = app->add_subcommand("cutlist", "Write clip manifests for the analyzed events");
  add_store(cut, o);
  cut->add_option("--pad-s", o.pad_s, "Seconds of padding around each event")->capture_default_str();
  cut->add_flag("--merge", o.merge, "Coalesce overlapping clips");

  auto* render = app->add_subcommand("render-clips", "Run an external cutter over the clip manifests");
  add_store(render, o);
  render->add_option("--cutter", o.cutter, "Command template with {source} {start_s} {duration_s} {output}")
      ->required();
  render->add_option("--ext", o.extension, "Clip file extension")->capture_default_str();
  add_workers(render, o);

  auto* synth = app->add_subcommand("synth", "Generate a detection log and ground truth from a scenario");
  synth->add_option("--scenario", o.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", o.out, "Output detection log; sidecars use the same stem")->required();

  auto* serve = app->add_subcommand("serve", "Run the review HTTP service");
  add_store(serve, o);
  serve->add_option("--addr", o.addr, "Listen address HOST:PORT")->capture_default_str();
  serve->add_option("--users", o.users, "Users file")->required()->check(CLI::ExistingFile);
  serve->add_option("--token-ttl-h", o.token_ttl_h, "Token lifetime in hours")->capture_default_str();
  serve->add_option("--ext", o.extension, "Clip file extension")->capture_default_str();

  auto* passwd = app->add_subcommand("passwd", "Add or replace a user; reads the password from standard input");
  passwd->add_option("--users", o.users, "Users file")->required();
  passwd->add_option("--user", o.user, "User name")->required();
  passwd->add_option("--role", o.role, "reviewer or admin")->capture_default_str();

  return app;
}

int run(int argc, const char* const* argv) {
  Options o;
  auto app = build_app(o);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app->exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app->exit(e);
  } catch (const CLI::ParseError& e) {
    app->exit(e);
    if (app->get_subcommands().empty()) std::cerr << app->help();
    return 2;
  }

  const CLI::App* sub = app->get_subcommands().front();
  const std::string stage = sub->get_name();
  try {
    if (stage == "ingest") cmd_ingest(o);
    else if (stage == "analyze") cmd_analyze(o);
    else if (stage == "correlate") cmd_correlate(o);
    else if (stage == "cutlist") cmd_cutlist(o);
    else if (stage == "render-clips") cmd_render(o);
    else if (stage == "synth") cmd_synth(o);
    else if (stage == "serve") cmd_serve(o);
    else if (stage == "passwd") cmd_passwd(o);
  } catch (const std::exception& e) {
    log("error", stage, e.what());
    return 1;
  }
  return 0;
}

}  // namespace pedwatch::cli
