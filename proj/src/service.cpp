#include "pedwatch/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <fstream>

#include "pedwatch/error.hpp"
#include "pedwatch/time.hpp"
#include "pedwatch/workflow.hpp"

namespace pedwatch {

namespace {

constexpr std::string_view kBadCredentials = "invalid user name or password";

HttpResponse json_response(const Json& j, int status = 200) {
  HttpResponse r;
  r.status = status;
  r.body = j.dump();
  return r;
}

std::optional<std::string> query_param(const HttpRequest& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::string require_param(const HttpRequest& req, const std::string& key) {
  auto v = query_param(req, key);
  if (!v) throw ValidationError("missing query parameter '" + key + "'");
  return *v;
}

std::optional<absl::CivilDay> date_param(const HttpRequest& req, const std::string& key) {
  auto v = query_param(req, key);
  if (!v) return std::nullopt;
  return parse_date(*v);
}

int hour_param(const std::string& text) {
  int h = -1;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), h);
  if (ec != std::errc{} || ptr != text.data() + text.size() || h < 0 || h > 23) {
    throw ValidationError("hour must be an integer in 0..23");
  }
  return h;
}

std::optional<std::string> bearer_token(const HttpRequest& req) {
  auto it = req.headers.find("authorization");
  if (it == req.headers.end()) return std::nullopt;
  constexpr std::string_view prefix = "Bearer ";
  if (!it->second.starts_with(prefix)) return std::nullopt;
  return it->second.substr(prefix.size());
}

int video_offset(const std::vector<StoredVideo>& videos, const std::string& event_id) {
  for (const StoredVideo& v : videos) {
    if (event_id.starts_with(v.key + "_")) return v.meta.utc_offset_s;
  }
  return 0;
}

}  // namespace

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return json_response(Json{{"error", Json{{"code", code}, {"message", message}}}}, status);
}

std::string clip_media_type(const fs::path& file) {
  const std::string ext = file.extension().string();
  if (ext == ".mp4" || ext == ".m4v") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".mkv") return "video/x-matroska";
  if (ext == ".avi") return "video/x-msvideo";
  if (ext == ".mov") return "video/quicktime";
  return "application/octet-stream";
}

const std::vector<RouteSpec>& ReviewService::routes() {
  static const std::vector<RouteSpec> table{
      {"POST", R"(/api/login)", "/api/login", false},
      {"GET", R"(/api/summary)", "/api/summary", true},
      {"GET", R"(/api/events)", "/api/events", true},
      {"POST", R"(/api/events/([^/]+)/verdict)", "/api/events/x/verdict", true},
      {"GET", R"(/api/clips/([^/]+))", "/api/clips/x", true},
      {"GET", R"(/api/correlation)", "/api/correlation", true},
  };
  return table;
}

ReviewService::ReviewService(Store store, UserDb users, ServiceOptions options)
    : store_(std::move(store)),
      users_(std::move(users)),
      options_(std::move(options)),
      tokens_(options_.token_ttl, options_.clock),
      annotations_(std::make_unique<AnnotationLog>(store_.annotations_path())) {
  reload();
}

void ReviewService::reload() {
  auto s = std::make_shared<Snapshot>();
  s->videos = store_.videos();
  s->report = store_.load_json(store_.report_path());
  std::ifstream in(store_.events_path());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    s->events.push_back(activity_event_from_json(j));
    s->event_json.push_back(std::move(j));
  }
  for (std::size_t i = 0; i < s->events.size(); ++i) s->event_index[s->events[i].event_id] = i;
  s->manifests = store_.load_manifests();
  std::unique_lock lock(snap_mu_);
  snap_ = std::move(s);
}

std::shared_ptr<const ReviewService::Snapshot> ReviewService::snapshot() const {
  std::shared_lock lock(snap_mu_);
  return snap_;
}

HttpResponse ReviewService::handle(const HttpRequest& request) {
  static const std::vector<std::pair<std::regex, Handler>> compiled = [] {
    std::vector<std::pair<std::regex, Handler>> out;
    const Handler handlers[] = {nullptr,
                                &ReviewService::summary,
                                &ReviewService::events,
                                &ReviewService::verdict,
                                &ReviewService::clip,
                                &ReviewService::correlation};
    for (std::size_t i = 0; i < routes().size(); ++i) out.emplace_back(std::regex(routes()[i].pattern), handlers[i]);
    return out;
  }();

  try {
    bool path_known = false;
    for (std::size_t i = 0; i < routes().size(); ++i) {
      std::smatch m;
      if (!std::regex_match(request.path, m, compiled[i].first)) continue;
      path_known = true;
      if (routes()[i].method != request.method) continue;
      if (!routes()[i].requires_auth) return login(request);
      const auto token = bearer_token(request);
      if (!token) return error_response(401, "unauthenticated", "missing bearer token");
      const auto who = tokens_.check(*token);
      if (!who) return error_response(401, "unauthenticated", "token is invalid or expired; log in again");
      return (this->*compiled[i].second)(request, m, *who);
    }
    if (path_known) return error_response(405, "method_not_allowed", "method not allowed on " + request.path);
    return error_response(404, "not_found", "no route for " + request.path);
  } catch (const NotFoundError& e) {
    return error_response(404, "not_found", e.what());
  } catch (const ValidationError& e) {
    return error_response(400, "validation", e.what());
  } catch (const Json::exception& e) {
    return error_response(400, "validation", std::string("malformed request body: ") + e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

HttpResponse ReviewService::login(const HttpRequest& req) {
  const Json body = Json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("user") || !body.contains("password") ||
      !body["user"].is_string() || !body["password"].is_string()) {
    throw ValidationError("login body must be {\"user\": string, \"password\": string}");
  }
  const std::string user = body["user"].get<std::string>();
  const auto role = users_.verify(user, body["password"].get<std::string>());
  if (!role) return error_response(401, "invalid_credentials", kBadCredentials);
  const std::string token = tokens_.issue(user, *role);
  return json_response(Json{{"token", token},
                            {"user", user},
                            {"role", to_string(*role)},
                            {"expires_at", format_rfc3339(options_.clock() + options_.token_ttl, 0)}});
}

HttpResponse ReviewService::summary(const HttpRequest& req, const std::smatch&, const TokenInfo&) {
  const std::string group = require_param(req, "group");
  const auto from = date_param(req, "from");
  const auto to = date_param(req, "to");
  if (from && to && *from > *to) throw ValidationError("'from' is after 'to'");
  const auto s = snapshot();
  for (const Json& g : s->report.at("groups")) {
    if (g.at("group") != group) continue;
    RecordingWindow window = window_from_json(g.at("window"));
    if (from || to) window = window.restrict(from.value_or(absl::CivilDay::min()), to.value_or(absl::CivilDay::max()));
    std::vector<ActivityEvent> evs;
    for (const ActivityEvent& e : s->events) {
      if (e.session.roi_group == group && window.contains(e.date, e.hour)) evs.push_back(e);
    }
    const RoiKind kind = g.at("kind") == "crossing" ? RoiKind::crossing : RoiKind::dwell;
    return json_response(summarize(group, kind, evs, window));
  }
  throw NotFoundError("unknown group '" + group + "'");
}

const ManifestEntry* ReviewService::find_clip(const Snapshot& s, const std::string& event_id) const {
  for (const ClipManifest& m : s.manifests) {
    if (const ManifestEntry* e = m.find(event_id)) return e;
  }
  return nullptr;
}

Json ReviewService::event_view(const Snapshot& s, std::size_t index) const {
  Json j = s.event_json[index];
  const std::string& id = s.events[index].event_id;
  if (const ManifestEntry* entry = find_clip(s, id)) {
    j["clip"] = to_json(entry->clip, video_offset(s.videos, id));
  }
  Json verdicts = Json::array();
  for (const Annotation& a : annotations_->latest(id)) verdicts.push_back(to_json(a));
  j["verdicts"] = std::move(verdicts);
  return j;
}

HttpResponse ReviewService::events(const HttpRequest& req, const std::smatch&, const TokenInfo&) {
  const absl::CivilDay date = parse_date(require_param(req, "date"));
  const int hour = hour_param(require_param(req, "hour"));
  const std::string group = require_param(req, "group");
  const auto s = snapshot();
  bool known = false;
  for (const Json& g : s->report.at("groups")) known = known || g.at("group") == group;
  if (!known) throw NotFoundError("unknown group '" + group + "'");

  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < s->events.size(); ++i) {
    const ActivityEvent& e = s->events[i];
    if (e.session.roi_group == group && e.date == date && e.hour == hour) hits.push_back(i);
  }
  std::stable_sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
    const ActivityEvent& x = s->events[a];
    const ActivityEvent& y = s->events[b];
    if (x.session.t_b != y.session.t_b) return x.session.t_b < y.session.t_b;
    if (x.session.f_b != y.session.f_b) return x.session.f_b < y.session.f_b;
    return x.event_id < y.event_id;
  });
  Json rows = Json::array();
  for (std::size_t i : hits) rows.push_back(event_view(*s, i));
  return json_response(
      Json{{"group", group}, {"date", format_date(date)}, {"hour", hour}, {"events", std::move(rows)}});
}

HttpResponse ReviewService::verdict(const HttpRequest& req, const std::smatch& m, const TokenInfo& who) {
  const std::string id = m[1].str();
  const auto s = snapshot();
  if (!s->event_index.contains(id)) throw NotFoundError("unknown event '" + id + "'");
  const Json body = Json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("verdict") || !body["verdict"].is_string()) {
    throw ValidationError("verdict body must be {\"verdict\": string, \"note\": string}");
  }
  const auto v = verdict_from_string(body["verdict"].get<std::string>());
  if (!v) throw ValidationError("verdict must be one of confirmed, false_positive, unsure");
  Annotation a;
  a.event_id = id;
  a.verdict = *v;
  if (auto it = body.find("note"); it != body.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("note must be a string");
    a.note = it->get<std::string>();
  }
  a.reviewer = who.user;
  a.ts = absl::FromUnixMillis(absl::ToUnixMillis(options_.clock()));
  annotations_->append(a);
  return json_response(to_json(a), 201);
}

HttpResponse ReviewService::clip(const HttpRequest&, const std::smatch& m, const TokenInfo&) {
  const std::string id = m[1].str();
  const auto s = snapshot();
  if (!s->event_index.contains(id)) throw NotFoundError("unknown event '" + id + "'");
  const ManifestEntry* entry = find_clip(*s, id);
  const fs::path file = entry ? store_.clip_files_dir() / (entry->clip.output_name + options_.clip_extension) : fs::path{};
  if (!entry || !fs::is_regular_file(file)) {
    HttpResponse r = error_response(404, "clip_not_rendered",
                                    "clip for '" + id + "' is not rendered yet; run cutlist and render-clips, then retry");
    return r;
  }
  HttpResponse r;
  r.content_type = clip_media_type(file);
  r.file = file;
  return r;
}

HttpResponse ReviewService::correlation(const HttpRequest& req, const std::smatch&, const TokenInfo&) {
  const auto from = date_param(req, "from");
  const auto to = date_param(req, "to");
  return json_response(to_json(correlate(store_, {}, from, to)));
}

struct HttpServer::Impl {
  ReviewService& service;
  httplib::Server server;

  explicit Impl(ReviewService& s) : service(s) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      HttpRequest r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.query.emplace(k, v);
      for (const auto& [k, v] : req.headers) {
        std::string key = k;
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        r.headers.emplace(std::move(key), v);
      }
      r.body = req.body;
      HttpResponse out = service.handle(r);
      // Left unset on success so httplib can answer Range requests with 206.
      if (out.status != 200) res.status = out.status;
      if (!out.file) {
        res.set_content(out.body, out.content_type);
        return;
      }
      const auto size = static_cast<std::size_t>(fs::file_size(*out.file));
      auto stream = std::make_shared<std::ifstream>(*out.file, std::ios::binary);
      res.set_content_provider(size, out.content_type,
                               [stream](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
                                 std::vector<char> buf(std::min<std::size_t>(length, 64 * 1024));
                                 stream->clear();
                                 stream->seekg(static_cast<std::streamoff>(offset));
                                 stream->read(buf.data(), static_cast<std::streamsize>(buf.size()));
                                 const auto got = static_cast<std::size_t>(stream->gcount());
                                 return got > 0 && sink.write(buf.data(), got);
                               });
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
  }
};

HttpServer::HttpServer(ReviewService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace pedwatch
