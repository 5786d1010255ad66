#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "pedwatch/error.hpp"
#include "pedwatch/service.hpp"
#include "pedwatch/workflow.hpp"
#include "store_fixture.hpp"
#include "test_support.hpp"

using namespace pedwatch;

namespace {

struct Fixture {
  testsupport::TempDir dir;
  Store store{dir.path()};
  absl::Time now = absl::FromUnixSeconds(1'600'000'000);
  std::unique_ptr<ReviewService> svc;

  explicit Fixture(bool with_clips = true) {
    synth::Scenario s = testsupport::street_hour();
    s.meta.source_uri = (dir / "source.mp4").string();
    std::ofstream(s.meta.source_uri) << "video";
    testsupport::ingest_scenario(store, s);
    analyze(store, {});
    if (with_clips) {
      make_cutlists(store, 2.0, false);
      render_store_clips(store, CutterTemplate{"cut {source} {start_s} {duration_s} {output}"}, 1, ".mp4",
                         [](const std::string& cmd) {
                           const std::size_t b = cmd.rfind('\'', cmd.size() - 2);
                           const std::string out = cmd.substr(b + 1, cmd.size() - b - 2);
                           std::ofstream(out, std::ios::binary) << "clip bytes for " << out;
                           return 0;
                         });
    }
    UserDb users;
    users.upsert("ana", "pw-ana", Role::reviewer);
    users.upsert("bo", "pw-bo", Role::admin);
    ServiceOptions opt;
    opt.token_ttl = absl::Hours(1);
    opt.clock = [this] { return now; };
    svc = std::make_unique<ReviewService>(store, users, opt);
  }

  HttpResponse call(std::string method, std::string path, std::map<std::string, std::string> query = {},
                    std::string body = {}, std::string token = {}) {
    HttpRequest r{std::move(method), std::move(path), std::move(query), {}, std::move(body)};
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    return svc->handle(r);
  }

  std::string login(const std::string& user, const std::string& pw) {
    const HttpResponse r = call("POST", "/api/login", {}, Json{{"user", user}, {"password", pw}}.dump());
    REQUIRE(r.status == 200);
    return Json::parse(r.body).at("token").get<std::string>();
  }

  Json group_report(const std::string& name) {
    const Json report = store.load_json(store.report_path());
    for (const Json& g : report.at("groups")) {
      if (g.at("group") == name) return g;
    }
    return {};
  }
};

std::string error_code(const HttpResponse& r) { return Json::parse(r.body).at("error").at("code"); }

}  // namespace

TEST_CASE("login") {
  Fixture fx(false);
  const HttpResponse ok = fx.call("POST", "/api/login", {}, R"({"user":"ana","password":"pw-ana"})");
  CHECK(ok.status == 200);
  const Json j = Json::parse(ok.body);
  CHECK(j.at("role") == "reviewer");
  CHECK(j.at("token").get<std::string>().size() >= 32);

  const HttpResponse bad_pw = fx.call("POST", "/api/login", {}, R"({"user":"ana","password":"nope"})");
  const HttpResponse bad_user = fx.call("POST", "/api/login", {}, R"({"user":"zed","password":"nope"})");
  CHECK(bad_pw.status == 401);
  CHECK(bad_user.status == 401);
  CHECK(bad_pw.body == bad_user.body);
  CHECK(fx.call("POST", "/api/login", {}, "{").status == 400);
  CHECK(fx.call("GET", "/api/login").status == 405);
  CHECK(fx.call("GET", "/api/nothing").status == 404);
}

TEST_CASE("every protected route rejects missing and expired tokens") {
  Fixture fx(false);
  const std::string token = fx.login("ana", "pw-ana");
  for (const RouteSpec& r : ReviewService::routes()) {
    if (!r.requires_auth) continue;
    const HttpResponse none = fx.call(r.method, r.sample);
    CHECK_MESSAGE(none.status == 401, r.sample);
    CHECK(error_code(none) == "unauthenticated");
    CHECK(fx.call(r.method, r.sample, {}, {}, "forged").status == 401);
  }
  fx.now += absl::Minutes(59);
  CHECK(fx.call("GET", "/api/correlation", {}, {}, token).status != 401);
  fx.now += absl::Minutes(2);
  for (const RouteSpec& r : ReviewService::routes()) {
    if (r.requires_auth) CHECK_MESSAGE(fx.call(r.method, r.sample, {}, {}, token).status == 401, r.sample);
  }
}

TEST_CASE("summary equals the analysis report") {
  Fixture fx(false);
  const std::string token = fx.login("ana", "pw-ana");
  for (const char* g : {"sb_stop", "nb_stop", "median"}) {
    const HttpResponse r = fx.call("GET", "/api/summary", {{"group", g}}, {}, token);
    REQUIRE(r.status == 200);
    CHECK(r.body == fx.group_report(g).dump());
  }
  const HttpResponse other_day =
      fx.call("GET", "/api/summary", {{"group", "sb_stop"}, {"from", "2019-03-05"}}, {}, token);
  CHECK(Json::parse(other_day.body).at("event_count") == 0);
  CHECK(fx.call("GET", "/api/summary", {{"group", "zz"}}, {}, token).status == 404);
  CHECK(fx.call("GET", "/api/summary", {}, {}, token).status == 400);
  CHECK(fx.call("GET", "/api/summary", {{"group", "sb_stop"}, {"from", "March"}}, {}, token).status == 400);
}

TEST_CASE("events by date and hour") {
  Fixture fx;
  const std::string token = fx.login("ana", "pw-ana");
  const HttpResponse r =
      fx.call("GET", "/api/events", {{"group", "sb_stop"}, {"date", "2019-03-04"}, {"hour", "10"}}, {}, token);
  REQUIRE(r.status == 200);
  const Json j = Json::parse(r.body);
  REQUIRE(j.at("events").size() == 2);
  const Json& first = j.at("events")[0];
  CHECK(first.at("clip").at("output_name").get<std::string>().starts_with("cam-12_2019-03-04_"));
  CHECK(first.at("verdicts").empty());
  CHECK(first.at("session").at("f_b") < j.at("events")[1].at("session").at("f_b"));

  const HttpResponse empty =
      fx.call("GET", "/api/events", {{"group", "sb_stop"}, {"date", "2019-03-04"}, {"hour", "11"}}, {}, token);
  CHECK(Json::parse(empty.body).at("events").empty());
  CHECK(fx.call("GET", "/api/events", {{"group", "sb_stop"}, {"date", "2019-03-04"}, {"hour", "24"}}, {}, token)
            .status == 400);
  CHECK(fx.call("GET", "/api/events", {{"group", "x"}, {"date", "2019-03-04"}, {"hour", "10"}}, {}, token).status ==
        404);
}

TEST_CASE("verdicts: latest per reviewer wins, history is kept") {
  Fixture fx(false);
  const std::string ana = fx.login("ana", "pw-ana");
  const std::string bo = fx.login("bo", "pw-bo");
  const std::string id = fx.store.load_events().front().event_id;
  const std::string path = "/api/events/" + id + "/verdict";

  HttpResponse r = fx.call("POST", path, {}, R"({"verdict":"unsure"})", ana);
  CHECK(r.status == 201);
  fx.now += absl::Seconds(5);
  r = fx.call("POST", path, {}, R"({"verdict":"confirmed","note":"two people"})", ana);
  CHECK(Json::parse(r.body).at("reviewer") == "ana");
  fx.call("POST", path, {}, R"({"verdict":"false_positive"})", bo);

  const auto latest = fx.svc->annotations().latest(id);
  REQUIRE(latest.size() == 2);
  CHECK(latest[0].reviewer == "ana");
  CHECK(latest[0].verdict == Verdict::confirmed);
  CHECK(latest[0].note == "two people");
  CHECK(latest[1].verdict == Verdict::false_positive);
  CHECK(fx.svc->annotations().history(id).size() == 3);

  CHECK(fx.call("POST", path, {}, R"({"verdict":"maybe"})", ana).status == 400);
  CHECK(fx.call("POST", path, {}, "[]", ana).status == 400);
  CHECK(fx.call("POST", "/api/events/nope/verdict", {}, R"({"verdict":"unsure"})", ana).status == 404);
  CHECK(fx.svc->annotations().size() == 3);

  // Replay of the file reconstructs the same state.
  const auto replayed = AnnotationLog::replay(fx.store.annotations_path());
  CHECK(replayed.size() == 2);
  CHECK(replayed.at({id, "ana"}) == latest[0]);
  CHECK(replayed.at({id, "bo"}) == latest[1]);
  const AnnotationLog reopened(fx.store.annotations_path());
  CHECK(reopened.latest(id) == latest);
}

TEST_CASE("two reviewers annotating concurrently") {
  Fixture fx(false);
  const std::string ana = fx.login("ana", "pw-ana");
  const std::string bo = fx.login("bo", "pw-bo");
  const auto events = fx.store.load_events();
  auto worker = [&](const std::string& token, const char* verdict) {
    for (int i = 0; i < 40; ++i) {
      const std::string& id = events[i % events.size()].event_id;
      HttpRequest r{"POST", "/api/events/" + id + "/verdict", {}, {{"authorization", "Bearer " + token}},
                    Json{{"verdict", verdict}, {"note", std::to_string(i)}}.dump()};
      CHECK(fx.svc->handle(r).status == 201);
    }
  };
  {
    std::jthread a(worker, ana, "confirmed");
    std::jthread b(worker, bo, "false_positive");
  }
  CHECK(fx.svc->annotations().size() == 80);
  const auto replayed = AnnotationLog::replay(fx.store.annotations_path());
  CHECK(replayed.size() == 2 * events.size());
  for (const ActivityEvent& e : events) {
    for (const Annotation& a : fx.svc->annotations().latest(e.event_id)) {
      CHECK(replayed.at({e.event_id, a.reviewer}) == a);
    }
  }
}

TEST_CASE("repeated reads are identical") {
  Fixture fx;
  const std::string token = fx.login("ana", "pw-ana");
  const std::map<std::string, std::string> q{{"group", "median"}, {"date", "2019-03-04"}, {"hour", "10"}};
  const HttpResponse a = fx.call("GET", "/api/events", q, {}, token);
  const HttpResponse b = fx.call("GET", "/api/events", q, {}, token);
  CHECK(a.body == b.body);
  CHECK(fx.call("GET", "/api/correlation", {}, {}, token).body ==
        fx.call("GET", "/api/correlation", {}, {}, token).body);
}

TEST_CASE("clips") {
  Fixture fx;
  const std::string token = fx.login("ana", "pw-ana");
  const std::string id = fx.store.load_events().front().event_id;
  const HttpResponse r = fx.call("GET", "/api/clips/" + id, {}, {}, token);
  REQUIRE(r.status == 200);
  REQUIRE(r.file);
  CHECK(r.content_type == "video/mp4");
  CHECK(fx.call("GET", "/api/clips/nope", {}, {}, token).status == 404);

  std::filesystem::remove(*r.file);
  const HttpResponse gone = fx.call("GET", "/api/clips/" + id, {}, {}, token);
  CHECK(gone.status == 404);
  CHECK(error_code(gone) == "clip_not_rendered");
  CHECK(clip_media_type("a.webm") == "video/webm");
  CHECK(clip_media_type("a.bin") == "application/octet-stream");
}

TEST_CASE("http front end") {
  Fixture fx;
  HttpServer server(*fx.svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::jthread t([&] { server.listen(); });

  httplib::Client cli("127.0.0.1", port);
  auto login = cli.Post("/api/login", R"({"user":"bo","password":"pw-bo"})", "application/json");
  REQUIRE(login);
  CHECK(login->status == 200);
  const std::string token = Json::parse(login->body).at("token");
  const httplib::Headers auth{{"Authorization", "Bearer " + token}};

  auto unauth = cli.Get("/api/correlation");
  REQUIRE(unauth);
  CHECK(unauth->status == 401);

  auto summary = cli.Get("/api/summary?group=nb_stop", auth);
  REQUIRE(summary);
  CHECK(summary->body == fx.group_report("nb_stop").dump());

  const std::string id = fx.store.load_events().front().event_id;
  const HttpResponse direct = fx.call("GET", "/api/clips/" + id, {}, {}, token);
  const std::string bytes = testsupport::slurp(*direct.file);
  auto clip = cli.Get("/api/clips/" + id, auth);
  REQUIRE(clip);
  CHECK(clip->status == 200);
  CHECK(clip->body == bytes);
  CHECK(clip->get_header_value("Content-Type") == "video/mp4");

  httplib::Headers ranged = auth;
  ranged.emplace("Range", "bytes=0-3");
  auto part = cli.Get("/api/clips/" + id, ranged);
  REQUIRE(part);
  CHECK(part->status == 206);
  CHECK(part->body == bytes.substr(0, 4));

  auto verdict = cli.Post("/api/events/" + id + "/verdict", auth, R"({"verdict":"confirmed"})", "application/json");
  REQUIRE(verdict);
  CHECK(verdict->status == 201);

  server.stop();
}
