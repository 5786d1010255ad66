#pragma once

// Review service: authenticated read access to an analyzed store plus
// verdict persistence. ReviewService is transport-free; HttpServer binds it
// to cpp-httplib.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pedwatch/annotations.hpp"
#include "pedwatch/auth.hpp"
#include "pedwatch/store.hpp"

namespace pedwatch {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // keys lower-case
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  /// Set instead of `body` for file downloads.
  std::optional<fs::path> file;
};

/// One entry of the routing table. `sample` is a concrete path matching
/// `pattern`, used by tests that walk every route.
struct RouteSpec {
  std::string method;
  std::string pattern;
  std::string sample;
  bool requires_auth = true;
};

struct ServiceOptions {
  absl::Duration token_ttl = absl::Hours(12);
  TokenStore::Clock clock = [] { return absl::Now(); };
  std::string clip_extension = ".mp4";
};

class ReviewService {
 public:
  ReviewService(Store store, UserDb users, ServiceOptions options = {});

  HttpResponse handle(const HttpRequest& request);

  static const std::vector<RouteSpec>& routes();

  /// Re-reads events, report and manifests from the store.
  void reload();

  const AnnotationLog& annotations() const noexcept { return *annotations_; }

 private:
  struct Snapshot {
    std::vector<StoredVideo> videos;
    Json report;
    std::vector<ActivityEvent> events;
    std::vector<Json> event_json;
    std::map<std::string, std::size_t> event_index;
    std::vector<ClipManifest> manifests;
  };

  using Handler = HttpResponse (ReviewService::*)(const HttpRequest&, const std::smatch&, const TokenInfo&);

  HttpResponse login(const HttpRequest& req);
  HttpResponse summary(const HttpRequest& req, const std::smatch& m, const TokenInfo& who);
  HttpResponse events(const HttpRequest& req, const std::smatch& m, const TokenInfo& who);
  HttpResponse verdict(const HttpRequest& req, const std::smatch& m, const TokenInfo& who);
  HttpResponse clip(const HttpRequest& req, const std::smatch& m, const TokenInfo& who);
  HttpResponse correlation(const HttpRequest& req, const std::smatch& m, const TokenInfo& who);

  std::shared_ptr<const Snapshot> snapshot() const;
  const ManifestEntry* find_clip(const Snapshot& s, const std::string& event_id) const;
  Json event_view(const Snapshot& s, std::size_t index) const;

  Store store_;
  UserDb users_;
  ServiceOptions options_;
  TokenStore tokens_;
  std::unique_ptr<AnnotationLog> annotations_;
  mutable std::shared_mutex snap_mu_;
  std::shared_ptr<const Snapshot> snap_;
};

HttpResponse error_response(int status, std::string_view code, std::string_view message);

/// MIME type for a clip file name.
std::string clip_media_type(const fs::path& file);

/// Blocking HTTP front end for a ReviewService.
class HttpServer {
 public:
  explicit HttpServer(ReviewService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pedwatch
