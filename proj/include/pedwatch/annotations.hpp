#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <absl/time/time.h>

#include "pedwatch/json.hpp"

namespace pedwatch {

enum class Verdict { confirmed, false_positive, unsure };

std::string_view to_string(Verdict v) noexcept;
std::optional<Verdict> verdict_from_string(std::string_view s) noexcept;

struct Annotation {
  std::string event_id;
  Verdict verdict = Verdict::unsure;
  std::string note;
  std::string reviewer;
  absl::Time ts;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

Json to_json(const Annotation& a);
Annotation annotation_from_json(const Json& j);

/// Append-only verdict log. The current state (latest annotation per event
/// and reviewer) is rebuilt by replaying the file on open.
class AnnotationLog {
 public:
  explicit AnnotationLog(std::filesystem::path path);

  /// Appends, flushes, then publishes to readers.
  void append(const Annotation& a);

  /// Latest annotation per reviewer for `event_id`, ordered by reviewer.
  std::vector<Annotation> latest(const std::string& event_id) const;
  std::vector<Annotation> history(const std::string& event_id) const;
  std::size_t size() const;

  /// (event_id, reviewer) -> latest verdict, computed by a fresh replay of
  /// `path`.
  static std::map<std::pair<std::string, std::string>, Annotation> replay(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::mutex write_mu_;
  std::vector<Annotation> records_;
  std::map<std::pair<std::string, std::string>, std::size_t> latest_;
};

}  // namespace pedwatch
