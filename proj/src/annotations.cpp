#include "pedwatch/annotations.hpp"

#include <fstream>

#include "pedwatch/error.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::confirmed: return "confirmed";
    case Verdict::false_positive: return "false_positive";
    case Verdict::unsure: break;
  }
  return "unsure";
}

std::optional<Verdict> verdict_from_string(std::string_view s) noexcept {
  if (s == "confirmed") return Verdict::confirmed;
  if (s == "false_positive") return Verdict::false_positive;
  if (s == "unsure") return Verdict::unsure;
  return std::nullopt;
}

Json to_json(const Annotation& a) {
  return Json{{"event_id", a.event_id},
              {"verdict", to_string(a.verdict)},
              {"note", a.note},
              {"reviewer", a.reviewer},
              {"ts", format_rfc3339(a.ts, 0)}};
}

Annotation annotation_from_json(const Json& j) {
  Annotation a;
  a.event_id = j.at("event_id").get<std::string>();
  auto v = verdict_from_string(j.at("verdict").get<std::string>());
  if (!v) throw ValidationError("unknown verdict in annotation log");
  a.verdict = *v;
  a.note = j.value("note", std::string{});
  a.reviewer = j.at("reviewer").get<std::string>();
  a.ts = parse_rfc3339(j.at("ts").get<std::string>()).first;
  return a;
}

std::map<std::pair<std::string, std::string>, Annotation> AnnotationLog::replay(const std::filesystem::path& path) {
  std::map<std::pair<std::string, std::string>, Annotation> state;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Annotation a = annotation_from_json(Json::parse(line));
    state[{a.event_id, a.reviewer}] = std::move(a);
  }
  return state;
}

AnnotationLog::AnnotationLog(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError(line_no, "", "annotation log record is not JSON");
    records_.push_back(annotation_from_json(j));
    latest_[{records_.back().event_id, records_.back().reviewer}] = records_.size() - 1;
  }
}

void AnnotationLog::append(const Annotation& a) {
  std::lock_guard writer(write_mu_);
  {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    out << to_json(a).dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot append to " + path_.string());
  }
  std::unique_lock lock(mu_);
  records_.push_back(a);
  latest_[{a.event_id, a.reviewer}] = records_.size() - 1;
}

std::vector<Annotation> AnnotationLog::latest(const std::string& event_id) const {
  std::shared_lock lock(mu_);
  std::vector<Annotation> out;
  for (auto it = latest_.lower_bound({event_id, ""}); it != latest_.end() && it->first.first == event_id; ++it) {
    out.push_back(records_[it->second]);
  }
  return out;
}

std::vector<Annotation> AnnotationLog::history(const std::string& event_id) const {
  std::shared_lock lock(mu_);
  std::vector<Annotation> out;
  for (const Annotation& a : records_) {
    if (a.event_id == event_id) out.push_back(a);
  }
  return out;
}

std::size_t AnnotationLog::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

}  // namespace pedwatch
