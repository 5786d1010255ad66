#include "pedwatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch::synth {

std::string_view to_string(Behavior b) noexcept {
  switch (b) {
    case Behavior::wait: return "wait";
    case Behavior::cross: return "cross";
    case Behavior::pass_by: break;
  }
  return "pass_by";
}

namespace {

Point centroid(const Polygon& poly) {
  Point c;
  for (const Point& p : poly) {
    c.x += p.x;
    c.y += p.y;
  }
  return Point{c.x / static_cast<double>(poly.size()), c.y / static_cast<double>(poly.size())};
}

Point point_from(const Json& j) { return Point{j.at(0).get<double>(), j.at(1).get<double>()}; }

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 agent_rng(std::uint64_t seed, std::size_t agent) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(agent)};
  return std::mt19937_64(seq);
}

bool occluded(const AgentScript& a, double t) {
  return std::any_of(a.occlusions.begin(), a.occlusions.end(),
                     [&](const auto& o) { return t >= o.first && t < o.first + o.second; });
}

std::vector<FrameSpan> runs(const std::vector<char>& mask, FrameIndex origin, const std::vector<std::size_t>& count) {
  std::vector<FrameSpan> out;
  for (std::size_t i = 0; i < mask.size();) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t dets = 0;
    while (j < mask.size() && mask[j]) dets += count[j++];
    out.push_back(FrameSpan{origin + static_cast<FrameIndex>(i), origin + static_cast<FrameIndex>(j - 1), dets});
    i = j;
  }
  return out;
}

// Fills non-member frames g whose nearest members on both sides satisfy
// `bridge(prev, next)`.
template <typename Bridge>
std::vector<char> bridge_gaps(const std::vector<char>& member, Bridge bridge) {
  const std::size_t n = member.size();
  std::vector<std::ptrdiff_t> prev(n, -1), next(n, -1);
  std::ptrdiff_t last = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (member[i]) last = static_cast<std::ptrdiff_t>(i);
    prev[i] = last;
  }
  last = -1;
  for (std::size_t i = n; i-- > 0;) {
    if (member[i]) last = static_cast<std::ptrdiff_t>(i);
    next[i] = last;
  }
  std::vector<char> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = member[i] || (prev[i] >= 0 && next[i] >= 0 && bridge(next[i] - prev[i]));
  }
  return out;
}

}  // namespace

void validate(const Scenario& s) {
  pedwatch::validate(s.meta);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentScript& a = s.agents[i];
    const std::string who = "agent " + std::to_string(i);
    if (!(a.duration_s > 0)) throw ValidationError(who + ": duration_s must be positive");
    if (!(a.start_s >= 0)) throw ValidationError(who + ": start_s must be non-negative");
    if (!(a.dropout >= 0 && a.dropout <= 1)) throw ValidationError(who + ": dropout must lie in [0,1]");
    if (!(a.dropout_burst_s >= 0)) throw ValidationError(who + ": dropout_burst_s must be non-negative");
    if (!(a.box_size > 0)) throw ValidationError(who + ": box_size must be positive");
    if (!(a.jitter_px >= 0)) throw ValidationError(who + ": jitter_px must be non-negative");
    if (a.behavior == Behavior::wait) {
      if (!s.roi.find(a.roi)) throw ValidationError(who + ": unknown ROI group '" + a.roi + "'");
    } else if (a.path.size() < 2) {
      throw ValidationError(who + ": path needs at least two points");
    }
  }
}

Scenario parse_scenario(std::string_view document) {
  Json j = Json::parse(document, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("scenario is not a JSON object");
  Scenario s;
  try {
    s.meta = video_meta_from_json(j.at("meta"));
    s.roi = parse_roi_config(j.at("roi").dump());
    s.seed = j.value("seed", std::uint64_t{0});
    for (const Json& a : j.at("agents")) {
      AgentScript agent;
      const std::string behavior = a.at("behavior").get<std::string>();
      if (behavior == "wait") {
        agent.behavior = Behavior::wait;
      } else if (behavior == "cross") {
        agent.behavior = Behavior::cross;
      } else if (behavior == "pass_by") {
        agent.behavior = Behavior::pass_by;
      } else {
        throw ValidationError("unknown behavior '" + behavior + "'");
      }
      agent.roi = a.value("roi", std::string{});
      if (auto it = a.find("position"); it != a.end() && !it->is_null()) agent.position = point_from(*it);
      if (auto it = a.find("path"); it != a.end()) {
        for (const Json& p : *it) agent.path.push_back(point_from(p));
      }
      agent.start_s = a.at("start_s").get<double>();
      agent.duration_s = a.at("duration_s").get<double>();
      agent.dropout = a.value("dropout", 0.0);
      agent.dropout_burst_s = a.value("dropout_burst_s", 0.0);
      agent.box_size = a.value("box_size", 40.0);
      agent.jitter_px = a.value("jitter_px", 0.0);
      if (auto it = a.find("occlusions"); it != a.end()) {
        for (const Json& o : *it) agent.occlusions.emplace_back(o.at(0).get<double>(), o.at(1).get<double>());
      }
      s.agents.push_back(std::move(agent));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  validate(s);
  return s;
}

Json to_json(const Scenario& s) {
  Json agents = Json::array();
  for (const AgentScript& a : s.agents) {
    Json j{{"behavior", to_string(a.behavior)},
           {"start_s", a.start_s},
           {"duration_s", a.duration_s},
           {"dropout", a.dropout},
           {"dropout_burst_s", a.dropout_burst_s},
           {"box_size", a.box_size},
           {"jitter_px", a.jitter_px}};
    if (!a.roi.empty()) j["roi"] = a.roi;
    if (a.position) j["position"] = {a.position->x, a.position->y};
    if (!a.path.empty()) {
      Json path = Json::array();
      for (const Point& p : a.path) path.push_back({p.x, p.y});
      j["path"] = std::move(path);
    }
    if (!a.occlusions.empty()) {
      Json occ = Json::array();
      for (const auto& [start, dur] : a.occlusions) occ.push_back({start, dur});
      j["occlusions"] = std::move(occ);
    }
    agents.push_back(std::move(j));
  }
  return Json{{"meta", to_json(s.meta)}, {"roi", to_json(s.roi)}, {"seed", s.seed}, {"agents", std::move(agents)}};
}

Json to_json(const GroundTruth& truth) {
  Json sessions = Json::array();
  for (const TruthSession& s : truth.sessions) {
    sessions.push_back(
        Json{{"group", s.group}, {"f_b", s.f_b}, {"f_e", s.f_e}, {"persons", s.persons}, {"agents", s.agents}});
  }
  Json crossings = Json::array();
  for (const TruthCrossing& c : truth.crossings) {
    crossings.push_back(Json{{"group", c.group},
                             {"agent", c.agent},
                             {"f_b", c.f_b},
                             {"f_e", c.f_e},
                             {"date", format_date(c.date)},
                             {"hour", c.hour}});
  }
  return Json{{"sessions", std::move(sessions)}, {"crossings", std::move(crossings)}};
}

std::optional<Point> scripted_anchor(const AgentScript& agent, const Scenario& scenario, double t_s) {
  if (t_s < agent.start_s || t_s >= agent.start_s + agent.duration_s) return std::nullopt;
  if (agent.behavior == Behavior::wait) {
    if (agent.position) return agent.position;
    const RoiGroup* g = scenario.roi.find(agent.roi);
    return centroid(g->polygons.front());
  }
  double total = 0;
  for (std::size_t i = 1; i < agent.path.size(); ++i) {
    total += std::hypot(agent.path[i].x - agent.path[i - 1].x, agent.path[i].y - agent.path[i - 1].y);
  }
  double remaining = total * (t_s - agent.start_s) / agent.duration_s;
  for (std::size_t i = 1; i < agent.path.size(); ++i) {
    const Point& a = agent.path[i - 1];
    const Point& b = agent.path[i];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (remaining <= len || i + 1 == agent.path.size()) {
      const double f = len > 0 ? std::min(1.0, remaining / len) : 0.0;
      return Point{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
    }
    remaining -= len;
  }
  return agent.path.back();
}

std::pair<DetectionLog, GroundTruth> generate(const Scenario& scenario) {
  validate(scenario);
  const VideoMeta& meta = scenario.meta;
  const std::size_t n_agents = scenario.agents.size();

  std::vector<std::mt19937_64> rngs;
  for (std::size_t a = 0; a < n_agents; ++a) rngs.push_back(agent_rng(scenario.seed, a));
  std::vector<FrameIndex> suppressed_until(n_agents, -1);

  // Frame range any agent can occupy.
  FrameIndex last = 0;
  for (const AgentScript& a : scenario.agents) {
    last = std::max(last, static_cast<FrameIndex>(std::ceil((a.start_s + a.duration_s) * meta.fps)));
  }
  last = std::min(last, meta.frame_count - 1);

  DetectionLog log{meta, {}};
  // Per group: exact (jitter-free) anchors of agents on screen, as detections.
  std::vector<std::vector<Detection>> presence(scenario.roi.groups.size());
  std::vector<std::vector<std::size_t>> presence_agent(scenario.roi.groups.size());

  for (FrameIndex f = 0; f <= last; f += meta.stride) {
    const double t = static_cast<double>(f) / meta.fps;
    for (std::size_t ai = 0; ai < n_agents; ++ai) {
      const AgentScript& a = scenario.agents[ai];
      const auto anchor = scripted_anchor(a, scenario, t);
      if (!anchor) continue;

      const double w = a.box_size / 2.0;
      const double h = a.box_size;
      for (std::size_t gi = 0; gi < scenario.roi.groups.size(); ++gi) {
        const RoiGroup& g = scenario.roi.groups[gi];
        if (g.target_label == Label::person && point_in_group(*anchor, g)) {
          presence[gi].push_back(
              Detection{f, Label::person, BBox{anchor->x - w / 2, anchor->y - h, anchor->x + w / 2, anchor->y}, 1.0});
          presence_agent[gi].push_back(ai);
        }
      }

      std::mt19937_64& rng = rngs[ai];
      // Draws happen every frame so that one agent's dropout settings do not
      // shift another agent's jitter.
      const double jx = (2 * unit(rng) - 1) * a.jitter_px;
      const double jy = (2 * unit(rng) - 1) * a.jitter_px;
      const double drop = unit(rng);
      if (f <= suppressed_until[ai] || occluded(a, t)) continue;
      if (a.dropout > 0 && drop < a.dropout) {
        const auto burst = std::max<FrameIndex>(1, std::llround(a.dropout_burst_s * meta.fps));
        suppressed_until[ai] = f + burst - 1;
        continue;
      }
      const double x = anchor->x + jx;
      const double y = anchor->y + jy;
      BBox box{std::max(0.0, x - w / 2), std::max(0.0, y - h), std::min<double>(meta.width, x + w / 2),
               std::min<double>(meta.height, y)};
      if (!(box.x1 < box.x2 && box.y1 < box.y2)) continue;
      log.detections.push_back(Detection{f, Label::person, box, 0.9});
    }
  }

  GroundTruth truth;
  const absl::TimeZone tz = meta_time_zone(meta);
  for (std::size_t gi = 0; gi < scenario.roi.groups.size(); ++gi) {
    const RoiGroup& g = scenario.roi.groups[gi];
    const SessionParams params = session_params_for(g, meta);
    const PipelineStages st = brute_force_sessions(presence[gi], params);
    for (const FrameSpan& span : st.s_f) {
      std::set<std::size_t> agents;
      for (std::size_t k = 0; k < presence[gi].size(); ++k) {
        if (presence[gi][k].frame >= span.begin && presence[gi][k].frame <= span.end) agents.insert(presence_agent[gi][k]);
      }
      truth.sessions.push_back(TruthSession{g.name, span.begin, span.end, static_cast<int>(agents.size()),
                                            std::vector<std::size_t>(agents.begin(), agents.end())});
    }
    if (g.kind != RoiKind::crossing) continue;
    for (std::size_t ai = 0; ai < n_agents; ++ai) {
      if (scenario.agents[ai].behavior != Behavior::cross) continue;
      FrameIndex first = -1, end = -1;
      for (std::size_t k = 0; k < presence[gi].size(); ++k) {
        if (presence_agent[gi][k] != ai) continue;
        if (first < 0) first = presence[gi][k].frame;
        end = presence[gi][k].frame;
      }
      if (first < 0) continue;
      const Timestamp t_b = frame_to_time(first, meta);
      const Timestamp t_e = frame_to_time(end, meta);
      const HourBucket b = hour_bucket(t_b + (t_e - t_b) / 2, tz);
      truth.crossings.push_back(TruthCrossing{g.name, ai, first, end, b.date, b.hour});
    }
  }
  return {std::move(log), std::move(truth)};
}

PipelineStages brute_force_sessions(std::span<const Detection> d_roi, const SessionParams& params) {
  PipelineStages out;
  if (d_roi.empty()) return out;
  FrameIndex lo = d_roi.front().frame;
  FrameIndex hi = d_roi.front().frame;
  for (const Detection& d : d_roi) {
    lo = std::min(lo, d.frame);
    hi = std::max(hi, d.frame);
  }
  const auto n = static_cast<std::size_t>(hi - lo + 1);
  std::vector<std::size_t> count(n, 0);
  for (const Detection& d : d_roi) ++count[static_cast<std::size_t>(d.frame - lo)];
  std::vector<char> occupied(n);
  for (std::size_t i = 0; i < n; ++i) occupied[i] = count[i] > 0;

  const std::vector<char> raw = bridge_gaps(occupied, [&](std::ptrdiff_t d) { return d <= params.stride; });
  out.s_d = runs(raw, lo, count);

  const std::vector<char> merged = bridge_gaps(
      raw, [&](std::ptrdiff_t d) { return static_cast<double>(d) / params.fps <= params.min_no_detection_s; });
  out.s_m = runs(merged, lo, count);

  for (const FrameSpan& s : out.s_m) {
    if (static_cast<double>(s.end - s.begin) / params.fps >= params.min_session_time_s) out.s_f.push_back(s);
  }
  return out;
}

}  // namespace pedwatch::synth
