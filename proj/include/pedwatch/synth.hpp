#pragma once

// Scripted scenario generator with known ground truth, and the brute-force
// session oracle the pipeline is checked against.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pedwatch/inference.hpp"
#include "pedwatch/ingest.hpp"
#include "pedwatch/json.hpp"
#include "pedwatch/model.hpp"

namespace pedwatch::synth {

enum class Behavior { wait, cross, pass_by };

std::string_view to_string(Behavior b) noexcept;

struct AgentScript {
  Behavior behavior = Behavior::wait;
  /// ROI group a waiting agent stands in.
  std::string roi;
  /// Waiting position; defaults to the vertex centroid of the group's first
  /// polygon.
  std::optional<Point> position;
  /// Anchor path for cross and pass_by, walked at constant speed.
  std::vector<Point> path;
  double start_s = 0;
  double duration_s = 0;
  /// Per-frame probability that a dropout starts.
  double dropout = 0;
  /// Length of each dropout; 0 suppresses a single frame.
  double dropout_burst_s = 0;
  /// Box height in pixels; width is half of it.
  double box_size = 40;
  double jitter_px = 0;
  /// Scripted occlusions as (start_s, duration_s) pairs.
  std::vector<std::pair<double, double>> occlusions;
};

struct Scenario {
  VideoMeta meta;
  RoiConfig roi;
  std::vector<AgentScript> agents;
  std::uint64_t seed = 0;
};

struct TruthSession {
  std::string group;
  FrameIndex f_b = 0;
  FrameIndex f_e = 0;
  /// Distinct scripted agents present in the session.
  int persons = 0;
  std::vector<std::size_t> agents;
};

struct TruthCrossing {
  std::string group;
  std::size_t agent = 0;
  FrameIndex f_b = 0;
  FrameIndex f_e = 0;
  absl::CivilDay date;
  int hour = 0;
};

struct GroundTruth {
  std::vector<TruthSession> sessions;
  std::vector<TruthCrossing> crossings;
};

/// Throws ValidationError when an agent references an unknown ROI group or a
/// field is out of range.
void validate(const Scenario& scenario);

Scenario parse_scenario(std::string_view document);
Json to_json(const Scenario& scenario);
Json to_json(const GroundTruth& truth);

/// Anchor position of `agent` at `t_s` seconds, without jitter, or nullopt
/// when the agent is not on screen.
std::optional<Point> scripted_anchor(const AgentScript& agent, const Scenario& scenario, double t_s);

/// Deterministic per (scenario, seed).
std::pair<DetectionLog, GroundTruth> generate(const Scenario& scenario);

/// Reference implementation of steps 2-4 built on explicit occupied-frame
/// bitmaps: it never merges incrementally, so it stays independent of the
/// pipeline it checks.
PipelineStages brute_force_sessions(std::span<const Detection> d_roi, const SessionParams& params);

}  // namespace pedwatch::synth
