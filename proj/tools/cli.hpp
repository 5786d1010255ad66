#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace pedwatch::cli {

struct Options {
  std::string store;
  unsigned workers = 0;

  // ingest
  std::string detections;
  std::string meta;
  std::string roi;
  double min_confidence = 0;

  // analyze
  std::string tz;
  std::optional<double> dwell_session_s;
  std::optional<double> dwell_gap_s;
  std::optional<double> crossing_session_s;
  std::optional<double> crossing_gap_s;
  std::optional<double> min_disp_px;
  std::optional<int> stride;
  std::optional<double> iou_min;
  std::optional<double> track_gap_s;
  std::string cro;
  std::string sb;
  std::string nb;
  std::string boardings;
  std::string boardings_group;
  std::string boardings_stop;

  // correlate
  std::string out;
  std::string from;
  std::string to;

  // cutlist / render-clips
  double pad_s = 2.0;
  bool merge = false;
  std::string cutter;
  std::string extension = ".mp4";

  // synth
  std::string scenario;

  // serve
  std::string addr = "127.0.0.1:8080";
  std::string users;
  double token_ttl_h = 12;

  // passwd
  std::string user;
  std::string role = "reviewer";
};

/// Command tree bound to `opts`.
std::unique_ptr<CLI::App> build_app(Options& opts);

/// Exit codes: 0 success, 1 processing error, 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace pedwatch::cli
