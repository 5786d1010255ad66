#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pedwatch/analytics.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/inference.hpp"
#include "pedwatch/synth.hpp"
#include "pedwatch/workflow.hpp"

namespace py = pybind11;
using namespace pedwatch;

namespace {

std::vector<Point> to_points(const std::vector<std::pair<double, double>>& xs) {
  std::vector<Point> out;
  for (const auto& [x, y] : xs) out.push_back(Point{x, y});
  return out;
}

// Three stages for a stream given as occupied frame numbers.
py::dict stages(const std::vector<FrameIndex>& frames, double fps, double min_session_time_s,
                double min_no_detection_s, int stride) {
  std::vector<Detection> d;
  for (FrameIndex f : frames) d.push_back(Detection{f, Label::person, BBox{0, 0, 10, 20}, 1.0});
  SessionParams p;
  p.fps = fps;
  p.min_session_time_s = min_session_time_s;
  p.min_no_detection_s = min_no_detection_s;
  p.stride = stride;
  p.validate();
  const PipelineStages s = run_stages(d, p);
  auto spans = [](const std::vector<FrameSpan>& v) {
    py::list out;
    for (const FrameSpan& x : v) out.append(py::make_tuple(x.begin, x.end));
    return out;
  };
  py::dict out;
  out["s_d"] = spans(s.s_d);
  out["s_m"] = spans(s.s_m);
  out["s_f"] = spans(s.s_f);
  return out;
}

}  // namespace

PYBIND11_MODULE(_pedwatch, m) {
  m.doc() = "pedwatch native core";

  py::register_exception<Error>(m, "PedwatchError", PyExc_ValueError);

  m.def("point_in_convex_polygon",
        [](std::pair<double, double> pt, const std::vector<std::pair<double, double>>& poly) {
          const auto pts = to_points(poly);
          return point_in_convex_polygon(Point{pt.first, pt.second}, pts);
        });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y).r; });
  m.def("classify_correlation",
        [](std::optional<double> r) { return std::string(to_string(classify_correlation(r))); });
  m.def("box_stats_json", [](const std::vector<double>& v) { return to_json(box_stats(v)).dump(); });
  m.def("stages", &stages, py::arg("frames"), py::arg("fps"), py::arg("min_session_time_s"),
        py::arg("min_no_detection_s"), py::arg("stride") = 1);
  m.def("synth_generate", [](const std::string& scenario) {
    const auto [log, truth] = synth::generate(synth::parse_scenario(scenario));
    std::ostringstream out;
    write_detection_log(out, log.detections);
    return py::make_tuple(out.str(), synth::to_json(truth).dump());
  });
  m.def("analysis_digest", [](const std::string& store) { return analysis_digest(Store(store)); });
}
