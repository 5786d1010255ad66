// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pedwatch/analytics.hpp"
#include "pedwatch/clips.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/inference.hpp"
#include "pedwatch/service.hpp"
#include "pedwatch/synth.hpp"
#include "pedwatch/workflow.hpp"
#include "store_fixture.hpp"
#include "test_support.hpp"

using namespace pedwatch;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Criterion = std::function<void(Outcome&)>;

// ---- shared helpers ------------------------------------------------------

struct RandomStream {
  std::vector<Detection> detections;
  SessionParams params;
};

// Bursty occupancy on the stride grid with random gaps and duplicates.
RandomStream random_stream(std::mt19937_64& rng) {
  static const double kFps[] = {1, 5, 7.5, 10, 15, 25, 29.97, 30};
  RandomStream s;
  s.params.fps = kFps[std::uniform_int_distribution<int>(0, 7)(rng)];
  s.params.stride = std::uniform_int_distribution<int>(1, 5)(rng);
  s.params.min_no_detection_s = std::uniform_real_distribution<double>(0, 8)(rng);
  s.params.min_session_time_s = std::uniform_real_distribution<double>(0, 20)(rng);
  const FrameIndex frames = std::uniform_int_distribution<FrameIndex>(1, 10'000)(rng);
  const double burst_mean = std::uniform_real_distribution<double>(1, 200)(rng);
  const double gap_mean = std::uniform_real_distribution<double>(1, 300)(rng);
  std::exponential_distribution<double> burst(1 / burst_mean), gap(1 / gap_mean);
  std::uniform_real_distribution<double> u(0, 1);
  const double hole = u(rng) * 0.3;
  FrameIndex f = static_cast<FrameIndex>(gap(rng)) / s.params.stride * s.params.stride;
  while (f < frames) {
    const FrameIndex end = std::min<FrameIndex>(frames - 1, f + static_cast<FrameIndex>(burst(rng)));
    for (; f <= end; f += s.params.stride) {
      if (u(rng) < hole) continue;
      const int n = u(rng) < 0.2 ? 2 : 1;
      for (int k = 0; k < n; ++k) s.detections.push_back(testsupport::person(f, 100 + 30 * k, 200));
    }
    f += (static_cast<FrameIndex>(gap(rng)) / s.params.stride + 1) * s.params.stride;
  }
  return s;
}

synth::Scenario base_scenario(const std::string& start, FrameIndex frames) {
  synth::Scenario s;
  s.meta = testsupport::meta(10, frames, start.c_str());
  s.meta.camera_id = "cam-a";
  s.meta.source_uri = "file:///videos/cam-a.mp4";
  s.roi.camera_id = "cam-a";
  RoiGroup sb = testsupport::rect_group("sb_stop", RoiKind::dwell, 100, 500, 300, 650);
  sb.min_session_time_s = 15;
  sb.min_no_detection_s = 5;
  RoiGroup nb = testsupport::rect_group("nb_stop", RoiKind::dwell, 900, 150, 1100, 280);
  nb.min_session_time_s = 15;
  nb.min_no_detection_s = 5;
  RoiGroup median = testsupport::rect_group("median", RoiKind::crossing, 0, 300, 1280, 480);
  median.min_session_time_s = 1;
  median.min_no_detection_s = 2;
  median.transverse_axis = Point{0, 1};
  median.min_disp_px = 100;
  s.roi.groups = {sb, nb, median};
  return s;
}

double two_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double sorted_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - i) * (v[i + 1] - v[i]);
}

std::vector<ActivityEvent> events_of(const std::vector<ActivityEvent>& evs, const std::string& group) {
  std::vector<ActivityEvent> out;
  for (const ActivityEvent& e : evs) {
    if (e.session.roi_group == group) out.push_back(e);
  }
  return out;
}

// ---- criteria ---------------------------------------------------------------

void ac1(Outcome& o) {
  std::mt19937_64 rng(1001);
  int streams = 0;
  std::size_t sessions = 0;
  for (; streams < 1200; ++streams) {
    const RandomStream s = random_stream(rng);
    const PipelineStages got = run_stages(s.detections, s.params);
    const PipelineStages want = synth::brute_force_sessions(s.detections, s.params);
    o.expect(got.s_d == want.s_d && got.s_m == want.s_m && got.s_f == want.s_f,
             "stream " + std::to_string(streams));
    sessions += want.s_d.size();
  }
  o.detail << streams << " streams, " << sessions << " raw sessions compared";
}

void ac2(Outcome& o) {
  std::mt19937_64 rng(2002);
  int streams = 0;
  for (; streams < 60; ++streams) {
    RandomStream s = random_stream(rng);
    std::size_t prev = SIZE_MAX;
    for (double gap = 0; gap <= 20; gap += 0.5) {
      s.params.min_no_detection_s = gap;
      const std::size_t n = run_stages(s.detections, s.params).s_m.size();
      o.expect(n <= prev, "|S_M| grew at gap " + std::to_string(gap));
      prev = n;
    }
    prev = SIZE_MAX;
    for (double len = 0; len <= 60; len += 1) {
      s.params.min_session_time_s = len;
      const std::size_t n = run_stages(s.detections, s.params).s_f.size();
      o.expect(n <= prev, "|S_F| grew at length " + std::to_string(len));
      prev = n;
    }
    s.params.min_no_detection_s = 0;
    s.params.min_session_time_s = 0;
    const PipelineStages z = run_stages(s.detections, s.params);
    o.expect(z.s_f == z.s_d, "zero thresholds changed S_D");
  }
  o.detail << streams << " streams swept";
}

void ac3(Outcome& o) {
  synth::Scenario s = base_scenario("2020-03-10T10:00:00-05:00", 6000);
  synth::AgentScript a;
  a.behavior = synth::Behavior::wait;
  a.roi = "sb_stop";
  a.start_s = 10;
  a.duration_s = 8;
  synth::AgentScript b = a;
  b.start_s = 21;  // 3 s after the first appearance ends
  s.agents = {a, b};
  const RoiGroup& sb = *s.roi.find("sb_stop");
  const SessionParams p = session_params_for(sb, s.meta);
  const auto stop = infer_dwell_sessions(synth::generate(s).first, sb, p);
  o.expect(stop.size() == 1, "stop scenario yields " + std::to_string(stop.size()) + " sessions");

  synth::AgentScript walk;
  walk.behavior = synth::Behavior::pass_by;
  walk.path = {Point{100, 575}, Point{300, 575}};
  walk.start_s = 100;
  walk.duration_s = 4;
  s.agents = {walk};
  const auto log = synth::generate(s).first;
  o.expect(!filter_to_roi(log.detections, sb).empty(), "walk never enters the stop");
  const auto passing = infer_dwell_sessions(log, sb, p);
  o.expect(passing.empty(), "walk-through yields " + std::to_string(passing.size()) + " sessions");
  o.detail << "stop: " << stop.size() << " session, walk-through: " << passing.size() << " sessions";
}

void ac4(Outcome& o) {
  // Day 5, 18:00: two people wait at the stop for most of the hour while the
  // detector keeps losing them for longer than the tracker tolerates.
  const absl::CivilDay d0(2020, 3, 2);
  const int inflated_day = 5;
  synth::Scenario s = base_scenario("2020-03-07T18:00:00-05:00", 36000);
  for (int k = 0; k < 2; ++k) {
    synth::AgentScript a;
    a.behavior = synth::Behavior::wait;
    a.roi = "sb_stop";
    a.position = Point{150.0 + 100 * k, 600};
    a.start_s = 120;
    a.duration_s = 3000;
    a.dropout = 0.002;
    a.dropout_burst_s = 3;
    a.jitter_px = 1;
    s.agents.push_back(a);
  }
  s.seed = 44;
  const auto [log, truth] = synth::generate(s);
  const RoiGroup& sb = *s.roi.find("sb_stop");
  const absl::TimeZone tz = load_time_zone("-05:00");
  const auto inferred = infer_dwell_sessions(log, sb, session_params_for(sb, s.meta), InferenceContext{tz});
  int p = 0;
  for (const ActivityEvent& e : inferred) p += e.session.p;
  int truth_persons = 0;
  for (const auto& t : truth.sessions) {
    if (t.group == "sb_stop") truth_persons += t.persons;
  }
  o.expect(truth_persons == 2, "ground truth has " + std::to_string(truth_persons) + " persons");
  o.expect(p >= 10, "p = " + std::to_string(p) + " is not well above 2");

  // Thirteen days of 10:00-19:00, ground-truth counts everywhere except the
  // inflated hour, which carries the inferred events.
  RecordingWindow window;
  std::vector<ActivityEvent> events = inferred;
  int serial = 0;
  for (int d = 0; d < 13; ++d) {
    window.add_hours(d0 + d, 10, 19);
    for (int h = 10; h <= 19; ++h) {
      if (d == inflated_day && h == 18) continue;
      for (int k = 0; k < 1 + (d + h) % 4; ++k) {
        ActivityEvent e;
        e.event_id = "t" + std::to_string(serial++);
        e.date = d0 + d;
        e.hour = h;
        e.session.roi_group = "sb_stop";
        events.push_back(e);
      }
    }
  }
  const DailyHourMatrix m = hourly_counts(events, window);
  const OutlierFilterResult f = outlier_filter(m);
  o.expect(f.removals.size() == 1, std::to_string(f.removals.size()) + " removals");
  if (!f.removals.empty()) {
    o.expect(f.removals[0].date == d0 + inflated_day && f.removals[0].hour == 18, "wrong cell removed");
  }
  for (std::size_t d = 0; d < 13; ++d) {
    for (int h = 10; h <= 19; ++h) {
      if (d == inflated_day && h == 18) continue;
      o.expect(f.filtered.at(d, h) == m.at(d, h), "ground-truth cell dropped");
    }
  }
  o.detail << "2 scripted people counted as p=" << p << "; " << f.removals.size() << " hour removed";
}

void ac5(Outcome& o) {
  std::mt19937_64 rng(5005);
  std::normal_distribution<double> n(0, 1);
  std::uniform_int_distribution<int> len(2, 50);
  double worst = 0;
  for (int i = 0; i < 10'000; ++i) {
    std::vector<double> x(len(rng)), y(x.size());
    const double slope = n(rng);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = 50 + 10 * n(rng);
      y[k] = slope * x[k] + 5 * n(rng);
    }
    const Correlation c = pearson(x, y);
    o.expect(c.r.has_value(), "undefined r on a non-constant pair");
    if (c.r) worst = std::max(worst, std::abs(*c.r - two_pass_pearson(x, y)));
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
    o.expect(std::abs(*pearson(x, x).r - 1) <= 1e-12, "r(x,x) != 1");
    o.expect(std::abs(*pearson(x, neg).r + 1) <= 1e-12, "r(x,-x) != -1");
    o.expect(!pearson(x, std::vector<double>(x.size(), 3.0)).r, "constant series gave a value");
  }
  o.expect(worst <= 1e-9, "pearson deviates by " + std::to_string(worst));

  std::lognormal_distribution<double> ln(1, 1);
  double qworst = 0;
  for (int i = 0; i < 5000; ++i) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 80)(rng));
    for (double& x : v) x = std::round(ln(rng) * 4) / 4;
    const BoxStats b = box_stats(v);
    const double q1 = sorted_quantile(v, 0.25), q3 = sorted_quantile(v, 0.75);
    const double lo = q1 - 1.5 * (q3 - q1), hi = q3 + 1.5 * (q3 - q1);
    std::vector<double> kept, flagged;
    for (double x : v) (x < lo || x > hi ? flagged : kept).push_back(x);
    std::sort(flagged.begin(), flagged.end());
    o.expect(b.outliers == flagged, "Tukey flags differ");
    qworst = std::max({qworst, std::abs(b.lower_fence - lo), std::abs(b.upper_fence - hi),
                       std::abs(b.q1 - sorted_quantile(kept, 0.25)), std::abs(b.median - sorted_quantile(kept, 0.5)),
                       std::abs(b.q3 - sorted_quantile(kept, 0.75))});
  }
  o.expect(qworst <= 1e-12, "quartiles deviate by " + std::to_string(qworst));
  o.detail << "max |dr| " << worst << ", max quartile deviation " << qworst;
}

void ac6(Outcome& o) {
  const std::pair<double, CorrelationClass> table[] = {
      {0.91, CorrelationClass::strong},    {0.79, CorrelationClass::strong},    {0.92, CorrelationClass::strong},
      {0.54, CorrelationClass::moderate},  {0.50, CorrelationClass::moderate},  {0.44, CorrelationClass::moderate},
      {0.39, CorrelationClass::moderate},  {0.40, CorrelationClass::moderate},  {0.37, CorrelationClass::moderate},
      {0.35, CorrelationClass::moderate},  {-0.36, CorrelationClass::weak},     {-0.19, CorrelationClass::weak},
      {0.20, CorrelationClass::weak},      {0.14, CorrelationClass::weak}};
  for (const auto& [r, want] : table) {
    const CorrelationClass got = classify_correlation(r);
    o.expect(got == want, std::to_string(r) + " classified " + std::string(to_string(got)));
  }
  o.detail << std::size(table) << " values classified";
}

void ac7(Outcome& o) {
  const absl::CivilDay d0(2020, 3, 2);
  std::mt19937_64 rng(7007);
  std::uniform_int_distribution<int> cnt(0, 9);
  DailyHourMatrix est;
  est.first_hour = 10;
  est.last_hour = 19;
  std::vector<BoardingRecord> same, plus_one, mixed;
  int k = 0;
  for (int d = 0; d < 5; ++d) {
    est.dates.push_back(d0 + d);
    est.cells.emplace_back();
    for (int h = 10; h <= 19; ++h, ++k) {
      const int v = 2 + cnt(rng);
      est.cells.back().push_back(static_cast<double>(v));
      same.push_back({"SB", d0 + d, h, v});
      plus_one.push_back({"SB", d0 + d, h, v + 1});
      // 43 residuals of magnitude 1 and 7 of magnitude 2, signs alternating.
      const int mag = k < 43 ? 1 : 2;
      mixed.push_back({"SB", d0 + d, h, k % 2 ? v + mag : v - mag});
    }
  }
  const double m0 = mae(est, same, "SB").mae;
  const double m1 = mae(est, plus_one, "SB").mae;
  const AccuracyReport m2 = mae(est, mixed, "SB");
  o.expect(m0 == 0, "identical series MAE " + std::to_string(m0));
  o.expect(m1 == 1, "offset series MAE " + std::to_string(m1));
  o.expect(m2.joined_pairs == 50, "joined " + std::to_string(m2.joined_pairs));
  o.expect(std::abs(m2.mae - 1.14) <= 1e-9, "constructed MAE " + std::to_string(m2.mae));
  char buf[96];
  std::snprintf(buf, sizeof buf, "MAE %.0f, %.0f, %.9f", m0, m1, m2.mae);
  o.detail << buf;
}

void ac8(Outcome& o) {
  // Random days: conservation over whatever the pipeline infers.
  std::mt19937_64 rng(8008);
  for (int day = 0; day < 5; ++day) {
    synth::Scenario s = base_scenario("2020-03-10T07:00:00-05:00", 10 * 3600 * 10);
    s.seed = 800 + day;
    std::uniform_real_distribution<double> t(0, 10 * 3600 - 400);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int a = 0; a < 40; ++a) {
      synth::AgentScript ag;
      ag.start_s = t(rng);
      ag.jitter_px = 1;
      ag.dropout = 0.01;
      switch (pick(rng)) {
        case 0:
          ag.behavior = synth::Behavior::wait;
          ag.roi = rng() % 2 ? "sb_stop" : "nb_stop";
          ag.duration_s = std::uniform_real_distribution<double>(5, 300)(rng);
          break;
        case 1:
          ag.behavior = synth::Behavior::cross;
          ag.path = {Point{600, 650}, Point{610, 150}};
          ag.duration_s = 10;
          break;
        default:
          ag.behavior = synth::Behavior::pass_by;
          ag.path = {Point{0, 700}, Point{1280, 700}};
          ag.duration_s = 30;
      }
      s.agents.push_back(ag);
    }
    const auto log = synth::generate(s).first;
    const absl::TimeZone tz = load_time_zone("-05:00");
    RecordingWindow w;
    w.add(s.meta, tz);
    for (const RoiGroup& g : s.roi.groups) {
      const auto evs = infer_events(log, g, session_params_for(g, s.meta), InferenceContext{tz});
      double p = 0;
      for (const ActivityEvent& e : evs) p += e.session.p;
      o.expect(hourly_counts(evs, w).total() == p, "conservation broken for " + g.name);
    }
  }

  // Scripted day: 36 crossings spread over 10:00-19:00, analyzed end to end.
  const int per_hour[] = {2, 3, 4, 5, 6, 5, 4, 3, 2, 2};
  synth::Scenario s = base_scenario("2020-03-10T10:00:00-05:00", 10 * 3600 * 10);
  s.seed = 36;
  std::map<int, int> truth_by_hour;
  for (int h = 0; h < 10; ++h) {
    for (int k = 0; k < per_hour[h]; ++k) {
      synth::AgentScript ag;
      ag.behavior = synth::Behavior::cross;
      const double x = 200 + 120 * k;
      ag.path = k % 2 ? std::vector<Point>{{x, 150}, {x + 20, 650}} : std::vector<Point>{{x, 650}, {x - 20, 150}};
      ag.start_s = h * 3600 + 200 + 400 * k;
      ag.duration_s = 10;
      ag.jitter_px = 1;
      s.agents.push_back(ag);
    }
  }
  const auto [log, truth] = synth::generate(s);
  for (const auto& c : truth.crossings) ++truth_by_hour[c.hour];
  testsupport::TempDir dir;
  const Store store(dir.path());
  store.ingest(log, s.roi);
  const AnalyzeResult r = analyze(store, {});
  const auto crossings = events_of(r.events, "median");
  Json median;
  for (const Json& g : r.report.at("groups")) {
    if (g.at("group") == "median") median = g;
  }
  const double daily = median.at("daily_totals")[0].at("total").get<double>();
  o.expect(truth.crossings.size() == 36, "truth has " + std::to_string(truth.crossings.size()) + " crossings");
  o.expect(daily == 36, "daily total " + std::to_string(daily));
  const Json& counts = median.at("matrix").at("counts")[0];
  const int first = median.at("matrix").at("first_hour").get<int>();
  for (int h = 10; h < 20; ++h) {
    const double got = counts.at(static_cast<std::size_t>(h - first)).get<double>();
    o.expect(got == truth_by_hour[h], "hour " + std::to_string(h) + " has " + std::to_string(got));
  }
  double p = 0;
  for (const ActivityEvent& e : crossings) p += e.session.p;
  o.expect(median.at("matrix").at("total").get<double>() == p, "report total differs from event p");
  o.detail << "scripted day total " << daily << " crossings over " << crossings.size() << " events";
}

void ac9(Outcome& o) {
  std::mt19937_64 rng(9009);
  int sets = 0;
  std::size_t clips = 0;
  for (; sets < 500; ++sets) {
    const FrameIndex frames = std::uniform_int_distribution<FrameIndex>(20, 100'000)(rng);
    const double fps = std::uniform_int_distribution<int>(0, 1)(rng) ? 10 : 29.97;
    const VideoMeta m = testsupport::meta(fps, frames);
    std::uniform_int_distribution<FrameIndex> f(0, frames - 1);
    std::vector<ActivityEvent> evs(std::uniform_int_distribution<int>(0, 40)(rng));
    for (std::size_t k = 0; k < evs.size(); ++k) {
      FrameIndex a = f(rng), b = std::min(frames - 1, a + std::uniform_int_distribution<FrameIndex>(0, 600)(rng));
      evs[k].event_id = "ev" + std::to_string(k);
      evs[k].session.f_b = a;
      evs[k].session.f_e = b;
    }
    const double pad = std::uniform_real_distribution<double>(0, 10)(rng);
    const FrameIndex pf = std::llround(pad * fps);
    for (bool merge : {false, true}) {
      const ClipManifest man = cutlist(evs, m, pad, merge);
      clips += man.clips.size();
      for (const ActivityEvent& e : evs) {
        const FrameIndex lo = std::max<FrameIndex>(0, e.session.f_b - pf);
        const FrameIndex hi = std::min(frames - 1, e.session.f_e + pf);
        int covering = 0;
        for (const ManifestEntry& c : man.clips) {
          if (std::find(c.event_ids.begin(), c.event_ids.end(), e.event_id) == c.event_ids.end()) continue;
          ++covering;
          o.expect(c.clip.start_frame <= lo && c.clip.end_frame >= hi, "clip does not cover " + e.event_id);
        }
        o.expect(covering == 1, e.event_id + " in " + std::to_string(covering) + " clips");
      }
      for (std::size_t i = 0; i < man.clips.size(); ++i) {
        const ClipRef& c = man.clips[i].clip;
        o.expect(c.start_frame >= 0 && c.end_frame <= frames - 1 && c.start_frame <= c.end_frame, "clip not clamped");
        if (merge) {
          for (std::size_t j = i + 1; j < man.clips.size(); ++j) {
            const ClipRef& d = man.clips[j].clip;
            o.expect(c.end_frame < d.start_frame || d.end_frame < c.start_frame, "merged clips overlap");
          }
        }
      }
    }
  }
  o.detail << sets << " event sets, " << clips << " clips checked";
}

void ac10(Outcome& o) {
  testsupport::TempDir dir;
  const Store store(dir.path());
  for (int d = 0; d < 3; ++d) testsupport::ingest_scenario(store, testsupport::street_hour_on(d, 70 + d));
  analyze(store, {});
  const Json report = store.load_json(store.report_path());
  std::map<std::string, Json> raw_events;
  {
    std::istringstream in(testsupport::slurp(store.events_path()));
    std::string line;
    while (std::getline(in, line)) {
      Json j = Json::parse(line);
      raw_events[j.at("event_id").get<std::string>()] = j;
    }
  }

  UserDb users;
  users.upsert("rev", "secret-1", Role::reviewer);
  absl::Time now = absl::FromUnixSeconds(1'700'000'000);
  ServiceOptions opt;
  opt.token_ttl = absl::Hours(2);
  opt.clock = [&] { return now; };
  auto svc = std::make_unique<ReviewService>(store, users, opt);
  auto call = [&](const std::string& method, const std::string& path, std::map<std::string, std::string> q,
                  const std::string& body, const std::string& token) {
    HttpRequest r{method, path, std::move(q), {}, body};
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    return svc->handle(r);
  };
  const HttpResponse login = call("POST", "/api/login", {}, R"({"user":"rev","password":"secret-1"})", "");
  o.expect(login.status == 200, "login failed");
  const std::string token = Json::parse(login.body).value("token", "");

  int summaries = 0, buckets = 0;
  for (const Json& g : report.at("groups")) {
    const std::string name = g.at("group");
    const HttpResponse r = call("GET", "/api/summary", {{"group", name}}, "", token);
    o.expect(r.status == 200 && r.body == g.dump(), "summary differs for " + name);
    ++summaries;
  }
  std::map<std::tuple<std::string, std::string, int>, std::set<std::string>> by_bucket;
  for (const auto& [id, j] : raw_events) {
    by_bucket[{j.at("session").at("roi_group").get<std::string>(), j.at("date").get<std::string>(),
               j.at("hour").get<int>()}]
        .insert(id);
  }
  for (const auto& [key, ids] : by_bucket) {
    const auto& [group, date, hour] = key;
    const HttpResponse r =
        call("GET", "/api/events", {{"group", group}, {"date", date}, {"hour", std::to_string(hour)}}, "", token);
    o.expect(r.status == 200, "events request failed");
    std::set<std::string> seen;
    const Json body = Json::parse(r.body);
    for (Json row : body.at("events")) {
      const std::string id = row.at("event_id");
      seen.insert(id);
      row.erase("verdicts");
      o.expect(row.dump() == raw_events[id].dump(), "event row differs for " + id);
    }
    o.expect(seen == ids, "event set differs for " + group + " " + date);
    ++buckets;
  }

  int rejected = 0, protected_routes = 0;
  for (const RouteSpec& rs : ReviewService::routes()) {
    if (!rs.requires_auth) continue;
    ++protected_routes;
    rejected += call(rs.method, rs.sample, {}, "", "").status == 401;
  }
  const std::string first_id = raw_events.begin()->first;
  const std::string verdict_path = "/api/events/" + first_id + "/verdict";
  o.expect(call("POST", verdict_path, {}, R"({"verdict":"unsure"})", token).status == 201, "verdict rejected");
  now += absl::Minutes(1);
  o.expect(call("POST", verdict_path, {}, R"({"verdict":"confirmed","note":"bus"})", token).status == 201,
           "verdict rejected");
  now += absl::Hours(3);
  for (const RouteSpec& rs : ReviewService::routes()) {
    if (rs.requires_auth) rejected += call(rs.method, rs.sample, {}, "", token).status == 401;
  }
  o.expect(rejected == 2 * protected_routes, "only " + std::to_string(rejected) + " token rejections");

  const auto live = svc->annotations().latest(first_id);
  svc.reset();
  const auto replayed = AnnotationLog::replay(store.annotations_path());
  o.expect(live.size() == 1 && replayed.size() == 1, "unexpected annotation state");
  if (live.size() == 1 && replayed.size() == 1) {
    o.expect(replayed.begin()->second == live[0] && live[0].verdict == Verdict::confirmed, "replay differs");
  }
  o.detail << summaries << " summaries, " << buckets << " event buckets, " << rejected << " rejections";
}

void ac11(Outcome& o) {
  testsupport::TempDir dir;
  const Store store(dir.path());
  for (int d = 0; d < 3; ++d) {
    synth::Scenario s = testsupport::street_hour_on(d, 110 + d);
    for (auto& a : s.agents) {
      a.jitter_px = 2;
      a.dropout = 0.02;
    }
    testsupport::ingest_scenario(store, s);
  }
  AnalyzeOptions opt;
  analyze(store, opt);
  const std::string first = analysis_digest(store);
  const std::string events = testsupport::slurp(store.events_path());
  const std::string report = testsupport::slurp(store.report_path());
  opt.workers = 3;
  analyze(store, opt);
  const std::string second = analysis_digest(store);
  o.expect(first == second, "digests differ");
  o.expect(events == testsupport::slurp(store.events_path()) && report == testsupport::slurp(store.report_path()),
           "analysis files differ");
  o.detail << "digest " << first.substr(0, 16);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Criterion>> criteria{
      {"sessionization matches the brute-force oracle", ac1},
      {"threshold monotonicity laws", ac2},
      {"stop and walk-through fixture", ac3},
      {"overcounted hour removed by Tukey fences", ac4},
      {"statistics oracles", ac5},
      {"correlation classification bands", ac6},
      {"mean absolute error", ac7},
      {"count conservation and scripted crossing day", ac8},
      {"cut-list coverage", ac9},
      {"review service contract", ac10},
      {"analysis determinism", ac11},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("AC%zu %s  %s (%s; %.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
