#include "pedwatch/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "pedwatch/error.hpp"

namespace pedwatch {

// ---- window / matrix --------------------------------------------------------

void RecordingWindow::add(const VideoMeta& meta, const absl::TimeZone& tz) {
  const absl::CivilHour first = absl::ToCivilHour(meta.start_ts, tz);
  const absl::CivilHour last = absl::ToCivilHour(frame_to_time(meta.frame_count - 1, meta), tz);
  for (absl::CivilHour h = first; h <= last; ++h) add_hours(absl::CivilDay(h), h.hour(), h.hour());
}

void RecordingWindow::add_hours(absl::CivilDay date, int first_hour, int last_hour) {
  auto [it, inserted] = hours_.emplace(date, std::make_pair(first_hour, last_hour));
  if (!inserted) {
    it->second.first = std::min(it->second.first, first_hour);
    it->second.second = std::max(it->second.second, last_hour);
  }
}

bool RecordingWindow::contains(absl::CivilDay date, int hour) const noexcept {
  auto it = hours_.find(date);
  return it != hours_.end() && hour >= it->second.first && hour <= it->second.second;
}

std::vector<absl::CivilDay> RecordingWindow::dates() const {
  std::vector<absl::CivilDay> out;
  for (const auto& [d, _] : hours_) out.push_back(d);
  return out;
}

int RecordingWindow::first_hour() const noexcept {
  int h = 24;
  for (const auto& [_, range] : hours_) h = std::min(h, range.first);
  return h;
}

int RecordingWindow::last_hour() const noexcept {
  int h = -1;
  for (const auto& [_, range] : hours_) h = std::max(h, range.second);
  return h;
}

RecordingWindow RecordingWindow::restrict(absl::CivilDay from, absl::CivilDay to) const {
  RecordingWindow out;
  for (const auto& [d, range] : hours_) {
    if (d >= from && d <= to) out.hours_.emplace(d, range);
  }
  return out;
}

std::optional<double> DailyHourMatrix::at(std::size_t date_index, int hour) const {
  if (date_index >= cells.size() || hour < first_hour || hour > last_hour) return std::nullopt;
  return cells[date_index][static_cast<std::size_t>(hour - first_hour)];
}

std::optional<std::size_t> DailyHourMatrix::date_index(absl::CivilDay date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

double DailyHourMatrix::total() const {
  double sum = 0;
  for (const auto& row : cells) {
    for (const auto& c : row) sum += c.value_or(0.0);
  }
  return sum;
}

HourlySeries series_for_hour(const DailyHourMatrix& matrix, int hour) {
  HourlySeries s;
  s.hour = hour;
  for (std::size_t d = 0; d < matrix.dates.size(); ++d) {
    if (auto v = matrix.at(d, hour)) {
      s.dates.push_back(matrix.dates[d]);
      s.values.push_back(*v);
    }
  }
  return s;
}

DailyHourMatrix hourly_counts(std::span<const ActivityEvent> events, const RecordingWindow& window) {
  DailyHourMatrix m;
  m.dates = window.dates();
  if (m.dates.empty()) {
    if (!events.empty()) throw ValidationError("events present but the recording window is empty");
    return m;
  }
  m.first_hour = window.first_hour();
  m.last_hour = window.last_hour();
  m.cells.assign(m.dates.size(), std::vector<std::optional<double>>(static_cast<std::size_t>(m.hour_count())));
  for (std::size_t d = 0; d < m.dates.size(); ++d) {
    for (int h = m.first_hour; h <= m.last_hour; ++h) {
      if (window.contains(m.dates[d], h)) m.cells[d][static_cast<std::size_t>(h - m.first_hour)] = 0.0;
    }
  }
  for (const ActivityEvent& ev : events) {
    auto d = m.date_index(ev.date);
    if (!d || !window.contains(ev.date, ev.hour)) {
      throw ValidationError("event " + ev.event_id + " lies outside the recording window");
    }
    *m.cells[*d][static_cast<std::size_t>(ev.hour - m.first_hour)] += ev.session.p;
  }
  return m;
}

// ---- box statistics / outliers ---------------------------------------------

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double rank = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw ValidationError("box_stats requires at least one value");
  std::vector<double> all(values.begin(), values.end());
  std::sort(all.begin(), all.end());

  BoxStats b;
  b.count = all.size();
  b.mean = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
  const double q1 = quantile_sorted(all, 0.25);
  const double q3 = quantile_sorted(all, 0.75);
  const double iqr = q3 - q1;
  b.lower_fence = q1 - 1.5 * iqr;
  b.upper_fence = q3 + 1.5 * iqr;

  std::vector<double> kept;
  for (double v : all) {
    if (v < b.lower_fence || v > b.upper_fence) {
      b.outliers.push_back(v);
    } else {
      kept.push_back(v);
    }
  }
  // Fences contain [q1, q3], so at least the middle values survive.
  b.min = kept.front();
  b.max = kept.back();
  b.q1 = quantile_sorted(kept, 0.25);
  b.median = quantile_sorted(kept, 0.5);
  b.q3 = quantile_sorted(kept, 0.75);
  return b;
}

SeriesFilterResult outlier_filter(const HourlySeries& series) {
  SeriesFilterResult out;
  out.filtered.hour = series.hour;
  if (series.values.size() < kMinOutlierSeries) {
    out.filtered = series;
    out.warning = "hour " + std::to_string(series.hour) + ": only " + std::to_string(series.values.size()) +
                  " values, outlier filter skipped";
    return out;
  }
  const BoxStats b = box_stats(series.values);
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double v = series.values[i];
    if (v < b.lower_fence || v > b.upper_fence) {
      out.removals.push_back(OutlierRemoval{series.dates[i], series.hour, v, b.lower_fence, b.upper_fence});
    } else {
      out.filtered.dates.push_back(series.dates[i]);
      out.filtered.values.push_back(v);
    }
  }
  return out;
}

OutlierFilterResult outlier_filter(const DailyHourMatrix& matrix) {
  OutlierFilterResult out;
  out.filtered = matrix;
  for (int h = matrix.first_hour; h <= matrix.last_hour; ++h) {
    const HourlySeries series = series_for_hour(matrix, h);
    if (series.values.empty()) continue;
    SeriesFilterResult r = outlier_filter(series);
    if (r.warning) out.warnings.push_back(*r.warning);
    for (const OutlierRemoval& rem : r.removals) {
      const std::size_t d = *matrix.date_index(rem.date);
      out.filtered.cells[d][static_cast<std::size_t>(h - matrix.first_hour)].reset();
      out.removals.push_back(rem);
    }
  }
  std::sort(out.removals.begin(), out.removals.end(), [](const OutlierRemoval& a, const OutlierRemoval& b) {
    return std::tie(a.date, a.hour) < std::tie(b.date, b.hour);
  });
  return out;
}

// ---- correlation -------------------------------------------------------------

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("pearson: series lengths differ (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw ValidationError("pearson: at least two points required");

  // Single-pass co-moment accumulation.
  double mean_x = 0, mean_y = 0, m2x = 0, m2y = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    mean_x += dx / n;
    mean_y += dy / n;
    m2x += dx * (x[i] - mean_x);
    m2y += dy * (y[i] - mean_y);
    cxy += dx * (y[i] - mean_y);
  }
  if (m2x == 0) return {std::nullopt, "first series has zero variance"};
  if (m2y == 0) return {std::nullopt, "second series has zero variance"};
  const double r = cxy / std::sqrt(m2x * m2y);
  return {std::clamp(r, -1.0, 1.0), {}};
}

std::string_view to_string(CorrelationClass c) noexcept {
  switch (c) {
    case CorrelationClass::strong: return "strong";
    case CorrelationClass::moderate: return "moderate";
    case CorrelationClass::weak: return "weak";
    case CorrelationClass::undefined: break;
  }
  return "undefined";
}

CorrelationClass classify_correlation(std::optional<double> r) noexcept {
  if (!r || std::isnan(*r)) return CorrelationClass::undefined;
  if (*r >= 0.7 && *r <= 1.0) return CorrelationClass::strong;
  if (*r >= 0.3 && *r < 0.7) return CorrelationClass::moderate;
  return CorrelationClass::weak;
}

CorrelationTable correlation_table(const DailyHourMatrix& cro, const DailyHourMatrix& sb, const DailyHourMatrix& nb) {
  CorrelationTable t;
  t.series_names = {"#SB", "#NB", "#BOTH"};
  t.cells.resize(3);
  for (int h = cro.first_hour; h <= cro.last_hour; ++h) {
    std::vector<double> c, s, n, both;
    for (std::size_t d = 0; d < cro.dates.size(); ++d) {
      auto cv = cro.at(d, h);
      auto si = sb.date_index(cro.dates[d]);
      auto ni = nb.date_index(cro.dates[d]);
      if (!cv || !si || !ni) continue;
      auto sv = sb.at(*si, h);
      auto nv = nb.at(*ni, h);
      if (!sv || !nv) continue;
      c.push_back(*cv);
      s.push_back(*sv);
      n.push_back(*nv);
      both.push_back(*sv + *nv);
    }
    t.hours.push_back(h);
    const std::vector<double>* rows[] = {&s, &n, &both};
    for (std::size_t r = 0; r < 3; ++r) {
      CorrelationCell cell;
      cell.n = c.size();
      if (c.size() >= 2) {
        cell.correlation = pearson(c, *rows[r]);
      } else {
        cell.correlation = {std::nullopt, "fewer than two aligned dates"};
      }
      cell.cls = classify_correlation(cell.correlation.r);
      t.cells[r].push_back(std::move(cell));
    }
  }
  return t;
}

// ---- accuracy ----------------------------------------------------------------

AccuracyReport mae(const DailyHourMatrix& estimates, std::span<const BoardingRecord> reference,
                   std::string_view stop_id) {
  AccuracyReport rep;
  std::map<std::pair<absl::CivilDay, int>, double> ref;
  for (const BoardingRecord& r : reference) {
    if (r.stop_id == stop_id) ref.emplace(std::make_pair(r.date, r.hour), static_cast<double>(r.boardings));
  }
  std::size_t matched_ref = 0;
  double abs_sum = 0;
  for (std::size_t d = 0; d < estimates.dates.size(); ++d) {
    for (int h = estimates.first_hour; h <= estimates.last_hour; ++h) {
      auto est = estimates.at(d, h);
      if (!est) continue;
      auto it = ref.find({estimates.dates[d], h});
      if (it == ref.end()) {
        ++rep.unmatched_estimates;
        continue;
      }
      ++matched_ref;
      rep.residuals.push_back(Residual{estimates.dates[d], h, *est, it->second});
      abs_sum += std::abs(*est - it->second);
    }
  }
  rep.joined_pairs = rep.residuals.size();
  rep.unmatched_reference = ref.size() - matched_ref;
  if (rep.joined_pairs == 0) throw ValidationError("mae: no (date,hour) pairs join the estimates and the reference");
  rep.mae = abs_sum / static_cast<double>(rep.joined_pairs);
  return rep;
}

// ---- day periods ---------------------------------------------------------------

std::string_view to_string(DayPeriod p) noexcept {
  switch (p) {
    case DayPeriod::am_peak: return "am_peak";
    case DayPeriod::midday: return "midday";
    case DayPeriod::afternoon: return "afternoon";
    case DayPeriod::pm_peak: return "pm_peak";
    case DayPeriod::other: break;
  }
  return "other";
}

DayPeriod period_for_hour(int hour) noexcept {
  if (hour >= 7 && hour < 10) return DayPeriod::am_peak;
  if (hour >= 10 && hour < 13) return DayPeriod::midday;
  if (hour >= 13 && hour < 16) return DayPeriod::afternoon;
  if (hour >= 16 && hour < 19) return DayPeriod::pm_peak;
  return DayPeriod::other;
}

DayPeriod period_bucket(Timestamp ts, const absl::TimeZone& tz) { return period_for_hour(hour_bucket(ts, tz).hour); }

// ---- serialization ---------------------------------------------------------------

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string hour_label(int h) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:00", h);
  return buf;
}

}  // namespace

Json to_json(const DailyHourMatrix& m) {
  Json dates = Json::array();
  for (const auto& d : m.dates) dates.push_back(format_date(d));
  Json rows = Json::array();
  for (const auto& row : m.cells) {
    Json r = Json::array();
    for (const auto& c : row) r.push_back(optional_number(c));
    rows.push_back(std::move(r));
  }
  return Json{{"dates", std::move(dates)},
              {"first_hour", m.first_hour},
              {"last_hour", m.last_hour},
              {"counts", std::move(rows)},
              {"total", m.total()}};
}

Json to_json(const BoxStats& b) {
  return Json{{"min", b.min},       {"q1", b.q1},
              {"median", b.median}, {"q3", b.q3},
              {"max", b.max},       {"mean", b.mean},
              {"lower_fence", b.lower_fence}, {"upper_fence", b.upper_fence},
              {"count", b.count},   {"outliers", b.outliers}};
}

Json to_json(const OutlierRemoval& r) {
  return Json{{"date", format_date(r.date)},
              {"hour", r.hour},
              {"value", r.value},
              {"lower_fence", r.lower_fence},
              {"upper_fence", r.upper_fence}};
}

Json to_json(const CorrelationTable& t) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < t.series_names.size(); ++r) {
    Json cells = Json::array();
    for (std::size_t c = 0; c < t.hours.size(); ++c) {
      const CorrelationCell& cell = t.cells[r][c];
      Json j{{"hour", t.hours[c]},
             {"r", optional_number(cell.correlation.r)},
             {"class", to_string(cell.cls)},
             {"n", cell.n}};
      if (!cell.correlation.reason.empty()) j["reason"] = cell.correlation.reason;
      cells.push_back(std::move(j));
    }
    rows.push_back(Json{{"series", t.series_names[r]}, {"cells", std::move(cells)}});
  }
  return Json{{"hours", t.hours}, {"rows", std::move(rows)}};
}

Json to_json(const AccuracyReport& a) {
  Json res = Json::array();
  for (const Residual& r : a.residuals) {
    res.push_back(Json{{"date", format_date(r.date)},
                       {"hour", r.hour},
                       {"estimate", r.estimate},
                       {"reference", r.reference},
                       {"residual", r.estimate - r.reference}});
  }
  return Json{{"mae", a.mae},
              {"joined_pairs", a.joined_pairs},
              {"unmatched_estimates", a.unmatched_estimates},
              {"unmatched_reference", a.unmatched_reference},
              {"residuals", std::move(res)}};
}

std::string correlation_csv(const CorrelationTable& t) {
  std::string out = "Time";
  for (int h : t.hours) out += "," + hour_label(h);
  out += "\n";
  for (std::size_t r = 0; r < t.series_names.size(); ++r) {
    out += t.series_names[r];
    for (const CorrelationCell& cell : t.cells[r]) {
      out += ",";
      if (cell.correlation.r) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f", *cell.correlation.r);
        // Avoid "-0.00".
        out += std::string_view(buf) == "-0.00" ? "0.00" : buf;
      } else {
        out += "NA";
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace pedwatch
