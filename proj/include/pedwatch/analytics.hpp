#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include "pedwatch/ingest.hpp"
#include "pedwatch/json.hpp"
#include "pedwatch/model.hpp"
#include "pedwatch/time.hpp"

namespace pedwatch {

/// Hours covered by recordings, per local date (inclusive hour range).
class RecordingWindow {
 public:
  void add(const VideoMeta& meta, const absl::TimeZone& tz);
  void add_hours(absl::CivilDay date, int first_hour, int last_hour);

  bool contains(absl::CivilDay date, int hour) const noexcept;
  bool empty() const noexcept { return hours_.empty(); }
  std::vector<absl::CivilDay> dates() const;
  int first_hour() const noexcept;
  int last_hour() const noexcept;

  const std::map<absl::CivilDay, std::pair<int, int>>& ranges() const noexcept { return hours_; }

  /// Copy restricted to dates in [from, to].
  RecordingWindow restrict(absl::CivilDay from, absl::CivilDay to) const;

 private:
  std::map<absl::CivilDay, std::pair<int, int>> hours_;
};

/// counts[date][hour]; cells outside the recording window are absent
/// (nullopt), cells inside it default to zero.
struct DailyHourMatrix {
  std::vector<absl::CivilDay> dates;
  int first_hour = 0;
  int last_hour = -1;
  std::vector<std::vector<std::optional<double>>> cells;

  int hour_count() const noexcept { return last_hour - first_hour + 1; }
  std::optional<double> at(std::size_t date_index, int hour) const;
  std::optional<std::size_t> date_index(absl::CivilDay date) const;
  double total() const;
};

struct HourlySeries {
  int hour = 0;
  std::vector<absl::CivilDay> dates;
  std::vector<double> values;
};

/// Defined cells of one hour column, in date order.
HourlySeries series_for_hour(const DailyHourMatrix& matrix, int hour);

/// Σ p per (date, hour) bucket of each event. Throws ValidationError when an
/// event falls outside the window.
DailyHourMatrix hourly_counts(std::span<const ActivityEvent> events, const RecordingWindow& window);

struct BoxStats {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
  /// Mean over all values, outliers included.
  double mean = 0;
  double lower_fence = 0;
  double upper_fence = 0;
  std::size_t count = 0;
  std::vector<double> outliers;
};

/// Quantile by linear interpolation at fractional rank (n-1)*q of a sorted
/// sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Tukey box statistics: fences at 1.5*IQR of all values, five-number
/// summary of the retained values. Throws ValidationError on empty input.
BoxStats box_stats(std::span<const double> values);

struct OutlierRemoval {
  absl::CivilDay date;
  int hour = 0;
  double value = 0;
  double lower_fence = 0;
  double upper_fence = 0;
};

struct OutlierFilterResult {
  DailyHourMatrix filtered;
  std::vector<OutlierRemoval> removals;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinOutlierSeries = 4;

/// One pass of per-hour Tukey fencing across dates. Hours with fewer than
/// four defined values are passed through with a warning.
OutlierFilterResult outlier_filter(const DailyHourMatrix& matrix);

struct SeriesFilterResult {
  HourlySeries filtered;
  std::vector<OutlierRemoval> removals;
  std::optional<std::string> warning;
};

SeriesFilterResult outlier_filter(const HourlySeries& series);

struct Correlation {
  std::optional<double> r;
  std::string reason;
};

/// Sample Pearson coefficient. Undefined when either series has zero
/// variance. Throws ValidationError on length mismatch or fewer than two
/// points.
Correlation pearson(std::span<const double> x, std::span<const double> y);

enum class CorrelationClass { strong, moderate, weak, undefined };

std::string_view to_string(CorrelationClass c) noexcept;
CorrelationClass classify_correlation(std::optional<double> r) noexcept;

struct CorrelationCell {
  Correlation correlation;
  CorrelationClass cls = CorrelationClass::undefined;
  std::size_t n = 0;
};

/// Rows #SB, #NB, #BOTH against CRO; one column per hour.
struct CorrelationTable {
  std::vector<int> hours;
  std::vector<std::string> series_names;
  std::vector<std::vector<CorrelationCell>> cells;
};

/// Per hour, correlates CRO with #SB, #NB and #BOTH = #SB + #NB over the
/// dates where all three are defined.
CorrelationTable correlation_table(const DailyHourMatrix& cro, const DailyHourMatrix& sb, const DailyHourMatrix& nb);

struct Residual {
  absl::CivilDay date;
  int hour = 0;
  double estimate = 0;
  double reference = 0;
};

struct AccuracyReport {
  double mae = 0;
  std::size_t joined_pairs = 0;
  std::size_t unmatched_estimates = 0;
  std::size_t unmatched_reference = 0;
  std::vector<Residual> residuals;
};

/// Mean absolute error of `estimates` against the records of `stop_id`,
/// joined on (date, hour). Throws ValidationError when nothing joins.
AccuracyReport mae(const DailyHourMatrix& estimates, std::span<const BoardingRecord> reference,
                   std::string_view stop_id);

enum class DayPeriod { am_peak, midday, afternoon, pm_peak, other };

std::string_view to_string(DayPeriod p) noexcept;
DayPeriod period_bucket(Timestamp ts, const absl::TimeZone& tz);
DayPeriod period_for_hour(int hour) noexcept;

Json to_json(const DailyHourMatrix& m);
Json to_json(const BoxStats& b);
Json to_json(const OutlierRemoval& r);
Json to_json(const CorrelationTable& t);
Json to_json(const AccuracyReport& a);

/// Table layout: header row of hours, one row per series, r to two
/// decimals; undefined cells are written as NA.
std::string correlation_csv(const CorrelationTable& t);

}  // namespace pedwatch
