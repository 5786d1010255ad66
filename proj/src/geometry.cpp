#include "pedwatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pedwatch {

namespace {

double cross(Point o, Point a, Point b) noexcept { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Cross products within this relative tolerance of zero count as "on the
// edge line", so edge midpoints test inside despite rounding.
constexpr double kOnLineTol = 1e-12;

}  // namespace

AnchorPoint anchor_point(const Detection& det) noexcept {
  return AnchorPoint{Point{(det.bbox.x1 + det.bbox.x2) / 2.0, det.bbox.y2}, &det};
}

double signed_area(std::span<const Point> poly) noexcept {
  double twice = 0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return twice / 2.0;
}

std::optional<std::size_t> first_non_convex_vertex(std::span<const Point> poly) noexcept {
  const std::size_t n = poly.size();
  if (n < 3) return std::size_t{0};
  const double area = signed_area(poly);
  if (!(std::abs(area) > 0)) return std::size_t{0};
  const double sign = area > 0 ? 1.0 : -1.0;
  double turning = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& prev = poly[(i + n - 1) % n];
    const Point& cur = poly[i];
    const Point& next = poly[(i + 1) % n];
    if (cur == next) return (i + 1) % n;
    const double c = cross(prev, cur, next);
    const double scale = std::hypot(cur.x - prev.x, cur.y - prev.y) * std::hypot(next.x - cur.x, next.y - cur.y);
    if (c * sign < -kOnLineTol * scale) return i;
    const double a_in = std::atan2(cur.y - prev.y, cur.x - prev.x);
    const double a_out = std::atan2(next.y - cur.y, next.x - cur.x);
    double turn = a_out - a_in;
    while (turn > std::numbers::pi) turn -= 2 * std::numbers::pi;
    while (turn <= -std::numbers::pi) turn += 2 * std::numbers::pi;
    turning += turn;
  }
  // Consistent turn direction with total turning of 4*pi or more means a
  // self-intersecting star.
  if (std::abs(std::abs(turning) - 2 * std::numbers::pi) > 1e-6) return std::size_t{0};
  return std::nullopt;
}

bool point_in_convex_polygon(Point pt, std::span<const Point> poly) noexcept {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const double c = cross(a, b, pt);
    const double scale = std::hypot(b.x - a.x, b.y - a.y) * std::hypot(pt.x - a.x, pt.y - a.y);
    if (std::abs(c) <= kOnLineTol * scale) continue;
    (c > 0 ? has_pos : has_neg) = true;
    if (has_pos && has_neg) return false;
  }
  return true;
}

bool point_in_group(Point pt, const RoiGroup& group) noexcept {
  return std::any_of(group.polygons.begin(), group.polygons.end(),
                     [&](const Polygon& poly) { return point_in_convex_polygon(pt, poly); });
}

std::vector<Detection> filter_to_roi(std::span<const Detection> detections, const RoiGroup& group) {
  std::vector<Detection> out;
  for (const Detection& det : detections) {
    if (det.label == group.target_label && point_in_group(anchor_point(det).point, group)) out.push_back(det);
  }
  return out;
}

}  // namespace pedwatch
