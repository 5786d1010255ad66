#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedwatch/model.hpp"

namespace pedwatch {

/// Ground-contact point of a detection: bottom-center of its box.
struct AnchorPoint {
  Point point;
  const Detection* source = nullptr;
};

AnchorPoint anchor_point(const Detection& det) noexcept;

/// Signed area (positive for counter-clockwise in a y-up frame).
double signed_area(std::span<const Point> poly) noexcept;

/// Index of the first vertex at which `poly` stops being convex, or nullopt
/// when it is a convex, simple polygon with positive area. Collinear
/// vertices are tolerated.
std::optional<std::size_t> first_non_convex_vertex(std::span<const Point> poly) noexcept;

/// Boundary-inclusive membership test for a convex polygon of either
/// orientation.
bool point_in_convex_polygon(Point pt, std::span<const Point> poly) noexcept;

bool point_in_group(Point pt, const RoiGroup& group) noexcept;

/// Detections whose label is `group.target_label` and whose anchor lies in
/// the union of the group's polygons, in input order.
std::vector<Detection> filter_to_roi(std::span<const Detection> detections, const RoiGroup& group);

}  // namespace pedwatch
