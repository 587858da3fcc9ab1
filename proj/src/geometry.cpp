#include "forge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/render.hpp"

namespace forge {
namespace {
constexpr double kDegPerRad = 180.0 / std::numbers::pi;
}

void CameraPose::validate() const {
  if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0)) throw InvalidConfig("fov_y must be in (0, 180)");
  if (resolution.width <= 0 || resolution.height <= 0) {
    throw InvalidConfig("resolution components must be positive");
  }
  if (std::abs(pitch) > 89.0 / kDegPerRad + 1e-12) throw InvalidConfig("pitch must be in [-89, 89] degrees");
}

Eigen::Vector3d CameraPose::forward() const {
  const double cp = std::cos(pitch);
  return {-std::sin(yaw) * cp, std::sin(pitch), -std::cos(yaw) * cp};
}

Eigen::Vector3d CameraPose::right() const { return {std::cos(yaw), 0.0, -std::sin(yaw)}; }

Eigen::Vector3d CameraPose::up() const { return right().cross(forward()); }

double CameraPose::focal_px() const {
  return 0.5 * resolution.height / std::tan(0.5 * fov_y_deg / kDegPerRad);
}

Eigen::Vector3d CameraPose::to_camera(const Eigen::Vector3d& world) const {
  const Eigen::Vector3d d = world - position;
  return {d.dot(right()), d.dot(up()), d.dot(forward())};
}

double yaw_toward(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  return std::atan2(-(to.x() - from.x()), -(to.z() - from.z()));
}

std::optional<ImagePoint> project_point(const CameraPose& camera, const Eigen::Vector3d& world_point) {
  const Eigen::Vector3d c = camera.to_camera(world_point);
  if (c.z() <= 0.0) return std::nullopt;
  const double f = camera.focal_px();
  return ImagePoint{0.5 * camera.resolution.width + f * c.x() / c.z(),
                    0.5 * camera.resolution.height - f * c.y() / c.z(), c.z()};
}

VisibilityRecord visible_area_ratio(const Scene& scene, const CameraPose& camera, int object_id) {
  const RenderedView view = render_view(scene, camera);
  return measure_visibility(view, object_id);
}

double centroid_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return (a - b).norm(); }

NearestResult nearest_object(const Scene& scene, int ref_id, std::span<const int> candidates) {
  if (candidates.size() < 2) throw std::invalid_argument("nearest_object needs at least two candidates");
  const Eigen::Vector3d& ref = scene.object(ref_id).centroid;
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(candidates.size());
  for (int id : candidates) {
    if (id == ref_id) throw std::invalid_argument("reference listed among candidates");
    ranked.emplace_back(centroid_distance(ref, scene.object(id).centroid), id);
  }
  std::partial_sort(ranked.begin(), ranked.begin() + 2, ranked.end());
  const auto [d1, w1] = ranked[0];
  const auto [d2, w2] = ranked[1];
  if (d1 == d2) {
    throw AmbiguousNearest(fmt::format("objects {} and {} tie at distance {}", w1, w2, d1));
  }
  NearestResult r;
  r.winner = w1;
  r.runner_up = w2;
  r.nearest_distance = d1;
  r.runner_up_distance = d2;
  r.gap_ratio = d1 > 0.0 ? (d2 - d1) / d1 : std::numeric_limits<double>::infinity();
  return r;
}

Eigen::Vector2d ground_point(const Eigen::Vector3d& world) { return {world.x(), -world.z()}; }

double relative_azimuth(const Eigen::Vector2d& observer, const Eigen::Vector2d& ref,
                        const Eigen::Vector2d& target) {
  const Eigen::Vector2d h = ref - observer;
  const Eigen::Vector2d t = target - observer;
  if (h.squaredNorm() == 0.0) throw DegenerateHeading("reference coincides with observer");
  const double cross = h.y() * t.x() - h.x() * t.y();  // positive when t is clockwise of h
  const double dot = h.dot(t);
  double deg = std::atan2(cross, dot) * kDegPerRad;
  if (deg <= -180.0) deg = 180.0;
  return deg;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::front: return "front";
    case Direction::right: return "right";
    case Direction::behind: return "behind";
    case Direction::left: return "left";
  }
  return "front";
}

std::optional<Direction> parse_direction(std::string_view s) {
  for (Direction d : {Direction::front, Direction::right, Direction::behind, Direction::left}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

AzimuthClass classify_azimuth(double deg) {
  AzimuthClass out;
  if (deg > -45.0 && deg <= 45.0) {
    out.label = Direction::front;
  } else if (deg > 45.0 && deg <= 135.0) {
    out.label = Direction::right;
  } else if (deg > -135.0 && deg <= -45.0) {
    out.label = Direction::left;
  } else {
    out.label = Direction::behind;
  }
  double margin = std::numeric_limits<double>::infinity();
  for (double b : {45.0, -45.0, 135.0, -135.0}) {
    double d = std::fmod(std::abs(deg - b), 360.0);
    margin = std::min(margin, std::min(d, 360.0 - d));
  }
  out.boundary_margin_deg = margin;
  return out;
}

}  // namespace forge
