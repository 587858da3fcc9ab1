#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "forge/scene.hpp"

namespace forge {

struct Resolution {
  int width = 640;
  int height = 480;
};

// Right-handed, y-up world. yaw = 0 looks down -z; positive pitch looks up.
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;    // radians about +y
  double pitch = 0.0;  // radians
  double fov_y_deg = 60.0;
  Resolution resolution;

  void validate() const;
  Eigen::Vector3d forward() const;
  Eigen::Vector3d right() const;
  Eigen::Vector3d up() const;
  // Focal length in pixels for square pixels.
  double focal_px() const;
  // (x right, y up, depth along forward).
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const;
};

// Yaw that points the camera's ground heading from `from` toward `to`.
double yaw_toward(const Eigen::Vector3d& from, const Eigen::Vector3d& to);

struct ImagePoint {
  double x = 0.0;  // pixels, continuous; pixel (i, j) has center (i + 0.5, j + 0.5)
  double y = 0.0;
  double depth = 0.0;
};

// std::nullopt is the behind-camera marker (camera-space depth <= 0).
std::optional<ImagePoint> project_point(const CameraPose& camera, const Eigen::Vector3d& world_point);

// Inclusive pixel bounds.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct VisibilityRecord {
  int object_id = 0;
  std::int64_t pixel_count = 0;
  double area_ratio = 0.0;
  std::optional<PixelBox> image_bbox;
};

// Renders the scene and counts z-buffer winners carrying object_id.
VisibilityRecord visible_area_ratio(const Scene& scene, const CameraPose& camera, int object_id);

double centroid_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

struct NearestResult {
  int winner = -1;
  int runner_up = -1;
  double nearest_distance = 0.0;
  double runner_up_distance = 0.0;
  double gap_ratio = 0.0;  // (d2 - d1) / d1
};

// Throws AmbiguousNearest on an exact tie for the smallest distance.
NearestResult nearest_object(const Scene& scene, int ref_id, std::span<const int> candidates);

// World point onto the ground plane as (x, -z): the second axis points along
// the default viewing direction, so "clockwise from above" is positive.
Eigen::Vector2d ground_point(const Eigen::Vector3d& world);

// Signed angle in (-180, 180] degrees from heading (ref - observer) to
// (target - observer); positive is clockwise seen from above, i.e. to the
// observer's right. Throws DegenerateHeading if ref == observer.
double relative_azimuth(const Eigen::Vector2d& observer, const Eigen::Vector2d& ref,
                        const Eigen::Vector2d& target);

enum class Direction { front, right, behind, left };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view s);

struct AzimuthClass {
  Direction label = Direction::front;
  double boundary_margin_deg = 0.0;
};

// front (-45, 45], right (45, 135], behind (135, 180] u (-180, -135],
// left (-135, -45]. Margin is the circular distance to the nearest boundary.
AzimuthClass classify_azimuth(double deg);

}  // namespace forge
