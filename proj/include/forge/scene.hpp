#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace forge {

// Full extents (not half) along x = width, y = height, z = depth, in meters.
struct CategorySpec {
  std::string name;
  Eigen::Vector3d min_extent;
  Eigen::Vector3d max_extent;
};

std::vector<CategorySpec> default_catalog();

struct SceneConfig {
  double room_width = 8.0;   // x
  double room_depth = 8.0;   // z
  double room_height = 3.0;  // y
  int min_objects = 10;
  int max_objects = 16;
  std::vector<CategorySpec> catalog = default_catalog();
  int max_placement_attempts = 400;
  std::uint64_t seed = 7;
  // Chance that a new object repeats a category already in the room.
  double duplicate_category_prob = 0.05;
  // Minimum clearance between footprints, meters.
  double min_clearance = 0.05;

  // Throws InvalidConfig.
  void validate() const;
  std::uint64_t digest() const;
};

struct Aabb {
  Eigen::Vector3d min;
  Eigen::Vector3d max;
};

struct ObjectInstance {
  int id = 0;
  std::string category;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  double yaw = 0.0;

  // Half extents of the yawed box's world-aligned bounds.
  Eigen::Vector3d world_half_extents() const;
  Aabb bounds() const;
  // The eight box corners after yaw, in world coordinates.
  std::vector<Eigen::Vector3d> corners() const;
};

struct Scene {
  std::string scene_id;
  std::uint64_t config_digest = 0;
  // Room extents (width x, height y, depth z); the room spans [0, size].
  Eigen::Vector3d room_size = Eigen::Vector3d::Zero();
  std::vector<ObjectInstance> objects;

  const ObjectInstance& object(int id) const;
  bool contains(int id) const { return id >= 0 && id < static_cast<int>(objects.size()); }
  // Number of objects sharing this category.
  int category_count(const std::string& category) const;
};

struct SharedExclusivePartition {
  std::set<int> shared;
  std::set<int> exclusive_a;
  std::set<int> exclusive_b;
};

// Pure function of (config.seed, scene_index). Throws PlacementExhausted when
// an object cannot be placed within max_placement_attempts.
Scene sample_scene(const SceneConfig& config, std::uint64_t scene_index);

SharedExclusivePartition partition_objects(const std::set<int>& visible_a,
                                           const std::set<int>& visible_b);

// Separating-axis test on ground footprints plus the height interval.
// Boxes closer than `clearance` on the ground plane count as overlapping.
bool boxes_overlap(const ObjectInstance& a, const ObjectInstance& b, double clearance = 0.0);

std::string scene_id_for(std::uint64_t scene_index);

}  // namespace forge
