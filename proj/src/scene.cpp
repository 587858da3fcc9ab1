#include "forge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {
namespace {

double quantize_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

CategorySpec cat(std::string name, double wx0, double wx1, double hy0, double hy1, double dz0,
                 double dz1) {
  return {std::move(name), Eigen::Vector3d(wx0, hy0, dz0), Eigen::Vector3d(wx1, hy1, dz1)};
}

// Projection of a yawed box onto a unit ground axis.
double footprint_radius(const ObjectInstance& o, const Eigen::Vector2d& axis) {
  const double c = std::cos(o.yaw);
  const double s = std::sin(o.yaw);
  const Eigen::Vector2d ex(c, -s);  // local x in world (x, z)
  const Eigen::Vector2d ez(s, c);   // local z in world (x, z)
  return o.half_extents.x() * std::abs(ex.dot(axis)) + o.half_extents.z() * std::abs(ez.dot(axis));
}

}  // namespace

std::vector<CategorySpec> default_catalog() {
  return {
      cat("sofa", 1.6, 2.2, 0.80, 0.95, 0.80, 1.00),
      cat("tv stand", 1.2, 1.8, 0.45, 0.60, 0.40, 0.50),
      cat("floor lamp", 0.30, 0.45, 1.40, 1.80, 0.30, 0.45),
      cat("chair", 0.45, 0.60, 0.80, 1.00, 0.45, 0.60),
      cat("dining table", 1.2, 1.8, 0.72, 0.78, 0.80, 1.00),
      cat("bed", 1.4, 2.0, 0.50, 0.70, 1.90, 2.10),
      cat("fridge", 0.60, 0.90, 1.60, 1.90, 0.60, 0.75),
      cat("bookshelf", 0.80, 1.20, 1.60, 2.00, 0.30, 0.40),
      cat("armchair", 0.70, 0.90, 0.80, 1.00, 0.70, 0.90),
      cat("desk", 1.0, 1.6, 0.72, 0.78, 0.50, 0.80),
      cat("cabinet", 0.60, 1.20, 0.80, 1.20, 0.40, 0.60),
      cat("potted plant", 0.30, 0.60, 0.50, 1.40, 0.30, 0.60),
      cat("dresser", 0.90, 1.50, 0.80, 1.10, 0.45, 0.55),
      cat("ottoman", 0.40, 0.80, 0.35, 0.45, 0.40, 0.80),
      cat("coffee table", 0.80, 1.20, 0.35, 0.45, 0.50, 0.70),
      cat("trash can", 0.25, 0.40, 0.30, 0.60, 0.25, 0.40),
  };
}

void SceneConfig::validate() const {
  if (!(room_width > 0.0 && room_depth > 0.0 && room_height > 0.0)) {
    throw InvalidConfig("room dimensions must be positive");
  }
  if (min_objects < 4) {
    throw InvalidConfig("object_count_range.min must be >= 4 (one reference plus three distractors)");
  }
  if (max_objects < min_objects) throw InvalidConfig("object_count_range is empty");
  if (max_objects > 0xFFFE) throw InvalidConfig("too many objects per scene");
  if (catalog.empty()) throw InvalidConfig("category catalog is empty");
  if (max_placement_attempts < 1) throw InvalidConfig("max_placement_attempts must be >= 1");
  if (!(duplicate_category_prob >= 0.0 && duplicate_category_prob <= 1.0)) {
    throw InvalidConfig("duplicate_category_prob must be in [0, 1]");
  }
  if (min_clearance < 0.0) throw InvalidConfig("min_clearance must be >= 0");
  for (const auto& c : catalog) {
    if ((c.min_extent.array() <= 0.0).any() || (c.max_extent.array() < c.min_extent.array()).any()) {
      throw InvalidConfig(fmt::format("category '{}' has an invalid extent range", c.name));
    }
    const Eigen::Vector3d& e = c.max_extent;
    const bool fits_flat = (e.x() <= room_width && e.z() <= room_depth) ||
                           (e.z() <= room_width && e.x() <= room_depth);
    if (!fits_flat || e.y() > room_height) {
      throw InvalidConfig(fmt::format("category '{}' does not fit inside the room", c.name));
    }
  }
}

std::uint64_t SceneConfig::digest() const {
  std::string canon = fmt::format("{:.17g}|{:.17g}|{:.17g}|{}|{}|{}|{}|{:.17g}|{:.17g}", room_width,
                                  room_depth, room_height, min_objects, max_objects,
                                  max_placement_attempts, seed, duplicate_category_prob,
                                  min_clearance);
  for (const auto& c : catalog) {
    canon += fmt::format("|{}:{:.17g},{:.17g},{:.17g}:{:.17g},{:.17g},{:.17g}", c.name,
                         c.min_extent.x(), c.min_extent.y(), c.min_extent.z(), c.max_extent.x(),
                         c.max_extent.y(), c.max_extent.z());
  }
  return fnv1a64(canon);
}

Eigen::Vector3d ObjectInstance::world_half_extents() const {
  const double c = std::abs(std::cos(yaw));
  const double s = std::abs(std::sin(yaw));
  return {c * half_extents.x() + s * half_extents.z(), half_extents.y(),
          s * half_extents.x() + c * half_extents.z()};
}

Aabb ObjectInstance::bounds() const {
  const Eigen::Vector3d h = world_half_extents();
  return {centroid - h, centroid + h};
}

std::vector<Eigen::Vector3d> ObjectInstance::corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  std::vector<Eigen::Vector3d> out;
  out.reserve(8);
  for (int i = 0; i < 8; ++i) {
    const double lx = (i & 1 ? 1.0 : -1.0) * half_extents.x();
    const double ly = (i & 2 ? 1.0 : -1.0) * half_extents.y();
    const double lz = (i & 4 ? 1.0 : -1.0) * half_extents.z();
    // Rotation about +y: x' = c x + s z, z' = -s x + c z.
    out.emplace_back(centroid.x() + c * lx + s * lz, centroid.y() + ly,
                     centroid.z() - s * lx + c * lz);
  }
  return out;
}

const ObjectInstance& Scene::object(int id) const {
  if (!contains(id)) throw std::out_of_range(fmt::format("object id {} not in scene", id));
  return objects[static_cast<std::size_t>(id)];
}

int Scene::category_count(const std::string& category) const {
  return static_cast<int>(std::count_if(objects.begin(), objects.end(),
                                        [&](const auto& o) { return o.category == category; }));
}

bool boxes_overlap(const ObjectInstance& a, const ObjectInstance& b, double clearance) {
  const double a_lo = a.centroid.y() - a.half_extents.y();
  const double a_hi = a.centroid.y() + a.half_extents.y();
  const double b_lo = b.centroid.y() - b.half_extents.y();
  const double b_hi = b.centroid.y() + b.half_extents.y();
  if (a_hi <= b_lo || b_hi <= a_lo) return false;

  const Eigen::Vector2d d(b.centroid.x() - a.centroid.x(), b.centroid.z() - a.centroid.z());
  for (const ObjectInstance* o : {&a, &b}) {
    const double c = std::cos(o->yaw);
    const double s = std::sin(o->yaw);
    for (const Eigen::Vector2d& axis : {Eigen::Vector2d(c, -s), Eigen::Vector2d(s, c)}) {
      const double gap = std::abs(d.dot(axis)) - footprint_radius(a, axis) - footprint_radius(b, axis);
      if (gap >= clearance) return false;
    }
  }
  return true;
}

std::string scene_id_for(std::uint64_t scene_index) { return fmt::format("scene_{:05d}", scene_index); }

Scene sample_scene(const SceneConfig& config, std::uint64_t scene_index) {
  config.validate();
  Rng rng(mix_seed(config.seed, scene_index, 0x5CE7E));

  Scene scene;
  scene.scene_id = scene_id_for(scene_index);
  scene.config_digest = config.digest();
  scene.room_size = Eigen::Vector3d(config.room_width, config.room_height, config.room_depth);

  const int count = rng.range(config.min_objects, config.max_objects);
  std::vector<std::size_t> unused(config.catalog.size());
  for (std::size_t i = 0; i < unused.size(); ++i) unused[i] = i;

  for (int id = 0; id < count; ++id) {
    std::size_t cat_index;
    if ((!scene.objects.empty() && rng.bernoulli(config.duplicate_category_prob)) || unused.empty()) {
      if (scene.objects.empty()) {
        cat_index = rng.below(config.catalog.size());
      } else {
        const auto& pick = scene.objects[rng.below(scene.objects.size())];
        cat_index = static_cast<std::size_t>(
            std::find_if(config.catalog.begin(), config.catalog.end(),
                         [&](const auto& c) { return c.name == pick.category; }) -
            config.catalog.begin());
      }
    } else {
      const std::size_t k = rng.below(unused.size());
      cat_index = unused[k];
      unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(k));
    }
    const CategorySpec& spec = config.catalog[cat_index];

    ObjectInstance obj;
    obj.id = id;
    obj.category = spec.name;
    for (int axis = 0; axis < 3; ++axis) {
      obj.half_extents[axis] =
          quantize_mm(0.5 * rng.uniform(spec.min_extent[axis], spec.max_extent[axis]));
    }

    bool placed = false;
    for (int attempt = 0; attempt < config.max_placement_attempts && !placed; ++attempt) {
      obj.yaw = rng.bernoulli(0.5) ? std::numbers::pi / 2.0 : 0.0;
      const Eigen::Vector3d h = obj.world_half_extents();
      const double x_lo = h.x(), x_hi = config.room_width - h.x();
      const double z_lo = h.z(), z_hi = config.room_depth - h.z();
      if (x_hi < x_lo || z_hi < z_lo) continue;
      // Positions are snapped inward to the millimeter grid so the box stays inside.
      const double x = std::clamp(quantize_mm(rng.uniform(x_lo, x_hi)), std::ceil(x_lo * 1000.0) / 1000.0,
                                  std::floor(x_hi * 1000.0) / 1000.0);
      const double z = std::clamp(quantize_mm(rng.uniform(z_lo, z_hi)), std::ceil(z_lo * 1000.0) / 1000.0,
                                  std::floor(z_hi * 1000.0) / 1000.0);
      obj.centroid = Eigen::Vector3d(x, obj.half_extents.y(), z);
      const Aabb b = obj.bounds();
      if (b.min.x() < 0.0 || b.min.z() < 0.0 || b.max.x() > config.room_width ||
          b.max.z() > config.room_depth || b.max.y() > config.room_height) {
        continue;
      }
      placed = std::none_of(scene.objects.begin(), scene.objects.end(), [&](const auto& other) {
        return boxes_overlap(obj, other, config.min_clearance);
      });
    }
    if (!placed) {
      throw PlacementExhausted(fmt::format("{}: could not place object {} ({}) after {} attempts",
                                           scene.scene_id, id, spec.name,
                                           config.max_placement_attempts));
    }
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

SharedExclusivePartition partition_objects(const std::set<int>& visible_a,
                                           const std::set<int>& visible_b) {
  SharedExclusivePartition p;
  std::set_intersection(visible_a.begin(), visible_a.end(), visible_b.begin(), visible_b.end(),
                        std::inserter(p.shared, p.shared.end()));
  std::set_difference(visible_a.begin(), visible_a.end(), visible_b.begin(), visible_b.end(),
                      std::inserter(p.exclusive_a, p.exclusive_a.end()));
  std::set_difference(visible_b.begin(), visible_b.end(), visible_a.begin(), visible_a.end(),
                      std::inserter(p.exclusive_b, p.exclusive_b.end()));
  return p;
}

}  // namespace forge
