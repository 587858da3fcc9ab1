#include <doctest.h>

#include <numbers>

#include "forge/errors.hpp"
#include "forge/rng.hpp"
#include "forge/scene.hpp"
#include "oracle.hpp"

using namespace forge;

namespace {

bool same_scene(const Scene& a, const Scene& b) {
  if (a.scene_id != b.scene_id || a.config_digest != b.config_digest || a.objects.size() != b.objects.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const auto& x = a.objects[i];
    const auto& y = b.objects[i];
    if (x.id != y.id || x.category != y.category || x.centroid != y.centroid || x.half_extents != y.half_extents ||
        x.yaw != y.yaw) {
      return false;
    }
  }
  return true;
}

ObjectInstance random_box(Rng& rng, int id) {
  ObjectInstance o;
  o.id = id;
  o.half_extents = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
  o.centroid = {rng.uniform(0.0, 4.0), o.half_extents.y() + (rng.bernoulli(0.2) ? rng.uniform(0.0, 2.0) : 0.0),
                rng.uniform(0.0, 4.0)};
  o.yaw = rng.bernoulli(0.5) ? 0.0 : std::numbers::pi / 2;
  return o;
}

}  // namespace

TEST_CASE("sample_scene is a pure function of seed and index") {
  SceneConfig cfg;
  cfg.room_width = cfg.room_depth = 6.0;
  cfg.min_objects = cfg.max_objects = 4;
  cfg.seed = 1;
  const Scene a = sample_scene(cfg, 0);
  const Scene b = sample_scene(cfg, 0);
  CHECK(same_scene(a, b));
  CHECK(a.objects.size() == 4);
  CHECK_FALSE(same_scene(a, sample_scene(cfg, 1)));
  cfg.seed = 2;
  CHECK_FALSE(same_scene(a, sample_scene(cfg, 0)));
}

TEST_CASE("generated scenes never interpenetrate and stay inside the room") {
  SceneConfig cfg;
  int collisions = 0, outside = 0, bad_ids = 0, bad_count = 0, scenes = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Scene s;
    try {
      s = sample_scene(cfg, i);
    } catch (const PlacementExhausted&) {
      continue;
    }
    ++scenes;
    const int n = static_cast<int>(s.objects.size());
    if (n < cfg.min_objects || n > cfg.max_objects) ++bad_count;
    for (int a = 0; a < n; ++a) {
      if (s.objects[static_cast<std::size_t>(a)].id != a) ++bad_ids;
      for (const auto& c : s.objects[static_cast<std::size_t>(a)].corners()) {
        if (c.x() < -1e-9 || c.x() > cfg.room_width + 1e-9 || c.y() < -1e-9 || c.y() > cfg.room_height + 1e-9 ||
            c.z() < -1e-9 || c.z() > cfg.room_depth + 1e-9) {
          ++outside;
        }
      }
      for (int b = a + 1; b < n; ++b) {
        if (oracle::collide(s.objects[static_cast<std::size_t>(a)], s.objects[static_cast<std::size_t>(b)], 0.0)) {
          ++collisions;
        }
      }
    }
  }
  CHECK(scenes >= 990);
  CHECK(collisions == 0);
  CHECK(outside == 0);
  CHECK(bad_ids == 0);
  CHECK(bad_count == 0);
}

TEST_CASE("boxes_overlap agrees with the footprint-rectangle oracle") {
  Rng rng(11);
  int disagreements = 0;
  for (int i = 0; i < 20000; ++i) {
    const ObjectInstance a = random_box(rng, 0);
    const ObjectInstance b = random_box(rng, 1);
    const double clearance = rng.bernoulli(0.5) ? 0.0 : 0.05;
    if (boxes_overlap(a, b, clearance) != oracle::collide(a, b, clearance)) ++disagreements;
    CHECK(boxes_overlap(a, b, clearance) == boxes_overlap(b, a, clearance));
  }
  CHECK(disagreements == 0);
}

TEST_CASE("config validation") {
  SceneConfig tiny;
  tiny.room_width = tiny.room_depth = 1.0;
  tiny.catalog = {{"sofa", {2.0, 0.8, 0.9}, {2.0, 0.8, 0.9}}};
  CHECK_THROWS_AS(tiny.validate(), InvalidConfig);

  SceneConfig few;
  few.min_objects = few.max_objects = 3;
  CHECK_THROWS_AS(few.validate(), InvalidConfig);

  SceneConfig flat;
  flat.room_height = 0.0;
  CHECK_THROWS_AS(flat.validate(), InvalidConfig);

  CHECK_NOTHROW(SceneConfig{}.validate());
  CHECK(default_catalog().size() == 16);
}

TEST_CASE("crowded rooms exhaust placement") {
  SceneConfig cfg;
  cfg.room_width = cfg.room_depth = 2.2;
  cfg.min_objects = cfg.max_objects = 6;
  cfg.catalog = {{"crate", {1.0, 0.5, 1.0}, {1.0, 0.5, 1.0}}};
  cfg.max_placement_attempts = 50;
  CHECK_THROWS_AS(sample_scene(cfg, 0), PlacementExhausted);
}

TEST_CASE("partition_objects set algebra") {
  auto p = partition_objects({1, 2, 3}, {2, 3, 4});
  CHECK(p.shared == std::set<int>{2, 3});
  CHECK(p.exclusive_a == std::set<int>{1});
  CHECK(p.exclusive_b == std::set<int>{4});

  p = partition_objects({1, 2}, {1, 2});
  CHECK(p.shared == std::set<int>{1, 2});
  CHECK(p.exclusive_a.empty());
  CHECK(p.exclusive_b.empty());

  p = partition_objects({}, {5});
  CHECK(p.shared.empty());
  CHECK(p.exclusive_b == std::set<int>{5});

  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::set<int> a, b;
    for (int id = 0; id < 20; ++id) {
      if (rng.bernoulli(0.4)) a.insert(id);
      if (rng.bernoulli(0.4)) b.insert(id);
    }
    p = partition_objects(a, b);
    std::set<int> ra = p.shared, rb = p.shared;
    ra.insert(p.exclusive_a.begin(), p.exclusive_a.end());
    rb.insert(p.exclusive_b.begin(), p.exclusive_b.end());
    CHECK(ra == a);
    CHECK(rb == b);
    for (int id : p.shared) CHECK((!p.exclusive_a.contains(id) && !p.exclusive_b.contains(id)));
    for (int id : p.exclusive_a) CHECK_FALSE(p.exclusive_b.contains(id));
  }
}

TEST_CASE("scene ids and object lookup") {
  CHECK(scene_id_for(42) == "scene_00042");
  const Scene s = sample_scene(SceneConfig{}, 5);
  CHECK(s.object(0).id == 0);
  CHECK(s.contains(static_cast<int>(s.objects.size()) - 1));
  CHECK_FALSE(s.contains(static_cast<int>(s.objects.size())));
  CHECK(s.room_size == Eigen::Vector3d(8.0, 3.0, 8.0));
}
