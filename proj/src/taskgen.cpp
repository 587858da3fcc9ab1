#include "forge/taskgen.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/manifest.hpp"
#include "forge/png_io.hpp"

namespace forge {
namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;
constexpr std::string_view kFormatVersion = "1.0.0";

constexpr std::uint64_t kPoseStream = 0xCA3E2A;
constexpr std::uint64_t kItemStream = 0x17E3;

double quantize_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

nlohmann::ordered_json vec3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

// Both poses, so a view can be re-rendered from the manifest alone.
nlohmann::ordered_json cameras_json(const ViewPair& pair) {
  auto pose = [](const CameraPose& c) {
    nlohmann::ordered_json j;
    j["position"] = vec3(c.position);
    j["yaw"] = c.yaw;
    j["pitch"] = c.pitch;
    j["fov_y_deg"] = c.fov_y_deg;
    j["resolution"] = {c.resolution.width, c.resolution.height};
    return j;
  };
  nlohmann::ordered_json j;
  j["A"] = pose(pair.view_a.camera);
  j["B"] = pose(pair.view_b.camera);
  return j;
}

std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
  return s;
}

bool camera_clear_of_objects(const Scene& scene, const Eigen::Vector3d& position, double clearance) {
  for (const auto& o : scene.objects) {
    const Aabb b = o.bounds();
    if (position.x() > b.min.x() - clearance && position.x() < b.max.x() + clearance &&
        position.z() > b.min.z() - clearance && position.z() < b.max.z() + clearance) {
      return false;
    }
  }
  return true;
}

CameraPose sample_camera(const Scene& scene, const GenConfig& config, double orbit_angle, Rng& rng) {
  const Eigen::Vector3d& room = scene.room_size;
  const double half = 0.5 * std::min(room.x(), room.z());
  const Eigen::Vector3d center(0.5 * room.x(), 0.0, 0.5 * room.z());
  const double radius = rng.uniform(0.55, 0.85) * half;
  CameraPose cam;
  cam.position = Eigen::Vector3d(quantize_mm(center.x() + radius * std::sin(orbit_angle)),
                                 quantize_mm(std::min(rng.uniform(1.3, 1.7), 0.9 * room.y())),
                                 quantize_mm(center.z() + radius * std::cos(orbit_angle)));
  cam.yaw = yaw_toward(cam.position, center) + rng.uniform(-15.0, 15.0) * kRadPerDeg;
  cam.pitch = rng.uniform(-25.0, -12.0) * kRadPerDeg;
  cam.fov_y_deg = config.fov_y_deg;
  cam.resolution = config.resolution;
  return cam;
}

// Categories of objects that are unique within the whole scene.
bool unique_in_scene(const Scene& scene, int id) { return scene.category_count(scene.object(id).category) == 1; }

nlohmann::ordered_json object_ref_json(const ViewPair& pair, int id) {
  const auto& o = pair.scene.object(id);
  nlohmann::ordered_json j;
  j["id"] = id;
  j["category"] = o.category;
  j["centroid"] = vec3(o.centroid);
  j["area_ratio_a"] = pair.visibility_a[static_cast<std::size_t>(id)].area_ratio;
  j["area_ratio_b"] = pair.visibility_b[static_cast<std::size_t>(id)].area_ratio;
  return j;
}

std::string image_path(const std::string& scene_id, std::string_view view, std::string_view suffix = "") {
  return fmt::format("images/{}_view{}{}.png", scene_id, view, suffix);
}

std::string masked_suffix(int object_id) { return fmt::format("_masked_obj{}", object_id); }

}  // namespace

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::occlusion_restoration: return "occlusion_restoration";
    case TaskKind::distance_comparison: return "distance_comparison";
    case TaskKind::azimuth_transfer: return "azimuth_transfer";
  }
  return "occlusion_restoration";
}

std::optional<TaskKind> parse_task(std::string_view s) {
  for (TaskKind t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

TaskCounts TaskCounts::even_split(std::int64_t items) {
  TaskCounts c;
  for (std::size_t i = 0; i < 3; ++i) {
    c.values[i] = items / 3 + (static_cast<std::int64_t>(i) < items % 3 ? 1 : 0);
  }
  return c;
}

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::placement_exhausted: return "placement_exhausted";
    case Rejection::no_view_pair: return "no_view_pair";
    case Rejection::occlusion_no_shared: return "occlusion_no_shared";
    case Rejection::occlusion_category_not_unique: return "occlusion_category_not_unique";
    case Rejection::occlusion_too_few_distractors: return "occlusion_too_few_distractors";
    case Rejection::distance_no_shared: return "distance_no_shared";
    case Rejection::distance_reference_not_unique: return "distance_reference_not_unique";
    case Rejection::distance_too_few_candidates: return "distance_too_few_candidates";
    case Rejection::distance_ambiguous: return "distance_ambiguous";
    case Rejection::distance_gap_below_threshold: return "distance_gap_below_threshold";
    case Rejection::distance_nearest_not_nameable: return "distance_nearest_not_nameable";
    case Rejection::azimuth_empty_exclusive: return "azimuth_empty_exclusive";
    case Rejection::azimuth_category_not_unique: return "azimuth_category_not_unique";
    case Rejection::azimuth_degenerate: return "azimuth_degenerate";
    case Rejection::azimuth_margin_below_threshold: return "azimuth_margin_below_threshold";
  }
  return "unknown";
}

void GenConfig::validate() const {
  if (!(min_area_ratio > 0.0 && min_area_ratio < 1.0)) throw InvalidConfig("min_area_ratio must be in (0, 1)");
  if (!(angle_thresh_deg >= 15.0)) throw InvalidConfig("angle_thresh_deg must be >= 15");
  if (!(angle_thresh_deg < 45.0)) throw InvalidConfig("angle_thresh_deg must be < 45 (quadrant half-width)");
  if (!(nearest_gap_ratio_min >= 0.0)) throw InvalidConfig("nearest_gap_ratio_min must be >= 0");
  for (std::int64_t c : target_counts.values) {
    if (c < 0) throw InvalidConfig("target counts must be non-negative");
  }
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidConfig("train_fraction must be in [0, 1]");
  if (scenes < 1) throw InvalidConfig("scenes must be >= 1");
  if (resolution.width <= 0 || resolution.height <= 0) throw InvalidConfig("resolution must be positive");
  if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0)) throw InvalidConfig("fov_y must be in (0, 180)");
  if (mask_margin_px < 0 || mask_border_px < 1) throw InvalidConfig("mask margin >= 0 and border >= 1 required");
  if (max_pose_attempts < 1 || max_candidates_per_task < 1) throw InvalidConfig("attempt limits must be >= 1");
  if (!(min_scene_yield >= 0.0 && min_scene_yield <= 1.0)) throw InvalidConfig("min_scene_yield must be in [0, 1]");
}

std::set<int> ViewPair::visible_a() const {
  std::set<int> s;
  for (const auto& v : visibility_a) {
    if (v.area_ratio >= min_area_ratio) s.insert(v.object_id);
  }
  return s;
}

std::set<int> ViewPair::visible_b() const {
  std::set<int> s;
  for (const auto& v : visibility_b) {
    if (v.area_ratio >= min_area_ratio) s.insert(v.object_id);
  }
  return s;
}

ViewPair make_view_pair(const Scene& scene, const CameraPose& a, const CameraPose& b, double min_area_ratio) {
  ViewPair pair;
  pair.scene = scene;
  pair.min_area_ratio = min_area_ratio;
  pair.view_a = render_view(scene, a);
  pair.view_b = render_view(scene, b);
  pair.visibility_a = measure_all_visibility(pair.view_a, scene.objects.size());
  pair.visibility_b = measure_all_visibility(pair.view_b, scene.objects.size());
  pair.partition = partition_objects(pair.visible_a(), pair.visible_b());
  return pair;
}

McqAssignment assemble_mcq(const std::string& correct, const std::array<std::string, 3>& distractors, Rng& rng) {
  std::array<std::string, 4> texts = {correct, distractors[0], distractors[1], distractors[2]};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (texts[i] == texts[j]) throw DuplicateOption(fmt::format("option '{}' appears twice", texts[i]));
    }
  }
  std::array<int, 4> order = {0, 1, 2, 3};
  rng.shuffle(std::span<int>(order));
  McqAssignment out;
  for (std::size_t slot = 0; slot < 4; ++slot) {
    out.options[slot] = texts[static_cast<std::size_t>(order[slot])];
    if (order[slot] == 0) out.answer = kLetters[slot];
  }
  return out;
}

std::optional<ViewPair> sample_view_pair(const Scene& scene, const GenConfig& config, Rng& rng) {
  for (int attempt = 0; attempt < config.max_pose_attempts; ++attempt) {
    const double orbit_a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double offset = rng.uniform(60.0, 140.0) * kRadPerDeg * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    const CameraPose cam_a = sample_camera(scene, config, orbit_a, rng);
    const CameraPose cam_b = sample_camera(scene, config, orbit_a + offset, rng);
    if (!camera_clear_of_objects(scene, cam_a.position, 0.25) ||
        !camera_clear_of_objects(scene, cam_b.position, 0.25)) {
      continue;
    }
    ViewPair pair = make_view_pair(scene, cam_a, cam_b, config.min_area_ratio);
    const auto& p = pair.partition;
    if (!p.shared.empty() && !p.exclusive_a.empty() && !p.exclusive_b.empty()) return pair;
  }
  return std::nullopt;
}

const std::map<TaskKind, std::string>& question_templates() {
  static const std::map<TaskKind, std::string> templates = {
      {TaskKind::occlusion_restoration,
       "The two images show the same room from different viewpoints. In the second image, one object "
       "is covered by a black rectangle with a red border. Which object is hidden under the mask?"},
      {TaskKind::distance_comparison,
       "The two images show the same room from different viewpoints. Measured between object centers "
       "in 3D space, which of the following objects is closest to the {reference}?"},
      {TaskKind::azimuth_transfer,
       "The two images show the same room from different viewpoints. Imagine you are standing where the "
       "first image was taken, facing the {reference}. In which direction is the {target} shown in the "
       "second image?"},
  };
  return templates;
}

GenOutcome make_occlusion_item(const ViewPair& pair, const GenConfig& config, int object_id, Rng& rng) {
  const Scene& scene = pair.scene;
  if (!pair.partition.shared.contains(object_id)) return Rejection::occlusion_no_shared;
  const std::string& category = scene.object(object_id).category;
  // The masked category must not be visible elsewhere in view B.
  for (const auto& v : pair.visibility_b) {
    if (v.object_id != object_id && v.pixel_count > 0 && scene.object(v.object_id).category == category) {
      return Rejection::occlusion_category_not_unique;
    }
  }

  std::vector<std::string> preferred;
  for (const auto& o : scene.objects) {
    const auto i = static_cast<std::size_t>(o.id);
    const bool seen = pair.visibility_a[i].pixel_count > 0 || pair.visibility_b[i].pixel_count > 0;
    if (seen && o.category != category &&
        std::find(preferred.begin(), preferred.end(), o.category) == preferred.end()) {
      preferred.push_back(o.category);
    }
  }
  std::sort(preferred.begin(), preferred.end());
  rng.shuffle(std::span<std::string>(preferred));
  std::vector<std::string> distractors(preferred.begin(),
                                       preferred.begin() + std::min<std::ptrdiff_t>(3, std::ssize(preferred)));
  if (distractors.size() < 3) {
    std::vector<std::string> fallback;
    for (const auto& [name, color] : category_color_table()) {
      if (name != category && std::find(distractors.begin(), distractors.end(), name) == distractors.end()) {
        fallback.push_back(name);
      }
    }
    rng.shuffle(std::span<std::string>(fallback));
    for (std::size_t i = 0; i < fallback.size() && distractors.size() < 3; ++i) distractors.push_back(fallback[i]);
  }
  if (distractors.size() < 3) return Rejection::occlusion_too_few_distractors;

  const MaskedImage masked = mask_object(pair.view_b, object_id, config.mask_margin_px, config.mask_border_px);
  const McqAssignment mcq = assemble_mcq(category, {distractors[0], distractors[1], distractors[2]}, rng);

  QAItem item;
  item.task = TaskKind::occlusion_restoration;
  item.image_paths = {image_path(scene.scene_id, "A"), image_path(scene.scene_id, "B", masked_suffix(object_id))};
  item.question = question_templates().at(item.task);
  item.options = mcq.options;
  item.answer = mcq.answer;
  item.mask = masked.rect;

  nlohmann::ordered_json prov;
  prov["scene_id"] = scene.scene_id;
  prov["cameras"] = cameras_json(pair);
  prov["masked_object_id"] = object_id;
  prov["masked_category"] = category;
  prov["mask_rect"] = {masked.rect.x0, masked.rect.y0, masked.rect.x1, masked.rect.y1};
  prov["mask_border_px"] = masked.rect.border_px;
  prov["area_ratio_a"] = pair.visibility_a[static_cast<std::size_t>(object_id)].area_ratio;
  prov["area_ratio_b"] = pair.visibility_b[static_cast<std::size_t>(object_id)].area_ratio;
  nlohmann::ordered_json in_b = nlohmann::ordered_json::array();
  for (const auto& v : pair.visibility_b) {
    if (v.pixel_count == 0) continue;
    nlohmann::ordered_json e;
    e["id"] = v.object_id;
    e["category"] = scene.object(v.object_id).category;
    e["pixel_count"] = v.pixel_count;
    in_b.push_back(std::move(e));
  }
  prov["view_b_objects"] = std::move(in_b);
  prov["objects"] = scene_objects_json(scene);
  item.provenance = std::move(prov);
  return item;
}

GenOutcome make_distance_item(const ViewPair& pair, const GenConfig& config, int reference_id, Rng& rng) {
  const Scene& scene = pair.scene;
  if (!pair.partition.shared.contains(reference_id)) return Rejection::distance_no_shared;
  if (!unique_in_scene(scene, reference_id)) return Rejection::distance_reference_not_unique;

  // Every other object competes for "nearest", so the answer is the argmin
  // over the whole scene, not only over the listed options.
  std::vector<int> others;
  std::vector<int> nameable;
  for (const auto& o : scene.objects) {
    if (o.id == reference_id) continue;
    others.push_back(o.id);
    const auto i = static_cast<std::size_t>(o.id);
    const bool visible = pair.visibility_a[i].area_ratio >= config.min_area_ratio ||
                         pair.visibility_b[i].area_ratio >= config.min_area_ratio;
    if (visible && unique_in_scene(scene, o.id)) nameable.push_back(o.id);
  }
  if (nameable.size() < 4) return Rejection::distance_too_few_candidates;

  NearestResult nearest;
  try {
    nearest = nearest_object(scene, reference_id, others);
  } catch (const AmbiguousNearest&) {
    return Rejection::distance_ambiguous;
  }
  if (nearest.gap_ratio < config.nearest_gap_ratio_min) return Rejection::distance_gap_below_threshold;
  auto is_nameable = [&](int id) { return std::find(nameable.begin(), nameable.end(), id) != nameable.end(); };
  if (!is_nameable(nearest.winner) || !is_nameable(nearest.runner_up)) {
    return Rejection::distance_nearest_not_nameable;
  }

  std::vector<int> rest;
  for (int id : nameable) {
    if (id != nearest.winner && id != nearest.runner_up) rest.push_back(id);
  }
  rng.shuffle(std::span<int>(rest));
  const std::array<int, 4> candidates = {nearest.winner, nearest.runner_up, rest[0], rest[1]};
  auto cat = [&](int id) { return scene.object(id).category; };
  const McqAssignment mcq = assemble_mcq(cat(candidates[0]), {cat(candidates[1]), cat(candidates[2]), cat(candidates[3])}, rng);

  QAItem item;
  item.task = TaskKind::distance_comparison;
  item.image_paths = {image_path(scene.scene_id, "A"), image_path(scene.scene_id, "B")};
  item.question = replace_all(question_templates().at(item.task), "{reference}", cat(reference_id));
  item.options = mcq.options;
  item.answer = mcq.answer;

  const Eigen::Vector3d& ref_c = scene.object(reference_id).centroid;
  nlohmann::ordered_json prov;
  prov["scene_id"] = scene.scene_id;
  prov["cameras"] = cameras_json(pair);
  prov["reference"] = object_ref_json(pair, reference_id);
  prov["candidate_pool"] = "scene-unique categories visible in either view";
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (int id : candidates) {
    nlohmann::ordered_json c = object_ref_json(pair, id);
    c["distance"] = centroid_distance(ref_c, scene.object(id).centroid);
    cands.push_back(std::move(c));
  }
  prov["candidates"] = std::move(cands);
  prov["nearest_id"] = nearest.winner;
  prov["runner_up_id"] = nearest.runner_up;
  prov["gap_ratio"] = nearest.gap_ratio;
  prov["objects"] = scene_objects_json(scene);
  item.provenance = std::move(prov);
  return item;
}

GenOutcome make_azimuth_item(const ViewPair& pair, const GenConfig& config, int reference_id, int target_id,
                             Rng& rng) {
  const Scene& scene = pair.scene;
  const auto& part = pair.partition;
  if (part.exclusive_a.empty() || part.exclusive_b.empty()) return Rejection::azimuth_empty_exclusive;
  if (!part.exclusive_a.contains(reference_id) || !part.exclusive_b.contains(target_id)) {
    return Rejection::azimuth_empty_exclusive;
  }
  if (!unique_in_scene(scene, reference_id) || !unique_in_scene(scene, target_id)) {
    return Rejection::azimuth_category_not_unique;
  }
  const Eigen::Vector3d& observer = pair.view_a.camera.position;
  double azimuth;
  try {
    azimuth = relative_azimuth(ground_point(observer), ground_point(scene.object(reference_id).centroid),
                               ground_point(scene.object(target_id).centroid));
  } catch (const DegenerateHeading&) {
    return Rejection::azimuth_degenerate;
  }
  const AzimuthClass cls = classify_azimuth(azimuth);
  if (cls.boundary_margin_deg < config.angle_thresh_deg) return Rejection::azimuth_margin_below_threshold;

  std::array<std::string, 3> others;
  std::size_t k = 0;
  for (Direction d : {Direction::front, Direction::right, Direction::behind, Direction::left}) {
    if (d != cls.label) others[k++] = std::string(to_string(d));
  }
  const McqAssignment mcq = assemble_mcq(std::string(to_string(cls.label)), others, rng);

  QAItem item;
  item.task = TaskKind::azimuth_transfer;
  item.image_paths = {image_path(scene.scene_id, "A"), image_path(scene.scene_id, "B")};
  item.question = replace_all(replace_all(question_templates().at(item.task), "{reference}",
                                          scene.object(reference_id).category),
                              "{target}", scene.object(target_id).category);
  item.options = mcq.options;
  item.answer = mcq.answer;

  nlohmann::ordered_json prov;
  prov["scene_id"] = scene.scene_id;
  prov["cameras"] = cameras_json(pair);
  prov["observer"] = vec3(observer);
  prov["reference"] = object_ref_json(pair, reference_id);
  prov["target"] = object_ref_json(pair, target_id);
  prov["azimuth_deg"] = azimuth;
  prov["label"] = to_string(cls.label);
  prov["boundary_margin_deg"] = cls.boundary_margin_deg;
  prov["objects"] = scene_objects_json(scene);
  item.provenance = std::move(prov);
  return item;
}

GenOutcome gen_occlusion_item(const ViewPair& pair, const GenConfig& config, Rng& rng) {
  if (pair.partition.shared.empty()) return Rejection::occlusion_no_shared;
  std::vector<int> shared(pair.partition.shared.begin(), pair.partition.shared.end());
  rng.shuffle(std::span<int>(shared));
  GenOutcome last = Rejection::occlusion_category_not_unique;
  for (int id : shared) {
    last = make_occlusion_item(pair, config, id, rng);
    if (std::holds_alternative<QAItem>(last)) break;
  }
  return last;
}

GenOutcome gen_distance_item(const ViewPair& pair, const GenConfig& config, Rng& rng) {
  if (pair.partition.shared.empty()) return Rejection::distance_no_shared;
  std::vector<int> shared(pair.partition.shared.begin(), pair.partition.shared.end());
  const int ref = shared[rng.below(shared.size())];
  return make_distance_item(pair, config, ref, rng);
}

GenOutcome gen_azimuth_item(const ViewPair& pair, const GenConfig& config, Rng& rng) {
  const auto& part = pair.partition;
  if (part.exclusive_a.empty() || part.exclusive_b.empty()) return Rejection::azimuth_empty_exclusive;
  std::vector<int> refs(part.exclusive_a.begin(), part.exclusive_a.end());
  std::vector<int> targets(part.exclusive_b.begin(), part.exclusive_b.end());
  const int ref = refs[rng.below(refs.size())];
  const int target = targets[rng.below(targets.size())];
  return make_azimuth_item(pair, config, ref, target, rng);
}

ScenePool build_scene_pool(const SceneConfig& scene_config, const GenConfig& config, std::uint64_t scene_index) {
  ScenePool pool;
  pool.scene_index = scene_index;
  auto reject = [&](Rejection r) { ++pool.rejections[std::string(to_string(r))]; };

  Scene scene;
  try {
    scene = sample_scene(scene_config, scene_index);
  } catch (const PlacementExhausted&) {
    reject(Rejection::placement_exhausted);
    return pool;
  }
  Rng pose_rng(mix_seed(config.seed, scene_index, kPoseStream));
  pool.pair = sample_view_pair(scene, config, pose_rng);
  if (!pool.pair) {
    reject(Rejection::no_view_pair);
    return pool;
  }
  const ViewPair& pair = *pool.pair;
  const std::size_t cap = static_cast<std::size_t>(config.max_candidates_per_task);

  // Each candidate gets its own stream so pool order never shifts letters.
  std::uint64_t candidate = 0;
  auto item_rng = [&]() { return Rng(mix_seed(config.seed, scene_index, kItemStream + candidate++)); };
  auto collect = [&](TaskKind task, GenOutcome outcome) {
    if (auto* item = std::get_if<QAItem>(&outcome)) {
      pool.items[static_cast<std::size_t>(task)].push_back(std::move(*item));
    } else {
      reject(std::get<Rejection>(outcome));
    }
  };

  Rng order_rng(mix_seed(config.seed, scene_index, kItemStream - 1));
  std::vector<int> shared(pair.partition.shared.begin(), pair.partition.shared.end());
  order_rng.shuffle(std::span<int>(shared));
  for (int id : shared) {
    if (pool.items[0].size() >= cap) break;
    Rng rng = item_rng();
    collect(TaskKind::occlusion_restoration, make_occlusion_item(pair, config, id, rng));
  }

  order_rng.shuffle(std::span<int>(shared));
  for (int id : shared) {
    if (pool.items[1].size() >= cap) break;
    Rng rng = item_rng();
    collect(TaskKind::distance_comparison, make_distance_item(pair, config, id, rng));
  }

  std::vector<std::pair<int, int>> combos;
  for (int r : pair.partition.exclusive_a) {
    for (int t : pair.partition.exclusive_b) combos.emplace_back(r, t);
  }
  order_rng.shuffle(std::span<std::pair<int, int>>(combos));
  for (const auto& [r, t] : combos) {
    if (pool.items[2].size() >= cap) break;
    Rng rng = item_rng();
    collect(TaskKind::azimuth_transfer, make_azimuth_item(pair, config, r, t, rng));
  }
  return pool;
}

std::string item_id_for(std::int64_t ordinal) { return fmt::format("q{:06d}", ordinal); }

std::string split_for_id(std::string_view id, double train_fraction) {
  std::uint64_t ordinal = 0;
  const auto digits = id.find_first_of("0123456789");
  if (digits != std::string_view::npos) {
    std::from_chars(id.data() + digits, id.data() + id.size(), ordinal);
  } else {
    ordinal = fnv1a64(id);
  }
  const std::uint64_t key = (ordinal + 1) * 0x9E3779B97F4A7C15ULL;
  const double u = static_cast<double>(key >> 11) * 0x1.0p-53;
  return u < train_fraction ? "train" : "test";
}

nlohmann::ordered_json manifest_header(const SceneConfig& sc, const GenConfig& gc) {
  nlohmann::ordered_json h;
  h["format_version"] = kFormatVersion;
  nlohmann::ordered_json scene;
  scene["room_width"] = sc.room_width;
  scene["room_depth"] = sc.room_depth;
  scene["room_height"] = sc.room_height;
  scene["object_count_range"] = {sc.min_objects, sc.max_objects};
  scene["max_placement_attempts"] = sc.max_placement_attempts;
  scene["duplicate_category_prob"] = sc.duplicate_category_prob;
  scene["min_clearance"] = sc.min_clearance;
  scene["seed"] = sc.seed;
  scene["digest"] = fmt::format("{:016x}", sc.digest());
  nlohmann::ordered_json catalog = nlohmann::ordered_json::array();
  for (const auto& c : sc.catalog) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["min_extent"] = vec3(c.min_extent);
    e["max_extent"] = vec3(c.max_extent);
    catalog.push_back(std::move(e));
  }
  scene["category_catalog"] = std::move(catalog);
  h["scene_config"] = std::move(scene);

  nlohmann::ordered_json gen;
  gen["min_area_ratio"] = gc.min_area_ratio;
  gen["angle_thresh_deg"] = gc.angle_thresh_deg;
  gen["nearest_gap_ratio_min"] = gc.nearest_gap_ratio_min;
  nlohmann::ordered_json targets;
  for (TaskKind t : kAllTasks) targets[std::string(to_string(t))] = gc.target_counts[t];
  gen["target_counts"] = std::move(targets);
  gen["train_fraction"] = gc.train_fraction;
  gen["seed"] = gc.seed;
  gen["scenes"] = gc.scenes;
  gen["resolution"] = {gc.resolution.width, gc.resolution.height};
  gen["fov_y_deg"] = gc.fov_y_deg;
  gen["mask_margin_px"] = gc.mask_margin_px;
  gen["mask_border_px"] = gc.mask_border_px;
  h["gen_config"] = std::move(gen);

  nlohmann::ordered_json templates;
  for (const auto& [task, text] : question_templates()) templates[std::string(to_string(task))] = text;
  h["question_templates"] = std::move(templates);
  h["direction_labels"] = {"front", "right", "behind", "left"};
  h["direction_quadrants_deg"] = {{"front", "(-45, 45]"},
                                  {"right", "(45, 135]"},
                                  {"behind", "(135, 180] u (-180, -135]"},
                                  {"left", "(-135, -45]"}};
  h["ground_plane"] = "azimuth uses (x, -z); positive angles are clockwise seen from +y";
  nlohmann::ordered_json colors;
  for (const auto& [name, c] : category_color_table()) colors[name] = {c.r, c.g, c.b};
  h["category_colors"] = std::move(colors);
  h["background_color"] = {kBackgroundColor.r, kBackgroundColor.g, kBackgroundColor.b};
  h["floor_color"] = {kFloorColor.r, kFloorColor.g, kFloorColor.b};
  h["split_rule"] = "train iff frac((ordinal + 1) * 0x9E3779B97F4A7C15 / 2^64) < train_fraction";
  return h;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

struct SelectedScene {
  const ScenePool* pool = nullptr;
  std::vector<int> masked_objects;
};

std::string format_stats(const RejectionStats& stats) {
  std::string out;
  for (const auto& [reason, count] : stats) out += fmt::format(" {}={}", reason, count);
  return out;
}

}  // namespace

BuildSummary build_dataset(const SceneConfig& scene_config, const GenConfig& config,
                           const std::filesystem::path& out_dir) {
  scene_config.validate();
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");

  std::ofstream manifest(out_dir / "dataset.jsonl", std::ios::binary | std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + (out_dir / "dataset.jsonl").string());
  {
    std::ofstream header(out_dir / "manifest_header.json", std::ios::binary | std::ios::trunc);
    header << manifest_header(scene_config, config).dump(2) << '\n';
  }

  const unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::uint64_t planned = static_cast<std::uint64_t>(config.scenes);
  const std::uint64_t max_slots = 2 * planned + 64;
  const std::size_t batch_size = std::max<std::size_t>(16, 4 * threads);
  const TaskCounts& target = config.target_counts;

  BuildSummary summary;
  TaskCounts deficit;
  std::int64_t ordinal = 0;
  std::int64_t scenes_with_pair = 0;
  std::uint64_t slot = 0;

  auto quota_for = [&](std::uint64_t s, TaskKind t) -> std::int64_t {
    if (s >= planned) return 0;
    const auto T = static_cast<unsigned __int128>(target[t]);
    const auto lo = static_cast<std::int64_t>(T * s / planned);
    const auto hi = static_cast<std::int64_t>(T * (s + 1) / planned);
    return hi - lo;
  };

  while (summary.items < target.total()) {
    if (slot >= max_slots) {
      throw GenerationStalled(fmt::format("targets unmet after {} scenes ({} of {} items); rejections:{}", slot,
                                          summary.items, target.total(), format_stats(summary.rejections)));
    }
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(batch_size, max_slots - slot));
    std::vector<ScenePool> pools(n);
    parallel_for(n, threads, [&](std::size_t i) { pools[i] = build_scene_pool(scene_config, config, slot + i); });

    std::vector<SelectedScene> selected;
    std::string lines;
    for (const ScenePool& pool : pools) {
      ++summary.scenes_visited;
      for (const auto& [reason, count] : pool.rejections) summary.rejections[reason] += count;
      if (pool.pair) ++scenes_with_pair;

      SelectedScene sel{&pool, {}};
      bool used = false;
      for (TaskKind t : kAllTasks) {
        const std::int64_t want =
            std::min(quota_for(pool.scene_index, t) + deficit[t], target[t] - summary.per_task[t]);
        const auto& candidates = pool.items[static_cast<std::size_t>(t)];
        const std::int64_t take = std::min<std::int64_t>(want, std::ssize(candidates));
        deficit[t] = want - take;
        for (std::int64_t k = 0; k < take; ++k) {
          QAItem item = candidates[static_cast<std::size_t>(k)];
          item.id = item_id_for(ordinal++);
          item.split = split_for_id(item.id, config.train_fraction);
          if (item.split == "train") {
            ++summary.train;
          } else {
            ++summary.test;
          }
          if (item.mask) sel.masked_objects.push_back(item.provenance["masked_object_id"].get<int>());
          lines += item_to_json(item).dump();
          lines += '\n';
          ++summary.per_task[t];
          ++summary.items;
          used = true;
        }
      }
      if (used) {
        ++summary.scenes_used;
        selected.push_back(std::move(sel));
      }
    }
    manifest << lines;

    parallel_for(selected.size(), threads, [&](std::size_t i) {
      const ViewPair& pair = *selected[i].pool->pair;
      const std::string& sid = pair.scene.scene_id;
      write_png(out_dir / image_path(sid, "A"), pair.view_a.image);
      write_png(out_dir / image_path(sid, "B"), pair.view_b.image);
      for (int id : selected[i].masked_objects) {
        const MaskedImage m = mask_object(pair.view_b, id, config.mask_margin_px, config.mask_border_px);
        write_png(out_dir / image_path(sid, "B", masked_suffix(id)), m.image);
      }
    });

    slot += n;
    if (summary.scenes_visited >= 100 &&
        static_cast<double>(scenes_with_pair) < config.min_scene_yield * static_cast<double>(summary.scenes_visited)) {
      throw GenerationStalled(fmt::format("only {} of {} scenes produced a usable view pair; rejections:{}",
                                          scenes_with_pair, summary.scenes_visited, format_stats(summary.rejections)));
    }
  }
  manifest.close();
  if (!manifest) throw IoError("failed writing dataset.jsonl");

  nlohmann::ordered_json stats;
  stats["items"] = summary.items;
  nlohmann::ordered_json per_task;
  for (TaskKind t : kAllTasks) per_task[std::string(to_string(t))] = summary.per_task[t];
  stats["per_task"] = std::move(per_task);
  stats["train"] = summary.train;
  stats["test"] = summary.test;
  stats["scenes_used"] = summary.scenes_used;
  stats["scenes_visited"] = summary.scenes_visited;
  stats["rejections"] = summary.rejections;
  std::ofstream(out_dir / "generation_stats.json", std::ios::binary | std::ios::trunc) << stats.dump(2) << '\n';
  return summary;
}

}  // namespace forge
