#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forge/geometry.hpp"
#include "forge/render.hpp"
#include "forge/rng.hpp"
#include "forge/scene.hpp"

namespace forge {

enum class TaskKind { occlusion_restoration = 0, distance_comparison = 1, azimuth_transfer = 2 };
inline constexpr std::array<TaskKind, 3> kAllTasks = {
    TaskKind::occlusion_restoration, TaskKind::distance_comparison, TaskKind::azimuth_transfer};

std::string_view to_string(TaskKind t);
std::optional<TaskKind> parse_task(std::string_view s);

// Per-task integer counts indexed by TaskKind.
struct TaskCounts {
  std::array<std::int64_t, 3> values{};

  std::int64_t& operator[](TaskKind t) { return values[static_cast<std::size_t>(t)]; }
  std::int64_t operator[](TaskKind t) const { return values[static_cast<std::size_t>(t)]; }
  std::int64_t total() const { return values[0] + values[1] + values[2]; }
  // Splits `items` as evenly as possible, earlier tasks taking the remainder.
  static TaskCounts even_split(std::int64_t items);
};

inline constexpr std::array<char, 4> kLetters = {'A', 'B', 'C', 'D'};
using OptionSet = std::array<std::string, 4>;

struct QAItem {
  std::string id;
  TaskKind task = TaskKind::occlusion_restoration;
  std::string split;
  std::array<std::string, 2> image_paths;
  std::string question;
  OptionSet options;
  char answer = 'A';
  nlohmann::ordered_json provenance;
  // Occlusion items only; also recorded in provenance.
  std::optional<MaskRect> mask;

  const std::string& answer_text() const { return options[static_cast<std::size_t>(answer - 'A')]; }
};

struct GenConfig {
  double min_area_ratio = 0.005;
  double angle_thresh_deg = 15.0;
  double nearest_gap_ratio_min = 0.10;
  TaskCounts target_counts = TaskCounts::even_split(300);
  double train_fraction = 0.8;
  std::uint64_t seed = 7;
  // Scene budget the targets are spread over; more scenes are visited only
  // to cover shortfalls.
  std::int64_t scenes = 50;
  Resolution resolution;
  double fov_y_deg = 60.0;
  int mask_margin_px = kDefaultMaskMargin;
  int mask_border_px = kDefaultMaskBorder;
  int max_pose_attempts = 32;
  int max_candidates_per_task = 6;
  // Fraction of visited scenes that must yield a usable view pair.
  double min_scene_yield = 0.05;
  unsigned threads = 0;  // 0 = hardware concurrency

  // Throws InvalidConfig.
  void validate() const;
};

struct ViewPair {
  Scene scene;
  RenderedView view_a;
  RenderedView view_b;
  std::vector<VisibilityRecord> visibility_a;
  std::vector<VisibilityRecord> visibility_b;
  SharedExclusivePartition partition;
  double min_area_ratio = 0.0;

  // Visible means area_ratio >= min_area_ratio.
  std::set<int> visible_a() const;
  std::set<int> visible_b() const;
};

// Builds a pair from fixed cameras (visibility thresholded at min_area_ratio).
ViewPair make_view_pair(const Scene& scene, const CameraPose& a, const CameraPose& b, double min_area_ratio);

enum class Rejection {
  placement_exhausted,
  no_view_pair,
  occlusion_no_shared,
  occlusion_category_not_unique,
  occlusion_too_few_distractors,
  distance_no_shared,
  distance_reference_not_unique,
  distance_too_few_candidates,
  distance_ambiguous,
  distance_gap_below_threshold,
  distance_nearest_not_nameable,
  azimuth_empty_exclusive,
  azimuth_category_not_unique,
  azimuth_degenerate,
  azimuth_margin_below_threshold,
};

std::string_view to_string(Rejection r);

using GenOutcome = std::variant<QAItem, Rejection>;
using RejectionStats = std::map<std::string, std::int64_t>;

struct McqAssignment {
  OptionSet options;
  char answer = 'A';
};

// Throws DuplicateOption unless the four texts are distinct.
McqAssignment assemble_mcq(const std::string& correct, const std::array<std::string, 3>& distractors, Rng& rng);

// Samples camera pairs until shared and both exclusive sets are nonempty.
std::optional<ViewPair> sample_view_pair(const Scene& scene, const GenConfig& config, Rng& rng);

// Single-item generators over a specific anchor. Items come back without id
// or split; those are assigned when the item enters a dataset.
GenOutcome make_occlusion_item(const ViewPair& pair, const GenConfig& config, int object_id, Rng& rng);
GenOutcome make_distance_item(const ViewPair& pair, const GenConfig& config, int reference_id, Rng& rng);
GenOutcome make_azimuth_item(const ViewPair& pair, const GenConfig& config, int reference_id, int target_id,
                             Rng& rng);

// Draw a random anchor and try it.
GenOutcome gen_occlusion_item(const ViewPair& pair, const GenConfig& config, Rng& rng);
GenOutcome gen_distance_item(const ViewPair& pair, const GenConfig& config, Rng& rng);
GenOutcome gen_azimuth_item(const ViewPair& pair, const GenConfig& config, Rng& rng);

// All items a scene can contribute, per task, in a seeded order.
struct ScenePool {
  std::uint64_t scene_index = 0;
  std::optional<ViewPair> pair;
  std::array<std::vector<QAItem>, 3> items;
  RejectionStats rejections;
};

ScenePool build_scene_pool(const SceneConfig& scene_config, const GenConfig& config, std::uint64_t scene_index);

std::string item_id_for(std::int64_t ordinal);
// Fibonacci hashing of the ordinal carried in the id; train iff key < fraction.
std::string split_for_id(std::string_view id, double train_fraction);

const std::map<TaskKind, std::string>& question_templates();

struct BuildSummary {
  std::int64_t items = 0;
  TaskCounts per_task;
  std::int64_t train = 0;
  std::int64_t test = 0;
  std::int64_t scenes_used = 0;
  std::int64_t scenes_visited = 0;
  RejectionStats rejections;
};

// Writes dataset.jsonl, manifest_header.json, generation_stats.json and
// images/ under out_dir. Throws GenerationStalled.
BuildSummary build_dataset(const SceneConfig& scene_config, const GenConfig& config,
                           const std::filesystem::path& out_dir);

nlohmann::ordered_json manifest_header(const SceneConfig& scene_config, const GenConfig& config);

}  // namespace forge
