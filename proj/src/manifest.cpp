#include "forge/manifest.hpp"

#include <fstream>

#include <fmt/format.h>

#include "forge/errors.hpp"

namespace forge {

nlohmann::ordered_json item_to_json(const QAItem& item) {
  nlohmann::ordered_json j;
  j["id"] = item.id;
  j["task"] = to_string(item.task);
  j["split"] = item.split;
  j["image_paths"] = {item.image_paths[0], item.image_paths[1]};
  j["question"] = item.question;
  nlohmann::ordered_json opts;
  for (std::size_t i = 0; i < 4; ++i) opts[std::string(1, kLetters[i])] = item.options[i];
  j["options"] = std::move(opts);
  j["answer"] = std::string(1, item.answer);
  j["provenance"] = item.provenance;
  return j;
}

QAItem item_from_json(const nlohmann::json& j) {
  QAItem item;
  item.id = j.at("id").get<std::string>();
  const auto task = parse_task(j.at("task").get<std::string>());
  if (!task) throw IoError(fmt::format("item {}: unknown task", item.id));
  item.task = *task;
  item.split = j.at("split").get<std::string>();
  const auto& paths = j.at("image_paths");
  if (!paths.is_array() || paths.size() != 2) throw IoError(fmt::format("item {}: need two image paths", item.id));
  item.image_paths = {paths[0].get<std::string>(), paths[1].get<std::string>()};
  item.question = j.at("question").get<std::string>();
  const auto& opts = j.at("options");
  if (!opts.is_object() || opts.size() != 4) throw IoError(fmt::format("item {}: need four options", item.id));
  for (std::size_t i = 0; i < 4; ++i) item.options[i] = opts.at(std::string(1, kLetters[i])).get<std::string>();
  const auto answer = j.at("answer").get<std::string>();
  if (answer.size() != 1 || answer[0] < 'A' || answer[0] > 'D') {
    throw IoError(fmt::format("item {}: answer must be one of A-D", item.id));
  }
  item.answer = answer[0];
  item.provenance = j.at("provenance");
  if (item.provenance.contains("mask_rect")) {
    const auto& r = item.provenance["mask_rect"];
    MaskRect rect;
    rect.x0 = r.at(0).get<int>();
    rect.y0 = r.at(1).get<int>();
    rect.x1 = r.at(2).get<int>();
    rect.y1 = r.at(3).get<int>();
    rect.border_px = item.provenance.value("mask_border_px", kDefaultMaskBorder);
    item.mask = rect;
  }
  return item;
}

nlohmann::ordered_json scene_objects_json(const Scene& scene) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& o : scene.objects) {
    nlohmann::ordered_json j;
    j["id"] = o.id;
    j["category"] = o.category;
    j["centroid"] = {o.centroid.x(), o.centroid.y(), o.centroid.z()};
    j["half_extents"] = {o.half_extents.x(), o.half_extents.y(), o.half_extents.z()};
    j["yaw"] = o.yaw;
    arr.push_back(std::move(j));
  }
  return arr;
}

Manifest::Manifest(std::filesystem::path root, nlohmann::json header, std::vector<QAItem> items)
    : root_(std::move(root)), header_(std::move(header)), items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].id, i).second) throw IoError("duplicate item id " + items_[i].id);
  }
}

const QAItem* Manifest::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

Manifest load_manifest(const std::filesystem::path& dataset_jsonl) {
  std::ifstream in(dataset_jsonl);
  if (!in) throw IoError("cannot open manifest " + dataset_jsonl.string());
  std::vector<QAItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      items.push_back(item_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(fmt::format("{}:{}: {}", dataset_jsonl.string(), line_no, e.what()));
    }
  }
  const std::filesystem::path root = dataset_jsonl.parent_path();
  nlohmann::json header = nlohmann::json::object();
  const auto header_path = root / "manifest_header.json";
  if (std::filesystem::exists(header_path)) {
    std::ifstream h(header_path);
    header = nlohmann::json::parse(h);
  }
  return Manifest(root, std::move(header), std::move(items));
}

}  // namespace forge
