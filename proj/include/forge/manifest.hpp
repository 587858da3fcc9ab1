#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "forge/taskgen.hpp"

namespace forge {

// One manifest line. Keys are emitted in a fixed order so output bytes are
// stable: id, task, split, image_paths, question, options, answer, provenance.
nlohmann::ordered_json item_to_json(const QAItem& item);
QAItem item_from_json(const nlohmann::json& j);

nlohmann::ordered_json scene_objects_json(const Scene& scene);

class Manifest {
 public:
  Manifest() = default;
  Manifest(std::filesystem::path root, nlohmann::json header, std::vector<QAItem> items);

  const std::filesystem::path& root() const { return root_; }
  const nlohmann::json& header() const { return header_; }
  const std::vector<QAItem>& items() const { return items_; }
  const QAItem* find(const std::string& id) const;

 private:
  std::filesystem::path root_;
  nlohmann::json header_;
  std::vector<QAItem> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Loads dataset.jsonl (and manifest_header.json beside it when present).
// Image paths in items stay relative to the manifest's directory.
Manifest load_manifest(const std::filesystem::path& dataset_jsonl);

}  // namespace forge
