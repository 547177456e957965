#include "macf/ranked.hpp"

namespace macf {

std::vector<std::string> RankedList::item_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& entry : entries) ids.push_back(entry.item_id);
  return ids;
}

nlohmann::json RankedList::to_json(bool with_rationales) const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& entry : entries) {
    nlohmann::json record{{"item_id", entry.item_id}, {"score", entry.score}};
    if (with_rationales) record["rationales"] = entry.rationales;
    list.push_back(std::move(record));
  }
  return {{"entries", list}};
}

}  // namespace macf
