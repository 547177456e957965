#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace macf {

struct RankedEntry {
  std::string item_id;
  double score = 0.0;
  std::vector<std::string> rationales;  // proposer-attributed texts

  bool operator==(const RankedEntry&) const = default;
};

// Ordered, deduplicated recommendation list: scores non-increasing, ties by
// item_id ascending, length capped by the caller.
struct RankedList {
  std::vector<RankedEntry> entries;

  std::vector<std::string> item_ids() const;
  nlohmann::json to_json(bool with_rationales = true) const;

  bool operator==(const RankedList&) const = default;
};

}  // namespace macf
