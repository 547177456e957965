#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace macf {

struct Item {
  std::string item_id;
  std::string title;
  std::string category;
  std::map<std::string, nlohmann::json> attributes;  // scalar values only (string or number)
  std::string description;

  bool operator==(const Item&) const = default;
};

struct InteractionEvent {
  std::string item_id;
  std::int64_t timestamp = 0;
  std::optional<double> rating;  // [1,5] when present; unused by retrieval

  bool operator==(const InteractionEvent&) const = default;
};

struct InteractionHistory {
  std::string user_id;
  std::vector<InteractionEvent> events;  // sorted by (timestamp, item_id)

  bool operator==(const InteractionHistory&) const = default;
};

struct Catalog {
  std::map<std::string, Item> items;
  std::map<std::string, InteractionHistory> users;

  bool has_item(const std::string& item_id) const { return items.count(item_id) > 0; }
  bool has_user(const std::string& user_id) const { return users.count(user_id) > 0; }
  const Item& item(const std::string& item_id) const;  // throws UnknownItem

  bool operator==(const Catalog&) const = default;
};

struct QueryCase {
  std::string user_id;
  std::string query;
  std::set<std::string> relevant_item_ids;  // non-empty ground truth

  bool operator==(const QueryCase&) const = default;
};

struct LoadReport {
  int items_read = 0;
  int interactions_read = 0;
  int cases_read = 0;
  int blank_lines_skipped = 0;
  int unknown_field_warnings = 0;
};

struct CatalogLoad {
  Catalog catalog;
  LoadReport report;
};

struct QueryCaseLoad {
  std::vector<QueryCase> cases;
  LoadReport report;
};

// Line-delimited JSON loaders. See the file schemas in the README.
CatalogLoad load_catalog(const std::filesystem::path& items_path,
                         const std::filesystem::path& interactions_path);

const InteractionHistory& get_history(const Catalog& catalog, const std::string& user_id);

QueryCaseLoad load_query_cases(const std::filesystem::path& path, const Catalog& catalog);

// Canonical serialization; reloading the written pair reproduces the catalog.
void save_catalog(const Catalog& catalog, const std::filesystem::path& items_path,
                  const std::filesystem::path& interactions_path);

// Distinct item ids appearing in the user's history.
std::set<std::string> history_item_set(const InteractionHistory& history);

}  // namespace macf
