#include "macf/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "macf/errors.hpp"
#include "macf/jsonl.hpp"

namespace macf {

namespace {

std::string require_string(const nlohmann::json& record, const char* key,
                           const std::string& where) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedRecord, where + ": missing or non-string \"" + key + "\"");
  }
  return it->get<std::string>();
}

std::string location(const std::filesystem::path& path, int line_no) {
  return path.filename().string() + " line " + std::to_string(line_no);
}

}  // namespace

const Item& Catalog::item(const std::string& item_id) const {
  auto it = items.find(item_id);
  if (it == items.end()) {
    throw Error(ErrorCode::UnknownItem, "no item '" + item_id + "' in catalog");
  }
  return it->second;
}

CatalogLoad load_catalog(const std::filesystem::path& items_path,
                         const std::filesystem::path& interactions_path) {
  CatalogLoad out;
  Catalog& catalog = out.catalog;
  LoadReport& report = out.report;

  static const std::set<std::string> kItemFields = {"item_id", "title", "category",
                                                    "attributes", "description"};
  report.blank_lines_skipped += for_each_jsonl(items_path, [&](int line_no, const nlohmann::json& record) {
    const std::string where = location(items_path, line_no);
    Item item;
    item.item_id = require_string(record, "item_id", where);
    if (item.item_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, where + ": empty item_id");
    }
    if (catalog.items.count(item.item_id)) {
      throw Error(ErrorCode::DuplicateItemId, where + ": duplicate item_id '" + item.item_id + "'");
    }
    if (record.contains("title")) item.title = require_string(record, "title", where);
    if (record.contains("category")) item.category = require_string(record, "category", where);
    if (record.contains("description")) item.description = require_string(record, "description", where);
    if (record.contains("attributes")) {
      const auto& attrs = record.at("attributes");
      if (!attrs.is_object()) {
        throw Error(ErrorCode::MalformedRecord, where + ": \"attributes\" must be an object");
      }
      for (const auto& [key, value] : attrs.items()) {
        if (!value.is_string() && !value.is_number()) {
          throw Error(ErrorCode::MalformedRecord,
                      where + ": attribute \"" + key + "\" must be a string or number");
        }
        item.attributes[key] = value;
      }
    }
    for (const auto& [key, value] : record.items()) {
      (void)value;
      if (!kItemFields.count(key)) ++report.unknown_field_warnings;
    }
    ++report.items_read;
    catalog.items.emplace(item.item_id, std::move(item));
  });

  static const std::set<std::string> kEventFields = {"user_id", "item_id", "timestamp", "rating"};
  std::set<std::tuple<std::string, std::string, std::int64_t>> seen;
  report.blank_lines_skipped += for_each_jsonl(interactions_path, [&](int line_no, const nlohmann::json& record) {
    const std::string where = location(interactions_path, line_no);
    const std::string user_id = require_string(record, "user_id", where);
    if (user_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, where + ": empty user_id");
    }
    InteractionEvent event;
    event.item_id = require_string(record, "item_id", where);
    auto ts = record.find("timestamp");
    if (ts == record.end() || !ts->is_number_integer()) {
      throw Error(ErrorCode::MalformedRecord, where + ": missing or non-integer \"timestamp\"");
    }
    event.timestamp = ts->get<std::int64_t>();
    if (record.contains("rating") && !record.at("rating").is_null()) {
      if (!record.at("rating").is_number()) {
        throw Error(ErrorCode::MalformedRecord, where + ": \"rating\" must be a number");
      }
      double rating = record.at("rating").get<double>();
      if (rating < 1.0 || rating > 5.0) {
        throw Error(ErrorCode::MalformedRecord, where + ": rating out of [1,5]");
      }
      event.rating = rating;
    }
    if (!catalog.has_item(event.item_id)) {
      throw Error(ErrorCode::DanglingReference,
                  where + ": user '" + user_id + "' references unknown item '" + event.item_id + "'");
    }
    if (!seen.emplace(user_id, event.item_id, event.timestamp).second) {
      throw Error(ErrorCode::MalformedRecord,
                  where + ": duplicate interaction (" + user_id + ", " + event.item_id + ", " +
                      std::to_string(event.timestamp) + ")");
    }
    for (const auto& [key, value] : record.items()) {
      (void)value;
      if (!kEventFields.count(key)) ++report.unknown_field_warnings;
    }
    auto& history = catalog.users[user_id];
    history.user_id = user_id;
    history.events.push_back(std::move(event));
    ++report.interactions_read;
  });

  for (auto& [user_id, history] : catalog.users) {
    (void)user_id;
    std::sort(history.events.begin(), history.events.end(),
              [](const InteractionEvent& a, const InteractionEvent& b) {
                return std::tie(a.timestamp, a.item_id) < std::tie(b.timestamp, b.item_id);
              });
  }
  return out;
}

const InteractionHistory& get_history(const Catalog& catalog, const std::string& user_id) {
  auto it = catalog.users.find(user_id);
  if (it == catalog.users.end()) {
    throw Error(ErrorCode::UnknownUser, "no user '" + user_id + "' in catalog");
  }
  return it->second;
}

QueryCaseLoad load_query_cases(const std::filesystem::path& path, const Catalog& catalog) {
  QueryCaseLoad out;
  static const std::set<std::string> kCaseFields = {"user_id", "query", "relevant_item_ids"};
  out.report.blank_lines_skipped += for_each_jsonl(path, [&](int line_no, const nlohmann::json& record) {
    const std::string where = location(path, line_no);
    QueryCase query_case;
    query_case.user_id = require_string(record, "user_id", where);
    query_case.query = require_string(record, "query", where);
    if (!catalog.has_user(query_case.user_id)) {
      throw Error(ErrorCode::UnknownUser, where + ": unknown user '" + query_case.user_id + "'");
    }
    auto relevant = record.find("relevant_item_ids");
    if (relevant == record.end() || !relevant->is_array()) {
      throw Error(ErrorCode::MalformedRecord, where + ": missing \"relevant_item_ids\" array");
    }
    for (const auto& entry : *relevant) {
      if (!entry.is_string()) {
        throw Error(ErrorCode::MalformedRecord, where + ": relevant_item_ids must be strings");
      }
      const std::string item_id = entry.get<std::string>();
      if (!catalog.has_item(item_id)) {
        throw Error(ErrorCode::UnknownRelevantItem, where + ": unknown item '" + item_id + "'");
      }
      query_case.relevant_item_ids.insert(item_id);
    }
    if (query_case.relevant_item_ids.empty()) {
      throw Error(ErrorCode::MalformedRecord, where + ": empty relevance set");
    }
    for (const auto& [key, value] : record.items()) {
      (void)value;
      if (!kCaseFields.count(key)) ++out.report.unknown_field_warnings;
    }
    ++out.report.cases_read;
    out.cases.push_back(std::move(query_case));
  });
  return out;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& items_path,
                  const std::filesystem::path& interactions_path) {
  std::ofstream items_out(items_path);
  for (const auto& [item_id, item] : catalog.items) {
    (void)item_id;
    nlohmann::json record{{"item_id", item.item_id},
                          {"title", item.title},
                          {"category", item.category},
                          {"attributes", nlohmann::json::object()},
                          {"description", item.description}};
    for (const auto& [key, value] : item.attributes) record["attributes"][key] = value;
    write_jsonl_line(items_out, record);
  }
  std::ofstream events_out(interactions_path);
  for (const auto& [user_id, history] : catalog.users) {
    for (const auto& event : history.events) {
      nlohmann::json record{{"user_id", user_id},
                            {"item_id", event.item_id},
                            {"timestamp", event.timestamp}};
      if (event.rating) record["rating"] = *event.rating;
      write_jsonl_line(events_out, record);
    }
  }
}

std::set<std::string> history_item_set(const InteractionHistory& history) {
  std::set<std::string> items;
  for (const auto& event : history.events) items.insert(event.item_id);
  return items;
}

}  // namespace macf
