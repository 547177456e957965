#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

namespace macf {

// Calls `fn(line_number, record)` for every non-blank line. Line numbers are
// 1-based. Throws MalformedRecord on unparseable lines or non-object records.
// Returns the number of blank lines skipped.
int for_each_jsonl(const std::filesystem::path& path,
                   const std::function<void(int, const nlohmann::json&)>& fn);

void write_jsonl_line(std::ostream& out, const nlohmann::json& record);

}  // namespace macf
