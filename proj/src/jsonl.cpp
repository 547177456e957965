#include "macf/jsonl.hpp"

#include <fstream>

#include "macf/errors.hpp"
#include "macf/text.hpp"

namespace macf {

int for_each_jsonl(const std::filesystem::path& path,
                   const std::function<void(int, const nlohmann::json&)>& fn) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MalformedRecord, "cannot open file: " + path.string());
  }
  std::string line;
  int line_no = 0;
  int blanks = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      ++blanks;
      continue;
    }
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw Error(ErrorCode::MalformedRecord,
                  path.filename().string() + " line " + std::to_string(line_no) + ": invalid JSON");
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::MalformedRecord,
                  path.filename().string() + " line " + std::to_string(line_no) + ": expected an object");
    }
    fn(line_no, record);
  }
  return blanks;
}

void write_jsonl_line(std::ostream& out, const nlohmann::json& record) {
  out << record.dump() << '\n';
}

}  // namespace macf
