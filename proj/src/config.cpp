#include "macf/config.hpp"

#include <fstream>

#include "macf/errors.hpp"
#include "macf/text.hpp"

namespace macf {

namespace {

bool parse_bool(const std::string& value, const std::string& where) {
  const std::string lowered = to_lower(value);
  if (lowered == "true" || lowered == "1" || lowered == "yes" || lowered == "on") return true;
  if (lowered == "false" || lowered == "0" || lowered == "no" || lowered == "off") return false;
  throw Error(ErrorCode::MalformedRecord, where + ": expected a boolean, got '" + value + "'");
}

}  // namespace

AppConfig load_config(const std::filesystem::path& path) {
  AppConfig config;
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MalformedRecord, "cannot open config file: " + path.string());
  }
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const std::string where = path.filename().string() + " line " + std::to_string(line_no);
    if (stripped.front() == '[' && stripped.back() == ']') {
      section = to_lower(trim(stripped.substr(1, stripped.size() - 2)));
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::MalformedRecord, where + ": expected key=value");
    }
    const std::string key = to_lower(trim(stripped.substr(0, eq)));
    const std::string value = trim(stripped.substr(eq + 1));
    auto& orch = config.orchestrator;

    if (section == "retrieval") {
      if (key == "n") orch.n = std::stoi(value);
      else if (key == "k") orch.k = std::stoi(value);
      else if (key == "history_window") orch.history_window = std::stoi(value);
      else throw Error(ErrorCode::MalformedRecord, where + ": unknown retrieval key '" + key + "'");
    } else if (section == "orchestrator") {
      if (key == "k") orch.K = std::stoi(value);
      else if (key == "t_max") orch.T_max = std::stoi(value);
      else if (key == "tau") orch.tau = std::stod(value);
      else if (key == "disable_pci") orch.ablations.disable_pci = parse_bool(value, where);
      else if (key == "disable_dar") orch.ablations.disable_dar = parse_bool(value, where);
      else if (key == "disable_atu") orch.ablations.disable_atu = parse_bool(value, where);
      else if (key == "max_tool_calls_per_turn") orch.max_tool_calls_per_turn = std::stoi(value);
      else if (key == "mode") {
        if (value == "full") orch.mode = DiscussionMode::full;
        else if (value == "user_only") orch.mode = DiscussionMode::user_only;
        else if (value == "item_only") orch.mode = DiscussionMode::item_only;
        else throw Error(ErrorCode::MalformedRecord, where + ": unknown mode '" + value + "'");
      } else {
        throw Error(ErrorCode::MalformedRecord, where + ": unknown orchestrator key '" + key + "'");
      }
    } else if (section == "policy") {
      if (key == "kind") {
        if (value == "scripted") orch.policy = PolicyKind::scripted;
        else if (value == "chat") orch.policy = PolicyKind::chat;
        else throw Error(ErrorCode::MalformedRecord, where + ": unknown policy '" + value + "'");
      } else if (key == "seed") {
        orch.seed = std::stoull(value);
      } else {
        throw Error(ErrorCode::MalformedRecord, where + ": unknown policy key '" + key + "'");
      }
    } else if (section == "chat") {
      if (key == "base_url") config.chat.base_url = value;
      else if (key == "model") config.chat.model = value;
      else if (key == "temperature") config.chat.temperature = std::stod(value);
      else if (key == "timeout_s") config.chat.timeout_s = std::stoi(value);
      else if (key == "max_retries") config.chat.max_retries = std::stoi(value);
      else if (key == "context_char_budget") config.chat.context_char_budget = std::stoul(value);
      else throw Error(ErrorCode::MalformedRecord, where + ": unknown chat key '" + key + "'");
    } else if (section == "embedding") {
      if (key == "provider") {
        if (value == "deterministic") config.embedding.provider = EmbeddingProviderKind::deterministic;
        else if (value == "remote") config.embedding.provider = EmbeddingProviderKind::remote;
        else throw Error(ErrorCode::MalformedRecord, where + ": unknown provider '" + value + "'");
      } else if (key == "base_url") {
        config.embedding.remote.base_url = value;
      } else if (key == "model") {
        config.embedding.remote.model = value;
      } else if (key == "dim") {
        config.embedding.remote.dim = std::stoul(value);
      } else if (key == "timeout_s") {
        config.embedding.remote.timeout_s = std::stoi(value);
      } else if (key == "max_retries") {
        config.embedding.remote.max_retries = std::stoi(value);
      } else {
        throw Error(ErrorCode::MalformedRecord, where + ": unknown embedding key '" + key + "'");
      }
    } else {
      throw Error(ErrorCode::MalformedRecord, where + ": unknown section '" + section + "'");
    }
  }
  config.orchestrator.transcript_char_budget = config.chat.context_char_budget / 8;
  return config;
}

void apply_overrides(OrchestratorConfig& config, const nlohmann::json& overrides) {
  if (!overrides.is_object()) return;
  for (const auto& [key, value] : overrides.items()) {
    if (key == "seed" && value.is_number()) config.seed = value.get<std::uint64_t>();
    else if (key == "n" && value.is_number()) config.n = value.get<int>();
    else if (key == "k" && value.is_number()) config.k = value.get<int>();
    else if (key == "K" && value.is_number()) config.K = value.get<int>();
    else if (key == "T_max" && value.is_number()) config.T_max = value.get<int>();
    else if (key == "tau" && value.is_number()) config.tau = value.get<double>();
    else if (key == "disable_pci" && value.is_boolean()) config.ablations.disable_pci = value.get<bool>();
    else if (key == "disable_dar" && value.is_boolean()) config.ablations.disable_dar = value.get<bool>();
    else if (key == "disable_atu" && value.is_boolean()) config.ablations.disable_atu = value.get<bool>();
    else if (key == "mode" && value.is_string()) {
      const std::string mode = value.get<std::string>();
      if (mode == "full") config.mode = DiscussionMode::full;
      else if (mode == "user_only") config.mode = DiscussionMode::user_only;
      else if (mode == "item_only") config.mode = DiscussionMode::item_only;
    }
    // unknown keys: ignored
  }
}

}  // namespace macf
