#pragma once

#include <filesystem>
#include <string>

#include "macf/chat.hpp"
#include "macf/embedding.hpp"
#include "macf/orchestrator.hpp"

namespace macf {

enum class EmbeddingProviderKind { deterministic, remote };

struct EmbeddingSettings {
  EmbeddingProviderKind provider = EmbeddingProviderKind::deterministic;
  RemoteEmbeddingConfig remote;
};

// Flat INI-style sections: [retrieval] n,k; [orchestrator] K,T_max,tau,
// disable_pci,disable_dar,disable_atu,mode; [policy] kind,seed;
// [chat] base_url,model,temperature,timeout_s,max_retries;
// [embedding] provider,base_url,model.
struct AppConfig {
  OrchestratorConfig orchestrator;
  ChatConfig chat;
  EmbeddingSettings embedding;

  static AppConfig defaults() { return {}; }
};

AppConfig load_config(const std::filesystem::path& path);

// Applies a JSON object of per-request overrides (seed, mode, tau, T_max, K,
// n, k, disable_* flags) onto an orchestrator config. Unknown keys ignored.
void apply_overrides(OrchestratorConfig& config, const nlohmann::json& overrides);

}  // namespace macf
