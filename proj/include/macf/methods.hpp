#pragma once

#include <memory>
#include <string>

#include "macf/baselines.hpp"
#include "macf/benchmark.hpp"
#include "macf/chat.hpp"
#include "macf/orchestrator.hpp"

namespace macf {

// Builds a benchmarkable method handle by name:
//   macf, macf_user, macf_item  — full discussion loop (mode overridden)
//   itemcf, usercf              — CF + query reranking
//   bm25, dense                 — lexical / embedding retrieval
// Every method excludes the target user's history from its output.
Method make_method(const std::string& name, const Catalog& catalog, const VectorIndex& index,
                   EmbeddingProvider& provider, OrchestratorConfig config,
                   ChatConfig chat_config = {});

bool is_macf_method(const std::string& name);

}  // namespace macf
