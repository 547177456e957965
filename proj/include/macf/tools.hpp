#pragma once

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "macf/catalog.hpp"
#include "macf/embedding.hpp"

namespace macf {

struct ToolDefaults {
  int n = 5;
  int k = 15;
};

// Agents may override n/k per call; overrides pass through this clamp.
int clamp_override(int value);

struct CallContext {
  std::string caller;  // agent id, or "orchestrator"
  int round = -1;
};

struct ToolCall {
  std::string tool;
  nlohmann::json args;
  std::string caller;
  int round = -1;
  int result_count = 0;
  double elapsed_ms = 0.0;

  nlohmann::json to_json() const;
};

struct Neighbor {
  std::string user_id;
  double similarity = 0.0;
};

struct NeighborSet {
  std::vector<Neighbor> neighbors;  // similarity non-increasing, target excluded
};

struct RelevantItem {
  std::string item_id;
  double relevance = 0.0;
  std::int64_t last_timestamp = 0;  // most recent interaction with this item
};

struct RelevantHistory {
  std::vector<RelevantItem> items;  // relevance non-increasing, subset of the history
};

// Okapi BM25 (k1=1.2, b=0.75) over lowercased "title. category. description".
class Bm25Corpus {
 public:
  static constexpr double kK1 = 1.2;
  static constexpr double kB = 0.75;

  explicit Bm25Corpus(const Catalog& catalog);
  // Zero-score documents are omitted; ties break by item_id.
  std::vector<ScoredItem> search(const std::string& query, int k) const;

 private:
  struct Doc {
    std::string item_id;
    std::map<std::string, int> term_freq;
    int length = 0;
  };
  std::vector<Doc> docs_;
  std::map<std::string, int> doc_freq_;
  double avg_doc_len_ = 0.0;
};

// The callable tool set exposed to every agent. Read-only over catalog and
// index; the call log is the per-session audit trail.
class ToolSet {
 public:
  ToolSet(const Catalog& catalog, const VectorIndex& index, EmbeddingProvider& provider,
          ToolDefaults defaults = {});

  NeighborSet get_similar_users(const std::string& user_id, int n, const CallContext& ctx = {});
  RelevantHistory get_relevant_items(const std::string& user_id, const std::string& query, int n,
                                     const CallContext& ctx = {});
  std::vector<ScoredItem> retrieve_by_query(const std::string& query, int k,
                                            const std::set<std::string>& exclude = {},
                                            const CallContext& ctx = {});
  std::vector<ScoredItem> retrieve_by_item(const std::string& item_id, int k,
                                           const CallContext& ctx = {});
  std::vector<ScoredItem> bm25_search(const std::string& query, int k, const CallContext& ctx = {});

  // Not a tool: shared embedding access for orchestration and reranking.
  Vector embed_query(const std::string& text);

  const Catalog& catalog() const { return catalog_; }
  const VectorIndex& index() const { return index_; }
  EmbeddingProvider& provider() { return provider_; }
  ToolDefaults defaults() const { return defaults_; }

  std::vector<ToolCall> call_log() const;
  int call_count() const;

 private:
  void log_call(const std::string& tool, nlohmann::json args, const CallContext& ctx,
                int result_count, double elapsed_ms);

  const Catalog& catalog_;
  const VectorIndex& index_;
  EmbeddingProvider& provider_;
  ToolDefaults defaults_;
  Bm25Corpus bm25_;
  mutable std::mutex log_mutex_;
  std::vector<ToolCall> call_log_;
};

}  // namespace macf
