#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "macf/catalog.hpp"
#include "macf/embedding.hpp"
#include "macf/ranked.hpp"

namespace macf {

// Binary-presence co-occurrence statistics over all users. Scoring for a
// target user removes that user's own contribution, so one immutable matrix
// serves every target.
struct CoocMatrix {
  std::map<std::string, int> item_counts;                       // users holding the item
  std::map<std::pair<std::string, std::string>, int> pair_counts;  // unordered, key a<b

  static CoocMatrix build(const Catalog& catalog);
  int pair(const std::string& a, const std::string& b) const;
};

std::vector<ScoredItem> item_cf_scores(const CoocMatrix& cooc, const Catalog& catalog,
                                       const std::string& user_id);
std::vector<ScoredItem> item_cf_scores(const Catalog& catalog, const std::string& user_id);

std::vector<ScoredItem> user_cf_scores(const Catalog& catalog, const std::string& user_id);

inline constexpr int kDefaultRerankPool = 50;

// Query-aware reranking of CF output: top `pool` candidates re-scored by
// cosine to the query embedding, truncated to K.
RankedList rerank_by_query(const std::vector<ScoredItem>& scores, const std::string& query,
                           const VectorIndex& index, EmbeddingProvider& provider, int K,
                           int pool = kDefaultRerankPool);

}  // namespace macf
