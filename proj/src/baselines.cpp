#include "macf/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "macf/errors.hpp"

namespace macf {

namespace {

const InteractionHistory& checked_history(const Catalog& catalog, const std::string& user_id) {
  const InteractionHistory& history = get_history(catalog, user_id);
  if (history.events.empty()) {
    throw Error(ErrorCode::EmptyHistory, "user '" + user_id + "' has an empty history");
  }
  return history;
}

}  // namespace

CoocMatrix CoocMatrix::build(const Catalog& catalog) {
  CoocMatrix cooc;
  for (const auto& [user_id, history] : catalog.users) {
    (void)user_id;
    const std::set<std::string> items = history_item_set(history);
    for (const std::string& item : items) ++cooc.item_counts[item];
    for (auto first = items.begin(); first != items.end(); ++first) {
      for (auto second = std::next(first); second != items.end(); ++second) {
        ++cooc.pair_counts[{*first, *second}];  // set iteration keeps *first < *second
      }
    }
  }
  return cooc;
}

int CoocMatrix::pair(const std::string& a, const std::string& b) const {
  const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  auto it = pair_counts.find(key);
  return it == pair_counts.end() ? 0 : it->second;
}

std::vector<ScoredItem> item_cf_scores(const CoocMatrix& cooc, const Catalog& catalog,
                                       const std::string& user_id) {
  const std::set<std::string> held = history_item_set(checked_history(catalog, user_id));
  std::map<std::string, double> scores;
  for (const std::string& held_item : held) {
    auto count_it = cooc.item_counts.find(held_item);
    // Target's own presence is removed from the statistics; a pair with a
    // non-held candidate never includes the target, so only item counts adjust.
    const int held_count = (count_it == cooc.item_counts.end() ? 0 : count_it->second) - 1;
    if (held_count <= 0) continue;
    for (const auto& [candidate, candidate_count] : cooc.item_counts) {
      if (held.count(candidate)) continue;
      const int co = cooc.pair(held_item, candidate);
      if (co == 0) continue;
      scores[candidate] += co / std::sqrt(static_cast<double>(held_count) * candidate_count);
    }
  }
  std::vector<ScoredItem> out;
  for (const auto& [item_id, score] : scores) {
    if (score > 0.0) out.push_back({item_id, score});
  }
  sort_scored(out);
  return out;
}

std::vector<ScoredItem> item_cf_scores(const Catalog& catalog, const std::string& user_id) {
  return item_cf_scores(CoocMatrix::build(catalog), catalog, user_id);
}

std::vector<ScoredItem> user_cf_scores(const Catalog& catalog, const std::string& user_id) {
  const std::set<std::string> held = history_item_set(checked_history(catalog, user_id));
  std::map<std::string, double> scores;
  for (const auto& [other_id, other_history] : catalog.users) {
    if (other_id == user_id || other_history.events.empty()) continue;
    const std::set<std::string> other_items = history_item_set(other_history);
    int overlap = 0;
    for (const std::string& item : other_items) overlap += held.count(item) ? 1 : 0;
    if (overlap == 0) continue;
    const double weight =
        overlap / std::sqrt(static_cast<double>(held.size()) * other_items.size());
    for (const std::string& item : other_items) {
      if (!held.count(item)) scores[item] += weight;
    }
  }
  std::vector<ScoredItem> out;
  for (const auto& [item_id, score] : scores) {
    if (score > 0.0) out.push_back({item_id, score});
  }
  sort_scored(out);
  return out;
}

RankedList rerank_by_query(const std::vector<ScoredItem>& scores, const std::string& query,
                           const VectorIndex& index, EmbeddingProvider& provider, int K,
                           int pool) {
  const Vector query_vec = embed_text(provider, query);
  std::vector<ScoredItem> reranked;
  const std::size_t take = std::min(scores.size(), static_cast<std::size_t>(std::max(pool, 0)));
  for (std::size_t i = 0; i < take; ++i) {
    reranked.push_back({scores[i].item_id, cosine(query_vec, index.vector_for(scores[i].item_id))});
  }
  sort_scored(reranked);
  if (reranked.size() > static_cast<std::size_t>(std::max(K, 0))) reranked.resize(K);
  RankedList out;
  for (const ScoredItem& entry : reranked) out.entries.push_back({entry.item_id, entry.score, {}});
  return out;
}

}  // namespace macf
