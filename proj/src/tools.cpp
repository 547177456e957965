#include "macf/tools.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "macf/errors.hpp"
#include "macf/text.hpp"

namespace macf {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

int clamp_override(int value) {
  return std::clamp(value, 1, 100);
}

nlohmann::json ToolCall::to_json() const {
  return {{"tool", tool},     {"args", args},
          {"caller", caller}, {"round", round},
          {"result_count", result_count}, {"elapsed_ms", elapsed_ms}};
}

Bm25Corpus::Bm25Corpus(const Catalog& catalog) {
  long total_len = 0;
  for (const auto& [item_id, item] : catalog.items) {
    Doc doc;
    doc.item_id = item_id;
    for (const std::string& token : tokenize(item_embedding_text(item))) {
      ++doc.term_freq[token];
      ++doc.length;
    }
    total_len += doc.length;
    for (const auto& [term, freq] : doc.term_freq) {
      (void)freq;
      ++doc_freq_[term];
    }
    docs_.push_back(std::move(doc));
  }
  avg_doc_len_ = docs_.empty() ? 0.0 : static_cast<double>(total_len) / docs_.size();
}

std::vector<ScoredItem> Bm25Corpus::search(const std::string& query, int k) const {
  if (trim(query).empty()) {
    throw Error(ErrorCode::EmptyText, "bm25 query is empty");
  }
  if (k <= 0 || docs_.empty()) return {};
  const std::vector<std::string> terms = tokenize(query);
  const double n_docs = static_cast<double>(docs_.size());
  std::vector<ScoredItem> scored;
  for (const Doc& doc : docs_) {
    double score = 0.0;
    for (const std::string& term : terms) {
      auto tf_it = doc.term_freq.find(term);
      if (tf_it == doc.term_freq.end()) continue;
      const double tf = tf_it->second;
      const double df = doc_freq_.at(term);
      // Plus-one smoothed Robertson idf (non-negative for any df).
      const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
      const double denom = tf + kK1 * (1.0 - kB + kB * doc.length / avg_doc_len_);
      score += idf * tf * (kK1 + 1.0) / denom;
    }
    if (score > 0.0) scored.push_back({doc.item_id, score});
  }
  sort_scored(scored);
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(k);
  return scored;
}

ToolSet::ToolSet(const Catalog& catalog, const VectorIndex& index, EmbeddingProvider& provider,
                 ToolDefaults defaults)
    : catalog_(catalog), index_(index), provider_(provider), defaults_(defaults), bm25_(catalog) {}

NeighborSet ToolSet::get_similar_users(const std::string& user_id, int n, const CallContext& ctx) {
  const auto start = Clock::now();
  const InteractionHistory& target = get_history(catalog_, user_id);
  if (target.events.empty()) {
    throw Error(ErrorCode::EmptyHistory, "user '" + user_id + "' has an empty history");
  }
  NeighborSet out;
  if (n <= 0) {
    log_call("get_similar_users", {{"user_id", user_id}, {"n", n}}, ctx, 0, ms_since(start));
    return out;
  }
  const Vector target_vec = user_embedding(target, index_);
  std::vector<ScoredItem> scored;  // reuse the (score, id) ordering helper
  for (const auto& [other_id, other_history] : catalog_.users) {
    if (other_id == user_id || other_history.events.empty()) continue;
    scored.push_back({other_id, cosine(target_vec, user_embedding(other_history, index_))});
  }
  sort_scored(scored);
  if (scored.size() > static_cast<std::size_t>(n)) scored.resize(n);
  for (const ScoredItem& entry : scored) out.neighbors.push_back({entry.item_id, entry.score});
  log_call("get_similar_users", {{"user_id", user_id}, {"n", n}}, ctx,
           static_cast<int>(out.neighbors.size()), ms_since(start));
  return out;
}

RelevantHistory ToolSet::get_relevant_items(const std::string& user_id, const std::string& query,
                                            int n, const CallContext& ctx) {
  const auto start = Clock::now();
  const InteractionHistory& history = get_history(catalog_, user_id);
  const Vector query_vec = embed_query(query);
  RelevantHistory out;
  if (n <= 0) {
    log_call("get_relevant_items", {{"user_id", user_id}, {"query", query}, {"n", n}}, ctx, 0,
             ms_since(start));
    return out;
  }
  // Duplicate items collapse to one entry; keep the most recent timestamp.
  std::map<std::string, std::int64_t> latest;
  for (const auto& event : history.events) {
    auto [it, inserted] = latest.emplace(event.item_id, event.timestamp);
    if (!inserted && event.timestamp > it->second) it->second = event.timestamp;
  }
  std::vector<ScoredItem> scored;
  for (const auto& [item_id, ts] : latest) {
    (void)ts;
    scored.push_back({item_id, cosine(query_vec, index_.vector_for(item_id))});
  }
  sort_scored(scored);
  if (scored.size() > static_cast<std::size_t>(n)) scored.resize(n);
  for (const ScoredItem& entry : scored) {
    out.items.push_back({entry.item_id, entry.score, latest.at(entry.item_id)});
  }
  log_call("get_relevant_items", {{"user_id", user_id}, {"query", query}, {"n", n}}, ctx,
           static_cast<int>(out.items.size()), ms_since(start));
  return out;
}

std::vector<ScoredItem> ToolSet::retrieve_by_query(const std::string& query, int k,
                                                   const std::set<std::string>& exclude,
                                                   const CallContext& ctx) {
  const auto start = Clock::now();
  const Vector query_vec = embed_query(query);
  auto results = top_k(index_, query_vec, k, exclude);
  log_call("retrieve_by_query", {{"query", query}, {"k", k}, {"exclude_count", exclude.size()}},
           ctx, static_cast<int>(results.size()), ms_since(start));
  return results;
}

std::vector<ScoredItem> ToolSet::retrieve_by_item(const std::string& item_id, int k,
                                                  const CallContext& ctx) {
  const auto start = Clock::now();
  if (!catalog_.has_item(item_id)) {
    throw Error(ErrorCode::UnknownItem, "no item '" + item_id + "' in catalog");
  }
  const Vector& anchor = index_.vector_for(item_id);
  auto results = top_k(index_, anchor, k, {item_id});
  log_call("retrieve_by_item", {{"item_id", item_id}, {"k", k}}, ctx,
           static_cast<int>(results.size()), ms_since(start));
  return results;
}

std::vector<ScoredItem> ToolSet::bm25_search(const std::string& query, int k,
                                             const CallContext& ctx) {
  const auto start = Clock::now();
  auto results = bm25_.search(query, k);
  log_call("bm25_search", {{"query", query}, {"k", k}}, ctx, static_cast<int>(results.size()),
           ms_since(start));
  return results;
}

Vector ToolSet::embed_query(const std::string& text) {
  return embed_text(provider_, text);
}

std::vector<ToolCall> ToolSet::call_log() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return call_log_;
}

int ToolSet::call_count() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return static_cast<int>(call_log_.size());
}

void ToolSet::log_call(const std::string& tool, nlohmann::json args, const CallContext& ctx,
                       int result_count, double elapsed_ms) {
  std::lock_guard<std::mutex> lock(log_mutex_);
  call_log_.push_back({tool, std::move(args), ctx.caller, ctx.round, result_count, elapsed_ms});
}

}  // namespace macf
