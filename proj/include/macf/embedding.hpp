#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "macf/catalog.hpp"

namespace macf {

using Vector = std::vector<double>;

struct ScoredItem {
  std::string item_id;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

// (score desc, item_id asc) — the tie-break order used by every retrieval path.
void sort_scored(std::vector<ScoredItem>& items);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string fingerprint() const = 0;
  // Input is already trimmed and non-empty; embed_text applies the guards.
  virtual Vector embed_raw(const std::string& text) = 0;
};

Vector embed_text(EmbeddingProvider& provider, const std::string& text);

double cosine(const Vector& a, const Vector& b);
double norm(const Vector& v);
double dot(const Vector& a, const Vector& b);

// Signed token-hash bag of words, L2-normalized. Pure function of the input
// string, so indexes and transcripts are reproducible without a network.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDim = 64;
  std::size_t dim() const override { return kDim; }
  std::string fingerprint() const override { return "hash-bow/v1/dim64"; }
  Vector embed_raw(const std::string& text) override;
};

struct HttpResult {
  int status = 0;
  std::string body;
};

struct RemoteEmbeddingConfig {
  std::string base_url = "http://127.0.0.1:8089";
  std::string path = "/v1/embeddings";
  std::string model = "bge-m3";
  std::string api_key_env = "EMBED_API_KEY";
  int timeout_s = 30;
  int max_retries = 3;
  int backoff_base_ms = 200;
  std::size_t dim = 1024;
};

// Speaks the de-facto embeddings-endpoint schema:
//   request  {"model": str, "input": [str, ...]}
//   response {"data": [{"index": int, "embedding": [num, ...]}, ...]}
class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  using Transport = std::function<HttpResult(const std::string& request_body)>;

  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config, Transport transport = {});

  std::size_t dim() const override { return config_.dim; }
  std::string fingerprint() const override;
  Vector embed_raw(const std::string& text) override;

  int last_retry_count() const { return last_retry_count_; }

 private:
  RemoteEmbeddingConfig config_;
  Transport transport_;
  int last_retry_count_ = 0;
};

struct VectorIndex {
  std::size_t dim = 0;
  std::string provider_fingerprint;
  std::map<std::string, Vector> entries;

  const Vector& vector_for(const std::string& item_id) const;  // throws MissingItemVector
};

// Text fed to the embedder for one item.
std::string item_embedding_text(const Item& item);

VectorIndex build_index(const Catalog& catalog, EmbeddingProvider& provider);

// Loads `cache_path` when its fingerprint and item set still match the
// catalog; otherwise rebuilds and rewrites the cache.
VectorIndex build_index_cached(const Catalog& catalog, EmbeddingProvider& provider,
                               const std::filesystem::path& cache_path);

void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

// Exact exhaustive scan. Zero-norm entries are unscorable and skipped.
std::vector<ScoredItem> top_k(const VectorIndex& index, const Vector& query_vec, int k,
                              const std::set<std::string>& exclude = {});

// Arithmetic mean of the item vectors over the user's history events.
Vector user_embedding(const InteractionHistory& history, const VectorIndex& index);

}  // namespace macf
