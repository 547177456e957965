#include "macf/embedding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "macf/errors.hpp"
#include "macf/jsonl.hpp"
#include "macf/net_probe.hpp"
#include "macf/text.hpp"

namespace macf {

void sort_scored(std::vector<ScoredItem>& items) {
  std::sort(items.begin(), items.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
}

Vector embed_text(EmbeddingProvider& provider, const std::string& text) {
  const std::string trimmed = trim(text);
  if (trimmed.empty()) {
    throw Error(ErrorCode::EmptyText, "cannot embed empty text");
  }
  Vector vec = provider.embed_raw(trimmed);
  if (vec.size() != provider.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "provider returned dim " + std::to_string(vec.size()) + ", expected " +
                    std::to_string(provider.dim()));
  }
  for (double component : vec) {
    if (!std::isfinite(component)) {
      throw Error(ErrorCode::ProviderUnavailable, "provider returned a non-finite component");
    }
  }
  return vec;
}

double dot(const Vector& a, const Vector& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const Vector& v) {
  return std::sqrt(dot(v, v));
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch, "cosine of dim " + std::to_string(a.size()) + " vs " +
                                            std::to_string(b.size()));
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::ZeroVector, "cosine undefined for a zero vector");
  }
  return dot(a, b) / (na * nb);
}

Vector HashEmbeddingProvider::embed_raw(const std::string& text) {
  Vector vec(kDim, 0.0);
  auto add_token = [&vec](const std::string& token) {
    const std::uint64_t hash = fnv1a64(token);
    const std::size_t bucket = hash % kDim;
    const double sign = ((hash >> 32) & 1u) ? 1.0 : -1.0;
    vec[bucket] += sign;
  };
  for (const std::string& token : tokenize(text)) add_token(token);
  double n = norm(vec);
  if (n == 0.0) {
    // No alphanumeric tokens (or exact cancellation): hash the raw text so
    // every non-empty input still maps to a unit vector.
    add_token(text);
    n = norm(vec);
  }
  for (double& component : vec) component /= n;
  return vec;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config, Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) {
    transport_ = [this](const std::string& body) -> HttpResult {
      net::provider_request_count().fetch_add(1);
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout_s);
      client.set_read_timeout(config_.timeout_s);
      httplib::Headers headers;
      if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
      auto res = client.Post(config_.path, headers, body, "application/json");
      if (!res) {
        throw Error(ErrorCode::ProviderUnavailable, "transport error: " + httplib::to_string(res.error()));
      }
      return HttpResult{res->status, res->body};
    };
  }
}

std::string RemoteEmbeddingProvider::fingerprint() const {
  return "remote/" + config_.model + "/dim" + std::to_string(config_.dim);
}

Vector RemoteEmbeddingProvider::embed_raw(const std::string& text) {
  const nlohmann::json request{{"model", config_.model}, {"input", nlohmann::json::array({text})}};
  const std::string body = request.dump();
  last_retry_count_ = 0;
  for (int attempt = 0;; ++attempt) {
    bool retryable = true;
    std::string failure;
    try {
      HttpResult result = transport_(body);
      if (result.status == 200) {
        nlohmann::json payload = nlohmann::json::parse(result.body, nullptr, false);
        if (payload.is_discarded() || !payload.contains("data") || !payload["data"].is_array() ||
            payload["data"].empty()) {
          throw Error(ErrorCode::ProviderUnavailable, "malformed embedding response");
        }
        const auto& embedding = payload["data"][0].at("embedding");
        Vector vec;
        vec.reserve(embedding.size());
        for (const auto& component : embedding) vec.push_back(component.get<double>());
        return vec;
      }
      retryable = result.status == 429 || result.status >= 500;
      failure = "status " + std::to_string(result.status);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProviderUnavailable) throw;
      failure = e.what();
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (!retryable || attempt >= config_.max_retries) {
      throw Error(ErrorCode::ProviderUnavailable,
                  failure + " after " + std::to_string(attempt) + " retries");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_base_ms << attempt));
    last_retry_count_ = attempt + 1;
  }
}

const Vector& VectorIndex::vector_for(const std::string& item_id) const {
  auto it = entries.find(item_id);
  if (it == entries.end()) {
    throw Error(ErrorCode::MissingItemVector, "no vector for item '" + item_id + "'");
  }
  return it->second;
}

std::string item_embedding_text(const Item& item) {
  return item.title + ". " + item.category + ". " + item.description;
}

namespace {
// The text recipe is part of the fingerprint so a recipe change invalidates caches.
std::string index_fingerprint(const EmbeddingProvider& provider) {
  return provider.fingerprint() + "|title.category.description";
}
}  // namespace

VectorIndex build_index(const Catalog& catalog, EmbeddingProvider& provider) {
  VectorIndex index;
  index.dim = provider.dim();
  index.provider_fingerprint = index_fingerprint(provider);
  for (const auto& [item_id, item] : catalog.items) {
    try {
      index.entries.emplace(item_id, embed_text(provider, item_embedding_text(item)));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (item '" + item_id + "')");
    }
  }
  return index;
}

VectorIndex build_index_cached(const Catalog& catalog, EmbeddingProvider& provider,
                               const std::filesystem::path& cache_path) {
  if (std::filesystem::exists(cache_path)) {
    try {
      VectorIndex cached = load_index(cache_path);
      bool usable = cached.provider_fingerprint == index_fingerprint(provider) &&
                    cached.dim == provider.dim() &&
                    cached.entries.size() == catalog.items.size();
      if (usable) {
        for (const auto& [item_id, item] : catalog.items) {
          (void)item;
          if (!cached.entries.count(item_id)) {
            usable = false;
            break;
          }
        }
      }
      if (usable) return cached;
    } catch (const Error&) {
      // stale or corrupt cache: rebuild
    }
  }
  VectorIndex index = build_index(catalog, provider);
  save_index(index, cache_path);
  return index;
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path);
  write_jsonl_line(out, nlohmann::json{{"dim", index.dim},
                                       {"provider_fingerprint", index.provider_fingerprint},
                                       {"count", index.entries.size()}});
  for (const auto& [item_id, vec] : index.entries) {
    write_jsonl_line(out, nlohmann::json{{"item_id", item_id}, {"vector", vec}});
  }
}

VectorIndex load_index(const std::filesystem::path& path) {
  VectorIndex index;
  bool saw_header = false;
  for_each_jsonl(path, [&](int line_no, const nlohmann::json& record) {
    if (!saw_header) {
      if (!record.contains("dim") || !record.contains("provider_fingerprint")) {
        throw Error(ErrorCode::MalformedRecord,
                    path.filename().string() + " line " + std::to_string(line_no) +
                        ": expected index header");
      }
      index.dim = record.at("dim").get<std::size_t>();
      index.provider_fingerprint = record.at("provider_fingerprint").get<std::string>();
      saw_header = true;
      return;
    }
    Vector vec = record.at("vector").get<Vector>();
    if (vec.size() != index.dim) {
      throw Error(ErrorCode::DimMismatch,
                  path.filename().string() + " line " + std::to_string(line_no) +
                      ": vector dim mismatch");
    }
    index.entries.emplace(record.at("item_id").get<std::string>(), std::move(vec));
  });
  if (!saw_header) {
    throw Error(ErrorCode::MissingIndex, "index cache is empty: " + path.string());
  }
  return index;
}

std::vector<ScoredItem> top_k(const VectorIndex& index, const Vector& query_vec, int k,
                              const std::set<std::string>& exclude) {
  if (query_vec.size() != index.dim) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query_vec.size()) +
                                            " vs index dim " + std::to_string(index.dim));
  }
  if (k <= 0) return {};
  const double query_norm = norm(query_vec);
  if (query_norm == 0.0) {
    throw Error(ErrorCode::ZeroVector, "top_k query vector is zero");
  }
  std::vector<ScoredItem> scored;
  scored.reserve(index.entries.size());
  for (const auto& [item_id, vec] : index.entries) {
    if (exclude.count(item_id)) continue;
    const double entry_norm = norm(vec);
    if (entry_norm == 0.0) continue;
    scored.push_back({item_id, dot(query_vec, vec) / (query_norm * entry_norm)});
  }
  sort_scored(scored);
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(k);
  return scored;
}

Vector user_embedding(const InteractionHistory& history, const VectorIndex& index) {
  if (history.events.empty()) {
    throw Error(ErrorCode::EmptyHistory, "user '" + history.user_id + "' has no interactions");
  }
  Vector mean(index.dim, 0.0);
  for (const auto& event : history.events) {
    const Vector& vec = index.vector_for(event.item_id);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += vec[i];
  }
  for (double& component : mean) component /= static_cast<double>(history.events.size());
  return mean;
}

}  // namespace macf
