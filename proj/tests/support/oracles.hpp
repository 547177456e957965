#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "macf/catalog.hpp"
#include "macf/embedding.hpp"

namespace macf::testsupport {

// Independent brute-force references for the oracle-equivalence tests. These
// recompute everything from first principles (their own scans, their own
// accumulation, their own sorts) and must stay decoupled from the library
// implementations they check.

std::vector<ScoredItem> oracle_top_k(const VectorIndex& index, const Vector& query, int k,
                                     const std::set<std::string>& exclude = {});

std::vector<std::pair<std::string, double>> oracle_similar_users(const Catalog& catalog,
                                                                 const VectorIndex& index,
                                                                 const std::string& user_id, int n);

std::vector<std::pair<std::string, double>> oracle_relevant_items(
    const Catalog& catalog, const VectorIndex& index, const Vector& query_vec,
    const std::string& user_id, int n);

std::vector<ScoredItem> oracle_retrieve_by_item(const VectorIndex& index,
                                                const std::string& anchor_id, int k);

std::vector<ScoredItem> oracle_bm25(const Catalog& catalog, const std::string& query, int k);

std::vector<ScoredItem> oracle_item_cf(const Catalog& catalog, const std::string& user_id);
std::vector<ScoredItem> oracle_user_cf(const Catalog& catalog, const std::string& user_id);

Vector oracle_user_mean(const InteractionHistory& history, const VectorIndex& index);

std::vector<std::string> oracle_top_categories(const Catalog& catalog,
                                               const InteractionHistory& history, int top_n);

// Expected hit rate of a ranker drawing K distinct items uniformly from a
// candidate set of size M containing r relevant items.
double oracle_random_hit_probability(int M, int r, int K);

}  // namespace macf::testsupport
