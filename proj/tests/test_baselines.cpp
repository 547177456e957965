#include <cmath>

#include <doctest.h>

#include "macf/baselines.hpp"
#include "macf/errors.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace macf;
namespace ts = macf::testsupport;

namespace {

// u1:{a,b}, u2:{a,b,c}, u3:{b,c}, u4:{a} — the hand-computed example.
Catalog toy_catalog() {
  Catalog catalog;
  ts::add_item(catalog, ts::make_item("a", "alpha thing"));
  ts::add_item(catalog, ts::make_item("b", "beta thing"));
  ts::add_item(catalog, ts::make_item("c", "gamma thing"));
  ts::add_user(catalog, "u1", {"a", "b"});
  ts::add_user(catalog, "u2", {"a", "b", "c"});
  ts::add_user(catalog, "u3", {"b", "c"});
  ts::add_user(catalog, "u4", {"a"});
  return catalog;
}

}  // namespace

TEST_CASE("item_cf_scores reproduces the hand-computed toy case") {
  Catalog catalog = toy_catalog();
  auto scores = item_cf_scores(catalog, "u4");
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].item_id == "b");
  CHECK(scores[0].score == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-12));
  CHECK(scores[0].score == doctest::Approx(0.8165).epsilon(1e-4));
  CHECK(scores[1].item_id == "c");
  CHECK(scores[1].score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("user_cf_scores reproduces the hand-computed toy case") {
  Catalog catalog = toy_catalog();
  auto scores = user_cf_scores(catalog, "u4");
  REQUIRE(scores.size() == 2);
  // w(u1)=1/sqrt(2), w(u2)=1/sqrt(3), w(u3)=0
  CHECK(scores[0].item_id == "b");
  CHECK(scores[0].score ==
        doctest::Approx(1.0 / std::sqrt(2.0) + 1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(scores[0].score == doctest::Approx(1.2845).epsilon(1e-4));
  CHECK(scores[1].item_id == "c");
  CHECK(scores[1].score == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(scores[1].score == doctest::Approx(0.5774).epsilon(1e-4));
}

TEST_CASE("CF edge cases: full coverage, singleton population, disjoint histories") {
  Catalog catalog = toy_catalog();
  // u2 holds every item: no candidates left
  CHECK(item_cf_scores(catalog, "u2").empty());

  Catalog lonely;
  ts::add_item(lonely, ts::make_item("a", "alpha"));
  ts::add_user(lonely, "only", {"a"});
  CHECK(user_cf_scores(lonely, "only").empty());

  Catalog disjoint;
  ts::add_item(disjoint, ts::make_item("a", "alpha"));
  ts::add_item(disjoint, ts::make_item("b", "beta"));
  ts::add_user(disjoint, "u1", {"a"});
  ts::add_user(disjoint, "u2", {"b"});
  CHECK(user_cf_scores(disjoint, "u1").empty());
  CHECK(item_cf_scores(disjoint, "u1").empty());

  CHECK_THROWS_AS(item_cf_scores(catalog, "ghost"), Error);
  Catalog with_empty = toy_catalog();
  with_empty.users["hollow"].user_id = "hollow";
  try {
    user_cf_scores(with_empty, "hollow");
    FAIL("expected EmptyHistory");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyHistory);
  }
}

TEST_CASE("ItemCF similarity is symmetric via the pair key") {
  Catalog catalog = ts::make_random_catalog(71, 30, 60);
  CoocMatrix cooc = CoocMatrix::build(catalog);
  for (const auto& [pair, count] : cooc.pair_counts) {
    CHECK(cooc.pair(pair.first, pair.second) == count);
    CHECK(cooc.pair(pair.second, pair.first) == count);
    CHECK(count <= std::min(cooc.item_counts.at(pair.first), cooc.item_counts.at(pair.second)));
  }
}

TEST_CASE("both CF scorers match brute-force oracles on randomized catalogs") {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    Catalog catalog = ts::make_random_catalog(seed, 40, 80);
    CoocMatrix cooc = CoocMatrix::build(catalog);
    for (const auto& [user_id, history] : catalog.users) {
      if (history.events.empty()) continue;
      auto expected_item = ts::oracle_item_cf(catalog, user_id);
      auto actual_item = item_cf_scores(cooc, catalog, user_id);
      REQUIRE(actual_item.size() == expected_item.size());
      for (std::size_t i = 0; i < expected_item.size(); ++i) {
        CHECK(actual_item[i].item_id == expected_item[i].item_id);
        CHECK(actual_item[i].score == doctest::Approx(expected_item[i].score).epsilon(1e-9));
      }
      auto expected_user = ts::oracle_user_cf(catalog, user_id);
      auto actual_user = user_cf_scores(catalog, user_id);
      REQUIRE(actual_user.size() == expected_user.size());
      for (std::size_t i = 0; i < expected_user.size(); ++i) {
        CHECK(actual_user[i].item_id == expected_user[i].item_id);
        CHECK(actual_user[i].score == doctest::Approx(expected_user[i].score).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("no CF baseline ever recommends an item from the target history") {
  Catalog catalog = ts::make_random_catalog(83, 25, 50);
  for (const auto& [user_id, history] : catalog.users) {
    if (history.events.empty()) continue;
    const auto held = history_item_set(history);
    for (const ScoredItem& item : item_cf_scores(catalog, user_id)) {
      CHECK(held.count(item.item_id) == 0);
    }
    for (const ScoredItem& item : user_cf_scores(catalog, user_id)) {
      CHECK(held.count(item.item_id) == 0);
    }
  }
}

TEST_CASE("rerank_by_query reorders the CF pool by query cosine") {
  Catalog catalog = ts::make_random_catalog(89, 10, 60);
  HashEmbeddingProvider provider;
  VectorIndex index = build_index(catalog, provider);

  // short list: everything comes back, reranked
  std::vector<ScoredItem> short_list;
  auto it = catalog.items.begin();
  for (int i = 0; i < 4; ++i, ++it) short_list.push_back({it->first, 4.0 - i});
  RankedList reranked = rerank_by_query(short_list, "tok1 tok2", index, provider, 10);
  CHECK(reranked.entries.size() == 4);

  // self-similarity: a candidate whose text equals the query ranks first
  const Item& target = catalog.items.begin()->second;
  RankedList with_self = rerank_by_query(short_list, item_embedding_text(target), index, provider, 10);
  CHECK(with_self.entries[0].item_id == target.item_id);

  // 30 candidates, pool 50, K=10: equals the exhaustive rerank oracle
  std::vector<ScoredItem> thirty;
  it = catalog.items.begin();
  for (int i = 0; i < 30; ++i, ++it) thirty.push_back({it->first, 30.0 - i});
  const std::string query = "tok9 tok8 tok7";
  RankedList actual = rerank_by_query(thirty, query, index, provider, 10, 50);

  const Vector query_vec = embed_text(provider, query);
  std::vector<ScoredItem> expected;
  for (const ScoredItem& candidate : thirty) {
    long double dot = 0.0L, nq = 0.0L, nv = 0.0L;
    const Vector& vec = index.entries.at(candidate.item_id);
    for (std::size_t i = 0; i < vec.size(); ++i) {
      dot += static_cast<long double>(query_vec[i]) * vec[i];
      nq += static_cast<long double>(query_vec[i]) * query_vec[i];
      nv += static_cast<long double>(vec[i]) * vec[i];
    }
    expected.push_back({candidate.item_id, static_cast<double>(dot / std::sqrt(nq * nv))});
  }
  std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
  expected.resize(10);
  REQUIRE(actual.entries.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(actual.entries[i].item_id == expected[i].item_id);
    CHECK(actual.entries[i].score == doctest::Approx(expected[i].score).epsilon(1e-9));
  }

  CHECK_THROWS_AS(rerank_by_query(thirty, " ", index, provider, 10), Error);
}
