#include "macf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "macf/errors.hpp"

namespace macf {

int hit_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
             int K) {
  const std::size_t limit = std::min(ranked.size(), static_cast<std::size_t>(std::max(K, 0)));
  for (std::size_t i = 0; i < limit; ++i) {
    if (relevant.count(ranked[i])) return 1;
  }
  return 0;
}

double ndcg_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                 int K) {
  if (relevant.empty()) {
    throw Error(ErrorCode::EmptyRelevanceSet, "ndcg needs a non-empty relevance set");
  }
  const std::size_t limit = std::min(ranked.size(), static_cast<std::size_t>(std::max(K, 0)));
  double dcg = 0.0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (relevant.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  const std::size_t ideal_positions =
      std::min(relevant.size(), static_cast<std::size_t>(std::max(K, 0)));
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal_positions; ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

}  // namespace macf
