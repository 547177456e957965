#pragma once

#include <set>
#include <string>
#include <vector>

namespace macf {

// 1 iff any relevant item appears in the first K positions.
int hit_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, int K);

// Binary gains, 1/log2(i+1) discount (1-indexed), ideal over min(|relevant|, K).
double ndcg_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                 int K);

}  // namespace macf
