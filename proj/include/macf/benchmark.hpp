#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "macf/catalog.hpp"

namespace macf {

struct MethodOutcome {
  std::vector<std::string> ranked_ids;
  int rounds_used = 0;  // MACF only; 0 for single-shot methods
  int tool_calls = 0;
};

using Method = std::function<MethodOutcome(const QueryCase&)>;

struct RunRecord {
  std::string method;
  std::string case_id;
  std::vector<std::string> ranked;
  double hit = 0.0;
  double ndcg = 0.0;
  int rounds_used = 0;
  int tool_calls = 0;
  long wall_ms = 0;
  bool failed = false;
  std::string error;

  nlohmann::json to_json() const;
};

struct BenchmarkReport {
  std::string method;
  double mean_hit = 0.0;
  double mean_ndcg = 0.0;
  std::map<int, int> rounds_histogram;  // rounds_used -> session count
  std::vector<RunRecord> records;
  nlohmann::json config_snapshot;

  nlohmann::json header_json(int K) const;
};

// Evaluates every case; per-case failures become zero-metric records and never
// abort the batch. With parallelism > 1 cases run concurrently but records and
// aggregates are merged in case order.
BenchmarkReport run_benchmark(const std::vector<QueryCase>& cases, const std::string& method_name,
                              const Method& method, const nlohmann::json& config_snapshot,
                              int K = 10, int parallelism = 1);

// JSONL report (header object, then one record per line) plus a CSV summary.
void write_report(const BenchmarkReport& report, int K, const std::filesystem::path& jsonl_path,
                  const std::filesystem::path& csv_path);

}  // namespace macf
