#include "macf/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>

#include "macf/errors.hpp"
#include "macf/jsonl.hpp"
#include "macf/metrics.hpp"

namespace macf {

nlohmann::json RunRecord::to_json() const {
  nlohmann::json record{{"method", method},   {"case_id", case_id}, {"ranked", ranked},
                        {"hit", hit},         {"ndcg", ndcg},       {"rounds_used", rounds_used},
                        {"tool_calls", tool_calls}, {"wall_ms", wall_ms}, {"failed", failed}};
  if (failed) record["error"] = error;
  return record;
}

nlohmann::json BenchmarkReport::header_json(int K) const {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [rounds, count] : rounds_histogram) {
    histogram[std::to_string(rounds)] = count;
  }
  return {{"method", method},
          {"K", K},
          {"cases", records.size()},
          {"mean_hit", mean_hit},
          {"mean_ndcg", mean_ndcg},
          {"rounds_histogram", histogram},
          {"config", config_snapshot}};
}

namespace {

RunRecord evaluate_case(const std::string& method_name, const Method& method,
                        const QueryCase& query_case, int index, int K) {
  RunRecord record;
  record.method = method_name;
  record.case_id = std::to_string(index) + ":" + query_case.user_id;
  const auto start = std::chrono::steady_clock::now();
  try {
    MethodOutcome outcome = method(query_case);
    record.ranked = std::move(outcome.ranked_ids);
    record.rounds_used = outcome.rounds_used;
    record.tool_calls = outcome.tool_calls;
    record.hit = hit_at_k(record.ranked, query_case.relevant_item_ids, K);
    record.ndcg = ndcg_at_k(record.ranked, query_case.relevant_item_ids, K);
  } catch (const std::exception& e) {
    record.failed = true;
    record.error = e.what();
    record.hit = 0.0;
    record.ndcg = 0.0;
  }
  record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return record;
}

}  // namespace

BenchmarkReport run_benchmark(const std::vector<QueryCase>& cases, const std::string& method_name,
                              const Method& method, const nlohmann::json& config_snapshot, int K,
                              int parallelism) {
  BenchmarkReport report;
  report.method = method_name;
  report.config_snapshot = config_snapshot;
  report.records.resize(cases.size());

  const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(cases.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      report.records[i] = evaluate_case(method_name, method, cases[i], static_cast<int>(i), K);
    }
  } else {
    // Strided workers write to disjoint slots; aggregation below stays in
    // case order regardless of completion order.
    std::vector<std::future<void>> futures;
    for (int w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w]() {
        for (std::size_t i = w; i < cases.size(); i += workers) {
          report.records[i] = evaluate_case(method_name, method, cases[i], static_cast<int>(i), K);
        }
      }));
    }
    for (auto& future : futures) future.get();
  }

  double hit_sum = 0.0;
  double ndcg_sum = 0.0;
  for (const RunRecord& record : report.records) {
    hit_sum += record.hit;
    ndcg_sum += record.ndcg;
    if (record.rounds_used > 0) ++report.rounds_histogram[record.rounds_used];
  }
  if (!report.records.empty()) {
    report.mean_hit = hit_sum / static_cast<double>(report.records.size());
    report.mean_ndcg = ndcg_sum / static_cast<double>(report.records.size());
  }
  return report;
}

void write_report(const BenchmarkReport& report, int K, const std::filesystem::path& jsonl_path,
                  const std::filesystem::path& csv_path) {
  std::ofstream jsonl(jsonl_path);
  write_jsonl_line(jsonl, report.header_json(K));
  for (const RunRecord& record : report.records) {
    write_jsonl_line(jsonl, record.to_json());
  }
  std::ofstream csv(csv_path);
  csv << "method,case_id,hit,ndcg,rounds_used,tool_calls,wall_ms,failed\n";
  for (const RunRecord& record : report.records) {
    csv << record.method << ',' << record.case_id << ',' << record.hit << ',' << record.ndcg << ','
        << record.rounds_used << ',' << record.tool_calls << ',' << record.wall_ms << ','
        << (record.failed ? 1 : 0) << '\n';
  }
}

}  // namespace macf
