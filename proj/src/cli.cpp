#include "macf/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "macf/benchmark.hpp"
#include "macf/catalog.hpp"
#include "macf/config.hpp"
#include "macf/errors.hpp"
#include "macf/jsonl.hpp"
#include "macf/methods.hpp"
#include "macf/service.hpp"
#include "macf/text.hpp"

namespace macf {

namespace {

struct DataPaths {
  std::filesystem::path dir;
  std::filesystem::path items() const { return dir / "items.jsonl"; }
  std::filesystem::path interactions() const { return dir / "interactions.jsonl"; }
  std::filesystem::path index() const { return dir / "index.jsonl"; }
};

Catalog load_data_catalog(const DataPaths& paths) {
  if (!std::filesystem::exists(paths.items()) || !std::filesystem::exists(paths.interactions())) {
    throw Error(ErrorCode::MissingCatalog,
                "no ingested catalog under '" + paths.dir.string() + "'; run `ingest` first");
  }
  return load_catalog(paths.items(), paths.interactions()).catalog;
}

VectorIndex load_data_index(const DataPaths& paths) {
  if (!std::filesystem::exists(paths.index())) {
    throw Error(ErrorCode::MissingIndex,
                "no index under '" + paths.dir.string() + "'; run `index` first");
  }
  return load_index(paths.index());
}

std::unique_ptr<EmbeddingProvider> make_provider(const AppConfig& config) {
  if (config.embedding.provider == EmbeddingProviderKind::remote) {
    return std::make_unique<RemoteEmbeddingProvider>(config.embedding.remote);
  }
  return std::make_unique<HashEmbeddingProvider>();
}

void apply_ablations(OrchestratorConfig& config, const std::vector<std::string>& ablations) {
  for (const std::string& flag : ablations) {
    if (flag == "no-pci") config.ablations.disable_pci = true;
    else if (flag == "no-dar") config.ablations.disable_dar = true;
    else if (flag == "no-atu") config.ablations.disable_atu = true;
    else throw CLI::ValidationError("--ablation", "expected no-pci, no-dar or no-atu");
  }
}

std::atomic<bool> g_stop_requested{false};

void handle_stop_signal(int) {
  g_stop_requested.store(true);
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"macf — multi-agent collaborative filtering engine"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string data_dir = "data";
  app.add_option("--data-dir", data_dir, "directory for the catalog and index caches")
      ->capture_default_str();
  std::string config_path;
  app.add_option("--config", config_path, "INI config file");

  auto* ingest = app.add_subcommand("ingest", "validate a dataset and cache the catalog");
  std::string items_path, interactions_path;
  ingest->add_option("--items", items_path, "items JSONL file")->required();
  ingest->add_option("--interactions", interactions_path, "interactions JSONL file")->required();

  auto* index_cmd = app.add_subcommand("index", "build or refresh the vector index");

  auto* recommend = app.add_subcommand("recommend", "run one MACF session");
  std::string user_id, query, transcript_path = "transcript.jsonl", mode = "full";
  std::vector<std::string> ablations;
  recommend->add_option("--user", user_id, "target user id")->required();
  recommend->add_option("--query", query, "natural-language query")->required();
  recommend->add_option("--transcript", transcript_path, "transcript output path")
      ->capture_default_str();
  recommend->add_option("--mode", mode, "full | user_only | item_only")->capture_default_str();
  recommend->add_option("--ablation", ablations, "no-pci | no-dar | no-atu (repeatable)");

  auto* evaluate = app.add_subcommand("evaluate", "benchmark a method over query cases");
  std::string cases_path, method = "macf", report_base = "report";
  int parallelism = 1;
  evaluate->add_option("--cases", cases_path, "query cases JSONL file")->required();
  evaluate->add_option("--method", method,
                       "macf | macf_user | macf_item | itemcf | usercf | bm25 | dense")
      ->capture_default_str();
  evaluate->add_option("--ablation", ablations, "no-pci | no-dar | no-atu (repeatable)");
  evaluate->add_option("--report", report_base, "report base path (.jsonl/.csv appended)")
      ->capture_default_str();
  evaluate->add_option("--parallelism", parallelism, "concurrent cases")->capture_default_str();

  auto* baseline = app.add_subcommand("baseline", "run a non-agentic method for one query");
  std::string baseline_method;
  int baseline_k = 10;
  baseline->add_option("--method", baseline_method, "itemcf | usercf | bm25 | dense")->required();
  baseline->add_option("--user", user_id, "target user id")->required();
  baseline->add_option("--query", query, "natural-language query")->required();
  baseline->add_option("--k", baseline_k, "list length")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "run the streaming HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string transcript_dir;
  serve->add_option("--host", host, "bind address")->capture_default_str();
  serve->add_option("--port", port, "bind port")->capture_default_str();
  serve->add_option("--transcript-dir", transcript_dir, "per-session transcript directory");

  std::vector<const char*> argv;
  argv.push_back("macf");
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    AppConfig config = config_path.empty() ? AppConfig::defaults() : load_config(config_path);
    const DataPaths paths{data_dir};
    auto provider = make_provider(config);

    if (*ingest) {
      CatalogLoad loaded = load_catalog(items_path, interactions_path);
      std::filesystem::create_directories(paths.dir);
      save_catalog(loaded.catalog, paths.items(), paths.interactions());
      std::cout << "ingested " << loaded.report.items_read << " items, "
                << loaded.report.interactions_read << " interactions ("
                << loaded.report.unknown_field_warnings << " unknown-field warning(s), "
                << loaded.report.blank_lines_skipped << " blank line(s))\n"
                << "catalog cached under " << paths.dir.string() << "\n";
      return 0;
    }

    if (*index_cmd) {
      Catalog catalog = load_data_catalog(paths);
      VectorIndex index = build_index_cached(catalog, *provider, paths.index());
      std::cout << "index ready: " << index.entries.size() << " vectors, dim " << index.dim
                << ", fingerprint " << index.provider_fingerprint << "\n";
      return 0;
    }

    if (*recommend) {
      Catalog catalog = load_data_catalog(paths);
      VectorIndex index = load_data_index(paths);
      OrchestratorConfig orchestrator_config = config.orchestrator;
      apply_ablations(orchestrator_config, ablations);
      apply_overrides(orchestrator_config, nlohmann::json{{"mode", mode}});
      ToolSet tools(catalog, index, *provider, {orchestrator_config.n, orchestrator_config.k});
      ScriptedPolicy scripted(orchestrator_config.seed);
      ChatClient chat(config.chat);
      ChatAgentPolicy chat_policy(chat, orchestrator_config.transcript_char_budget);
      const bool use_chat = orchestrator_config.policy == PolicyKind::chat;
      AgentPolicy& policy = use_chat ? static_cast<AgentPolicy&>(chat_policy) : scripted;
      Orchestrator orchestrator(orchestrator_config, policy, use_chat ? &chat : nullptr);
      SessionResult result = orchestrator.run(tools, user_id, query);

      std::ofstream transcript(transcript_path);
      for (const SessionEvent& event : result.state.transcript) {
        write_jsonl_line(transcript, event.to_json());
      }
      int rank = 1;
      for (const RankedEntry& entry : result.final_list.entries) {
        std::cout << rank++ << "\t" << entry.item_id << "\t" << format_double(entry.score, 4)
                  << "\t" << catalog.item(entry.item_id).title << "\n";
      }
      std::cerr << "terminated: " << result.state.termination_reason << " after "
                << result.rounds_used << " round(s); transcript written to " << transcript_path
                << "\n";
      return 0;
    }

    if (*evaluate) {
      Catalog catalog = load_data_catalog(paths);
      VectorIndex index = load_data_index(paths);
      OrchestratorConfig orchestrator_config = config.orchestrator;
      apply_ablations(orchestrator_config, ablations);
      QueryCaseLoad cases = load_query_cases(cases_path, catalog);
      Method handle =
          make_method(method, catalog, index, *provider, orchestrator_config, config.chat);
      BenchmarkReport report =
          run_benchmark(cases.cases, method, handle, orchestrator_config.to_json(),
                        orchestrator_config.K, parallelism);
      write_report(report, orchestrator_config.K, report_base + ".jsonl", report_base + ".csv");
      std::cout << "method " << method << ": H@" << orchestrator_config.K << " = "
                << format_double(report.mean_hit, 4) << ", N@" << orchestrator_config.K << " = "
                << format_double(report.mean_ndcg, 4) << " over " << report.records.size()
                << " case(s)\n";
      if (!report.rounds_histogram.empty()) {
        std::cout << "rounds:";
        for (const auto& [rounds, count] : report.rounds_histogram) {
          std::cout << " " << rounds << "->" << count;
        }
        std::cout << "\n";
      }
      std::cout << "report written to " << report_base << ".jsonl / .csv\n";
      return 0;
    }

    if (*baseline) {
      Catalog catalog = load_data_catalog(paths);
      VectorIndex index = load_data_index(paths);
      OrchestratorConfig orchestrator_config = config.orchestrator;
      orchestrator_config.K = baseline_k;
      Method handle =
          make_method(baseline_method, catalog, index, *provider, orchestrator_config, config.chat);
      MethodOutcome outcome = handle(QueryCase{user_id, query, {"_"}});
      int rank = 1;
      for (const std::string& item_id : outcome.ranked_ids) {
        std::cout << rank++ << "\t" << item_id << "\t" << catalog.item(item_id).title << "\n";
      }
      return 0;
    }

    if (*serve) {
      Catalog catalog = load_data_catalog(paths);
      VectorIndex index = load_data_index(paths);
      ServiceConfig service_config;
      service_config.host = host;
      service_config.port = port;
      service_config.transcript_dir = transcript_dir.empty()
                                          ? paths.dir / "transcripts"
                                          : std::filesystem::path(transcript_dir);
      Service service(service_config, catalog, index, *provider, config.orchestrator, config.chat);
      service.start();
      std::cout << "serving on " << host << ":" << service.port() << " (Ctrl-C to stop)\n";
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      while (!g_stop_requested.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      service.stop();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace macf
