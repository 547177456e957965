#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "macf/catalog.hpp"
#include "macf/chat.hpp"
#include "macf/config.hpp"
#include "macf/embedding.hpp"
#include "macf/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace macf {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 = pick a free port
  int threads = 32;
  int write_timeout_s = 5;   // stalled readers fail their session
  int drain_timeout_s = 10;  // graceful-stop budget for in-flight sessions
  std::filesystem::path transcript_dir;  // empty = keep transcripts in memory only
};

// Streaming HTTP facade over the engine: newline-delimited SessionEvent
// streams for /recommend, single-shot JSON for tools and baselines.
class Service {
 public:
  Service(ServiceConfig service_config, const Catalog& catalog, const VectorIndex& index,
          EmbeddingProvider& provider, OrchestratorConfig orchestrator_config,
          ChatConfig chat_config = {});
  ~Service();

  void start();  // throws BindFailure
  void stop();
  int port() const { return port_; }
  bool running() const;

 private:
  void setup_routes();

  ServiceConfig service_config_;
  const Catalog& catalog_;
  const VectorIndex& index_;
  EmbeddingProvider& provider_;
  OrchestratorConfig orchestrator_config_;
  ChatConfig chat_config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::atomic<int> in_flight_{0};
  std::atomic<std::uint64_t> session_counter_{0};
  int port_ = 0;
};

}  // namespace macf
