#include <doctest.h>

#include "macf/config.hpp"
#include "macf/errors.hpp"
#include "support/temp_dir.hpp"

using namespace macf;
using testsupport::TempDir;

TEST_CASE("defaults match the documented operating point") {
  AppConfig config = AppConfig::defaults();
  CHECK(config.orchestrator.n == 5);
  CHECK(config.orchestrator.k == 15);
  CHECK(config.orchestrator.K == 10);
  CHECK(config.orchestrator.T_max == 5);
  CHECK(config.orchestrator.tau == doctest::Approx(0.35));
  CHECK(config.orchestrator.mode == DiscussionMode::full);
  CHECK(config.orchestrator.policy == PolicyKind::scripted);
  CHECK(config.chat.temperature == doctest::Approx(0.3));
  CHECK(config.embedding.provider == EmbeddingProviderKind::deterministic);
  CHECK(!config.orchestrator.ablations.disable_pci);
  CHECK(!config.orchestrator.ablations.disable_dar);
  CHECK(!config.orchestrator.ablations.disable_atu);
}

TEST_CASE("load_config parses every section") {
  TempDir dir;
  const auto path = dir.write_file("macf.ini", R"(# engine config
[retrieval]
n = 7
k = 20

[orchestrator]
K = 12
T_max = 3
tau = 0.5
disable_pci = true
disable_atu = yes
mode = item_only

[policy]
kind = chat
seed = 99

[chat]
base_url = http://example.invalid:9999
model = test-model
temperature = 0.7
timeout_s = 5
max_retries = 1

[embedding]
provider = remote
base_url = http://embed.invalid
model = test-embedder
dim = 16
)");
  AppConfig config = load_config(path);
  CHECK(config.orchestrator.n == 7);
  CHECK(config.orchestrator.k == 20);
  CHECK(config.orchestrator.K == 12);
  CHECK(config.orchestrator.T_max == 3);
  CHECK(config.orchestrator.tau == doctest::Approx(0.5));
  CHECK(config.orchestrator.ablations.disable_pci);
  CHECK(config.orchestrator.ablations.disable_atu);
  CHECK(!config.orchestrator.ablations.disable_dar);
  CHECK(config.orchestrator.mode == DiscussionMode::item_only);
  CHECK(config.orchestrator.policy == PolicyKind::chat);
  CHECK(config.orchestrator.seed == 99);
  CHECK(config.chat.base_url == "http://example.invalid:9999");
  CHECK(config.chat.model == "test-model");
  CHECK(config.chat.temperature == doctest::Approx(0.7));
  CHECK(config.embedding.provider == EmbeddingProviderKind::remote);
  CHECK(config.embedding.remote.model == "test-embedder");
  CHECK(config.embedding.remote.dim == 16);
}

TEST_CASE("load_config rejects unknown keys, sections and bad booleans") {
  TempDir dir;
  CHECK_THROWS_AS(load_config(dir.write_file("a.ini", "[retrieval]\nbogus = 1\n")), Error);
  CHECK_THROWS_AS(load_config(dir.write_file("b.ini", "[nope]\nn = 1\n")), Error);
  CHECK_THROWS_AS(load_config(dir.write_file("c.ini", "[orchestrator]\ndisable_pci = maybe\n")),
                  Error);
  CHECK_THROWS_AS(load_config(dir.write_file("d.ini", "[orchestrator]\nno equals sign\n")), Error);
  CHECK_THROWS_AS(load_config(dir.path() / "missing.ini"), Error);
}

TEST_CASE("apply_overrides patches only known keys") {
  OrchestratorConfig config;
  apply_overrides(config, nlohmann::json{{"seed", 7},
                                         {"T_max", 2},
                                         {"tau", 0.9},
                                         {"mode", "user_only"},
                                         {"disable_atu", true},
                                         {"mystery", "ignored"}});
  CHECK(config.seed == 7);
  CHECK(config.T_max == 2);
  CHECK(config.tau == doctest::Approx(0.9));
  CHECK(config.mode == DiscussionMode::user_only);
  CHECK(config.ablations.disable_atu);
  CHECK(config.K == 10);  // untouched

  apply_overrides(config, nlohmann::json::array({1, 2}));  // non-object: no-op
  CHECK(config.T_max == 2);
}
