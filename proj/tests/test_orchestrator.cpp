#include <doctest.h>

#include "macf/errors.hpp"
#include "macf/orchestrator.hpp"
#include "support/synthetic.hpp"

using namespace macf;
namespace ts = macf::testsupport;

namespace {

struct Fixture {
  Catalog catalog;
  HashEmbeddingProvider provider;
  VectorIndex index;
  explicit Fixture(Catalog c) : catalog(std::move(c)), index(build_index(catalog, provider)) {}
  ToolSet tools() { return ToolSet(catalog, index, provider); }
};

OrchestratorConfig default_config() {
  return OrchestratorConfig{};  // n=5, k=15, K=10, T_max=5, tau=0.35
}

std::string serialize_transcript(const DiscussionState& state) {
  std::string out;
  for (const SessionEvent& event : state.transcript) out += event.to_json().dump() + "\n";
  return out;
}

}  // namespace

TEST_CASE("recruit_agents filters by query relevance and applies the floor rule") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(2, 2);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);

  ToolSet tools = fx.tools();
  const Vector query_vec = tools.embed_query(corpus.query);

  // user-path case: neighbors clear tau, anchors do not -> user agents only
  auto user_case_agents = orchestrator.recruit_agents(tools, "utu0", corpus.query, query_vec);
  REQUIRE(!user_case_agents.empty());
  for (const AgentProfile& agent : user_case_agents) CHECK(agent.role == AgentRole::user_agent);
  CHECK(user_case_agents.size() == 5);

  // item-path case: anchors clear tau, distractor neighbors do not
  auto item_case_agents = orchestrator.recruit_agents(tools, "itu0", corpus.query, query_vec);
  REQUIRE(item_case_agents.size() == 2);
  for (const AgentProfile& agent : item_case_agents) CHECK(agent.role == AgentRole::item_agent);

  // all below tau: exactly one best-scoring agent retained
  ts::HopelessCorpus hopeless = ts::make_hopeless_corpus();
  Fixture hx(hopeless.catalog);
  ToolSet hopeless_tools = hx.tools();
  const Vector hopeless_vec = hopeless_tools.embed_query(hopeless.query);
  auto floor_agents =
      orchestrator.recruit_agents(hopeless_tools, hopeless.user_id, hopeless.query, hopeless_vec);
  CHECK(floor_agents.size() == 1);

  // disable_DAR: no filtering, fixed top-n of each type
  OrchestratorConfig no_dar = default_config();
  no_dar.ablations.disable_dar = true;
  Orchestrator unfiltered(no_dar, policy);
  auto all_agents = unfiltered.recruit_agents(tools, "itu0", corpus.query, query_vec);
  int users = 0, items = 0;
  for (const AgentProfile& agent : all_agents) {
    (agent.role == AgentRole::user_agent ? users : items)++;
  }
  CHECK(users == 5);  // the five distractors come back under no-DAR
  CHECK(items == 5);  // anchors plus low-relevance history

  CHECK_THROWS_AS(orchestrator.recruit_agents(tools, "ghost", corpus.query, query_vec), Error);
}

TEST_CASE("recruit survivors equal an oracle applying the same tau filter") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(3, 3);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  OrchestratorConfig config = default_config();
  Orchestrator orchestrator(config, policy);
  ToolSet tools = fx.tools();
  const Vector query_vec = tools.embed_query(corpus.query);

  for (const QueryCase& query_case : corpus.cases) {
    // oracle: recompute both candidate pools and apply the filter independently
    ToolSet oracle_tools = fx.tools();
    std::set<std::string> expected;
    for (const Neighbor& neighbor :
         oracle_tools.get_similar_users(query_case.user_id, config.n).neighbors) {
      const double relevance = cosine(
          user_embedding(fx.catalog.users.at(neighbor.user_id), fx.index), query_vec);
      if (relevance >= config.tau) expected.insert("user_agent:" + neighbor.user_id);
    }
    for (const RelevantItem& anchor :
         oracle_tools.get_relevant_items(query_case.user_id, query_case.query, config.n).items) {
      if (anchor.relevance >= config.tau) expected.insert("item_agent:" + anchor.item_id);
    }
    REQUIRE(!expected.empty());  // planted corpus always has survivors

    auto agents = orchestrator.recruit_agents(tools, query_case.user_id, query_case.query, query_vec);
    std::set<std::string> actual;
    for (const AgentProfile& agent : agents) actual.insert(agent.agent_id);
    CHECK(actual == expected);
  }
}

TEST_CASE("make_instructions: round 0 personalization and the PCI ablation") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);
  ToolSet tools = fx.tools();

  DiscussionState state;
  state.target_user = "utu0";
  state.query = corpus.query;
  state.round = 0;
  state.query_vec = tools.embed_query(corpus.query);
  state.agents = orchestrator.recruit_agents(tools, "utu0", corpus.query, state.query_vec);
  for (const AgentProfile& agent : state.agents) state.active.push_back(agent.agent_id);

  auto instructions = orchestrator.make_instructions(state);
  REQUIRE(instructions.size() == state.active.size());
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    CHECK(instructions[i].directive == Directive::propose);
    CHECK(instructions[i].guidance_text.find(state.agents[i].subject_id) != std::string::npos);
  }

  OrchestratorConfig no_pci = default_config();
  no_pci.ablations.disable_pci = true;
  Orchestrator generic(no_pci, policy);
  auto generic_instructions = generic.make_instructions(state);
  REQUIRE(generic_instructions.size() > 1);
  for (const Instruction& instruction : generic_instructions) {
    CHECK(instruction.guidance_text == generic_instructions.front().guidance_text);
    CHECK(instruction.directive == Directive::propose);
  }
}

TEST_CASE("make_instructions routes contested items into resolve_conflict focus") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);
  ToolSet tools = fx.tools();

  DiscussionState state;
  state.target_user = "utu0";
  state.query = corpus.query;
  state.round = 2;
  state.query_vec = tools.embed_query(corpus.query);
  state.agents = orchestrator.recruit_agents(tools, "utu0", corpus.query, state.query_vec);
  const std::string proposer = state.agents[0].agent_id;
  const std::string contester = state.agents[1].agent_id;
  state.active = {proposer, contester};
  state.pool["ufa0_0"].push_back({"ufa0_0", "r", 0.8, proposer, 0});
  state.pool["ufa0_1"].push_back({"ufa0_1", "r", 0.8, proposer, 0});
  state.critiques.push_back({"ufa0_0", Stance::contest, contester, 2});
  state.critiques.push_back({"ufa0_1", Stance::contest, contester, 2});
  state.draft.entries = {{"ufa0_0", 1.0, {}}, {"ufa0_1", 0.9, {}}};
  state.last_decision.sufficient = false;
  state.last_decision.reasons = {{"unresolved_contest", {"ufa0_0", "ufa0_1"}}};

  auto instructions = orchestrator.make_instructions(state);
  int resolve_count = 0;
  for (const Instruction& instruction : instructions) {
    if (instruction.directive == Directive::resolve_conflict) {
      ++resolve_count;
      CHECK(instruction.focus_items == std::vector<std::string>{"ufa0_0", "ufa0_1"});
    }
  }
  CHECK(resolve_count >= 1);
}

TEST_CASE("draft_ranked_list scoring formula and oracle equivalence") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);

  DiscussionState state;
  state.target_history = {"ufl0_0"};

  SUBCASE("empty pool yields an empty list") {
    CHECK(orchestrator.draft_ranked_list(state, fx.catalog).entries.empty());
  }

  SUBCASE("two supporters, no contests: 0.6 + 0.4 + 2*0.25 = 1.5") {
    state.pool["ufa0_0"].push_back({"ufa0_0", "ra", 0.6, "agent_a", 0});
    state.pool["ufa0_0"].push_back({"ufa0_0", "rb", 0.4, "agent_b", 0});
    RankedList draft = orchestrator.draft_ranked_list(state, fx.catalog);
    REQUIRE(draft.entries.size() == 1);
    CHECK(draft.entries[0].score == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(draft.entries[0].rationales.size() == 2);
  }

  SUBCASE("history items never enter a draft") {
    state.pool["ufl0_0"].push_back({"ufl0_0", "r", 0.9, "agent_a", 0});
    state.pool["ufa0_0"].push_back({"ufa0_0", "r", 0.1, "agent_a", 0});
    RankedList draft = orchestrator.draft_ranked_list(state, fx.catalog);
    REQUIRE(draft.entries.size() == 1);
    CHECK(draft.entries[0].item_id == "ufa0_0");
  }

  SUBCASE("mixed pool matches an independent recomputation of the formula") {
    int seq = 0;
    std::vector<std::string> item_ids;
    for (const auto& [item_id, item] : fx.catalog.items) {
      (void)item;
      item_ids.push_back(item_id);
      if (item_ids.size() == 15) break;
    }
    for (std::size_t i = 0; i < item_ids.size(); ++i) {
      const int proposers = 1 + static_cast<int>(i % 3);
      for (int p = 0; p < proposers; ++p) {
        state.pool[item_ids[i]].push_back(
            {item_ids[i], "r", 0.1 * static_cast<double>((i + p) % 10), "agent_" + std::to_string(p),
             0});
      }
      if (i % 4 == 0) {
        state.critiques.push_back({item_ids[i], Stance::contest, "agent_z", ++seq});
      }
      if (i % 5 == 0) {
        state.critiques.push_back({item_ids[i], Stance::support, "agent_s", ++seq});
      }
    }
    RankedList draft = orchestrator.draft_ranked_list(state, fx.catalog);

    // oracle: recompute scores straight from the stated formula
    std::map<std::string, double> expected;
    for (const auto& [item_id, suggestions] : state.pool) {
      double confidence_sum = 0.0;
      std::set<std::string> supporters;
      for (const CandidateSuggestion& suggestion : suggestions) {
        confidence_sum += suggestion.confidence;
        supporters.insert(suggestion.proposer);
      }
      int contests = 0;
      for (const CritiqueRecord& critique : state.critiques) {
        if (critique.item_id != item_id) continue;
        if (critique.stance == Stance::support) supporters.insert(critique.agent_id);
        else ++contests;
      }
      expected[item_id] =
          std::max(0.0, confidence_sum + 0.25 * supporters.size() - 0.5 * contests);
    }
    std::vector<std::pair<std::string, double>> ordered(expected.begin(), expected.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ordered.size() > 10) ordered.resize(10);
    REQUIRE(draft.entries.size() == ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      CHECK(draft.entries[i].item_id == ordered[i].first);
      CHECK(draft.entries[i].score == doctest::Approx(ordered[i].second).epsilon(1e-12));
    }
  }
}

TEST_CASE("sufficiency_test exercises each violation") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);
  ToolSet tools = fx.tools();

  DiscussionState state;
  state.query = corpus.query;
  state.query_vec = tools.embed_query(corpus.query);

  auto make_draft = [&](int count) {
    RankedList draft;
    // family items clear tau against the planted query
    std::vector<std::string> pooled;
    for (const auto& [item_id, item] : fx.catalog.items) {
      (void)item;
      if (item_id.substr(0, 3) == "ufa" || item_id.substr(0, 3) == "ufb") pooled.push_back(item_id);
    }
    REQUIRE(static_cast<int>(pooled.size()) >= count);
    for (int i = 0; i < count; ++i) {
      state.pool[pooled[i]].push_back({pooled[i], "r", 0.8, "agent_a", 0});
      state.last_support_seq[pooled[i]] = 1;
      draft.entries.push_back({pooled[i], 10.0 - i, {"agent_a: r"}});
    }
    return draft;
  };

  SUBCASE("7-item draft fails the count condition") {
    RankedList draft = make_draft(7);
    Decision decision = orchestrator.sufficiency_test(state, draft, fx.index);
    CHECK(!decision.sufficient);
    bool found = false;
    for (const Reason& reason : decision.reasons) found |= reason.code == "count_shortfall";
    CHECK(found);
  }

  SUBCASE("all-pass draft is sufficient") {
    RankedList draft = make_draft(10);
    Decision decision = orchestrator.sufficiency_test(state, draft, fx.index);
    CHECK(decision.sufficient);
    CHECK(decision.reasons.empty());
  }

  SUBCASE("one unresolved contest fails alignment") {
    RankedList draft = make_draft(10);
    state.last_contest_seq[draft.entries[3].item_id] = 5;  // later than its support at seq 1
    Decision decision = orchestrator.sufficiency_test(state, draft, fx.index);
    CHECK(!decision.sufficient);
    bool found = false;
    for (const Reason& reason : decision.reasons) {
      if (reason.code == "unresolved_contest") {
        found = true;
        CHECK(reason.items == std::vector<std::string>{draft.entries[3].item_id});
      }
    }
    CHECK(found);
  }

  SUBCASE("a support after the contest resolves it") {
    RankedList draft = make_draft(10);
    state.last_contest_seq[draft.entries[3].item_id] = 5;
    state.last_support_seq[draft.entries[3].item_id] = 6;
    CHECK(orchestrator.sufficiency_test(state, draft, fx.index).sufficient);
  }

  SUBCASE("a low-relevance entry is named") {
    RankedList draft = make_draft(9);
    state.pool["dcy00"];  // decoys clear tau, filler does not
    state.pool["ufl0_3"].push_back({"ufl0_3", "r", 0.8, "agent_a", 0});
    state.last_support_seq["ufl0_3"] = 1;
    draft.entries.push_back({"ufl0_3", 0.5, {"agent_a: r"}});
    Decision decision = orchestrator.sufficiency_test(state, draft, fx.index);
    CHECK(!decision.sufficient);
    bool found = false;
    for (const Reason& reason : decision.reasons) {
      if (reason.code == "low_relevance") {
        found = true;
        CHECK(reason.items == std::vector<std::string>{"ufl0_3"});
      }
    }
    CHECK(found);
  }
}

TEST_CASE("select_active_agents follows the scripted selection rules") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);
  ToolSet tools = fx.tools();

  DiscussionState state;
  state.target_user = "utu0";
  state.query = corpus.query;
  state.query_vec = tools.embed_query(corpus.query);
  state.agents = orchestrator.recruit_agents(tools, "utu0", corpus.query, state.query_vec);
  REQUIRE(state.agents.size() >= 3);
  const std::string agent_a = state.agents[0].agent_id;
  const std::string agent_b = state.agents[1].agent_id;

  SUBCASE("contest: proposer and contester both selected") {
    state.pool["ufa0_0"].push_back({"ufa0_0", "r", 0.9, agent_a, 0});
    state.critiques.push_back({"ufa0_0", Stance::contest, agent_b, 2});
    auto selected = orchestrator.select_active_agents(state, {{"unresolved_contest", {"ufa0_0"}}});
    CHECK(std::find(selected.begin(), selected.end(), agent_a) != selected.end());
    CHECK(std::find(selected.begin(), selected.end(), agent_b) != selected.end());
  }

  SUBCASE("shortfall: the strongest non-exhausted agent of each role joins") {
    auto selected = orchestrator.select_active_agents(state, {{"count_shortfall", {}}});
    REQUIRE(!selected.empty());
    CHECK(selected.front() == state.agents[0].agent_id);

    state.exhausted.insert(state.agents[0].agent_id);
    auto after = orchestrator.select_active_agents(state, {{"count_shortfall", {}}});
    REQUIRE(!after.empty());
    CHECK(after.front() == state.agents[1].agent_id);
  }

  SUBCASE("disable_DAR keeps every agent active") {
    OrchestratorConfig no_dar = default_config();
    no_dar.ablations.disable_dar = true;
    Orchestrator unfiltered(no_dar, policy);
    auto selected = unfiltered.select_active_agents(state, {{"unresolved_contest", {"ufa0_0"}}});
    CHECK(selected.size() == state.agents.size());
  }

  SUBCASE("selection never comes back empty") {
    auto selected = orchestrator.select_active_agents(state, {});
    CHECK(!selected.empty());
  }
}

TEST_CASE("run_discussion is deterministic and honors the planted fast path") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(2, 2);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  OrchestratorConfig config = default_config();
  config.seed = 42;
  Orchestrator orchestrator(config, policy);

  ToolSet tools_a = fx.tools();
  SessionResult first = orchestrator.run(tools_a, "utu0", corpus.query);
  ToolSet tools_b = fx.tools();
  SessionResult second = orchestrator.run(tools_b, "utu0", corpus.query);
  CHECK(serialize_transcript(first.state) == serialize_transcript(second.state));

  CHECK(first.state.terminated);
  CHECK(first.state.termination_reason == "sufficient");
  CHECK(first.rounds_used <= 3);
  REQUIRE(first.final_list.entries.size() == 10);
  const auto& history = history_item_set(fx.catalog.users.at("utu0"));
  std::set<std::string> seen;
  for (const RankedEntry& entry : first.final_list.entries) {
    CHECK(fx.catalog.has_item(entry.item_id));
    CHECK(history.count(entry.item_id) == 0);
    CHECK(seen.insert(entry.item_id).second);
  }
  for (std::size_t i = 1; i < first.final_list.entries.size(); ++i) {
    CHECK(first.final_list.entries[i - 1].score >= first.final_list.entries[i].score);
  }
  // the planted ground truth is recovered through the user path
  int hits = 0;
  for (const RankedEntry& entry : first.final_list.entries) {
    hits += corpus.cases[0].relevant_item_ids.count(entry.item_id);
  }
  CHECK(hits == 3);

  // item-path target terminates at round 1 with both anchors contributing
  ToolSet tools_c = fx.tools();
  SessionResult item_path = orchestrator.run(tools_c, "itu0", corpus.query);
  CHECK(item_path.state.termination_reason == "sufficient");
  CHECK(item_path.rounds_used <= 2);
}

TEST_CASE("run_discussion hits the round limit on a hopeless corpus") {
  ts::HopelessCorpus corpus = ts::make_hopeless_corpus();
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);
  ToolSet tools = fx.tools();
  SessionResult result = orchestrator.run(tools, corpus.user_id, corpus.query);
  CHECK(result.state.terminated);
  CHECK(result.state.termination_reason == "round_limit");
  CHECK(result.rounds_used == 5);  // T_max
  // the final list is the round-5 draft, present in the transcript
  bool saw_final = false;
  for (const SessionEvent& event : result.state.transcript) {
    if (event.type == EventType::final_list) {
      saw_final = true;
      CHECK(event.round == 5);
      CHECK(event.payload.at("reason") == "round_limit");
    }
  }
  CHECK(saw_final);
}

TEST_CASE("pool is append-only across rounds and the draft event captures it") {
  ts::HopelessCorpus corpus = ts::make_hopeless_corpus();
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  Orchestrator orchestrator(default_config(), policy);
  ToolSet tools = fx.tools();
  SessionResult result = orchestrator.run(tools, corpus.user_id, corpus.query);

  std::set<std::string> previous;
  for (const SessionEvent& event : result.state.transcript) {
    if (event.type != EventType::draft_list) continue;
    std::set<std::string> current;
    for (const auto& item : event.payload.at("pool_items")) current.insert(item.get<std::string>());
    for (const std::string& item : previous) CHECK(current.count(item) == 1);
    previous = std::move(current);
  }
}

TEST_CASE("ablation observability: ATU, PCI and DAR leave transcript fingerprints") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;

  SUBCASE("disable_ATU: at most one tool call per non-orchestrator agent") {
    OrchestratorConfig config = default_config();
    config.ablations.disable_atu = true;
    Orchestrator orchestrator(config, policy);
    ToolSet tools = fx.tools();
    SessionResult result = orchestrator.run(tools, "utu0", corpus.query);
    std::map<std::string, int> per_agent;
    for (const SessionEvent& event : result.state.transcript) {
      if (event.type != EventType::agent_turn || event.payload.value("skipped", false)) continue;
      per_agent[event.payload.at("agent_id").get<std::string>()] +=
          event.payload.at("tool_calls_made").get<int>();
    }
    REQUIRE(!per_agent.empty());
    for (const auto& [agent_id, calls] : per_agent) {
      (void)agent_id;
      CHECK(calls <= 1);
    }
    // the audit also holds in the tool call log
    for (const ToolCall& call : tools.call_log()) {
      if (call.caller == "orchestrator") continue;
      CHECK(per_agent.count(call.caller) == 1);
    }
  }

  SUBCASE("disable_PCI: same-round guidance texts are byte-identical") {
    OrchestratorConfig config = default_config();
    config.ablations.disable_pci = true;
    Orchestrator orchestrator(config, policy);
    ToolSet tools = fx.tools();
    SessionResult result = orchestrator.run(tools, "utu0", corpus.query);
    std::map<int, std::set<std::string>> guidance_by_round;
    for (const SessionEvent& event : result.state.transcript) {
      if (event.type != EventType::instruction) continue;
      guidance_by_round[event.round].insert(
          event.payload.at("guidance_text").get<std::string>());
    }
    REQUIRE(!guidance_by_round.empty());
    for (const auto& [round, texts] : guidance_by_round) {
      (void)round;
      CHECK(texts.size() == 1);
    }
  }

  SUBCASE("disable_DAR: the active set is the full agent set every round") {
    OrchestratorConfig config = default_config();
    config.ablations.disable_dar = true;
    Orchestrator orchestrator(config, policy);
    ToolSet tools = fx.tools();
    SessionResult result = orchestrator.run(tools, "utu0", corpus.query);
    std::size_t all_agents = 0;
    for (const SessionEvent& event : result.state.transcript) {
      if (event.type == EventType::session_started) {
        all_agents = event.payload.at("agents").size();
      }
      if (event.type == EventType::round_started) {
        CHECK(event.payload.at("active_agents").size() == all_agents);
      }
    }
  }
}

TEST_CASE("mode restriction runs the identical loop without errors") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ScriptedPolicy policy;
  for (DiscussionMode mode :
       {DiscussionMode::full, DiscussionMode::user_only, DiscussionMode::item_only}) {
    OrchestratorConfig config = default_config();
    config.mode = mode;
    Orchestrator orchestrator(config, policy);
    for (const QueryCase& query_case : corpus.cases) {
      ToolSet tools = fx.tools();
      SessionResult result = orchestrator.run(tools, query_case.user_id, query_case.query);
      CHECK(result.state.terminated);
      CHECK(result.rounds_used <= config.T_max);
    }
  }
}

TEST_CASE("a failing policy degrades to skipped turns, all-fail aborts the session") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);

  struct FlakyPolicy : AgentPolicy {
    int calls = 0;
    int fail_below = 0;  // fail the first N turns
    ScriptedPolicy inner;
    AgentTurn take_turn(const AgentProfile& profile, const Instruction& instruction,
                        const DiscussionView& view, ToolSet& tools,
                        const TurnBudget& budget) override {
      if (calls++ < fail_below) throw Error(ErrorCode::PolicyFailure, "backend exploded");
      return inner.take_turn(profile, instruction, view, tools, budget);
    }
    std::string name() const override { return "flaky"; }
  };

  SUBCASE("one failure is skipped and noted") {
    FlakyPolicy policy;
    policy.fail_below = 1;
    Orchestrator orchestrator(default_config(), policy);
    ToolSet tools = fx.tools();
    SessionResult result = orchestrator.run(tools, "utu0", corpus.query);
    int skipped = 0;
    for (const SessionEvent& event : result.state.transcript) {
      if (event.type == EventType::agent_turn && event.payload.value("skipped", false)) ++skipped;
    }
    CHECK(skipped == 1);
    CHECK(result.state.terminated);
  }

  SUBCASE("zero successful turns in a round is a session failure") {
    FlakyPolicy policy;
    policy.fail_below = 1000000;
    Orchestrator orchestrator(default_config(), policy);
    ToolSet tools = fx.tools();
    try {
      orchestrator.run(tools, "utu0", corpus.query);
      FAIL("expected SessionFailure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SessionFailure);
    }
  }
}

TEST_CASE("chat-policy orchestrator drafting and sufficiency judgments") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ChatConfig chat_config;
  chat_config.backoff_base_ms = 1;

  // The stub backend answers agent turns with suggestions pulled from the
  // request context, drafts with a fixed list, and judges sufficiency true.
  ChatClient client(chat_config, [](const nlohmann::json& request) -> HttpResult {
    const std::string system = request.at("messages")[0].at("content").get<std::string>();
    std::string content;
    if (system.find("Draft the ranked list") != std::string::npos) {
      content = R"({"entries":[{"item_id":"ufa0_0","score":3.0},{"item_id":"ufa0_1","score":2.0},
                   {"item_id":"bogus","score":9.9},{"item_id":"ufa0_0","score":1.0}]})";
    } else if (system.find("judging whether the draft is ready") != std::string::npos) {
      content = R"({"sufficient": true, "reasons": []})";
    } else {
      content = R"({"message":"propose","suggestions":[
        {"item_id":"ufa0_0","rationale":"fits","confidence":0.9},
        {"item_id":"ufa0_1","rationale":"fits","confidence":0.8}],"critiques":[]})";
    }
    return {200,
            nlohmann::json{{"choices",
                            nlohmann::json::array({{{"message", {{"content", content}}}}})}}
                .dump()};
  });

  OrchestratorConfig config = default_config();
  config.policy = PolicyKind::chat;
  ChatAgentPolicy policy(client);
  Orchestrator orchestrator(config, policy, &client);
  ToolSet tools = fx.tools();
  SessionResult result = orchestrator.run(tools, "utu0", corpus.query);
  CHECK(result.state.termination_reason == "sufficient");
  CHECK(result.rounds_used == 1);
  // hallucinated and duplicate entries were dropped by validation
  REQUIRE(result.final_list.entries.size() == 2);
  CHECK(result.final_list.entries[0].item_id == "ufa0_0");
  CHECK(result.final_list.entries[1].item_id == "ufa0_1");
  CHECK(result.final_list.entries[0].score >= result.final_list.entries[1].score);
}

TEST_CASE("chat orchestrator: malformed judgment defaults to insufficient") {
  ts::PlantedCorpus corpus = ts::make_planted_corpus(1, 1);
  Fixture fx(corpus.catalog);
  ChatConfig chat_config;
  chat_config.backoff_base_ms = 1;
  int judgments = 0;
  ChatClient client(chat_config, [&judgments](const nlohmann::json& request) -> HttpResult {
    const std::string system = request.at("messages")[0].at("content").get<std::string>();
    std::string content;
    if (system.find("Draft the ranked list") != std::string::npos) {
      content = R"({"entries":[{"item_id":"ufa0_0","score":3.0}]})";
    } else if (system.find("judging whether the draft is ready") != std::string::npos) {
      ++judgments;
      content = "hmm, probably fine?";
    } else {
      content = R"({"message":"m","suggestions":[{"item_id":"ufa0_0","rationale":"r","confidence":0.9}],"critiques":[]})";
    }
    return {200,
            nlohmann::json{{"choices",
                            nlohmann::json::array({{{"message", {{"content", content}}}}})}}
                .dump()};
  });
  OrchestratorConfig config = default_config();
  config.policy = PolicyKind::chat;
  config.T_max = 2;
  ChatAgentPolicy policy(client);
  Orchestrator orchestrator(config, policy, &client);
  ToolSet tools = fx.tools();
  SessionResult result = orchestrator.run(tools, "utu0", corpus.query);
  CHECK(judgments >= 1);
  CHECK(result.state.termination_reason == "round_limit");  // never judged sufficient
}
