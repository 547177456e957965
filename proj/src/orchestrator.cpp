#include "macf/orchestrator.hpp"

#include <algorithm>
#include <limits>

#include "macf/errors.hpp"
#include "macf/text.hpp"

namespace macf {

const char* mode_name(DiscussionMode mode) {
  switch (mode) {
    case DiscussionMode::full: return "full";
    case DiscussionMode::user_only: return "user_only";
    case DiscussionMode::item_only: return "item_only";
  }
  return "full";
}

const char* policy_name(PolicyKind kind) {
  return kind == PolicyKind::scripted ? "scripted" : "chat";
}

nlohmann::json OrchestratorConfig::to_json() const {
  return {{"n", n},
          {"k", k},
          {"K", K},
          {"T_max", T_max},
          {"tau", tau},
          {"mode", mode_name(mode)},
          {"policy", policy_name(policy)},
          {"seed", seed},
          {"max_tool_calls_per_turn", max_tool_calls_per_turn},
          {"history_window", history_window},
          {"ablations",
           {{"disable_pci", ablations.disable_pci},
            {"disable_dar", ablations.disable_dar},
            {"disable_atu", ablations.disable_atu}}}};
}

nlohmann::json Reason::to_json() const {
  return {{"code", code}, {"items", items}};
}

nlohmann::json Decision::to_json() const {
  nlohmann::json reason_list = nlohmann::json::array();
  for (const Reason& reason : reasons) reason_list.push_back(reason.to_json());
  return {{"sufficient", sufficient}, {"reasons", reason_list}};
}

const AgentProfile* DiscussionState::find_agent(const std::string& agent_id) const {
  for (const AgentProfile& agent : agents) {
    if (agent.agent_id == agent_id) return &agent;
  }
  return nullptr;
}

Orchestrator::Orchestrator(OrchestratorConfig config, AgentPolicy& policy, ChatClient* chat)
    : config_(std::move(config)), policy_(policy), chat_(chat) {}

std::string Orchestrator::derive_session_id(const std::string& target_user,
                                            const std::string& query, std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s-%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(target_user + "\x1f" + query + "\x1f" + std::to_string(seed))));
  return buf;
}

namespace {

struct Candidate {
  bool is_user = false;
  std::string subject_id;
  double query_relevance = 0.0;  // the DAR filter score
  Neighbor neighbor;             // user candidates
  RelevantItem anchor;           // item candidates
};

bool candidate_order(const Candidate& a, const Candidate& b) {
  if (a.query_relevance != b.query_relevance) return a.query_relevance > b.query_relevance;
  if (a.is_user != b.is_user) return a.is_user;  // user agents first on ties
  return a.subject_id < b.subject_id;
}

}  // namespace

std::vector<AgentProfile> Orchestrator::recruit_agents(ToolSet& tools,
                                                       const std::string& target_user,
                                                       const std::string& query,
                                                       const Vector& query_vec) const {
  const Catalog& catalog = tools.catalog();
  const InteractionHistory& history = get_history(catalog, target_user);
  if (history.events.empty()) {
    throw Error(ErrorCode::EmptyHistory, "target '" + target_user + "' has an empty history");
  }
  const CallContext ctx{"orchestrator", 0};

  std::vector<Candidate> user_candidates;
  if (config_.mode != DiscussionMode::item_only) {
    NeighborSet neighbors = tools.get_similar_users(target_user, config_.n, ctx);
    for (const Neighbor& neighbor : neighbors.neighbors) {
      Candidate candidate;
      candidate.is_user = true;
      candidate.subject_id = neighbor.user_id;
      candidate.neighbor = neighbor;
      candidate.query_relevance =
          cosine(user_embedding(get_history(catalog, neighbor.user_id), tools.index()), query_vec);
      user_candidates.push_back(std::move(candidate));
    }
  }
  std::vector<Candidate> item_candidates;
  if (config_.mode != DiscussionMode::user_only) {
    RelevantHistory anchors = tools.get_relevant_items(target_user, query, config_.n, ctx);
    for (const RelevantItem& anchor : anchors.items) {
      Candidate candidate;
      candidate.subject_id = anchor.item_id;
      candidate.anchor = anchor;
      candidate.query_relevance = anchor.relevance;
      item_candidates.push_back(std::move(candidate));
    }
  }

  std::vector<Candidate> survivors;
  if (config_.ablations.disable_dar) {
    // No relevance filter: a fixed top-n of each type.
    survivors = user_candidates;
    survivors.insert(survivors.end(), item_candidates.begin(), item_candidates.end());
  } else {
    for (const auto& pool : {user_candidates, item_candidates}) {
      for (const Candidate& candidate : pool) {
        if (candidate.query_relevance >= config_.tau) survivors.push_back(candidate);
      }
    }
    if (survivors.empty()) {
      // Floor rule: the best scorer joins even below tau.
      std::vector<Candidate> all = user_candidates;
      all.insert(all.end(), item_candidates.begin(), item_candidates.end());
      if (!all.empty()) {
        survivors.push_back(*std::min_element(all.begin(), all.end(),
                                              [](const Candidate& a, const Candidate& b) {
                                                return candidate_order(a, b);
                                              }));
      }
    }
  }

  // Stable, deterministic agent order: user agents by similarity, then item
  // agents by relevance.
  std::vector<Candidate> ordered_users, ordered_items;
  for (const Candidate& candidate : survivors) {
    (candidate.is_user ? ordered_users : ordered_items).push_back(candidate);
  }
  std::sort(ordered_users.begin(), ordered_users.end(), [](const Candidate& a, const Candidate& b) {
    if (a.neighbor.similarity != b.neighbor.similarity)
      return a.neighbor.similarity > b.neighbor.similarity;
    return a.subject_id < b.subject_id;
  });
  std::sort(ordered_items.begin(), ordered_items.end(), [](const Candidate& a, const Candidate& b) {
    if (a.anchor.relevance != b.anchor.relevance) return a.anchor.relevance > b.anchor.relevance;
    return a.subject_id < b.subject_id;
  });

  std::vector<AgentProfile> agents;
  for (const Candidate& candidate : ordered_users) {
    agents.push_back(build_user_agent_profile(catalog, tools.index(), candidate.neighbor,
                                              target_user, config_.history_window));
  }
  for (const Candidate& candidate : ordered_items) {
    agents.push_back(build_item_agent_profile(catalog, candidate.anchor, target_user, query));
  }
  return agents;
}

namespace {

constexpr const char* kGenericGuidance =
    "Propose candidate items relevant to the query and give a brief rationale for each.";

bool has_code(const std::vector<Reason>& reasons, const std::string& code) {
  return std::any_of(reasons.begin(), reasons.end(),
                     [&](const Reason& reason) { return reason.code == code; });
}

std::vector<std::string> items_for_code(const std::vector<Reason>& reasons,
                                        const std::string& code) {
  std::vector<std::string> items;
  for (const Reason& reason : reasons) {
    if (reason.code == code) items.insert(items.end(), reason.items.begin(), reason.items.end());
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

bool agent_touched_item(const DiscussionState& state, const std::string& agent_id,
                        const std::string& item_id) {
  auto it = state.pool.find(item_id);
  if (it != state.pool.end()) {
    for (const CandidateSuggestion& suggestion : it->second) {
      if (suggestion.proposer == agent_id) return true;
    }
  }
  for (const CritiqueRecord& critique : state.critiques) {
    if (critique.agent_id == agent_id && critique.item_id == item_id) return true;
  }
  return false;
}

}  // namespace

std::vector<Instruction> Orchestrator::make_instructions(const DiscussionState& state) const {
  std::vector<Instruction> instructions;
  const bool pci_off = config_.ablations.disable_pci;
  const std::vector<Reason>& reasons = state.last_decision.reasons;
  const std::vector<std::string> low_rel = items_for_code(reasons, "low_relevance");
  const std::vector<std::string> contested = items_for_code(reasons, "unresolved_contest");
  const bool shortfall = has_code(reasons, "count_shortfall") || has_code(reasons, "unsupported");

  for (const std::string& agent_id : state.active) {
    const AgentProfile* agent = state.find_agent(agent_id);
    Instruction instruction;
    instruction.agent_id = agent_id;
    instruction.round = state.round;

    if (pci_off) {
      // Identical generic task for everyone, every round.
      instruction.directive = Directive::propose;
      instruction.guidance_text = kGenericGuidance;
      instructions.push_back(std::move(instruction));
      continue;
    }

    const std::string subject = agent ? agent->subject_id : agent_id;
    if (state.round == 0) {
      instruction.directive = Directive::propose;
      instruction.guidance_text =
          "Round 0: from the perspective of " + subject + ", propose candidates for target '" +
          state.target_user + "' that fit the query '" + state.query + "'.";
      instructions.push_back(std::move(instruction));
      continue;
    }

    std::vector<std::string> own_contested, own_low_rel;
    for (const std::string& item_id : contested) {
      if (agent_touched_item(state, agent_id, item_id)) own_contested.push_back(item_id);
    }
    for (const std::string& item_id : low_rel) {
      if (agent_touched_item(state, agent_id, item_id)) own_low_rel.push_back(item_id);
    }

    const std::string draft_note =
        "The draft has " + std::to_string(state.draft.entries.size()) + " item(s)" +
        (state.draft.entries.empty() ? "" : ", led by " + state.draft.entries.front().item_id) +
        ".";
    if (!own_contested.empty()) {
      instruction.directive = Directive::resolve_conflict;
      instruction.focus_items = own_contested;
      instruction.guidance_text = "Round " + std::to_string(state.round) + ": as " + subject +
                                  ", settle the dispute over " + join(own_contested, ", ") + ". " +
                                  draft_note;
    } else if (!own_low_rel.empty()) {
      instruction.directive = Directive::replace_low_relevance;
      instruction.focus_items = own_low_rel;
      instruction.guidance_text = "Round " + std::to_string(state.round) + ": as " + subject +
                                  ", re-examine low-relevance item(s) " + join(own_low_rel, ", ") +
                                  " and offer better alternatives. " + draft_note;
    } else if (shortfall) {
      instruction.directive = Directive::propose;
      instruction.guidance_text = "Round " + std::to_string(state.round) + ": as " + subject +
                                  ", propose fresh candidates; the draft is short of " +
                                  std::to_string(config_.K) + ". " + draft_note;
    } else {
      instruction.directive = Directive::refine;
      instruction.guidance_text = "Round " + std::to_string(state.round) + ": as " + subject +
                                  ", refine or reinforce your earlier suggestions. " + draft_note;
    }
    instructions.push_back(std::move(instruction));
  }
  return instructions;
}

RankedList Orchestrator::draft_ranked_list(const DiscussionState& state,
                                           const Catalog& catalog) const {
  if (config_.policy == PolicyKind::chat && chat_ != nullptr) {
    return chat_draft(state, catalog);
  }
  RankedList draft;
  std::vector<RankedEntry> entries;
  for (const auto& [item_id, suggestions] : state.pool) {
    if (state.target_history.count(item_id)) continue;  // discovery task: history excluded
    double confidence_sum = 0.0;
    std::set<std::string> supporters;
    std::vector<std::string> rationales;
    for (const CandidateSuggestion& suggestion : suggestions) {
      confidence_sum += suggestion.confidence;
      supporters.insert(suggestion.proposer);
      rationales.push_back(suggestion.proposer + ": " + suggestion.rationale);
    }
    int contests = 0;
    for (const CritiqueRecord& critique : state.critiques) {
      if (critique.item_id != item_id) continue;
      if (critique.stance == Stance::support) {
        supporters.insert(critique.agent_id);
      } else {
        ++contests;
      }
    }
    double score = confidence_sum + 0.25 * static_cast<double>(supporters.size()) -
                   0.5 * static_cast<double>(contests);
    score = std::max(score, 0.0);
    entries.push_back({item_id, score, std::move(rationales)});
  }
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
  if (entries.size() > static_cast<std::size_t>(config_.K)) entries.resize(config_.K);
  draft.entries = std::move(entries);
  return draft;
}

Decision Orchestrator::sufficiency_test(const DiscussionState& state, const RankedList& draft,
                                        const VectorIndex& index) const {
  if (config_.policy == PolicyKind::chat && chat_ != nullptr) {
    return chat_sufficiency(state, draft);
  }
  Decision decision;
  // (i) K unique items, each clearly relevant to the query.
  if (draft.entries.size() != static_cast<std::size_t>(config_.K)) {
    decision.reasons.push_back({"count_shortfall", {}});
  }
  Reason low_rel{"low_relevance", {}};
  for (const RankedEntry& entry : draft.entries) {
    if (cosine(state.query_vec, index.vector_for(entry.item_id)) < config_.tau) {
      low_rel.items.push_back(entry.item_id);
    }
  }
  if (!low_rel.items.empty()) decision.reasons.push_back(std::move(low_rel));

  // (ii) every entry backed by a rationale, and no contest left standing.
  Reason unsupported{"unsupported", {}};
  Reason unresolved{"unresolved_contest", {}};
  for (const RankedEntry& entry : draft.entries) {
    auto pool_it = state.pool.find(entry.item_id);
    const bool has_rationale = pool_it != state.pool.end() && !pool_it->second.empty();
    if (!has_rationale && !state.last_support_seq.count(entry.item_id)) {
      unsupported.items.push_back(entry.item_id);
    }
    auto contest_it = state.last_contest_seq.find(entry.item_id);
    if (contest_it != state.last_contest_seq.end()) {
      auto support_it = state.last_support_seq.find(entry.item_id);
      const int support_seq = support_it == state.last_support_seq.end() ? -1 : support_it->second;
      if (contest_it->second > support_seq) unresolved.items.push_back(entry.item_id);
    }
  }
  if (!unsupported.items.empty()) decision.reasons.push_back(std::move(unsupported));
  if (!unresolved.items.empty()) decision.reasons.push_back(std::move(unresolved));

  // (iii) clear ordering: (score desc, item_id asc) must be strict.
  for (std::size_t i = 1; i < draft.entries.size(); ++i) {
    const RankedEntry& prev = draft.entries[i - 1];
    const RankedEntry& curr = draft.entries[i];
    const bool ordered = prev.score > curr.score ||
                         (prev.score == curr.score && prev.item_id < curr.item_id);
    if (!ordered) {
      decision.reasons.push_back({"ordering", {curr.item_id}});
      break;
    }
  }
  decision.sufficient = decision.reasons.empty();
  return decision;
}

std::vector<std::string> Orchestrator::select_active_agents(
    const DiscussionState& state, const std::vector<Reason>& reasons) const {
  std::vector<std::string> all_ids;
  for (const AgentProfile& agent : state.agents) all_ids.push_back(agent.agent_id);
  if (config_.ablations.disable_dar) return all_ids;

  std::set<std::string> selected;
  std::vector<std::string> implicated = items_for_code(reasons, "low_relevance");
  for (const char* code : {"unresolved_contest", "unsupported"}) {
    for (const std::string& item_id : items_for_code(reasons, code)) {
      implicated.push_back(item_id);
    }
  }
  for (const std::string& item_id : implicated) {
    for (const AgentProfile& agent : state.agents) {
      if (agent_touched_item(state, agent.agent_id, item_id)) selected.insert(agent.agent_id);
    }
  }
  if (has_code(reasons, "count_shortfall") || has_code(reasons, "insufficient_judgment")) {
    // Fresh evidence: the strongest not-yet-exhausted agent of each type.
    for (AgentRole role : {AgentRole::user_agent, AgentRole::item_agent}) {
      for (const AgentProfile& agent : state.agents) {  // agents are sorted by strength per role
        if (agent.role == role && !state.exhausted.count(agent.agent_id)) {
          selected.insert(agent.agent_id);
          break;
        }
      }
    }
  }
  if (selected.empty()) return all_ids;  // never leave a round without voices
  std::vector<std::string> ordered;
  for (const std::string& agent_id : all_ids) {
    if (selected.count(agent_id)) ordered.push_back(agent_id);
  }
  return ordered;
}

DiscussionView Orchestrator::make_view(const DiscussionState& state) const {
  DiscussionView view;
  view.target_user = state.target_user;
  view.query = state.query;
  view.round = state.round;
  view.tau = config_.tau;
  view.exclude_items = state.target_history;
  for (const auto& [item_id, suggestions] : state.pool) {
    (void)suggestions;
    view.pool_items.insert(item_id);
  }
  view.draft = state.draft;
  view.prior_suggestions = state.prior_suggestions;
  view.messages = state.messages;
  return view;
}

TurnBudget Orchestrator::budget_for_round(int round) const {
  if (config_.ablations.disable_atu) {
    // Tools once per agent, at the beginning of the discussion.
    return TurnBudget{round == 0 ? 1 : 0};
  }
  return TurnBudget{config_.max_tool_calls_per_turn};
}

void Orchestrator::emit(DiscussionState& state, const EventSink& sink, EventType type, int round,
                        nlohmann::json payload) const {
  SessionEvent event;
  event.type = type;
  event.round = round;
  event.seq = state.event_seq++;
  event.session_id = state.session_id;
  event.payload = std::move(payload);
  state.transcript.push_back(event);
  if (sink) sink(event);
}

void Orchestrator::merge_turn(DiscussionState& state, const AgentTurn& turn) const {
  const int seq = ++state.turn_seq;
  int new_items = 0;
  for (const CandidateSuggestion& suggestion : turn.suggestions) {
    if (!state.pool.count(suggestion.item_id)) ++new_items;
    state.pool[suggestion.item_id].push_back(suggestion);
    state.last_support_seq[suggestion.item_id] =
        std::max(state.last_support_seq[suggestion.item_id], seq);
    auto& prior = state.prior_suggestions[turn.agent_id];
    if (std::find(prior.begin(), prior.end(), suggestion.item_id) == prior.end()) {
      prior.push_back(suggestion.item_id);
    }
  }
  for (const Critique& critique : turn.critiques) {
    state.critiques.push_back({critique.item_id, critique.stance, turn.agent_id, seq});
    auto& seq_map =
        critique.stance == Stance::support ? state.last_support_seq : state.last_contest_seq;
    seq_map[critique.item_id] = std::max(seq_map[critique.item_id], seq);
  }
  if (new_items == 0) {
    state.exhausted.insert(turn.agent_id);
  } else {
    state.exhausted.erase(turn.agent_id);
  }
  state.messages.push_back(turn.agent_id + "@" + std::to_string(turn.round) + ": " + turn.message);
}

int Orchestrator::collect_turns(DiscussionState& state,
                                const std::vector<Instruction>& instructions, ToolSet& tools,
                                const EventSink& sink) const {
  // All agents in a round see the same snapshot; merging happens in the
  // deterministic instruction (agent) order.
  const DiscussionView view = make_view(state);
  const TurnBudget budget = budget_for_round(state.round);
  int succeeded = 0;
  for (const Instruction& instruction : instructions) {
    const AgentProfile* agent = state.find_agent(instruction.agent_id);
    if (agent == nullptr) continue;
    try {
      AgentTurn turn = agent_step(*agent, instruction, view, tools, policy_, budget);
      merge_turn(state, turn);
      emit(state, sink, EventType::agent_turn, state.round, turn.to_json());
      ++succeeded;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PolicyFailure && e.code() != ErrorCode::UnparseableTurn) throw;
      // Degrade to skipping this agent; the session carries on.
      emit(state, sink, EventType::agent_turn, state.round,
           {{"agent_id", instruction.agent_id}, {"skipped", true}, {"error", e.what()}});
      state.messages.push_back(instruction.agent_id + "@" + std::to_string(state.round) +
                               ": (turn skipped: " + e.what() + ")");
    }
  }
  return succeeded;
}

SessionResult Orchestrator::run(ToolSet& tools, const std::string& target_user,
                                const std::string& query, std::string session_id,
                                const EventSink& sink) const {
  DiscussionState state;
  state.session_id = session_id.empty()
                         ? derive_session_id(target_user, query, config_.seed)
                         : std::move(session_id);
  state.target_user = target_user;
  state.query = query;
  state.query_vec = tools.embed_query(query);
  state.target_history = history_item_set(get_history(tools.catalog(), target_user));

  state.agents = recruit_agents(tools, target_user, query, state.query_vec);
  nlohmann::json agent_list = nlohmann::json::array();
  for (const AgentProfile& agent : state.agents) {
    agent_list.push_back({{"agent_id", agent.agent_id},
                          {"role", role_name(agent.role)},
                          {"subject_id", agent.subject_id},
                          {"profile_text", agent.profile_text}});
  }
  emit(state, sink, EventType::session_started, 0,
       {{"target_user", target_user},
        {"query", query},
        {"config", config_.to_json()},
        {"agents", agent_list}});

  for (const AgentProfile& agent : state.agents) state.active.push_back(agent.agent_id);
  emit(state, sink, EventType::round_started, 0, {{"active_agents", state.active}});
  std::vector<Instruction> instructions = make_instructions(state);
  for (const Instruction& instruction : instructions) {
    emit(state, sink, EventType::instruction, 0, instruction.to_json());
  }
  if (collect_turns(state, instructions, tools, sink) == 0) {
    emit(state, sink, EventType::session_failed, 0, {{"error", "no agent produced a turn"}});
    throw Error(ErrorCode::SessionFailure, "round 0 produced no turns");
  }

  for (int t = 1;; ++t) {
    state.round = t;
    state.draft = draft_ranked_list(state, tools.catalog());
    nlohmann::json pool_items = nlohmann::json::array();
    for (const auto& [item_id, suggestions] : state.pool) {
      (void)suggestions;
      pool_items.push_back(item_id);
    }
    nlohmann::json draft_payload = state.draft.to_json();
    draft_payload["pool_items"] = std::move(pool_items);
    emit(state, sink, EventType::draft_list, t, std::move(draft_payload));

    const Decision decision = sufficiency_test(state, state.draft, tools.index());
    state.last_decision = decision;
    emit(state, sink, EventType::decision, t, decision.to_json());

    if (decision.sufficient || t >= config_.T_max) {
      state.terminated = true;
      state.termination_reason = decision.sufficient ? "sufficient" : "round_limit";
      nlohmann::json final_payload = state.draft.to_json(false);
      final_payload["reason"] = state.termination_reason;
      final_payload["rounds_used"] = t;
      emit(state, sink, EventType::final_list, t, std::move(final_payload));
      return SessionResult{state.draft, std::move(state), t};
    }

    state.active = select_active_agents(state, decision.reasons);
    emit(state, sink, EventType::round_started, t, {{"active_agents", state.active}});
    instructions = make_instructions(state);
    for (const Instruction& instruction : instructions) {
      emit(state, sink, EventType::instruction, t, instruction.to_json());
    }
    if (collect_turns(state, instructions, tools, sink) == 0) {
      emit(state, sink, EventType::session_failed, t, {{"error", "no agent produced a turn"}});
      throw Error(ErrorCode::SessionFailure, "round " + std::to_string(t) + " produced no turns");
    }
  }
}

namespace {

constexpr const char* kDraftSchema =
    "Reply with exactly one JSON object, no prose: "
    "{\"entries\": [{\"item_id\": str, \"score\": number}]} with unique item_ids, best first.";

constexpr const char* kJudgmentSchema =
    "Reply with exactly one JSON object, no prose: "
    "{\"sufficient\": true|false, \"reasons\": [{\"code\": str, \"items\": [str]}]} where code is "
    "one of count_shortfall, low_relevance, unsupported, unresolved_contest.";

std::string pool_digest(const DiscussionState& state, std::size_t per_item_rationales = 2) {
  std::string digest;
  for (const auto& [item_id, suggestions] : state.pool) {
    if (state.target_history.count(item_id)) continue;
    digest += item_id + " (" + std::to_string(suggestions.size()) + " suggestion(s)):";
    std::size_t listed = 0;
    for (const CandidateSuggestion& suggestion : suggestions) {
      if (listed++ == per_item_rationales) break;
      digest += " [" + suggestion.proposer + " conf " + format_double(suggestion.confidence, 2) +
                "] " + clamp_text(suggestion.rationale, 100) + ";";
    }
    digest += "\n";
  }
  return digest;
}

}  // namespace

RankedList Orchestrator::chat_draft(const DiscussionState& state, const Catalog& catalog) const {
  std::vector<ChatMessage> messages{
      {"system", std::string("You are the orchestrator of a recommendation discussion. Draft the "
                             "ranked list now. ") +
                     kDraftSchema},
      {"user", "Target user: " + state.target_user + "\nQuery: " + state.query + "\nK=" +
                   std::to_string(config_.K) + "\nCandidate pool:\n" + pool_digest(state)}};
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = chat_->complete(messages, {chat_->config().temperature, 0}).text;
    } catch (const Error& e) {
      throw Error(ErrorCode::UnparseableTurn, std::string("orchestrator draft failed: ") + e.what());
    }
    nlohmann::json payload = nlohmann::json::parse(reply, nullptr, false);
    RankedList draft;
    bool ok = false;
    if (!payload.is_discarded() && payload.is_object() && payload.contains("entries") &&
        payload["entries"].is_array()) {
      std::set<std::string> seen;
      double previous_score = std::numeric_limits<double>::infinity();
      ok = true;
      for (const auto& entry : payload["entries"]) {
        if (!entry.is_object() || !entry.contains("item_id") || !entry.at("item_id").is_string()) {
          continue;
        }
        const std::string item_id = entry.at("item_id").get<std::string>();
        // Validation: unique, in catalog, outside the target history, <= K.
        if (!catalog.has_item(item_id) || state.target_history.count(item_id) ||
            !seen.insert(item_id).second) {
          continue;
        }
        double score = entry.value("score", previous_score - 1.0);
        score = std::min(score, previous_score);  // enforce non-increasing
        previous_score = score;
        RankedEntry ranked{item_id, score, {}};
        auto pool_it = state.pool.find(item_id);
        if (pool_it != state.pool.end()) {
          for (const CandidateSuggestion& suggestion : pool_it->second) {
            ranked.rationales.push_back(suggestion.proposer + ": " + suggestion.rationale);
          }
        }
        draft.entries.push_back(std::move(ranked));
        if (draft.entries.size() == static_cast<std::size_t>(config_.K)) break;
      }
      ok = ok && (!draft.entries.empty() || state.pool.empty());
    }
    if (ok) return draft;
    last_error = "draft reply failed validation";
    if (attempt == 0) {
      messages.push_back({"assistant", reply});
      messages.push_back({"user", std::string("That was invalid. ") + kDraftSchema});
    }
  }
  throw Error(ErrorCode::UnparseableTurn, "orchestrator draft: " + last_error);
}

Decision Orchestrator::chat_sufficiency(const DiscussionState& state,
                                        const RankedList& draft) const {
  std::string draft_text;
  for (const RankedEntry& entry : draft.entries) {
    draft_text += entry.item_id + " (score " + format_double(entry.score, 4) + ")\n";
  }
  std::vector<ChatMessage> messages{
      {"system", std::string("You are the orchestrator judging whether the draft is ready. "
                             "Conditions: (i) exactly K uniquely relevant items, (ii) rationale "
                             "alignment with no unresolved contests, (iii) clear ordering. ") +
                     kJudgmentSchema},
      {"user", "K=" + std::to_string(config_.K) + "\nQuery: " + state.query + "\nDraft:\n" +
                   draft_text + "Pool:\n" + pool_digest(state)}};
  Decision decision;
  try {
    const std::string reply = chat_->complete(messages, {chat_->config().temperature, 0}).text;
    nlohmann::json payload = nlohmann::json::parse(reply, nullptr, false);
    if (!payload.is_discarded() && payload.is_object() && payload.contains("sufficient") &&
        payload["sufficient"].is_boolean()) {
      decision.sufficient = payload["sufficient"].get<bool>();
      if (payload.contains("reasons") && payload["reasons"].is_array()) {
        for (const auto& entry : payload["reasons"]) {
          if (!entry.is_object() || !entry.contains("code")) continue;
          Reason reason;
          reason.code = entry.at("code").get<std::string>();
          if (entry.contains("items") && entry["items"].is_array()) {
            for (const auto& item : entry["items"]) {
              if (item.is_string()) reason.items.push_back(item.get<std::string>());
            }
          }
          decision.reasons.push_back(std::move(reason));
        }
      }
      if (!decision.sufficient && decision.reasons.empty()) {
        decision.reasons.push_back({"insufficient_judgment", {}});
      }
      return decision;
    }
  } catch (const Error&) {
    // fall through to the insufficient default
  }
  decision.sufficient = false;  // malformed judgment defaults to not-ready
  decision.reasons.push_back({"insufficient_judgment", {}});
  return decision;
}

}  // namespace macf
