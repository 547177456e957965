#include "macf/agent.hpp"

#include <algorithm>
#include <map>

#include "macf/errors.hpp"
#include "macf/text.hpp"

namespace macf {

const char* role_name(AgentRole role) {
  switch (role) {
    case AgentRole::user_agent: return "user_agent";
    case AgentRole::item_agent: return "item_agent";
    case AgentRole::orchestrator: return "orchestrator";
  }
  return "agent";
}

const char* directive_name(Directive directive) {
  switch (directive) {
    case Directive::propose: return "propose";
    case Directive::refine: return "refine";
    case Directive::resolve_conflict: return "resolve_conflict";
    case Directive::replace_low_relevance: return "replace_low_relevance";
  }
  return "propose";
}

const char* stance_name(Stance stance) {
  return stance == Stance::support ? "support" : "contest";
}

nlohmann::json AgentTurn::to_json() const {
  nlohmann::json suggestion_list = nlohmann::json::array();
  for (const auto& suggestion : suggestions) {
    suggestion_list.push_back({{"item_id", suggestion.item_id},
                               {"rationale", suggestion.rationale},
                               {"confidence", suggestion.confidence}});
  }
  nlohmann::json critique_list = nlohmann::json::array();
  for (const auto& critique : critiques) {
    critique_list.push_back({{"item_id", critique.item_id},
                             {"stance", stance_name(critique.stance)},
                             {"reason", critique.reason}});
  }
  return {{"agent_id", agent_id},   {"message", message},
          {"suggestions", suggestion_list}, {"critiques", critique_list},
          {"tool_calls_made", tool_calls_made}, {"dropped_invalid", dropped_invalid}};
}

nlohmann::json Instruction::to_json() const {
  return {{"agent_id", agent_id},
          {"directive", directive_name(directive)},
          {"focus_items", focus_items},
          {"guidance_text", guidance_text}};
}

namespace {

double normalize_cosine(double value) {
  return std::clamp((value + 1.0) / 2.0, 0.0, 1.0);
}

std::vector<std::string> json_string_list(const nlohmann::json& evidence, const char* key) {
  std::vector<std::string> out;
  if (evidence.contains(key) && evidence.at(key).is_array()) {
    for (const auto& entry : evidence.at(key)) {
      if (entry.is_string()) out.push_back(entry.get<std::string>());
    }
  }
  return out;
}

std::string pseudo_query(const AgentProfile& profile, const DiscussionView& view) {
  std::vector<std::string> parts = json_string_list(profile.evidence, "top_categories");
  parts.push_back(view.query);
  return join(parts, " ");
}

// Directive-appropriate retrieval shared by the scripted and chat policies.
// Proposal mode excludes the target history and the current pool so results
// are genuinely new; membership mode returns the agent's raw top-k view for
// stance decisions.
class EvidenceGatherer {
 public:
  EvidenceGatherer(const AgentProfile& profile, const DiscussionView& view, ToolSet& tools,
                   int max_tool_calls, int round)
      : profile_(profile), view_(view), tools_(tools), remaining_(max_tool_calls),
        ctx_{profile.agent_id, round} {}

  std::vector<ScoredItem> proposals(int want) {
    if (!consume_budget()) return {};
    std::set<std::string> exclude = view_.exclude_items;
    exclude.insert(view_.pool_items.begin(), view_.pool_items.end());
    if (profile_.role == AgentRole::user_agent) {
      return tools_.retrieve_by_query(pseudo_query(profile_, view_), clamp_override(want), exclude,
                                      ctx_);
    }
    if (anchor_relevance() >= view_.tau) {
      // retrieve_by_item has no exclude parameter; over-fetch and filter.
      const int fetch = clamp_override(want + static_cast<int>(exclude.size()));
      std::vector<ScoredItem> raw = tools_.retrieve_by_item(profile_.subject_id, fetch, ctx_);
      std::vector<ScoredItem> filtered;
      for (const ScoredItem& entry : raw) {
        if (!exclude.count(entry.item_id)) filtered.push_back(entry);
        if (filtered.size() == static_cast<std::size_t>(want)) break;
      }
      return filtered;
    }
    // Low-relevance anchor: the query is the more informative signal.
    return tools_.retrieve_by_query(view_.query, clamp_override(want), exclude, ctx_);
  }

  std::vector<ScoredItem> membership(int k) {
    if (!consume_budget()) return {};
    if (profile_.role == AgentRole::user_agent) {
      return tools_.retrieve_by_query(pseudo_query(profile_, view_), clamp_override(k),
                                      view_.exclude_items, ctx_);
    }
    if (anchor_relevance() >= view_.tau) {
      return tools_.retrieve_by_item(profile_.subject_id, clamp_override(k), ctx_);
    }
    return tools_.retrieve_by_query(view_.query, clamp_override(k), view_.exclude_items, ctx_);
  }

  int calls_made() const { return calls_made_; }
  bool budget_refused() const { return budget_refused_; }

 private:
  bool consume_budget() {
    if (remaining_ <= 0) {
      budget_refused_ = true;
      return false;
    }
    --remaining_;
    ++calls_made_;
    return true;
  }

  double anchor_relevance() const { return profile_.evidence.value("relevance", 0.0); }

  const AgentProfile& profile_;
  const DiscussionView& view_;
  ToolSet& tools_;
  int remaining_;
  int calls_made_ = 0;
  bool budget_refused_ = false;
  CallContext ctx_;
};

std::string proposal_rationale(const AgentProfile& profile) {
  if (profile.role == AgentRole::user_agent) {
    return "neighbor " + profile.subject_id + " (similarity " +
           format_double(profile.evidence.value("similarity", 0.0), 4) + ") preference match";
  }
  if (profile.evidence.value("relevance", 0.0) >= 0.0) {
    return "expands history anchor " + profile.subject_id + " (relevance " +
           format_double(profile.evidence.value("relevance", 0.0), 4) + ")";
  }
  return "query-aligned alternative via anchor " + profile.subject_id;
}

std::vector<std::string> own_prior_items(const AgentProfile& profile, const DiscussionView& view) {
  auto it = view.prior_suggestions.find(profile.agent_id);
  if (it == view.prior_suggestions.end()) return {};
  return it->second;
}

}  // namespace

AgentTurn ScriptedPolicy::take_turn(const AgentProfile& profile, const Instruction& instruction,
                                    const DiscussionView& view, ToolSet& tools,
                                    const TurnBudget& budget) {
  (void)seed_;  // reserved: the scripted policy is deterministic without randomness
  AgentTurn turn;
  turn.agent_id = profile.agent_id;
  turn.round = instruction.round;
  const int n = tools.defaults().n;
  EvidenceGatherer gather(profile, view, tools, std::max(budget.max_tool_calls, 0),
                          instruction.round);

  const std::vector<std::string> prior = own_prior_items(profile, view);
  const std::set<std::string> prior_set(prior.begin(), prior.end());
  std::set<std::string> draft_items;
  for (const auto& entry : view.draft.entries) draft_items.insert(entry.item_id);

  auto add_proposals = [&]() {
    std::vector<ScoredItem> retrieved = gather.proposals(n);
    if (retrieved.empty() && profile.role == AgentRole::user_agent) {
      // No tool budget: fall back to the evidence digest (the neighbor's own
      // recent items that the target has not seen).
      const double similarity = profile.evidence.value("similarity", 0.0);
      for (const std::string& item_id : json_string_list(profile.evidence, "recent_item_ids")) {
        if (view.exclude_items.count(item_id) || view.pool_items.count(item_id)) continue;
        turn.suggestions.push_back({item_id,
                                    "from neighbor " + profile.subject_id + "'s history (similarity " +
                                        format_double(similarity, 4) + ")",
                                    normalize_cosine(similarity), profile.agent_id,
                                    instruction.round});
        if (turn.suggestions.size() == static_cast<std::size_t>(n)) break;
      }
      return;
    }
    for (const ScoredItem& entry : retrieved) {
      turn.suggestions.push_back({entry.item_id, proposal_rationale(profile),
                                  normalize_cosine(entry.score), profile.agent_id,
                                  instruction.round});
    }
  };

  auto support_own_drafted = [&]() {
    for (const std::string& item_id : prior) {
      if (draft_items.count(item_id)) {
        turn.critiques.push_back(
            {item_id, Stance::support, "remains consistent with " + profile.subject_id + " evidence"});
      }
    }
  };

  switch (instruction.directive) {
    case Directive::propose:
      add_proposals();
      break;
    case Directive::refine:
      support_own_drafted();
      add_proposals();
      break;
    case Directive::resolve_conflict: {
      std::set<std::string> confirmed = prior_set;
      for (const ScoredItem& entry : gather.membership(tools.defaults().k)) {
        confirmed.insert(entry.item_id);
      }
      for (const std::string& item_id : instruction.focus_items) {
        if (confirmed.count(item_id)) {
          turn.critiques.push_back({item_id, Stance::support, "confirmed by my retrieval evidence"});
        } else {
          turn.critiques.push_back({item_id, Stance::contest, "absent from my retrieval evidence"});
        }
      }
      break;
    }
    case Directive::replace_low_relevance:
      for (const std::string& item_id : instruction.focus_items) {
        turn.critiques.push_back(
            {item_id, Stance::contest, "low relevance to the query; proposing alternatives"});
      }
      add_proposals();
      break;
  }

  turn.tool_calls_made = gather.calls_made();
  turn.message = std::string(directive_name(instruction.directive)) + ": " +
                 std::to_string(turn.suggestions.size()) + " suggestion(s), " +
                 std::to_string(turn.critiques.size()) + " critique(s)";
  if (gather.budget_refused()) {
    turn.message += "; tool budget exhausted, drew on transcript evidence";
  }
  return turn;
}

AgentTurn agent_step(const AgentProfile& profile, const Instruction& instruction,
                     const DiscussionView& view, ToolSet& tools, AgentPolicy& policy,
                     const TurnBudget& budget) {
  if (instruction.agent_id != profile.agent_id) {
    throw Error(ErrorCode::PolicyFailure, "instruction addressed to '" + instruction.agent_id +
                                              "', agent is '" + profile.agent_id + "'");
  }
  TurnBudget clamped{std::max(budget.max_tool_calls, 0)};
  AgentTurn turn = policy.take_turn(profile, instruction, view, tools, clamped);
  turn.agent_id = profile.agent_id;
  turn.round = instruction.round;
  turn.tool_calls_made = std::min(turn.tool_calls_made, clamped.max_tool_calls);

  // Hallucination firewall: suggestions must resolve in the catalog.
  std::vector<CandidateSuggestion> kept_suggestions;
  for (CandidateSuggestion& suggestion : turn.suggestions) {
    if (!tools.catalog().has_item(suggestion.item_id)) {
      ++turn.dropped_invalid;
      continue;
    }
    suggestion.confidence = std::clamp(suggestion.confidence, 0.0, 1.0);
    suggestion.proposer = profile.agent_id;
    suggestion.round = instruction.round;
    kept_suggestions.push_back(std::move(suggestion));
    if (kept_suggestions.size() == 10) break;
  }
  turn.suggestions = std::move(kept_suggestions);

  // Critiques must reference something already under discussion.
  std::set<std::string> known = view.pool_items;
  for (const auto& entry : view.draft.entries) known.insert(entry.item_id);
  std::vector<Critique> kept_critiques;
  for (Critique& critique : turn.critiques) {
    if (!known.count(critique.item_id)) {
      ++turn.dropped_invalid;
      continue;
    }
    kept_critiques.push_back(std::move(critique));
  }
  turn.critiques = std::move(kept_critiques);
  return turn;
}

namespace {

nlohmann::json recover_json_object(const std::string& raw) {
  nlohmann::json direct = nlohmann::json::parse(raw, nullptr, false);
  if (!direct.is_discarded() && direct.is_object()) return direct;
  const std::size_t open = raw.find('{');
  const std::size_t close = raw.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    nlohmann::json inner = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (!inner.is_discarded() && inner.is_object()) return inner;
  }
  throw Error(ErrorCode::UnparseableTurn,
              "no JSON object in agent output: " + clamp_text(trim(raw), 120));
}

}  // namespace

AgentTurn parse_agent_turn(const std::string& raw) {
  const nlohmann::json payload = recover_json_object(raw);
  AgentTurn turn;
  if (payload.contains("message") && payload.at("message").is_string()) {
    turn.message = payload.at("message").get<std::string>();
  }
  if (payload.contains("suggestions")) {
    if (!payload.at("suggestions").is_array()) {
      throw Error(ErrorCode::UnparseableTurn, "\"suggestions\" is not an array");
    }
    for (const auto& entry : payload.at("suggestions")) {
      if (!entry.is_object() || !entry.contains("item_id") || !entry.at("item_id").is_string()) {
        continue;  // tolerant reader: skip entries without a usable item_id
      }
      CandidateSuggestion suggestion;
      suggestion.item_id = entry.at("item_id").get<std::string>();
      suggestion.rationale = entry.value("rationale", std::string{});
      suggestion.confidence = entry.value("confidence", 0.5);
      turn.suggestions.push_back(std::move(suggestion));
    }
  }
  if (payload.contains("critiques")) {
    if (!payload.at("critiques").is_array()) {
      throw Error(ErrorCode::UnparseableTurn, "\"critiques\" is not an array");
    }
    for (const auto& entry : payload.at("critiques")) {
      if (!entry.is_object() || !entry.contains("item_id") || !entry.at("item_id").is_string()) {
        continue;
      }
      Critique critique;
      critique.item_id = entry.at("item_id").get<std::string>();
      const std::string stance = entry.value("stance", "support");
      critique.stance = stance == "contest" ? Stance::contest : Stance::support;
      critique.reason = entry.value("reason", std::string{});
      turn.critiques.push_back(std::move(critique));
    }
  }
  return turn;
}

std::string build_transcript_digest(const DiscussionView& view, std::size_t char_budget) {
  std::string draft_section = "Current draft:\n";
  if (view.draft.entries.empty()) {
    draft_section += "  (empty)\n";
  } else {
    int rank = 1;
    for (const auto& entry : view.draft.entries) {
      draft_section += "  " + std::to_string(rank++) + ". " + entry.item_id + " (score " +
                       format_double(entry.score, 4) + ")\n";
    }
  }
  // Oldest messages go first in the output but are dropped first when over
  // budget; round-0 instructions arrive through guidance_text, not here.
  std::vector<std::string> kept;
  std::size_t used = draft_section.size();
  for (auto it = view.messages.rbegin(); it != view.messages.rend(); ++it) {
    if (used + it->size() + 1 > char_budget) break;
    used += it->size() + 1;
    kept.push_back(*it);
  }
  std::reverse(kept.begin(), kept.end());
  std::string digest = draft_section + "Discussion:\n";
  for (const std::string& message : kept) digest += message + "\n";
  return digest;
}

namespace {

constexpr const char* kTurnSchema =
    "Reply with exactly one JSON object, no prose: "
    "{\"message\": str, "
    "\"suggestions\": [{\"item_id\": str, \"rationale\": str, \"confidence\": number in [0,1]}], "
    "\"critiques\": [{\"item_id\": str, \"stance\": \"support\"|\"contest\", \"reason\": str}]}";

}  // namespace

AgentTurn ChatAgentPolicy::take_turn(const AgentProfile& profile, const Instruction& instruction,
                                     const DiscussionView& view, ToolSet& tools,
                                     const TurnBudget& budget) {
  EvidenceGatherer gather(profile, view, tools, std::max(budget.max_tool_calls, 0),
                          instruction.round);
  std::string tool_context;
  if (budget.max_tool_calls > 0) {
    std::vector<ScoredItem> retrieved =
        instruction.directive == Directive::resolve_conflict
            ? gather.membership(tools.defaults().k)
            : gather.proposals(tools.defaults().n);
    if (!retrieved.empty()) {
      tool_context = "Retrieval results:\n";
      for (const ScoredItem& entry : retrieved) {
        tool_context += "  " + entry.item_id + " | " + tools.catalog().item(entry.item_id).title +
                        " | score " + format_double(entry.score, 4) + "\n";
      }
    }
  }

  std::string system_text = std::string("You are ") + profile.agent_id + ", a " +
                            role_name(profile.role) +
                            " in a collaborative recommendation discussion for target user '" +
                            view.target_user + "'.\nProfile: " + profile.profile_text + "\n" +
                            kTurnSchema;
  std::string user_text = std::string("Round ") + std::to_string(instruction.round) +
                          " directive: " + directive_name(instruction.directive) + "\n" +
                          instruction.guidance_text + "\n";
  if (!instruction.focus_items.empty()) {
    user_text += "Focus items: " + join(instruction.focus_items, ", ") + "\n";
  }
  user_text += "Query: " + view.query + "\n" +
               build_transcript_digest(view, transcript_char_budget_) + tool_context;

  std::vector<ChatMessage> messages{{"system", system_text}, {"user", user_text}};
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = client_.complete(messages, {client_.config().temperature, 0}).text;
    } catch (const Error& e) {
      throw Error(ErrorCode::PolicyFailure, std::string("chat backend failed: ") + e.what());
    }
    try {
      AgentTurn turn = parse_agent_turn(reply);
      turn.tool_calls_made = gather.calls_made();
      return turn;
    } catch (const Error& e) {
      last_error = e.what();
      if (attempt == 0) {
        messages.push_back({"assistant", reply});
        messages.push_back(
            {"user", std::string("Your reply could not be parsed (") + last_error +
                         "). Repair it. " + kTurnSchema});
      }
    }
  }
  throw Error(ErrorCode::UnparseableTurn, "after one repair attempt: " + last_error);
}

AgentProfile build_user_agent_profile(const Catalog& catalog, const VectorIndex& index,
                                      const Neighbor& neighbor, const std::string& target_user,
                                      int history_window) {
  (void)index;
  get_history(catalog, target_user);  // UnknownUser when the target is missing
  const InteractionHistory& history = get_history(catalog, neighbor.user_id);
  if (history.events.empty()) {
    throw Error(ErrorCode::EmptyHistory, "neighbor '" + neighbor.user_id + "' has no history");
  }
  std::vector<InteractionEvent> window(history.events.begin(), history.events.end());
  if (history_window > 0 && window.size() > static_cast<std::size_t>(history_window)) {
    window.erase(window.begin(), window.end() - history_window);
  }

  std::map<std::string, int> category_counts;
  for (const auto& event : window) ++category_counts[catalog.item(event.item_id).category];
  std::vector<std::pair<std::string, int>> categories(category_counts.begin(),
                                                      category_counts.end());
  std::sort(categories.begin(), categories.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (categories.size() > 3) categories.resize(3);

  // Most recent first, one entry per item.
  std::vector<const InteractionEvent*> recent;
  std::set<std::string> seen;
  for (auto it = window.rbegin(); it != window.rend(); ++it) {
    if (seen.insert(it->item_id).second) recent.push_back(&*it);
  }

  AgentProfile profile;
  profile.agent_id = "user_agent:" + neighbor.user_id;
  profile.role = AgentRole::user_agent;
  profile.subject_id = neighbor.user_id;

  std::vector<std::string> top_categories;
  for (const auto& [category, count] : categories) {
    (void)count;
    top_categories.push_back(category);
  }
  nlohmann::json recent_list = nlohmann::json::array();
  std::vector<std::string> recent_ids;
  for (const auto* event : recent) {
    if (recent_list.size() < 5) {
      recent_list.push_back({{"item_id", event->item_id},
                             {"title", catalog.item(event->item_id).title},
                             {"timestamp", event->timestamp}});
    }
    if (recent_ids.size() < 10) recent_ids.push_back(event->item_id);
  }
  profile.evidence = {{"kind", "user_agent"},
                      {"neighbor_id", neighbor.user_id},
                      {"target_id", target_user},
                      {"similarity", neighbor.similarity},
                      {"top_categories", top_categories},
                      {"recent_items", recent_list},
                      {"recent_item_ids", recent_ids}};

  std::string text = "User agent for neighbor '" + neighbor.user_id + "' (similarity " +
                     format_double(neighbor.similarity, 4) + " to target '" + target_user +
                     "'). Top categories: " + join(top_categories, ", ") + ". Recent items:";
  std::size_t listed = 0;
  for (const auto* event : recent) {
    if (listed == 5) break;
    const std::string fragment = (listed == 0 ? " " : "; ") + catalog.item(event->item_id).title;
    if (text.size() + fragment.size() + 1 > kProfileTextBudget) break;  // keep most recent
    text += fragment;
    ++listed;
  }
  text += ".";
  profile.profile_text = clamp_text(text, kProfileTextBudget);
  return profile;
}

AgentProfile build_item_agent_profile(const Catalog& catalog, const RelevantItem& anchor,
                                      const std::string& target_user, const std::string& query) {
  const Item& item = catalog.item(anchor.item_id);  // UnknownItem when missing
  const InteractionHistory& history = get_history(catalog, target_user);
  std::int64_t last_ts = 0;
  bool found = false;
  for (const auto& event : history.events) {
    if (event.item_id == anchor.item_id) {
      found = true;
      last_ts = std::max(last_ts, event.timestamp);
    }
  }
  if (!found) {
    throw Error(ErrorCode::ItemNotInHistory,
                "item '" + anchor.item_id + "' not in history of '" + target_user + "'");
  }

  AgentProfile profile;
  profile.agent_id = "item_agent:" + anchor.item_id;
  profile.role = AgentRole::item_agent;
  profile.subject_id = anchor.item_id;
  profile.evidence = {{"kind", "item_agent"},
                      {"anchor_id", anchor.item_id},
                      {"target_id", target_user},
                      {"relevance", anchor.relevance},
                      {"category", item.category},
                      {"title", item.title},
                      {"interaction_timestamp", last_ts}};

  std::string text = "Item agent for '" + anchor.item_id + "' — '" + item.title + "' (category " +
                     item.category + ").";
  if (!item.attributes.empty()) {
    text += " Attributes:";
    bool first = true;
    for (const auto& [key, value] : item.attributes) {
      const std::string rendered =
          value.is_string() ? value.get<std::string>() : value.dump();
      const std::string fragment = (first ? " " : ", ") + key + "=" + rendered;
      if (text.size() + fragment.size() > kProfileTextBudget - 160) break;
      text += fragment;
      first = false;
    }
    text += ".";
  }
  text += " Target '" + target_user + "' interacted at " + std::to_string(last_ts) +
          ". Query relevance " + format_double(anchor.relevance, 4) + " for '" +
          clamp_text(query, 120) + "'.";
  profile.profile_text = clamp_text(text, kProfileTextBudget);
  return profile;
}

}  // namespace macf
