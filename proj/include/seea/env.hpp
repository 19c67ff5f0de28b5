#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seea/types.hpp"
#include "seea/vocab.hpp"

namespace seea::env {

enum class TaskKind { PutSingle, PutTwo };

struct EnvConfig {
  int num_rooms = 2;
  int num_receptacles = 8;
  int num_openable = 3;
  int num_objects = 6;
  int max_episode_steps = 30;
  double p_start_holding = 1.0;   // chance the agent starts carrying the target
  double p_closed = 0.0;          // chance each openable receptacle starts closed
  bool location_hint = true;      // initial observation names the target's location
  std::vector<TaskKind> task_kinds = {TaskKind::PutSingle};

  void validate() const;  // throws std::invalid_argument on bad sizes

  bool operator==(const EnvConfig&) const = default;
};

struct TaskSpec {
  TaskKind kind = TaskKind::PutSingle;
  std::vector<TokenId> target_objects;  // 1 or 2 object tokens
  TokenId target_receptacle = -1;
  TokenSeq instruction_tokens;

  bool operator==(const TaskSpec& o) const {
    return kind == o.kind && target_objects == o.target_objects &&
           target_receptacle == o.target_receptacle &&
           instruction_tokens == o.instruction_tokens;
  }
};

struct Observation {
  TokenSeq tokens;
  bool operator==(const Observation& o) const { return tokens == o.tokens; }
};

/// Fully deterministic world state. Receptacles and objects are identified
/// by their vocabulary token ids. A value type: copy = clone.
struct WorldState {
  std::vector<TokenId> rooms;  // receptacle ids in layout order
  std::map<TokenId, int> room_of;
  std::map<TokenId, std::set<TokenId>> receptacle_contents;
  std::map<TokenId, bool> receptacle_open;  // openable receptacles only
  TokenId agent_at = -1;
  std::optional<TokenId> holding;
  int step_count = 0;
  bool goal_reached = false;
  TaskSpec task;
  std::uint64_t rng_seed = 0;

  EnvConfig config;

  bool is_openable(TokenId r) const { return receptacle_open.count(r) > 0; }
  bool is_receptacle(TokenId r) const { return room_of.count(r) > 0; }
  bool is_object(TokenId o) const;
  bool goal_satisfied() const;

  bool operator==(const WorldState&) const = default;
};

struct StepResult {
  WorldState state;
  Observation observation;
  double gt_reward = 0.0;
  bool done = false;
};

/// Canonical household action, the result of parsing an ActionText.
struct ParsedAction {
  enum class Verb { Go, Take, Put, Open, Close, Invalid } verb = Verb::Invalid;
  TokenId object = -1;
  TokenId receptacle = -1;
};

std::pair<WorldState, Observation> reset(std::uint64_t task_seed, const EnvConfig& config);
StepResult step(const WorldState& state, const ActionText& action);
OutcomeLabel gt_outcome(const WorldState& state);
WorldState clone(const WorldState& state);
std::vector<ActionText> enumerate_valid_actions(const WorldState& state);

/// Best-effort extraction of (verb, object, receptacle) from a token soup.
/// The first verb token selects the verb; the first object/receptacle tokens
/// fill the slots; missing put/open/close arguments default to the held
/// object and the agent's current receptacle.
ParsedAction parse_action(const WorldState& state, const TokenSeq& body);

/// The exact token sequence returned for invalid actions.
const TokenSeq& nothing_happens_tokens();

/// One JSONL replay record: {t, action_tokens, observation_tokens, reward, done}.
std::string replay_record(int t, const ActionText& action, const Observation& obs,
                          double reward, bool done);

}  // namespace seea::env
