#include "seea/env.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "seea/rng.hpp"
#include <json.hpp>

namespace seea::env {

namespace {

const Vocabulary& V() { return Vocabulary::standard(); }

// Layout pools, in vocabulary order. The last pool entries are openable.
const std::vector<std::string>& plain_pool() {
  static const std::vector<std::string> p = {"shelf", "table", "counter", "desk", "bed"};
  return p;
}
const std::vector<std::string>& openable_pool() {
  static const std::vector<std::string> p = {"cabinet", "drawer", "box"};
  return p;
}
const std::vector<std::string>& object_pool() {
  static const std::vector<std::string> p = {"apple", "book", "mug", "key", "soap", "towel"};
  return p;
}

constexpr int kMaxObsTokens = 16;
constexpr int kMaxListedObjects = 4;

void append_word(TokenSeq& seq, const char* w) { seq.push_back(V().id(w)); }

TokenSeq see_list(const std::set<TokenId>& contents) {
  TokenSeq out;
  append_word(out, "you");
  append_word(out, "see");
  if (contents.empty()) {
    append_word(out, "nothing");
    return out;
  }
  int n = 0;
  for (TokenId o : contents) {
    if (n++ == kMaxListedObjects) break;
    out.push_back(o);
  }
  return out;
}

bool accessible(const WorldState& s, TokenId r) {
  return !s.is_openable(r) || s.receptacle_open.at(r);
}

}  // namespace

void EnvConfig::validate() const {
  if (num_rooms < 1) throw std::invalid_argument("env: num_rooms must be >= 1");
  if (num_receptacles < 2) throw std::invalid_argument("env: num_receptacles must be >= 2");
  if (num_objects < 1) throw std::invalid_argument("env: num_objects must be >= 1");
  if (num_openable < 0 || num_openable > static_cast<int>(openable_pool().size()))
    throw std::invalid_argument("env: num_openable out of range");
  if (num_receptacles - num_openable > static_cast<int>(plain_pool().size()) ||
      num_receptacles < num_openable)
    throw std::invalid_argument("env: receptacle counts exceed the name pools");
  if (num_objects > static_cast<int>(object_pool().size()))
    throw std::invalid_argument("env: num_objects exceeds the name pool");
  if (max_episode_steps < 1) throw std::invalid_argument("env: max_episode_steps must be >= 1");
  if (task_kinds.empty()) throw std::invalid_argument("env: task_kinds must be non-empty");
  for (TaskKind k : task_kinds)
    if (k == TaskKind::PutTwo && num_objects < 2)
      throw std::invalid_argument("env: PutTwo needs >= 2 objects");
}

bool WorldState::is_object(TokenId o) const {
  if (holding && *holding == o) return true;
  for (const auto& [r, contents] : receptacle_contents)
    if (contents.count(o)) return true;
  return false;
}

bool WorldState::goal_satisfied() const {
  auto it = receptacle_contents.find(task.target_receptacle);
  if (it == receptacle_contents.end()) return false;
  for (TokenId o : task.target_objects)
    if (!it->second.count(o)) return false;
  return true;
}

std::pair<WorldState, Observation> reset(std::uint64_t task_seed, const EnvConfig& config) {
  config.validate();
  WorldState s;
  s.config = config;
  s.rng_seed = task_seed;
  Rng rng(derive_seed(task_seed, 0xe47));

  const int n_plain = config.num_receptacles - config.num_openable;
  for (int i = 0; i < n_plain; ++i) s.rooms.push_back(V().id(plain_pool()[i]));
  for (int i = 0; i < config.num_openable; ++i) s.rooms.push_back(V().id(openable_pool()[i]));
  for (std::size_t i = 0; i < s.rooms.size(); ++i) {
    s.room_of[s.rooms[i]] = static_cast<int>(i) % config.num_rooms;
    s.receptacle_contents[s.rooms[i]] = {};
  }
  for (int i = config.num_receptacles - config.num_openable; i < config.num_receptacles; ++i)
    s.receptacle_open[s.rooms[i]] = !bernoulli(rng, config.p_closed);

  std::vector<TokenId> objects;
  for (int i = 0; i < config.num_objects; ++i) objects.push_back(V().id(object_pool()[i]));
  std::map<TokenId, TokenId> location_of;
  for (TokenId o : objects) {
    TokenId r = s.rooms[uniform_index(rng, s.rooms.size())];
    s.receptacle_contents[r].insert(o);
    location_of[o] = r;
  }

  s.agent_at = s.rooms[uniform_index(rng, s.rooms.size())];
  if (bernoulli(rng, config.p_start_holding)) {
    TokenId o = objects[uniform_index(rng, objects.size())];
    s.receptacle_contents[location_of[o]].erase(o);
    location_of.erase(o);
    s.holding = o;
  }

  // Task selection; resample until the goal is not already satisfied. A held
  // object is always the (first) target: the task is then a delivery.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TaskSpec t;
    t.kind = config.task_kinds[uniform_index(rng, config.task_kinds.size())];
    t.target_receptacle = s.rooms[uniform_index(rng, s.rooms.size())];
    t.target_objects = {s.holding ? *s.holding : objects[uniform_index(rng, objects.size())]};
    if (t.kind == TaskKind::PutTwo) {
      TokenId second = t.target_objects[0];
      while (second == t.target_objects[0]) second = objects[uniform_index(rng, objects.size())];
      t.target_objects.push_back(second);
    }
    s.task = t;
    if (!s.goal_satisfied()) break;
  }

  TaskSpec& t = s.task;
  TokenSeq& instr = t.instruction_tokens;
  append_word(instr, "put");
  append_word(instr, "the");
  instr.push_back(t.target_objects[0]);
  if (t.kind == TaskKind::PutTwo) {
    append_word(instr, "and");
    append_word(instr, "the");
    instr.push_back(t.target_objects[1]);
  }
  append_word(instr, "in");
  append_word(instr, "the");
  instr.push_back(t.target_receptacle);

  Observation obs;
  obs.tokens = instr;
  if (config.location_hint && t.kind == TaskKind::PutSingle) {
    obs.tokens.push_back(V().sep);
    TokenId target = t.target_objects[0];
    if (s.holding && *s.holding == target) {
      append_word(obs.tokens, "you");
      append_word(obs.tokens, "hold");
      append_word(obs.tokens, "the");
      obs.tokens.push_back(target);
    } else {
      append_word(obs.tokens, "the");
      obs.tokens.push_back(target);
      append_word(obs.tokens, "is");
      append_word(obs.tokens, "in");
      append_word(obs.tokens, "the");
      obs.tokens.push_back(location_of.at(target));
    }
  }
  return {s, obs};
}

ParsedAction parse_action(const WorldState& state, const TokenSeq& body) {
  ParsedAction p;
  static const std::vector<std::pair<const char*, ParsedAction::Verb>> verbs = {
      {"go", ParsedAction::Verb::Go},     {"take", ParsedAction::Verb::Take},
      {"put", ParsedAction::Verb::Put},   {"open", ParsedAction::Verb::Open},
      {"close", ParsedAction::Verb::Close}};
  for (TokenId t : body) {
    if (p.verb == ParsedAction::Verb::Invalid) {
      for (const auto& [w, v] : verbs)
        if (t == V().id(w)) {
          p.verb = v;
          break;
        }
    }
    if (p.object < 0 && state.is_object(t)) p.object = t;
    if (state.is_receptacle(t)) {
      if (p.receptacle < 0) p.receptacle = t;
      // a command may name several receptacles; one that is right here wins
      if (t == state.agent_at) p.receptacle = t;
    }
  }
  if (p.verb == ParsedAction::Verb::Invalid) {
    // a bare receptacle name is still an intent: walk over and, if carrying
    // something, set it down there
    if (p.receptacle < 0) return p;
    p.verb = state.holding ? ParsedAction::Verb::Put : ParsedAction::Verb::Go;
  }
  switch (p.verb) {
    case ParsedAction::Verb::Go:
      break;
    case ParsedAction::Verb::Take:
      if (p.object < 0) {
        // bare "take" = take an object from the receptacle the agent is at
        auto it = state.receptacle_contents.find(state.agent_at);
        if (it != state.receptacle_contents.end() && !it->second.empty())
          p.object = *it->second.begin();
      }
      if (p.object < 0) p.verb = ParsedAction::Verb::Invalid;
      break;
    case ParsedAction::Verb::Put:
      // you can only put what you hold, so any stray object words are
      // ignored in favor of the held object; a bare "put" drops it right here
      if (state.holding) p.object = *state.holding;
      if (p.receptacle < 0) p.receptacle = state.agent_at;
      if (p.object < 0) p.verb = ParsedAction::Verb::Invalid;
      break;
    case ParsedAction::Verb::Open:
    case ParsedAction::Verb::Close:
      if (p.receptacle < 0) p.receptacle = state.agent_at;
      break;
    default:
      break;
  }
  return p;
}

const TokenSeq& nothing_happens_tokens() {
  static const TokenSeq t = {V().id("nothing"), V().id("happens")};
  return t;
}

StepResult step(const WorldState& state, const ActionText& action) {
  StepResult res;
  res.state = state;
  WorldState& s = res.state;
  s.step_count += 1;

  const ParsedAction p = parse_action(state, action.body());
  TokenSeq obs;
  bool valid = false;

  switch (p.verb) {
    case ParsedAction::Verb::Go: {
      // "go <recep>" walks straight to the named receptacle; bare "go" walks
      // one station onward along the corridor.
      valid = true;
      TokenId next = p.receptacle;
      if (next < 0 || next == s.agent_at) {
        next = s.rooms.front();
        for (std::size_t i = 0; i < s.rooms.size(); ++i)
          if (s.rooms[i] == s.agent_at) next = s.rooms[(i + 1) % s.rooms.size()];
      }
      s.agent_at = next;
      append_word(obs, "you");
      append_word(obs, "arrive");
      obs.push_back(V().sep);
      if (!accessible(s, next)) {
        append_word(obs, "it");
        append_word(obs, "is");
        append_word(obs, "closed");
      } else {
        TokenSeq list = see_list(s.receptacle_contents.at(next));
        obs.insert(obs.end(), list.begin(), list.end());
      }
      break;
    }
    case ParsedAction::Verb::Open:
      if (s.is_openable(p.receptacle) && p.receptacle == s.agent_at &&
          !s.receptacle_open.at(p.receptacle)) {
        valid = true;
        s.receptacle_open[p.receptacle] = true;
        append_word(obs, "you");
        append_word(obs, "open");
        append_word(obs, "the");
        obs.push_back(p.receptacle);
        obs.push_back(V().sep);
        TokenSeq list = see_list(s.receptacle_contents.at(p.receptacle));
        obs.insert(obs.end(), list.begin(), list.end());
      }
      break;
    case ParsedAction::Verb::Close:
      if (s.is_openable(p.receptacle) && p.receptacle == s.agent_at &&
          s.receptacle_open.at(p.receptacle)) {
        valid = true;
        s.receptacle_open[p.receptacle] = false;
        append_word(obs, "you");
        append_word(obs, "close");
        append_word(obs, "the");
        obs.push_back(p.receptacle);
      }
      break;
    case ParsedAction::Verb::Take:
      if (!s.holding && accessible(s, s.agent_at) &&
          s.receptacle_contents.at(s.agent_at).count(p.object)) {
        valid = true;
        s.receptacle_contents[s.agent_at].erase(p.object);
        s.holding = p.object;
        append_word(obs, "you");
        append_word(obs, "take");
        append_word(obs, "the");
        obs.push_back(p.object);
      }
      break;
    case ParsedAction::Verb::Put:
      if (s.holding && *s.holding == p.object) {
        if (p.receptacle == s.agent_at && accessible(s, p.receptacle)) {
          valid = true;
          s.receptacle_contents[p.receptacle].insert(p.object);
          s.holding.reset();
          append_word(obs, "you");
          append_word(obs, "put");
          append_word(obs, "the");
          obs.push_back(p.object);
          append_word(obs, "in");
          append_word(obs, "the");
          obs.push_back(p.receptacle);
        } else if (p.receptacle != s.agent_at) {
          // "put X in R" is a macro: when the agent is not yet at R it first
          // walks over to R, and places the object on a later put.
          valid = true;
          s.agent_at = p.receptacle;
          append_word(obs, "you");
          append_word(obs, "move");
          append_word(obs, "on");
          obs.push_back(V().sep);
          if (accessible(s, p.receptacle)) {
            TokenSeq list = see_list(s.receptacle_contents.at(p.receptacle));
            obs.insert(obs.end(), list.begin(), list.end());
          } else {
            append_word(obs, "it");
            append_word(obs, "is");
            append_word(obs, "closed");
          }
        }
      }
      break;
    case ParsedAction::Verb::Invalid:
      break;
  }

  if (!valid) {
    res.state = state;
    res.state.step_count = state.step_count + 1;
    obs = nothing_happens_tokens();
  }
  WorldState& out = res.state;

  if (!out.goal_reached && out.goal_satisfied()) {
    out.goal_reached = true;
    res.gt_reward = 1.0;
    obs.push_back(V().sep);
    append_word(obs, "you");
    append_word(obs, "won");
  }
  res.done = out.goal_reached || out.step_count >= out.config.max_episode_steps;
  if (res.done && !out.goal_reached) {
    obs.push_back(V().sep);
    append_word(obs, "time");
    append_word(obs, "is");
    append_word(obs, "up");
  }
  if (static_cast<int>(obs.size()) > kMaxObsTokens)
    obs.resize(kMaxObsTokens);
  res.observation.tokens = std::move(obs);
  return res;
}

OutcomeLabel gt_outcome(const WorldState& state) {
  if (state.goal_reached || state.goal_satisfied()) return OutcomeLabel::Success;
  if (state.step_count >= state.config.max_episode_steps) return OutcomeLabel::Failure;
  return OutcomeLabel::Continue;
}

WorldState clone(const WorldState& state) { return state; }

std::vector<ActionText> enumerate_valid_actions(const WorldState& state) {
  std::vector<ActionText> out;
  auto mk = [](std::initializer_list<TokenId> toks) {
    ActionText a;
    a.tokens.assign(toks);
    a.tokens.push_back(V().eos);
    return a;
  };
  const TokenId tok_go = V().id("go"), tok_to = V().id("to"), tok_the = V().id("the");
  const TokenId tok_open = V().id("open"), tok_close = V().id("close");
  const TokenId tok_take = V().id("take"), tok_put = V().id("put"), tok_in = V().id("in");
  for (TokenId r : state.rooms) out.push_back(mk({tok_go, tok_to, tok_the, r}));
  const TokenId at = state.agent_at;
  if (state.is_openable(at)) {
    if (!state.receptacle_open.at(at)) out.push_back(mk({tok_open, tok_the, at}));
    else out.push_back(mk({tok_close, tok_the, at}));
  }
  if (accessible(state, at)) {
    if (!state.holding)
      for (TokenId o : state.receptacle_contents.at(at))
        out.push_back(mk({tok_take, tok_the, o}));
  }
  if (state.holding)
    for (TokenId r : state.rooms)
      if (r != at || accessible(state, at))
        out.push_back(mk({tok_put, tok_the, *state.holding, tok_in, tok_the, r}));
  return out;
}

OutcomeLabel outcome_from_string_impl(const std::string& s) {
  if (s == "success") return OutcomeLabel::Success;
  if (s == "continue") return OutcomeLabel::Continue;
  if (s == "failure") return OutcomeLabel::Failure;
  throw std::invalid_argument("unknown outcome label: " + s);
}

std::string replay_record(int t, const ActionText& action, const Observation& obs,
                          double reward, bool done) {
  nlohmann::json j;
  j["t"] = t;
  std::vector<std::string> a, o;
  for (TokenId x : action.tokens) a.push_back(V().str(x));
  for (TokenId x : obs.tokens) o.push_back(V().str(x));
  j["action_tokens"] = a;
  j["observation_tokens"] = o;
  j["reward"] = reward;
  j["done"] = done;
  return j.dump();
}

}  // namespace seea::env

namespace seea {
OutcomeLabel outcome_from_string(const std::string& s) {
  return env::outcome_from_string_impl(s);
}
}  // namespace seea
