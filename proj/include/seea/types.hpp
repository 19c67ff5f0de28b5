#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seea/vocab.hpp"

namespace seea {

enum class OutcomeLabel { Success, Continue, Failure };

inline const char* to_string(OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::Success: return "success";
    case OutcomeLabel::Continue: return "continue";
    case OutcomeLabel::Failure: return "failure";
  }
  return "?";
}

OutcomeLabel outcome_from_string(const std::string& s);

/// A tokenized action as emitted by the policy: 1..T_max tokens, the last
/// one always EOS.
struct ActionText {
  TokenSeq tokens;

  bool operator==(const ActionText& o) const { return tokens == o.tokens; }
  bool operator<(const ActionText& o) const { return tokens < o.tokens; }

  /// Tokens without the trailing EOS, as recorded in histories and parsed
  /// by the environment.
  TokenSeq body() const {
    TokenSeq b = tokens;
    if (!b.empty() && b.back() == Vocabulary::standard().eos) b.pop_back();
    return b;
  }
};

/// Full interaction history: the initial instruction observation plus every
/// (action, observation) pair so far. This is the POMDP-facing state the
/// policy and the reward model condition on.
struct AgentState {
  TokenSeq initial;
  std::vector<std::pair<TokenSeq, TokenSeq>> history;

  void append(const ActionText& a, const TokenSeq& obs) {
    history.emplace_back(a.body(), obs);
  }

  std::size_t depth() const { return history.size(); }

  bool operator==(const AgentState& o) const {
    return initial == o.initial && history == o.history;
  }
};

}  // namespace seea
