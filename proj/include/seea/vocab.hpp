#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace seea {

using TokenId = int;
using TokenSeq = std::vector<TokenId>;

/// Shared fixed vocabulary for the environment, the policy and the reward
/// model. Token ids are stable for the whole run.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::map<std::string, TokenId> index;
  TokenId bos = -1, eos = -1, sep = -1;

  int size() const { return static_cast<int>(tokens.size()); }

  TokenId id(const std::string& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw std::invalid_argument("unknown token: " + s);
    return it->second;
  }

  bool contains(const std::string& s) const { return index.count(s) > 0; }

  const std::string& str(TokenId t) const {
    if (t < 0 || t >= size()) throw std::invalid_argument("token id out of range");
    return tokens[static_cast<std::size_t>(t)];
  }

  TokenSeq encode(const std::vector<std::string>& words) const {
    TokenSeq out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(id(w));
    return out;
  }

  std::string decode(const TokenSeq& seq, const std::string& joiner = " ") const {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out += joiner;
      out += str(seq[i]);
    }
    return out;
  }

  /// The standard 64-token vocabulary used everywhere.
  static const Vocabulary& standard();
};

}  // namespace seea
