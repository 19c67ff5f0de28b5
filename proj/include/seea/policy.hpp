#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seea/rng.hpp"
#include "seea/types.hpp"

namespace seea::policy {

/// Network shape. The policy uses out == vocab; the reward model reuses the
/// same architecture with out == 3.
struct Dims {
  int vocab = 64;
  int embed = 16;
  int hidden = 32;
  int out = 64;

  bool operator==(const Dims&) const = default;
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Flat parameter array with named segments: embeddings E[V x d], hidden
/// layer W1[d x H] + b1[H], output layer W2[H x out] + b2[out].
struct ParamVector {
  Dims dims;
  std::vector<double> values;
  std::vector<Segment> segments;

  double* seg(const std::string& name);
  const double* seg(const std::string& name) const;
  std::size_t size() const { return values.size(); }
};

ParamVector make_params(const Dims& dims);  // zero-initialized
ParamVector init_params(std::uint64_t seed, const Dims& dims);  // uniform(-0.1, 0.1)

constexpr int kContextWindow = 32;
constexpr int kMaxActionTokens = 8;

struct TokenLogProbs {
  std::vector<double> values;  // one per action token, each <= 0

  double total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

/// Tokens actually fed to the encoder for a given history and action prefix:
/// the instruction, then the most recent history/prefix tokens SEP-joined,
/// clipped to the context window (instruction always kept).
std::vector<TokenId> context_tokens(const AgentState& state, const TokenSeq& prefix,
                                    int window = kContextWindow);

std::vector<double> encode_context(const ParamVector& params, const AgentState& state,
                                   const TokenSeq& prefix);

/// logits = W2 . tanh(W1 . feature + b1) + b2
std::vector<double> token_logits(const ParamVector& params, const std::vector<double>& feature);

std::vector<double> log_softmax(const std::vector<double>& logits);

/// Autoregressive decode up to kMaxActionTokens tokens, stopping at EOS
/// (EOS forced at the cap). Returned log-probs are always the temperature-1
/// model probabilities.
std::pair<ActionText, TokenLogProbs> sample_action(const ParamVector& params,
                                                   const AgentState& state,
                                                   double temperature, Rng& rng);

TokenLogProbs logprob(const ParamVector& params, const AgentState& state,
                      const ActionText& action);

/// Gradient of sum_k weight_k * log pi(token_k | prefix_k) w.r.t. params.
ParamVector grad_logprob(const ParamVector& params, const AgentState& state,
                         const ActionText& action, const std::vector<double>& token_weights);

/// In-place axpy: acc += scale * g. Shapes must match.
void axpy(ParamVector& acc, const ParamVector& g, double scale);

}  // namespace seea::policy
