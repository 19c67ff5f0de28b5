#include "seea/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seea::policy {

namespace {

void check_token(TokenId t, int vocab) {
  if (t < 0 || t >= vocab) throw std::invalid_argument("token id out of range");
}

}  // namespace

double* ParamVector::seg(const std::string& name) {
  for (const auto& s : segments)
    if (s.name == name) return values.data() + s.offset;
  throw std::invalid_argument("unknown segment: " + name);
}

const double* ParamVector::seg(const std::string& name) const {
  return const_cast<ParamVector*>(this)->seg(name);
}

ParamVector make_params(const Dims& dims) {
  ParamVector p;
  p.dims = dims;
  const std::size_t ne = static_cast<std::size_t>(dims.vocab) * dims.embed;
  const std::size_t nw1 = static_cast<std::size_t>(dims.embed) * dims.hidden;
  const std::size_t nb1 = dims.hidden;
  const std::size_t nw2 = static_cast<std::size_t>(dims.hidden) * dims.out;
  const std::size_t nb2 = dims.out;
  std::size_t off = 0;
  auto add = [&](const char* name, std::size_t len) {
    p.segments.push_back({name, off, len});
    off += len;
  };
  add("embed", ne);
  add("w1", nw1);
  add("b1", nb1);
  add("w2", nw2);
  add("b2", nb2);
  p.values.assign(off, 0.0);
  return p;
}

ParamVector init_params(std::uint64_t seed, const Dims& dims) {
  ParamVector p = make_params(dims);
  Rng rng(seed);
  for (double& v : p.values) v = uniform_range(rng, -0.1, 0.1);
  return p;
}

std::vector<TokenId> context_tokens(const AgentState& state, const TokenSeq& prefix, int window) {
  const TokenId sep = Vocabulary::standard().sep;
  std::vector<TokenId> ctx = state.initial;
  std::vector<TokenId> stream;
  for (const auto& [a, o] : state.history) {
    stream.insert(stream.end(), a.begin(), a.end());
    stream.push_back(sep);
    stream.insert(stream.end(), o.begin(), o.end());
    stream.push_back(sep);
  }
  stream.insert(stream.end(), prefix.begin(), prefix.end());
  int budget = window - static_cast<int>(ctx.size()) - 1;
  if (!stream.empty() && budget > 0) {
    ctx.push_back(sep);
    const std::size_t keep = std::min<std::size_t>(stream.size(), static_cast<std::size_t>(budget));
    ctx.insert(ctx.end(), stream.end() - keep, stream.end());
  }
  return ctx;
}

std::vector<double> encode_context(const ParamVector& params, const AgentState& state,
                                   const TokenSeq& prefix) {
  const auto ctx = context_tokens(state, prefix);
  const int d = params.dims.embed;
  std::vector<double> f(d, 0.0);
  if (ctx.empty()) return f;
  const double* E = params.seg("embed");
  for (TokenId t : ctx) {
    check_token(t, params.dims.vocab);
    const double* row = E + static_cast<std::size_t>(t) * d;
    for (int i = 0; i < d; ++i) f[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(ctx.size());
  for (double& x : f) x *= inv;
  return f;
}

std::vector<double> token_logits(const ParamVector& params, const std::vector<double>& feature) {
  const int d = params.dims.embed, H = params.dims.hidden, O = params.dims.out;
  const double* W1 = params.seg("w1");
  const double* b1 = params.seg("b1");
  const double* W2 = params.seg("w2");
  const double* b2 = params.seg("b2");
  std::vector<double> h(H);
  for (int j = 0; j < H; ++j) {
    double u = b1[j];
    for (int i = 0; i < d; ++i) u += feature[i] * W1[static_cast<std::size_t>(i) * H + j];
    h[j] = std::tanh(u);
  }
  std::vector<double> z(O);
  for (int v = 0; v < O; ++v) {
    double s = b2[v];
    for (int j = 0; j < H; ++j) s += h[j] * W2[static_cast<std::size_t>(j) * O + v];
    z[v] = s;
  }
  return z;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::pair<ActionText, TokenLogProbs> sample_action(const ParamVector& params,
                                                   const AgentState& state,
                                                   double temperature, Rng& rng) {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  const TokenId eos = Vocabulary::standard().eos;
  ActionText action;
  TokenLogProbs lps;
  TokenSeq prefix;
  for (int k = 0; k < kMaxActionTokens; ++k) {
    const auto f = encode_context(params, state, prefix);
    const auto z = token_logits(params, f);
    const auto lsm = log_softmax(z);
    TokenId tok;
    if (k == kMaxActionTokens - 1) {
      tok = eos;
    } else if (temperature == 0.0) {
      tok = 0;
      for (int v = 1; v < params.dims.out; ++v)
        if (z[v] > z[tok]) tok = v;
    } else {
      const double m = *std::max_element(z.begin(), z.end());
      std::vector<double> w(z.size());
      for (std::size_t v = 0; v < z.size(); ++v) w[v] = std::exp((z[v] - m) / temperature);
      tok = static_cast<TokenId>(weighted_index(rng, w));
    }
    action.tokens.push_back(tok);
    lps.values.push_back(lsm[tok]);
    if (tok == eos) break;
    prefix.push_back(tok);
  }
  return {action, lps};
}

TokenLogProbs logprob(const ParamVector& params, const AgentState& state,
                      const ActionText& action) {
  TokenLogProbs lps;
  TokenSeq prefix;
  for (TokenId tok : action.tokens) {
    check_token(tok, params.dims.out);
    const auto f = encode_context(params, state, prefix);
    const auto z = token_logits(params, f);
    const auto lsm = log_softmax(z);
    lps.values.push_back(lsm[tok]);
    prefix.push_back(tok);
  }
  return lps;
}

ParamVector grad_logprob(const ParamVector& params, const AgentState& state,
                         const ActionText& action, const std::vector<double>& token_weights) {
  if (token_weights.size() != action.tokens.size())
    throw std::invalid_argument("token_weights size mismatch");
  for (double w : token_weights)
    if (!std::isfinite(w)) throw std::invalid_argument("non-finite token weight");

  const int d = params.dims.embed, H = params.dims.hidden, O = params.dims.out;
  const double* W1 = params.seg("w1");
  const double* b1 = params.seg("b1");
  const double* W2 = params.seg("w2");
  const double* b2 = params.seg("b2");

  ParamVector grad = make_params(params.dims);
  double* gE = grad.seg("embed");
  double* gW1 = grad.seg("w1");
  double* gb1 = grad.seg("b1");
  double* gW2 = grad.seg("w2");
  double* gb2 = grad.seg("b2");

  TokenSeq prefix;
  for (std::size_t k = 0; k < action.tokens.size(); ++k) {
    const TokenId tok = action.tokens[k];
    check_token(tok, O);
    const double w = token_weights[k];
    const auto ctx = context_tokens(state, prefix);
    prefix.push_back(tok);
    if (w == 0.0) continue;

    // forward
    const double* E = params.seg("embed");
    std::vector<double> f(d, 0.0);
    for (TokenId t : ctx) {
      const double* row = E + static_cast<std::size_t>(t) * d;
      for (int i = 0; i < d; ++i) f[i] += row[i];
    }
    const double inv = ctx.empty() ? 0.0 : 1.0 / static_cast<double>(ctx.size());
    for (double& x : f) x *= inv;
    std::vector<double> h(H);
    for (int j = 0; j < H; ++j) {
      double u = b1[j];
      for (int i = 0; i < d; ++i) u += f[i] * W1[static_cast<std::size_t>(i) * H + j];
      h[j] = std::tanh(u);
    }
    std::vector<double> z(O);
    for (int v = 0; v < O; ++v) {
      double s = b2[v];
      for (int j = 0; j < H; ++j) s += h[j] * W2[static_cast<std::size_t>(j) * O + v];
      z[v] = s;
    }
    const auto lsm = log_softmax(z);

    // d(w * logp[tok]) / dz = w * (onehot - softmax)
    std::vector<double> dz(O);
    for (int v = 0; v < O; ++v) dz[v] = -w * std::exp(lsm[v]);
    dz[tok] += w;

    std::vector<double> dh(H, 0.0);
    for (int v = 0; v < O; ++v) {
      gb2[v] += dz[v];
      for (int j = 0; j < H; ++j) {
        gW2[static_cast<std::size_t>(j) * O + v] += h[j] * dz[v];
        dh[j] += W2[static_cast<std::size_t>(j) * O + v] * dz[v];
      }
    }
    std::vector<double> df(d, 0.0);
    for (int j = 0; j < H; ++j) {
      const double du = dh[j] * (1.0 - h[j] * h[j]);
      gb1[j] += du;
      for (int i = 0; i < d; ++i) {
        gW1[static_cast<std::size_t>(i) * H + j] += f[i] * du;
        df[i] += W1[static_cast<std::size_t>(i) * H + j] * du;
      }
    }
    for (TokenId t : ctx) {
      double* row = gE + static_cast<std::size_t>(t) * d;
      for (int i = 0; i < d; ++i) row[i] += inv * df[i];
    }
  }
  return grad;
}

void axpy(ParamVector& acc, const ParamVector& g, double scale) {
  if (acc.values.size() != g.values.size())
    throw std::invalid_argument("param shape mismatch");
  for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += scale * g.values[i];
}

}  // namespace seea::policy
