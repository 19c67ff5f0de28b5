#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "seea/env.hpp"
#include "seea/policy.hpp"
#include "seea/rng.hpp"
#include "seea/vocab.hpp"

using namespace seea;

namespace {

AgentState random_state(std::uint64_t seed, int steps) {
  auto [w, o] = env::reset(seed, env::EnvConfig{});
  AgentState st{o.tokens, {}};
  Rng rng(seed * 31 + 7);
  env::WorldState s = w;
  for (int i = 0; i < steps; ++i) {
    auto acts = env::enumerate_valid_actions(s);
    const auto& a = acts[uniform_index(rng, acts.size())];
    auto r = env::step(s, a);
    st.append(a, r.observation.tokens);
    s = r.state;
    if (r.done) break;
  }
  return st;
}

ActionText mk_action(std::initializer_list<const char*> words) {
  const auto& v = Vocabulary::standard();
  TokenSeq t;
  for (const char* w : words) t.push_back(v.id(w));
  t.push_back(v.id("<eos>"));
  return ActionText{t};
}

}  // namespace

TEST_CASE("zero params give uniform log-probs ln(1/V)") {
  policy::Dims dims;
  auto params = policy::make_params(dims);
  AgentState st = random_state(1, 2);
  auto lp = policy::logprob(params, st, mk_action({"go", "to"}));
  for (double v : lp.values) CHECK(v == doctest::Approx(-std::log(dims.vocab)).epsilon(1e-12));
}

TEST_CASE("softmax normalizes and is shift invariant") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    auto params = policy::init_params(rng(), policy::Dims{});
    AgentState st = random_state(t, 1);
    auto feat = policy::encode_context(params, st, {});
    auto logits = policy::token_logits(params, feat);
    auto ls = policy::log_softmax(logits);
    double sum = 0.0;
    for (double v : ls) sum += std::exp(v);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (double& v : logits) v += 3.25;
    auto ls2 = policy::log_softmax(logits);
    for (std::size_t i = 0; i < ls.size(); ++i)
      CHECK(ls[i] == doctest::Approx(ls2[i]).epsilon(1e-12));
  }
}

TEST_CASE("bag-of-embeddings context is order-free") {
  auto params = policy::init_params(9, policy::Dims{});
  AgentState st = random_state(4, 0);
  auto f1 = policy::encode_context(params, st, {});
  AgentState st2 = st;
  std::reverse(st2.initial.begin(), st2.initial.end());
  auto f2 = policy::encode_context(params, st2, {});
  for (std::size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == doctest::Approx(f2[i]).epsilon(1e-12));
}

TEST_CASE("greedy decode is deterministic and a fixed point") {
  auto params = policy::init_params(17, policy::Dims{});
  AgentState st = random_state(2, 3);
  Rng rng(0);
  auto [a1, lp1] = policy::sample_action(params, st, 0.0, rng);
  auto [a2, lp2] = policy::sample_action(params, st, 0.0, rng);
  CHECK(a1.tokens == a2.tokens);
  CHECK(lp1.total() == doctest::Approx(policy::logprob(params, st, a1).total()).epsilon(1e-12));
  CHECK(a1.tokens.size() <= static_cast<std::size_t>(policy::kMaxActionTokens));
  CHECK(a1.tokens.back() == Vocabulary::standard().id("<eos>"));
}

TEST_CASE("sampled log-probs match logprob() regardless of temperature") {
  auto params = policy::init_params(23, policy::Dims{});
  AgentState st = random_state(6, 2);
  Rng rng(5);
  for (double temp : {0.3, 1.0, 2.0}) {
    auto [a, lp] = policy::sample_action(params, st, temp, rng);
    auto scored = policy::logprob(params, st, a);
    REQUIRE(lp.values.size() == scored.values.size());
    for (std::size_t i = 0; i < lp.values.size(); ++i)
      CHECK(lp.values[i] == doctest::Approx(scored.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("init_params is seed-deterministic with |v| < 0.1") {
  auto a = policy::init_params(99, policy::Dims{});
  auto b = policy::init_params(99, policy::Dims{});
  auto c = policy::init_params(100, policy::Dims{});
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  for (double v : a.values) CHECK(std::abs(v) < 0.1);
}

TEST_CASE("grad_logprob: zero weights, linearity, finite differences") {
  auto params = policy::init_params(7, policy::Dims{});
  AgentState st = random_state(8, 2);
  auto action = mk_action({"put", "the"});

  std::vector<double> zero(action.tokens.size(), 0.0);
  auto gz = policy::grad_logprob(params, st, action, zero);
  for (double v : gz.values) CHECK(v == 0.0);

  std::vector<double> w1(action.tokens.size(), 0.5), w2(action.tokens.size());
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = 0.1 * static_cast<double>(i + 1);
  auto g1 = policy::grad_logprob(params, st, action, w1);
  auto g2 = policy::grad_logprob(params, st, action, w2);
  std::vector<double> w12(w1);
  for (std::size_t i = 0; i < w12.size(); ++i) w12[i] += w2[i];
  auto g12 = policy::grad_logprob(params, st, action, w12);
  for (std::size_t i = 0; i < g12.values.size(); ++i)
    CHECK(g12.values[i] == doctest::Approx(g1.values[i] + g2.values[i]).epsilon(1e-10));

  // central finite differences on random coordinates
  Rng rng(123);
  auto g = policy::grad_logprob(params, st, action, w2);
  const double h = 1e-5;
  int checked = 0;
  for (int k = 0; k < 40; ++k) {
    std::size_t i = uniform_index(rng, params.values.size());
    auto plus = params, minus = params;
    plus.values[i] += h;
    minus.values[i] -= h;
    auto lp_p = policy::logprob(plus, st, action);
    auto lp_m = policy::logprob(minus, st, action);
    double fp = 0.0, fm = 0.0;
    for (std::size_t j = 0; j < w2.size(); ++j) {
      fp += w2[j] * lp_p.values[j];
      fm += w2[j] * lp_m.values[j];
    }
    double fd = (fp - fm) / (2 * h);
    if (std::abs(fd) < 1e-8 && std::abs(g.values[i]) < 1e-8) continue;
    CHECK(std::abs(fd - g.values[i]) / std::max(1e-8, std::abs(fd)) < 1e-4);
    ++checked;
  }
  CHECK(checked > 10);
}
