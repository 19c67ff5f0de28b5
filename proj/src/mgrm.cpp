#include "seea/mgrm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace seea::mgrm {

int label_index(OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::Success: return 0;
    case OutcomeLabel::Continue: return 1;
    case OutcomeLabel::Failure: return 2;
  }
  return 1;
}

OutcomeLabel label_at(int index) {
  switch (index) {
    case 0: return OutcomeLabel::Success;
    case 1: return OutcomeLabel::Continue;
    case 2: return OutcomeLabel::Failure;
  }
  throw std::invalid_argument("label index out of range");
}

policy::Dims reward_model_dims() {
  policy::Dims d;
  d.out = kNumLabels;
  return d;
}

policy::ParamVector init_reward_model(std::uint64_t seed) {
  return policy::init_params(seed, reward_model_dims());
}

Prediction predict(const policy::ParamVector& rm, const AgentState& state,
                   double temperature, Rng* rng) {
  const auto f = policy::encode_context(rm, state, {});
  const auto z = policy::token_logits(rm, f);
  const auto lsm = policy::log_softmax(z);
  Prediction p;
  p.distribution.resize(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) p.distribution[static_cast<std::size_t>(i)] = std::exp(lsm[static_cast<std::size_t>(i)]);
  int pick;
  if (temperature == 0.0) {
    // argmax; exact ties resolved Continue > Failure > Success
    double best = z[0];
    for (int i = 1; i < kNumLabels; ++i) best = std::max(best, z[static_cast<std::size_t>(i)]);
    if (z[1] == best) pick = 1;
    else if (z[2] == best) pick = 2;
    else pick = 0;
  } else {
    if (!rng) throw std::invalid_argument("predict: sampling needs an rng");
    std::vector<double> w(kNumLabels);
    double m = z[0];
    for (int i = 1; i < kNumLabels; ++i) m = std::max(m, z[static_cast<std::size_t>(i)]);
    for (int i = 0; i < kNumLabels; ++i)
      w[static_cast<std::size_t>(i)] = std::exp((z[static_cast<std::size_t>(i)] - m) / temperature);
    pick = static_cast<int>(weighted_index(*rng, w));
  }
  p.label = label_at(pick);
  p.logprob = lsm[static_cast<std::size_t>(pick)];
  return p;
}

double cross_entropy_loss(const policy::ParamVector& rm, const std::vector<LabeledState>& batch) {
  if (batch.empty()) throw std::invalid_argument("cross_entropy_loss: empty batch");
  double loss = 0.0;
  for (const auto& ex : batch) {
    ActionText label_tok;
    label_tok.tokens = {label_index(ex.label)};
    loss -= policy::logprob(rm, ex.state, label_tok).values[0];
  }
  return loss / static_cast<double>(batch.size());
}

policy::ParamVector cross_entropy_grad(const policy::ParamVector& rm,
                                       const std::vector<LabeledState>& batch) {
  if (batch.empty()) throw std::invalid_argument("cross_entropy_grad: empty batch");
  policy::ParamVector grad = policy::make_params(rm.dims);
  const double w = -1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    ActionText label_tok;
    label_tok.tokens = {label_index(ex.label)};
    // grad of -mean log p[label]
    const auto g = policy::grad_logprob(rm, ex.state, label_tok, {1.0});
    policy::axpy(grad, g, w);
  }
  return grad;
}

policy::ParamVector supervised_update(const policy::ParamVector& rm,
                                      const std::vector<LabeledState>& batch, double lr) {
  return optim::sgd_step(rm, cross_entropy_grad(rm, batch), lr);
}

OutcomeLabel majority_vote(const std::vector<OutcomeLabel>& labels) {
  if (labels.empty()) throw std::invalid_argument("majority_vote: empty label list");
  int counts[kNumLabels] = {0, 0, 0};
  for (OutcomeLabel l : labels) counts[label_index(l)] += 1;
  int best = counts[0];
  for (int i = 1; i < kNumLabels; ++i) best = std::max(best, counts[i]);
  int num_best = 0;
  for (int c : counts) num_best += (c == best);
  // any tie resolves by priority Continue > Failure > Success, so the
  // highest-priority label (Continue) always wins a contested vote
  if (num_best > 1) return OutcomeLabel::Continue;
  if (counts[1] == best) return OutcomeLabel::Continue;
  if (counts[2] == best) return OutcomeLabel::Failure;
  return OutcomeLabel::Success;
}

PseudoGtResult ttrl_generate_pseudo_gt(const policy::ParamVector& policy_params,
                                       const policy::ParamVector& rm,
                                       const env::EnvConfig& config, std::uint64_t s0_seed,
                                       int k, Rng& rng) {
  if (k < 3) throw std::invalid_argument("ttrl_generate_pseudo_gt: K must be >= 3");
  auto [world0, obs0] = env::reset(s0_seed, config);
  PseudoGtResult out;
  for (int j = 0; j < k; ++j) {
    env::WorldState world = env::clone(world0);
    AgentState astate;
    astate.initial = obs0.tokens;
    bool done = false;
    while (!done) {
      auto [action, lps] = policy::sample_action(policy_params, astate, 1.0, rng);
      const auto res = env::step(world, action);
      astate.append(action, res.observation.tokens);
      world = res.state;
      done = res.done;
    }
    out.votes.push_back(predict(rm, astate, 0.0).label);
    out.records.push_back({std::move(astate), OutcomeLabel::Continue});
  }
  out.pseudo_label = majority_vote(out.votes);
  for (auto& r : out.records) r.label = out.pseudo_label;
  return out;
}

TtrlResult ttrl_update(const policy::ParamVector& rm, const std::vector<LabeledState>& records,
                       int group_size, const optim::OptimConfig& cfg, Rng& rng) {
  if (records.empty()) throw std::invalid_argument("ttrl_update: no records");
  std::vector<optim::ScalarGroup> groups;
  for (const auto& rec : records) {
    optim::ScalarGroup g;
    g.state = rec.state;
    for (int i = 0; i < group_size; ++i) {
      const Prediction p = predict(rm, rec.state, 1.0, &rng);
      g.labels.push_back(label_index(p.label));
      g.old_logprobs.push_back(p.logprob);
      g.rewards.push_back(p.label == rec.label ? 1.0 : 0.0);
    }
    groups.push_back(std::move(g));
  }
  TtrlResult out;
  out.groups_total = static_cast<int>(groups.size());
  for (const auto& g : groups)
    if (optim::is_valid_group(g.rewards)) out.groups_valid += 1;
  if (out.groups_valid == 0) {
    out.rm = rm;  // all groups degenerate: skip with diagnostic counts
    return out;
  }
  out.rm = optim::grpo_scalar_reward_update(groups, rm, cfg);
  return out;
}

double label_to_reward(OutcomeLabel label, const LabelMapping& mapping) {
  switch (label) {
    case OutcomeLabel::Success: return mapping.success_reward;
    case OutcomeLabel::Continue: return mapping.continue_reward;
    case OutcomeLabel::Failure: return mapping.failure_reward;
  }
  return mapping.continue_reward;
}

mcts::RewardSource make_reward_source(const policy::ParamVector& rm, const LabelMapping& mapping) {
  mcts::RewardSource rs;
  // copies rm by value: published snapshots stay immutable
  rs.step_reward = [rm, mapping](double, bool done, const AgentState& astate,
                                 const env::WorldState&) {
    if (!done) return 0.0;
    return label_to_reward(predict(rm, astate, 0.0).label, mapping);
  };
  return rs;
}

std::string AccuracyReport::to_csv() const {
  std::ostringstream os;
  os << "class,correct,total,percent\n";
  const char* names[kNumLabels] = {"success", "continue", "failure"};
  os.setf(std::ios::fixed);
  os.precision(2);
  for (int i = 0; i < kNumLabels; ++i)
    os << names[i] << "," << per_class[i].correct << "," << per_class[i].total << ","
       << per_class[i].percent() << "\n";
  os << "overall," << overall.correct << "," << overall.total << "," << overall.percent() << "\n";
  return os.str();
}

AccuracyReport eval_accuracy(const policy::ParamVector& rm,
                             const std::vector<LabeledState>& labeled) {
  if (labeled.empty()) throw std::invalid_argument("eval_accuracy: empty set");
  AccuracyReport rep;
  for (const auto& ex : labeled) {
    const int gt = label_index(ex.label);
    const int pred = label_index(predict(rm, ex.state, 0.0).label);
    rep.per_class[gt].total += 1;
    rep.overall.total += 1;
    if (pred == gt) {
      rep.per_class[gt].correct += 1;
      rep.overall.correct += 1;
    }
  }
  return rep;
}

}  // namespace seea::mgrm
