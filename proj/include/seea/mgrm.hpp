#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seea/env.hpp"
#include "seea/mcts.hpp"
#include "seea/optim.hpp"
#include "seea/policy.hpp"
#include "seea/rng.hpp"
#include "seea/types.hpp"

namespace seea::mgrm {

/// Head order is fixed: 0 = Success, 1 = Continue, 2 = Failure.
constexpr int kNumLabels = 3;

int label_index(OutcomeLabel l);
OutcomeLabel label_at(int index);

policy::Dims reward_model_dims();
policy::ParamVector init_reward_model(std::uint64_t seed);

struct LabelMapping {
  double success_reward = 1.0;
  double failure_reward = -1.0;
  double continue_reward = 0.0;
};

struct Prediction {
  OutcomeLabel label = OutcomeLabel::Continue;
  double logprob = 0.0;
  std::vector<double> distribution;  // 3-way, sums to 1
};

/// Softmax over the 3 outcome heads. Temperature 0 is argmax with ties
/// resolved Continue > Failure > Success.
Prediction predict(const policy::ParamVector& rm, const AgentState& state,
                   double temperature, Rng* rng = nullptr);

struct LabeledState {
  AgentState state;
  OutcomeLabel label = OutcomeLabel::Continue;
};

double cross_entropy_loss(const policy::ParamVector& rm, const std::vector<LabeledState>& batch);
policy::ParamVector cross_entropy_grad(const policy::ParamVector& rm,
                                       const std::vector<LabeledState>& batch);

/// One SGD step on mean cross-entropy over the batch.
policy::ParamVector supervised_update(const policy::ParamVector& rm,
                                      const std::vector<LabeledState>& batch, double lr);

OutcomeLabel majority_vote(const std::vector<OutcomeLabel>& labels);

struct PseudoGtResult {
  std::vector<LabeledState> records;  // K terminal histories, shared pseudo label
  OutcomeLabel pseudo_label = OutcomeLabel::Continue;
  std::vector<OutcomeLabel> votes;
};

/// K temperature-1 policy rollouts from the seeded initial state; the reward
/// model labels each terminal history and the majority vote becomes the
/// pseudo ground truth attached to all K records.
PseudoGtResult ttrl_generate_pseudo_gt(const policy::ParamVector& policy_params,
                                       const policy::ParamVector& rm,
                                       const env::EnvConfig& config, std::uint64_t s0_seed,
                                       int k, Rng& rng);

struct TtrlResult {
  policy::ParamVector rm;
  int groups_total = 0;
  int groups_valid = 0;
};

/// GRPO on (sampled label, +1/0 match-with-pseudo-GT reward) groups.
/// Degenerate groups are filtered; if all are degenerate the parameters are
/// returned unchanged with a diagnostic count.
TtrlResult ttrl_update(const policy::ParamVector& rm, const std::vector<LabeledState>& records,
                       int group_size, const optim::OptimConfig& cfg, Rng& rng);

double label_to_reward(OutcomeLabel label, const LabelMapping& mapping);

/// Reward source for MCTS backup: zero step rewards, reward-model label of
/// the terminal history mapped through `mapping`.
mcts::RewardSource make_reward_source(const policy::ParamVector& rm, const LabelMapping& mapping);

struct ClassAccuracy {
  int correct = 0;
  int total = 0;
  double percent() const { return total ? 100.0 * correct / total : 0.0; }
};

struct AccuracyReport {
  ClassAccuracy per_class[kNumLabels];
  ClassAccuracy overall;
  std::string to_csv() const;  // {class, correct, total, percent} + overall row
};

AccuracyReport eval_accuracy(const policy::ParamVector& rm,
                             const std::vector<LabeledState>& labeled);

}  // namespace seea::mgrm
