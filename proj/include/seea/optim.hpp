#pragma once

#include <cstddef>
#include <vector>

#include "seea/policy.hpp"
#include "seea/types.hpp"

namespace seea::optim {

enum class GroupSource { PolicyTree, RewardModelGroup };

/// One (state, candidate actions, process rewards) triple extracted from an
/// MCTS node, plus the per-token log-probs recorded under the collecting
/// policy.
struct ExperienceGroup {
  AgentState state;
  std::vector<ActionText> actions;
  std::vector<double> pr;
  std::vector<std::vector<double>> old_logprobs;
  GroupSource source = GroupSource::PolicyTree;
};

/// Reward-model GRPO group: one pseudo-labeled state, G sampled label
/// "tokens" with their old log-probs and 0/1 match rewards.
struct ScalarGroup {
  AgentState state;
  std::vector<int> labels;
  std::vector<double> old_logprobs;
  std::vector<double> rewards;
};

enum class Optimizer { Sgd, Adam };

struct OptimConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double beta = 0.0;
  double lr0 = 1e-3;  // toy-scale default; the full preset uses 1e-6
  double warmup_ratio = 0.05;
  int batch_size = 128;
  int valid_samples_per_iteration = 512;
  int total_steps = 0;  // for the cosine schedule; set by the runner
  int steps_per_iter = 0;  // 0 = one epoch over the buffer
  Optimizer optimizer = Optimizer::Sgd;

  void validate() const;
};

struct GrpoStats {
  double mean_ratio = 0.0;
  double clip_frac = 0.0;
  double mean_kl = 0.0;
  std::size_t token_count = 0;
};

struct LossAndGrad {
  double loss = 0.0;
  policy::ParamVector grad;
  GrpoStats stats;
};

std::vector<double> group_advantages(const std::vector<double>& pr);
bool is_valid_group(const std::vector<double>& pr);
double importance_ratio(double new_logprob, double old_logprob);
double clipped_token_objective(double rho, double advantage, double eps_low, double eps_high);
double k3_kl(double logp_current, double logp_ref);

/// Clipped surrogate objective with token normalization and per-token k3
/// KL against the reference parameters. Returns the gradient of the negated
/// objective (minimization convention).
LossAndGrad tree_grpo_loss_and_grad(const std::vector<ExperienceGroup>& batch,
                                    const policy::ParamVector& params,
                                    const policy::ParamVector& ref,
                                    const OptimConfig& cfg);

/// Same machinery specialized to 1-token label groups for the reward model.
LossAndGrad scalar_grpo_loss_and_grad(const std::vector<ScalarGroup>& batch,
                                      const policy::ParamVector& rm_params,
                                      const policy::ParamVector& rm_ref,
                                      const OptimConfig& cfg);

/// Filters degenerate groups, computes the scalar GRPO gradient and applies
/// one sgd step at cfg.lr0. Throws if every group is degenerate.
policy::ParamVector grpo_scalar_reward_update(const std::vector<ScalarGroup>& groups,
                                              const policy::ParamVector& rm_params,
                                              const OptimConfig& cfg);

double cosine_lr(int step, int total_steps, double lr0, double warmup_ratio);
policy::ParamVector sgd_step(const policy::ParamVector& params,
                             const policy::ParamVector& grad, double lr);

struct AdamState {
  std::vector<double> m, v;
  int t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

policy::ParamVector adam_step(const policy::ParamVector& params,
                              const policy::ParamVector& grad, double lr, AdamState& state);

}  // namespace seea::optim
