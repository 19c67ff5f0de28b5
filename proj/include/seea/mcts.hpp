#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seea/env.hpp"
#include "seea/optim.hpp"
#include "seea/policy.hpp"
#include "seea/rng.hpp"
#include "seea/types.hpp"

namespace seea::mcts {

struct SearchConfig {
  int iterations = 30;
  int max_depth = 30;
  int group_size = 5;        // G candidates per full expansion
  double exploration_c = 1.41421356;
  double gamma = 0.99;
  double p_expand_all = 0.5;
  int path_budget = 5;       // L: full G-expansions per root-to-leaf path
  double expansion_temperature = 1.0;
  // chance each expansion candidate is drawn at a flat (very high)
  // temperature instead; keeps proposals diverse when the policy sharpens
  double p_expand_uniform = 0.0;
  double rollout_temperature = 1.0;
  int rollouts_per_expansion = 1;

  void validate() const;
};

struct EdgeStat {
  ActionText action;
  int n = 0;
  double r_sum = 0.0;
  double q = 0.0;
  int child = -1;  // node id, -1 = unexpanded
};

struct SearchNode {
  int id = -1;
  int parent = -1;
  int parent_edge = -1;
  int depth = 0;
  AgentState agent_state;
  env::WorldState world_state;
  double inbound_reward = 0.0;  // reward observed on the step that created this node
  std::vector<EdgeStat> edges;
  bool fully_expanded = false;
  std::optional<OutcomeLabel> terminal;
  int full_expansions_on_path = 0;  // including this node's own expansion
};

/// Scalar reward the search backs up. GT mode passes environment rewards
/// through; MGRM mode zeroes step rewards and scores terminal histories with
/// the reward model.
struct RewardSource {
  std::function<double(double gt_reward, bool done, const AgentState&, const env::WorldState&)>
      step_reward;

  static RewardSource ground_truth();
};

struct SearchTree {
  std::vector<SearchNode> nodes;
  SearchConfig config;
  int root_id = 0;

  const SearchNode& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }
  SearchNode& node(int id) { return nodes[static_cast<std::size_t>(id)]; }
};

struct PathStep {
  int node_id = -1;   // node the edge leaves from
  int edge_index = -1;
};

/// Trace of one search iteration, for oracle replay in tests.
struct IterationTrace {
  std::vector<PathStep> path;
  std::vector<double> rewards;  // inbound rewards of path nodes ++ rollout rewards
};

double uct_score(const EdgeStat& edge, int parent_visits, double c);

std::vector<PathStep> select(const SearchTree& tree, int from);

double discounted_return(const std::vector<double>& rewards, double gamma);

void backup(SearchTree& tree, const std::vector<PathStep>& path,
            const std::vector<double>& rollout_rewards);

struct RolloutResult {
  std::vector<double> rewards;
  OutcomeLabel label = OutcomeLabel::Continue;
  AgentState final_state;
};

RolloutResult simulate(SearchTree& tree, int node_id, const policy::ParamVector& params,
                       const RewardSource& reward, Rng& rng);

SearchTree run_search(const AgentState& root_agent, const env::WorldState& root_world,
                      const policy::ParamVector& params, const RewardSource& reward,
                      const SearchConfig& config, Rng& rng,
                      std::vector<IterationTrace>* trace = nullptr);

std::vector<optim::ExperienceGroup> extract_experience(const SearchTree& tree,
                                                       const policy::ParamVector& collect_params,
                                                       int min_group_size = 2);

/// One JSONL line per node: id, parent, depth, inbound action, terminal
/// label, and per-edge action/N/Q.
std::string dump_tree(const SearchTree& tree);

}  // namespace seea::mcts
