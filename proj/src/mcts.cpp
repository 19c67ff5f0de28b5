#include "seea/mcts.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace seea::mcts {

void SearchConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("search: iterations must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("search: gamma in (0,1]");
  if (p_expand_all < 0.0 || p_expand_all > 1.0)
    throw std::invalid_argument("search: p_expand_all in [0,1]");
  if (p_expand_uniform < 0.0 || p_expand_uniform > 1.0)
    throw std::invalid_argument("search: p_expand_uniform in [0,1]");
  if (path_budget < 1) throw std::invalid_argument("search: path_budget must be >= 1");
  if (group_size < 2) throw std::invalid_argument("search: group_size must be >= 2");
  if (max_depth < 1) throw std::invalid_argument("search: max_depth must be >= 1");
  if (rollouts_per_expansion < 1)
    throw std::invalid_argument("search: rollouts_per_expansion must be >= 1");
}

RewardSource RewardSource::ground_truth() {
  RewardSource rs;
  rs.step_reward = [](double gt, bool, const AgentState&, const env::WorldState&) { return gt; };
  return rs;
}

double uct_score(const EdgeStat& edge, int parent_visits, double c) {
  if (parent_visits < 1) throw std::invalid_argument("uct_score: parent_visits must be >= 1");
  return edge.q + c * std::sqrt(std::log(static_cast<double>(parent_visits)) /
                                (1.0 + static_cast<double>(edge.n)));
}

namespace {

int parent_visits_of(const SearchTree& tree, const SearchNode& node) {
  if (node.parent < 0) {
    int total = 0;
    for (const auto& e : node.edges) total += e.n;
    return std::max(1, total);
  }
  return std::max(1, tree.node(node.parent).edges[static_cast<std::size_t>(node.parent_edge)].n);
}

int argmax_uct(const SearchTree& tree, const SearchNode& node) {
  const int pv = parent_visits_of(tree, node);
  int best = 0;
  double best_score = uct_score(node.edges[0], pv, tree.config.exploration_c);
  for (std::size_t i = 1; i < node.edges.size(); ++i) {
    const double s = uct_score(node.edges[i], pv, tree.config.exploration_c);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// Draw up to `want` candidate actions distinct from `existing`, resampling
// duplicates up to 3*G total attempts.
std::vector<ActionText> sample_candidates(const SearchNode& node, int want,
                                          const policy::ParamVector& params,
                                          const SearchConfig& cfg, Rng& rng,
                                          const std::vector<EdgeStat>& existing) {
  std::set<TokenSeq> seen;
  for (const auto& e : existing) seen.insert(e.action.tokens);
  std::vector<ActionText> out;
  const int attempts = 3 * cfg.group_size;
  for (int a = 0; a < attempts && static_cast<int>(out.size()) < want; ++a) {
    const double temp = bernoulli(rng, cfg.p_expand_uniform)
                            ? 1.0e6
                            : cfg.expansion_temperature;
    auto [action, lps] = policy::sample_action(params, node.agent_state, temp, rng);
    if (seen.insert(action.tokens).second) out.push_back(std::move(action));
  }
  return out;
}

// Creates a node reached by executing `action` from `parent`. Applies the
// probabilistic-expansion / path-budget rule for the new node's candidates.
int create_node(SearchTree& tree, int parent_id, int edge_index,
                const policy::ParamVector& params, const RewardSource& reward,
                Rng& rng) {
  auto& parent = tree.node(parent_id);
  const ActionText action = parent.edges[static_cast<std::size_t>(edge_index)].action;
  const auto res = env::step(parent.world_state, action);

  SearchNode node;
  node.id = static_cast<int>(tree.nodes.size());
  node.parent = parent_id;
  node.parent_edge = edge_index;
  node.depth = parent.depth + 1;
  node.agent_state = parent.agent_state;
  node.agent_state.append(action, res.observation.tokens);
  node.world_state = res.state;
  node.inbound_reward = reward.step_reward(res.gt_reward, res.done, node.agent_state, res.state);
  node.full_expansions_on_path = parent.full_expansions_on_path;

  if (res.done || node.depth >= tree.config.max_depth) {
    node.terminal = env::gt_outcome(res.state);
    node.fully_expanded = true;
  } else {
    const bool budget_ok = node.full_expansions_on_path < tree.config.path_budget;
    const bool full = budget_ok && bernoulli(rng, tree.config.p_expand_all);
    const int want = full ? tree.config.group_size : 1;
    auto cands = sample_candidates(node, want, params, tree.config, rng, {});
    for (auto& a : cands) {
      EdgeStat e;
      e.action = std::move(a);
      node.edges.push_back(std::move(e));
    }
    if (full) {
      node.full_expansions_on_path += 1;
      node.fully_expanded = true;
    }
  }
  const int id = node.id;
  tree.nodes.push_back(std::move(node));
  tree.node(parent_id).edges[static_cast<std::size_t>(edge_index)].child = id;
  return id;
}

}  // namespace

std::vector<PathStep> select(const SearchTree& tree, int from) {
  std::vector<PathStep> path;
  int cur = from;
  while (true) {
    const SearchNode& node = tree.node(cur);
    if (node.terminal || !node.fully_expanded || node.edges.empty()) break;
    const int i = argmax_uct(tree, node);
    path.push_back({cur, i});
    const int child = node.edges[static_cast<std::size_t>(i)].child;
    if (child < 0) break;
    cur = child;
  }
  return path;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("discounted_return: bad gamma");
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) acc = rewards[k] + gamma * acc;
  return acc;
}

void backup(SearchTree& tree, const std::vector<PathStep>& path,
            const std::vector<double>& rollout_rewards) {
  // rewards along the path: inbound reward of each edge's child node,
  // then the rollout rewards.
  std::vector<double> rewards;
  for (const auto& step : path) {
    const int child = tree.node(step.node_id).edges[static_cast<std::size_t>(step.edge_index)].child;
    rewards.push_back(tree.node(child).inbound_reward);
  }
  rewards.insert(rewards.end(), rollout_rewards.begin(), rollout_rewards.end());

  // suffix discounted returns: ret_t = r_t + gamma * ret_{t+1}
  std::vector<double> ret(rewards.size() + 1, 0.0);
  for (std::size_t k = rewards.size(); k-- > 0;)
    ret[k] = rewards[k] + tree.config.gamma * ret[k + 1];

  for (std::size_t t = 0; t < path.size(); ++t) {
    auto& e = tree.node(path[t].node_id).edges[static_cast<std::size_t>(path[t].edge_index)];
    e.n += 1;
    e.r_sum += ret[t];
    e.q = e.r_sum / static_cast<double>(e.n);
  }
}

RolloutResult simulate(SearchTree& tree, int node_id, const policy::ParamVector& params,
                       const RewardSource& reward, Rng& rng) {
  const SearchNode& node = tree.node(node_id);
  RolloutResult out;
  env::WorldState world = env::clone(node.world_state);
  AgentState astate = node.agent_state;
  int depth = node.depth;
  bool done = false;
  while (depth < tree.config.max_depth && !done) {
    auto [action, lps] = policy::sample_action(params, astate, tree.config.rollout_temperature, rng);
    const auto res = env::step(world, action);
    astate.append(action, res.observation.tokens);
    world = res.state;
    done = res.done;
    out.rewards.push_back(reward.step_reward(res.gt_reward, res.done, astate, world));
    ++depth;
  }
  out.label = env::gt_outcome(world);
  out.final_state = std::move(astate);
  return out;
}

SearchTree run_search(const AgentState& root_agent, const env::WorldState& root_world,
                      const policy::ParamVector& params, const RewardSource& reward,
                      const SearchConfig& config, Rng& rng,
                      std::vector<IterationTrace>* trace) {
  config.validate();
  SearchTree tree;
  tree.config = config;

  SearchNode root;
  root.id = 0;
  root.depth = 0;
  root.agent_state = root_agent;
  root.world_state = root_world;
  {
    const bool full = bernoulli(rng, config.p_expand_all);
    const int want = full ? config.group_size : 1;
    auto cands = sample_candidates(root, want, params, config, rng, {});
    for (auto& a : cands) {
      EdgeStat e;
      e.action = std::move(a);
      root.edges.push_back(std::move(e));
    }
    if (full) {
      root.full_expansions_on_path = 1;
      root.fully_expanded = true;
    }
  }
  tree.nodes.push_back(std::move(root));

  for (int it = 0; it < config.iterations; ++it) {
    std::vector<PathStep> path;
    int cur = tree.root_id;
    bool dangling = false;
    // selection, with one-candidate growth at partially expanded nodes
    while (true) {
      SearchNode& node = tree.node(cur);
      if (node.terminal) break;
      if (!node.fully_expanded) {
        // deferred growth stops one short of a full expansion so the path
        // budget stays a creation-time property
        if (static_cast<int>(node.edges.size()) >= config.group_size - 1) {
          node.fully_expanded = true;
        } else {
          auto extra = sample_candidates(node, 1, params, config, rng, node.edges);
          if (extra.empty()) {
            node.fully_expanded = true;
          } else {
            EdgeStat e;
            e.action = std::move(extra[0]);
            node.edges.push_back(std::move(e));
            path.push_back({cur, static_cast<int>(node.edges.size()) - 1});
            dangling = true;
            break;
          }
        }
      }
      if (node.edges.empty()) break;  // no candidates could be drawn at all
      const int i = argmax_uct(tree, node);
      path.push_back({cur, i});
      const int child = node.edges[static_cast<std::size_t>(i)].child;
      if (child < 0) {
        dangling = true;
        break;
      }
      cur = child;
    }

    if (!dangling) {
      // terminal (or candidate-less) leaf: back the path rewards up as-is
      backup(tree, path, {});
      if (trace) {
        IterationTrace t;
        t.path = path;
        for (const auto& s : path)
          t.rewards.push_back(
              tree.node(tree.node(s.node_id).edges[static_cast<std::size_t>(s.edge_index)].child)
                  .inbound_reward);
        trace->push_back(std::move(t));
      }
      continue;
    }

    const int nid = create_node(tree, path.back().node_id, path.back().edge_index, params,
                                reward, rng);
    const bool terminal = tree.node(nid).terminal.has_value();
    const int rollouts = terminal ? 1 : config.rollouts_per_expansion;
    for (int j = 0; j < rollouts; ++j) {
      std::vector<double> rollout_rewards;
      if (!terminal) {
        auto r = simulate(tree, nid, params, reward, rng);
        rollout_rewards = std::move(r.rewards);
      }
      backup(tree, path, rollout_rewards);
      if (trace) {
        IterationTrace t;
        t.path = path;
        for (const auto& s : path)
          t.rewards.push_back(
              tree.node(tree.node(s.node_id).edges[static_cast<std::size_t>(s.edge_index)].child)
                  .inbound_reward);
        t.rewards.insert(t.rewards.end(), rollout_rewards.begin(), rollout_rewards.end());
        trace->push_back(std::move(t));
      }
    }
  }
  return tree;
}

std::vector<optim::ExperienceGroup> extract_experience(const SearchTree& tree,
                                                       const policy::ParamVector& collect_params,
                                                       int min_group_size) {
  std::vector<optim::ExperienceGroup> out;
  for (const auto& node : tree.nodes) {
    if (node.terminal) continue;
    std::vector<const EdgeStat*> visited;
    for (const auto& e : node.edges)
      if (e.n >= 1) visited.push_back(&e);
    if (static_cast<int>(visited.size()) < min_group_size) continue;
    optim::ExperienceGroup g;
    g.state = node.agent_state;
    g.source = optim::GroupSource::PolicyTree;
    for (const EdgeStat* e : visited) {
      g.actions.push_back(e->action);
      g.pr.push_back(e->q);
      g.old_logprobs.push_back(policy::logprob(collect_params, node.agent_state, e->action).values);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::string dump_tree(const SearchTree& tree) {
  const auto& V = Vocabulary::standard();
  std::string out;
  for (const auto& node : tree.nodes) {
    nlohmann::json j;
    j["id"] = node.id;
    j["parent"] = node.parent;
    j["depth"] = node.depth;
    if (node.parent >= 0) {
      std::vector<std::string> a;
      for (TokenId t : tree.node(node.parent)
                           .edges[static_cast<std::size_t>(node.parent_edge)]
                           .action.tokens)
        a.push_back(V.str(t));
      j["action"] = a;
    }
    j["terminal"] = node.terminal ? to_string(*node.terminal) : "";
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : node.edges) {
      nlohmann::json je;
      std::vector<std::string> a;
      for (TokenId t : e.action.tokens) a.push_back(V.str(t));
      je["action"] = a;
      je["n"] = e.n;
      je["q"] = e.q;
      je["r_sum"] = e.r_sum;
      je["child"] = e.child;
      edges.push_back(std::move(je));
    }
    j["edges"] = std::move(edges);
    out += j.dump();
    out += "\n";
  }
  return out;
}

}  // namespace seea::mcts
