#include "seea/evolve.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace seea::evolve {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Stream tags keep every phase on an independent seed chain, so a run can be
// resumed at any iteration boundary without replaying earlier RNG draws.
constexpr std::uint64_t kTagCollect = 100;
constexpr std::uint64_t kTagCalibrate = 200;
constexpr std::uint64_t kTagTtrl = 300;
constexpr std::uint64_t kTagEval = 400;
constexpr std::uint64_t kTagRmEval = 500;
constexpr std::uint64_t kTagBatch = 600;
constexpr std::uint64_t kTagPolicyInit = 700;
constexpr std::uint64_t kTagRmInit = 701;

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json params_to_json(const policy::ParamVector& p) {
  return json{{"vocab", p.dims.vocab},
              {"embed", p.dims.embed},
              {"hidden", p.dims.hidden},
              {"out", p.dims.out},
              {"values", p.values}};
}

policy::ParamVector params_from_json(const json& j) {
  policy::Dims d{j.at("vocab").get<int>(), j.at("embed").get<int>(), j.at("hidden").get<int>(),
                 j.at("out").get<int>()};
  policy::ParamVector p = policy::make_params(d);
  p.values = j.at("values").get<std::vector<double>>();
  if (p.values.size() != policy::make_params(d).values.size())
    throw std::runtime_error("checkpoint parameter size mismatch");
  return p;
}

mcts::RewardSource reward_source_for(RewardMode mode, const RunState& state,
                                     const mgrm::LabelMapping& mapping) {
  switch (mode) {
    case RewardMode::GroundTruth:
      return mcts::RewardSource::ground_truth();
    case RewardMode::FrozenMGRM:
      return mgrm::make_reward_source(state.rm_initial, mapping);
    case RewardMode::SupervisedMGRM:
    case RewardMode::SelfSupervisedMGRM:
      return mgrm::make_reward_source(state.rm, mapping);
  }
  throw std::logic_error("unreachable reward mode");
}

}  // namespace

const char* to_string(RewardMode m) {
  switch (m) {
    case RewardMode::GroundTruth: return "ground-truth";
    case RewardMode::FrozenMGRM: return "frozen-rm";
    case RewardMode::SupervisedMGRM: return "supervised-rm";
    case RewardMode::SelfSupervisedMGRM: return "selfsup-rm";
  }
  return "?";
}

RewardMode reward_mode_from_string(const std::string& s) {
  if (s == "ground-truth") return RewardMode::GroundTruth;
  if (s == "frozen-rm") return RewardMode::FrozenMGRM;
  if (s == "supervised-rm") return RewardMode::SupervisedMGRM;
  if (s == "selfsup-rm") return RewardMode::SelfSupervisedMGRM;
  throw std::invalid_argument("unknown reward mode '" + s + "'");
}

void RunConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("run.iterations must be >= 0");
  if (eval_episodes <= 0) throw std::invalid_argument("run.eval_episodes must be > 0");
  if (rm_lr <= 0.0) throw std::invalid_argument("rm.lr must be > 0");
  if (rm_supervised_steps <= 0) throw std::invalid_argument("rm.supervised_steps must be > 0");
  if (rm_batch <= 0) throw std::invalid_argument("rm.batch must be > 0");
  if (rm_calibrate_every <= 0) throw std::invalid_argument("rm.calibrate_every must be > 0");
  if (ttrl_k < 3) throw std::invalid_argument("rm.ttrl_k must be >= 3");
  if (ttrl_states <= 0) throw std::invalid_argument("rm.ttrl_states must be > 0");
  if (rm_group_size < 2) throw std::invalid_argument("rm.group_size must be >= 2");
  env.validate();
  search.validate();
  optim.validate();
}

int RunConfig::steps_per_iteration() const {
  if (optim.steps_per_iter > 0) return optim.steps_per_iter;
  return (optim.valid_samples_per_iteration + optim.batch_size - 1) / optim.batch_size;
}

std::string metrics_csv_header() {
  return "iter,success_rate,avg_steps,policy_loss,mean_kl,clip_frac,valid_groups,rm_accuracy,"
         "episodes,aborted";
}

std::string metrics_csv_row(const IterationMetrics& m) {
  std::string out = std::to_string(m.iter);
  out += "," + fmt(m.success_rate);
  out += "," + fmt(m.avg_steps);
  out += "," + fmt(m.policy_loss);
  out += "," + fmt(m.mean_kl);
  out += "," + fmt(m.clip_frac);
  out += "," + std::to_string(m.valid_groups);
  out += "," + fmt(m.rm_accuracy);
  out += "," + std::to_string(m.episodes);
  out += m.aborted ? ",1" : ",0";
  return out;
}

RunState init_run_state(const RunConfig& cfg) {
  RunState s;
  s.policy_params = policy::init_params(derive_seed(cfg.master_seed, kTagPolicyInit),
                                        policy::Dims{});
  s.policy_ref = s.policy_params;
  s.rm = mgrm::init_reward_model(derive_seed(cfg.master_seed, kTagRmInit));
  s.rm_initial = s.rm;
  return s;
}

std::pair<double, double> evaluate_policy(const policy::ParamVector& params,
                                          const env::EnvConfig& env_cfg, int episodes,
                                          std::uint64_t seed_base) {
  int successes = 0;
  long long total_steps = 0;
  for (int e = 0; e < episodes; ++e) {
    auto [world, obs] = env::reset(derive_seed(seed_base, static_cast<std::uint64_t>(e)), env_cfg);
    AgentState astate{obs.tokens, {}};
    Rng rng(derive_seed(seed_base, static_cast<std::uint64_t>(e), 1));
    while (true) {
      auto [action, lp] = policy::sample_action(params, astate, 0.0, rng);
      env::StepResult r = env::step(world, action);
      astate.append(action, r.observation.tokens);
      world = r.state;
      if (r.done) break;
    }
    if (world.goal_reached) ++successes;
    total_steps += world.step_count;
  }
  return {static_cast<double>(successes) / episodes,
          static_cast<double>(total_steps) / episodes};
}

std::vector<mgrm::LabeledState> collect_labeled_states(const policy::ParamVector& params,
                                                       const env::EnvConfig& env_cfg,
                                                       int episodes, std::uint64_t seed_base) {
  std::vector<mgrm::LabeledState> out;
  for (int e = 0; e < episodes; ++e) {
    auto [world, obs] = env::reset(derive_seed(seed_base, static_cast<std::uint64_t>(e)), env_cfg);
    AgentState astate{obs.tokens, {}};
    Rng rng(derive_seed(seed_base, static_cast<std::uint64_t>(e), 1));
    while (true) {
      auto [action, lp] = policy::sample_action(params, astate, 1.0, rng);
      env::StepResult r = env::step(world, action);
      astate.append(action, r.observation.tokens);
      world = r.state;
      out.push_back({astate, env::gt_outcome(world)});
      if (r.done) break;
    }
  }
  return out;
}

IterationMetrics run_iteration(RunState& state, const RunConfig& cfg,
                               std::ostream* train_log) {
  IterationMetrics m;
  m.iter = state.iter;
  const std::uint64_t seed = cfg.master_seed;
  const auto iter_u = static_cast<std::uint64_t>(state.iter);
  const mcts::RewardSource reward = reward_source_for(cfg.reward_mode, state, cfg.label_mapping);

  // -- reward-model maintenance -------------------------------------------
  auto t0 = Clock::now();
  if (cfg.reward_mode == RewardMode::SupervisedMGRM &&
      state.episodes_since_calibration >= cfg.rm_calibrate_every) {
    auto pool = collect_labeled_states(state.policy_params, cfg.env, cfg.rm_batch,
                                       derive_seed(seed, kTagCalibrate, iter_u));
    Rng rng(derive_seed(seed, kTagCalibrate, iter_u, 1));
    for (int s = 0; s < cfg.rm_supervised_steps; ++s) {
      std::vector<mgrm::LabeledState> batch;
      for (int b = 0; b < cfg.rm_batch; ++b)
        batch.push_back(pool[uniform_index(rng, pool.size())]);
      state.rm = mgrm::supervised_update(state.rm, batch, cfg.rm_lr);
    }
    state.episodes_since_calibration = 0;
  }
  if (cfg.reward_mode == RewardMode::SelfSupervisedMGRM) {
    std::vector<mgrm::LabeledState> records;
    Rng rng(derive_seed(seed, kTagTtrl, iter_u));
    for (int s = 0; s < cfg.ttrl_states; ++s) {
      auto pg = mgrm::ttrl_generate_pseudo_gt(state.policy_params, state.rm, cfg.env,
                                              derive_seed(seed, kTagTtrl, iter_u,
                                                          static_cast<std::uint64_t>(s + 1)),
                                              cfg.ttrl_k, rng);
      records.insert(records.end(), pg.records.begin(), pg.records.end());
    }
    optim::OptimConfig rm_cfg = cfg.optim;
    rm_cfg.lr0 = cfg.rm_lr;
    state.rm = mgrm::ttrl_update(state.rm, records, cfg.rm_group_size, rm_cfg, rng).rm;
  }

  // -- experience collection ----------------------------------------------
  std::vector<optim::ExperienceGroup> buffer;
  const int target = cfg.optim.valid_samples_per_iteration;
  const int episode_cap = 10 * target;
  int episodes = 0;
  while (static_cast<int>(buffer.size()) < target && episodes < episode_cap) {
    const auto ep_u = static_cast<std::uint64_t>(episodes);
    auto [world, obs] = env::reset(derive_seed(seed, kTagCollect, iter_u, ep_u), cfg.env);
    AgentState astate{obs.tokens, {}};
    Rng rng(derive_seed(seed, kTagCollect, iter_u, ep_u ^ 0x8000000000000000ULL));
    mcts::SearchTree tree =
        mcts::run_search(astate, world, state.policy_params, reward, cfg.search, rng);
    // Cap the contribution of any one episode so the buffer always mixes
    // several independent episodes.
    const int per_episode_cap = std::max(1, target / 8);
    int taken = 0;
    for (auto& g : mcts::extract_experience(tree, state.policy_params)) {
      if (!optim::is_valid_group(g.pr)) continue;
      buffer.push_back(std::move(g));
      if (++taken >= per_episode_cap) break;
      if (static_cast<int>(buffer.size()) >= target) break;
    }
    ++episodes;
  }
  m.episodes = episodes;
  m.valid_groups = static_cast<int>(buffer.size());
  m.aborted = buffer.empty();
  state.episodes_total += episodes;
  state.episodes_since_calibration += episodes;
  m.secs_collect = seconds_since(t0);

  // -- policy optimization -------------------------------------------------
  t0 = Clock::now();
  if (!buffer.empty()) {
    const int steps = cfg.steps_per_iteration();
    const int total = cfg.optim.total_steps > 0 ? cfg.optim.total_steps
                                                : cfg.iterations * steps;
    Rng rng(derive_seed(seed, kTagBatch, iter_u));
    std::vector<std::size_t> order(buffer.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    std::size_t cursor = 0;
    double loss_sum = 0.0, kl_sum = 0.0, clip_sum = 0.0;
    for (int s = 0; s < steps; ++s) {
      std::vector<optim::ExperienceGroup> batch;
      for (int b = 0; b < cfg.optim.batch_size; ++b) {
        batch.push_back(buffer[order[cursor]]);
        cursor = (cursor + 1) % order.size();
      }
      auto lg = optim::tree_grpo_loss_and_grad(batch, state.policy_params, state.policy_ref,
                                               cfg.optim);
      const double lr = optim::cosine_lr(state.global_step, total, cfg.optim.lr0,
                                         cfg.optim.warmup_ratio);
      if (cfg.optim.optimizer == optim::Optimizer::Adam)
        state.policy_params = optim::adam_step(state.policy_params, lg.grad, lr, state.adam);
      else
        state.policy_params = optim::sgd_step(state.policy_params, lg.grad, lr);
      ++state.global_step;
      loss_sum += lg.loss;
      kl_sum += lg.stats.mean_kl;
      clip_sum += lg.stats.clip_frac;
      if (train_log)
        *train_log << m.iter << ',' << s << ',' << fmt(lr) << ',' << fmt(lg.loss) << ','
                   << fmt(lg.stats.mean_kl) << ',' << fmt(lg.stats.clip_frac) << ','
                   << m.valid_groups << '\n';
    }
    m.policy_loss = loss_sum / steps;
    m.mean_kl = kl_sum / steps;
    m.clip_frac = clip_sum / steps;
  }
  m.secs_train = seconds_since(t0);

  // -- evaluation ----------------------------------------------------------
  t0 = Clock::now();
  std::tie(m.success_rate, m.avg_steps) = evaluate_policy(
      state.policy_params, cfg.env, cfg.eval_episodes, derive_seed(seed, kTagEval, iter_u));
  if (cfg.reward_mode != RewardMode::GroundTruth) {
    const policy::ParamVector& rm =
        cfg.reward_mode == RewardMode::FrozenMGRM ? state.rm_initial : state.rm;
    auto labeled = collect_labeled_states(state.policy_params, cfg.env, cfg.rm_batch,
                                          derive_seed(seed, kTagRmEval, iter_u));
    auto report = mgrm::eval_accuracy(rm, labeled);
    m.rm_accuracy = report.overall.total
                        ? static_cast<double>(report.overall.correct) / report.overall.total
                        : 0.0;
  }
  m.secs_eval = seconds_since(t0);

  ++state.iter;
  return m;
}

void checkpoint_save(const RunState& state, const std::string& config_text,
                     const std::string& path) {
  json j{{"format_version", kCheckpointFormatVersion},
         {"config_text", config_text},
         {"config_hash", fnv1a64(config_text)},
         {"iter", state.iter},
         {"global_step", state.global_step},
         {"episodes_total", state.episodes_total},
         {"episodes_since_calibration", state.episodes_since_calibration},
         {"policy_params", params_to_json(state.policy_params)},
         {"policy_ref", params_to_json(state.policy_ref)},
         {"rm", params_to_json(state.rm)},
         {"rm_initial", params_to_json(state.rm_initial)},
         {"adam", json{{"m", state.adam.m}, {"v", state.adam.v}, {"t", state.adam.t}}}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f << j.dump() << "\n";
}

RunState checkpoint_load(const std::string& path,
                         const std::optional<std::string>& expected_config_text) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
  }
  if (!j.contains("format_version") ||
      j.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint format_version mismatch in " + path);
  if (expected_config_text &&
      fnv1a64(j.at("config_text").get<std::string>()) != fnv1a64(*expected_config_text))
    throw std::runtime_error("checkpoint config hash does not match the requested config");
  RunState s;
  s.iter = j.at("iter").get<int>();
  s.global_step = j.at("global_step").get<int>();
  s.episodes_total = j.at("episodes_total").get<int>();
  s.episodes_since_calibration = j.at("episodes_since_calibration").get<int>();
  s.policy_params = params_from_json(j.at("policy_params"));
  s.policy_ref = params_from_json(j.at("policy_ref"));
  s.rm = params_from_json(j.at("rm"));
  s.rm_initial = params_from_json(j.at("rm_initial"));
  s.adam.m = j.at("adam").at("m").get<std::vector<double>>();
  s.adam.v = j.at("adam").at("v").get<std::vector<double>>();
  s.adam.t = j.at("adam").at("t").get<int>();
  return s;
}

std::vector<IterationMetrics> run(const RunConfig& cfg, const std::string& config_text,
                                  const std::string& resume_checkpoint) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);

  RunState state;
  bool resumed = false;
  if (!resume_checkpoint.empty()) {
    state = checkpoint_load(resume_checkpoint, config_text);
    resumed = true;
  } else {
    state = init_run_state(cfg);
  }

  {
    std::ofstream f(out / "resolved-config.json");
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_text)));
    f << json{{"config_text", config_text}, {"config_hash", hash}}.dump(2) << "\n";
  }

  const fs::path metrics_path = out / "metrics.csv";
  std::ofstream metrics;
  if (resumed && fs::exists(metrics_path)) {
    metrics.open(metrics_path, std::ios::app);
  } else {
    metrics.open(metrics_path);
    metrics << metrics_csv_header() << "\n";
  }
  if (!metrics) throw std::runtime_error("cannot write metrics.csv");

  const fs::path train_log_path = out / "train_log.csv";
  std::ofstream train_log;
  if (resumed && fs::exists(train_log_path)) {
    train_log.open(train_log_path, std::ios::app);
  } else {
    train_log.open(train_log_path);
    train_log << "iter,step,lr,loss,mean_kl,clip_frac,valid_groups\n";
  }
  if (!train_log) throw std::runtime_error("cannot write train_log.csv");

  std::vector<IterationMetrics> all;
  while (state.iter < cfg.iterations) {
    IterationMetrics m = run_iteration(state, cfg, &train_log);
    train_log.flush();
    metrics << metrics_csv_row(m) << "\n";
    metrics.flush();
    checkpoint_save(state, config_text,
                    (out / ("checkpoint-" + std::to_string(m.iter) + ".json")).string());
    checkpoint_save(state, config_text, (out / "checkpoint-latest.json").string());
    std::cout << "iter " << m.iter << " success=" << fmt(m.success_rate)
              << " avg_steps=" << fmt(m.avg_steps) << " loss=" << fmt(m.policy_loss)
              << " groups=" << m.valid_groups << " episodes=" << m.episodes
              << (m.aborted ? " [no-valid-groups]" : "") << " rm_acc=" << fmt(m.rm_accuracy)
              << "  (" << fmt(m.secs_collect) << "s collect, " << fmt(m.secs_train)
              << "s train, " << fmt(m.secs_eval) << "s eval)" << std::endl;
    all.push_back(m);
  }
  return all;
}

}  // namespace seea::evolve
