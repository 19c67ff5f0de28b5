#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seea/env.hpp"
#include "seea/mcts.hpp"
#include "seea/mgrm.hpp"
#include "seea/optim.hpp"
#include "seea/policy.hpp"

namespace seea {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace seea

namespace seea::evolve {

enum class RewardMode { GroundTruth, FrozenMGRM, SupervisedMGRM, SelfSupervisedMGRM };

const char* to_string(RewardMode m);
RewardMode reward_mode_from_string(const std::string& s);

struct RunConfig {
  RewardMode reward_mode = RewardMode::GroundTruth;
  int iterations = 10;
  int eval_episodes = 100;
  std::uint64_t master_seed = 1;
  std::string out_dir = "out";
  bool dump_experience = false;

  // reward-model training
  double rm_lr = 0.05;
  int rm_supervised_steps = 40;  // CE minibatch steps per calibration
  int rm_batch = 32;
  int rm_calibrate_every = 500;  // episodes between GT calibrations
  int ttrl_k = 10;               // rollouts per initial state for pseudo-GT
  int ttrl_states = 8;           // initial states per iteration for TTRL
  int rm_group_size = 10;
  mgrm::LabelMapping label_mapping;

  env::EnvConfig env;
  mcts::SearchConfig search;
  optim::OptimConfig optim;

  void validate() const;
  int steps_per_iteration() const;  // optimizer steps the schedule plans per iteration
};

struct IterationMetrics {
  int iter = 0;
  double success_rate = 0.0;
  double avg_steps = 0.0;
  double policy_loss = 0.0;
  double mean_kl = 0.0;
  double clip_frac = 0.0;
  int valid_groups = 0;
  double rm_accuracy = 0.0;  // fraction in [0,1]
  int episodes = 0;
  bool aborted = false;

  // wall-clock per phase; reported on the console, never in metrics.csv so
  // identical runs stay byte-identical
  double secs_collect = 0.0, secs_train = 0.0, secs_eval = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const IterationMetrics& m);

struct RunState {
  policy::ParamVector policy_params;
  policy::ParamVector policy_ref;  // frozen initial policy (KL reference)
  policy::ParamVector rm;
  policy::ParamVector rm_initial;  // frozen-MGRM arm uses this throughout
  int iter = 0;
  int global_step = 0;
  int episodes_total = 0;
  int episodes_since_calibration = 1 << 28;  // large so the first iteration calibrates
  optim::AdamState adam;
};

RunState init_run_state(const RunConfig& cfg);

/// One data-evolution + model-evolution iteration. When `train_log` is given,
/// a CSV row {iter, step, lr, loss, mean_kl, clip_frac, valid_groups} is
/// appended per optimizer step.
IterationMetrics run_iteration(RunState& state, const RunConfig& cfg,
                               std::ostream* train_log = nullptr);

std::pair<double, double> evaluate_policy(const policy::ParamVector& params,
                                          const env::EnvConfig& env_cfg, int episodes,
                                          std::uint64_t seed_base);

/// Labeled (history, GT outcome) states harvested from temperature-1
/// rollouts; used for supervised MGRM training and accuracy reporting.
std::vector<mgrm::LabeledState> collect_labeled_states(const policy::ParamVector& params,
                                                       const env::EnvConfig& env_cfg,
                                                       int episodes, std::uint64_t seed_base);

inline constexpr int kCheckpointFormatVersion = 1;

void checkpoint_save(const RunState& state, const std::string& config_text,
                     const std::string& path);
RunState checkpoint_load(const std::string& path,
                         const std::optional<std::string>& expected_config_text);

/// Full self-evolution loop: writes metrics.csv, resolved-config.txt and one
/// checkpoint per iteration under cfg.out_dir.
std::vector<IterationMetrics> run(const RunConfig& cfg, const std::string& config_text,
                                  const std::string& resume_checkpoint = "");

}  // namespace seea::evolve
