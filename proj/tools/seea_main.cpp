// seea: train / eval / rm-eval / inspect-tree / validate-config front end.
#include <CLI11.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "seea/config.hpp"
#include "seea/evolve.hpp"
#include "seea/mcts.hpp"
#include "seea/mgrm.hpp"
#include "seea/vocab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
  std::string config_file;
  std::string preset = "default";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "config file (sectioned key = value)");
  cmd->add_option("--preset", o.preset, "base preset: default|fast|full")
      ->check(CLI::IsMember({"default", "fast", "full"}));
  cmd->add_option("--seed", o.seed, "master seed override");
}

seea::evolve::RunConfig resolve(const CommonOpts& o) {
  seea::evolve::RunConfig cfg = o.config_file.empty()
                                    ? seea::config::preset_by_name(o.preset)
                                    : seea::config::load_config_file(o.config_file);
  seea::config::apply_env_overrides(cfg);
  if (o.seed) cfg.master_seed = *o.seed;
  return cfg;
}

void print_resolved(const seea::evolve::RunConfig& cfg) {
  std::cout << seea::config::serialize_config(cfg);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(seea::config::config_hash(cfg)));
  std::cout << "# config_hash = " << buf << "\n";
}

seea::evolve::RunState state_for(const std::string& checkpoint,
                                 const seea::evolve::RunConfig& cfg) {
  if (checkpoint.empty()) return seea::evolve::init_run_state(cfg);
  try {
    return seea::evolve::checkpoint_load(checkpoint, std::nullopt);
  } catch (const std::exception& e) {
    // A checkpoint the user pointed at but that cannot be loaded is a usage
    // error, not a runtime failure.
    throw seea::config::ConfigError(std::string("bad checkpoint: ") + e.what(), 0, "");
  }
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

seea::OutcomeLabel label_from_string(const std::string& s) {
  if (s == "success") return seea::OutcomeLabel::Success;
  if (s == "continue") return seea::OutcomeLabel::Continue;
  if (s == "failure") return seea::OutcomeLabel::Failure;
  throw std::invalid_argument("unknown label '" + s + "'");
}

seea::TokenSeq encode_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return seea::Vocabulary::standard().encode(words);
}

// One JSONL record per line:
//   {"initial": "<tokens>", "history": [["<action>", "<obs>"], ...],
//    "label": "success" | "continue" | "failure"}
std::vector<seea::mgrm::LabeledState> load_labeled_set(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw seea::config::ConfigError("cannot read labeled set: " + path, 0, "");
  std::vector<seea::mgrm::LabeledState> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      seea::mgrm::LabeledState rec;
      rec.state.initial = encode_text(j.at("initial").get<std::string>());
      for (const auto& pair : j.value("history", nlohmann::json::array())) {
        seea::TokenSeq a = encode_text(pair.at(0).get<std::string>());
        seea::TokenSeq o = encode_text(pair.at(1).get<std::string>());
        rec.state.history.emplace_back(std::move(a), std::move(o));
      }
      rec.label = label_from_string(j.at("label").get<std::string>());
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw seea::config::ConfigError(
          "malformed labeled record at line " + std::to_string(lineno) + ": " + e.what(),
          lineno, "");
    }
  }
  if (out.empty()) throw seea::config::ConfigError("labeled set is empty: " + path, 0, "");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-evolving text-household agent trainer"};
  app.require_subcommand(1);

  CommonOpts train_o, eval_o, rm_o, tree_o;
  std::string train_out, train_resume, train_mode;
  std::optional<int> train_iters;
  int workers = 1;
  bool dump_experience = false;
  auto* train = app.add_subcommand("train", "run the self-evolution loop");
  add_common(train, train_o);
  train->add_option("--out", train_out, "output directory (metrics, checkpoints)");
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--reward-mode", train_mode,
                    "ground-truth|frozen-rm|supervised-rm|selfsup-rm");
  train->add_option("--iterations", train_iters, "iteration count override");
  train->add_option("--workers", workers, "worker processes (only 1 supported)")
      ->check(CLI::Range(1, 1));
  train->add_flag("--dump-experience", dump_experience, "write per-iteration search trees");

  std::string eval_ckpt, eval_out = "eval.csv";
  std::optional<int> eval_episodes;
  auto* evalc = app.add_subcommand("eval", "greedy policy evaluation");
  add_common(evalc, eval_o);
  evalc->add_option("--checkpoint", eval_ckpt, "checkpoint to evaluate (default: fresh init)");
  evalc->add_option("--episodes", eval_episodes, "episode count override");
  evalc->add_option("--out", eval_out, "CSV output path (default eval.csv)");

  std::string rm_ckpt, rm_labeled, rm_out = "rm-eval.csv";
  int rm_episodes = 0;
  auto* rmeval = app.add_subcommand("rm-eval", "reward-model accuracy on labeled rollouts");
  add_common(rmeval, rm_o);
  rmeval->add_option("--checkpoint", rm_ckpt, "checkpoint holding the reward model");
  rmeval->add_option("--labeled-set", rm_labeled, "labeled-state JSONL file");
  rmeval->add_option("--episodes", rm_episodes,
                     "label fresh policy rollouts instead of reading --labeled-set");
  rmeval->add_option("--out", rm_out, "CSV output path (default rm-eval.csv)");
  bool rm_use_initial = false;
  rmeval->add_flag("--initial", rm_use_initial, "score the frozen initial reward model");

  std::string tree_ckpt, tree_out;
  auto* tree = app.add_subcommand("inspect-tree", "run one search and dump the tree as JSONL");
  add_common(tree, tree_o);
  tree->add_option("--checkpoint", tree_ckpt, "checkpoint whose policy guides the search");
  tree->add_option("--out", tree_out, "output file (default: stdout)");

  std::string vc_file;
  bool vc_defaults = false;
  auto* vc = app.add_subcommand("validate-config", "parse, validate and echo a config");
  vc->add_option("file", vc_file, "config file");
  vc->add_flag("--print-defaults", vc_defaults, "print the default config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) {
      auto cfg = resolve(train_o);
      if (!train_out.empty()) cfg.out_dir = train_out;
      if (!train_mode.empty()) cfg.reward_mode = seea::evolve::reward_mode_from_string(train_mode);
      if (train_iters) cfg.iterations = *train_iters;
      cfg.dump_experience = dump_experience;
      cfg.validate();
      print_resolved(cfg);
      seea::evolve::run(cfg, seea::config::serialize_config(cfg), train_resume);
    } else if (*evalc) {
      auto cfg = resolve(eval_o);
      cfg.validate();
      print_resolved(cfg);
      int n = eval_episodes ? *eval_episodes : cfg.eval_episodes;
      if (n < 1) throw seea::config::ConfigError("episodes must be >= 1", 0, "episodes");
      auto state = state_for(eval_ckpt, cfg);
      auto [sr, steps] = seea::evolve::evaluate_policy(
          state.policy_params, cfg.env, n, seea::derive_seed(cfg.master_seed, 400));
      std::cout << "success_rate " << fmt4(sr) << "\navg_steps " << fmt4(steps) << "\n";
      std::ofstream csv(eval_out);
      if (!csv) throw std::runtime_error("cannot write " + eval_out);
      csv << "episodes,success_rate,avg_steps\n"
          << n << ',' << fmt4(sr) << ',' << fmt4(steps) << "\n";
    } else if (*rmeval) {
      auto cfg = resolve(rm_o);
      cfg.validate();
      print_resolved(cfg);
      auto state = state_for(rm_ckpt, cfg);
      std::vector<seea::mgrm::LabeledState> labeled;
      if (!rm_labeled.empty()) {
        labeled = load_labeled_set(rm_labeled);
      } else {
        int n = rm_episodes > 0 ? rm_episodes : cfg.rm_batch;
        labeled = seea::evolve::collect_labeled_states(
            state.policy_params, cfg.env, n, seea::derive_seed(cfg.master_seed, 500));
      }
      const auto& rm = rm_use_initial ? state.rm_initial : state.rm;
      const std::string table = seea::mgrm::eval_accuracy(rm, labeled).to_csv();
      std::cout << table;
      std::ofstream csv(rm_out);
      if (!csv) throw std::runtime_error("cannot write " + rm_out);
      csv << table;
    } else if (*tree) {
      auto cfg = resolve(tree_o);
      cfg.validate();
      auto state = state_for(tree_ckpt, cfg);
      auto [world, obs] = seea::env::reset(seea::derive_seed(cfg.master_seed, 100, 0, 0), cfg.env);
      seea::AgentState astate{obs.tokens, {}};
      seea::Rng rng(seea::derive_seed(cfg.master_seed, 100, 0, 0x8000000000000000ULL));
      auto t = seea::mcts::run_search(astate, world, state.policy_params,
                                      seea::mcts::RewardSource::ground_truth(), cfg.search, rng);
      if (tree_out.empty()) {
        std::cout << seea::mcts::dump_tree(t);
      } else {
        std::ofstream f(tree_out);
        if (!f) throw std::runtime_error("cannot write " + tree_out);
        f << seea::mcts::dump_tree(t);
      }
      const auto& vocab = seea::Vocabulary::standard();
      std::cout << "root children (action, N, Q):\n";
      for (const auto& e : t.node(t.root_id).edges)
        std::cout << "  \"" << vocab.decode(e.action.body()) << "\" N=" << e.n
                  << " Q=" << fmt4(e.q) << "\n";
    } else if (*vc) {
      if (vc_defaults) {
        print_resolved(seea::evolve::RunConfig{});
        return kExitOk;
      }
      if (vc_file.empty())
        throw seea::config::ConfigError("a config file (or --print-defaults) is required", 0, "");
      auto cfg = seea::config::load_config_file(vc_file);
      seea::config::apply_env_overrides(cfg);
      cfg.validate();
      print_resolved(cfg);
    }
  } catch (const seea::config::ConfigError& e) {
    std::cerr << "config error";
    if (e.line) std::cerr << " (line " << e.line << ")";
    std::cerr << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
