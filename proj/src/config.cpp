#include "seea/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

extern char** environ;

namespace seea::config {

namespace {

using evolve::RunConfig;

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_double(const std::string& s, int line, const std::string& field) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("invalid number '" + s + "' for " + field, line, field);
  return v;
}

long long parse_int(const std::string& s, int line, const std::string& field) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("invalid integer '" + s + "' for " + field, line, field);
  return v;
}

bool parse_bool(const std::string& s, int line, const std::string& field) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("invalid boolean '" + s + "' for " + field, line, field);
}

std::string task_kinds_to_string(const std::vector<env::TaskKind>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += ",";
    out += kinds[i] == env::TaskKind::PutSingle ? "put-single" : "put-two";
  }
  return out;
}

std::vector<env::TaskKind> task_kinds_from_string(const std::string& s, int line,
                                                  const std::string& field) {
  std::vector<env::TaskKind> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "put-single") out.push_back(env::TaskKind::PutSingle);
    else if (item == "put-two") out.push_back(env::TaskKind::PutTwo);
    else throw ConfigError("unknown task kind '" + item + "'", line, field);
  }
  if (out.empty()) throw ConfigError("empty task kind list", line, field);
  return out;
}

struct Entry {
  std::string section, key;
  std::function<void(RunConfig&, const std::string&, int)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    auto add = [&t](const char* sec, const char* key, auto setter, auto getter) {
      t.push_back({sec, key,
                   [setter, sec, key](RunConfig& c, const std::string& v, int line) {
                     setter(c, v, line, std::string(sec) + "." + key);
                   },
                   getter});
    };
    auto add_int = [&add](const char* sec, const char* key, auto member) {
      add(sec, key,
          [member](RunConfig& c, const std::string& v, int line, const std::string& f) {
            member(c) = static_cast<int>(parse_int(v, line, f));
          },
          [member](const RunConfig& c) {
            return std::to_string(member(const_cast<RunConfig&>(c)));
          });
    };
    auto add_double = [&add](const char* sec, const char* key, auto member) {
      add(sec, key,
          [member](RunConfig& c, const std::string& v, int line, const std::string& f) {
            member(c) = parse_double(v, line, f);
          },
          [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); });
    };
    auto add_bool = [&add](const char* sec, const char* key, auto member) {
      add(sec, key,
          [member](RunConfig& c, const std::string& v, int line, const std::string& f) {
            member(c) = parse_bool(v, line, f);
          },
          [member](const RunConfig& c) {
            return member(const_cast<RunConfig&>(c)) ? "true" : "false";
          });
    };

    // [run]
    add("run", "reward_mode",
        [](RunConfig& c, const std::string& v, int line, const std::string& f) {
          try {
            c.reward_mode = evolve::reward_mode_from_string(v);
          } catch (const std::exception& e) {
            throw ConfigError(e.what(), line, f);
          }
        },
        [](const RunConfig& c) { return std::string(evolve::to_string(c.reward_mode)); });
    add_int("run", "iterations", [](RunConfig& c) -> int& { return c.iterations; });
    add_int("run", "eval_episodes", [](RunConfig& c) -> int& { return c.eval_episodes; });
    add("run", "master_seed",
        [](RunConfig& c, const std::string& v, int line, const std::string& f) {
          c.master_seed = static_cast<std::uint64_t>(parse_int(v, line, f));
        },
        [](const RunConfig& c) { return std::to_string(c.master_seed); });
    add("run", "out_dir",
        [](RunConfig& c, const std::string& v, int, const std::string&) { c.out_dir = v; },
        [](const RunConfig& c) { return c.out_dir; });
    add_bool("run", "dump_experience", [](RunConfig& c) -> bool& { return c.dump_experience; });

    // [rm]
    add_double("rm", "lr", [](RunConfig& c) -> double& { return c.rm_lr; });
    add_int("rm", "supervised_steps", [](RunConfig& c) -> int& { return c.rm_supervised_steps; });
    add_int("rm", "batch", [](RunConfig& c) -> int& { return c.rm_batch; });
    add_int("rm", "calibrate_every", [](RunConfig& c) -> int& { return c.rm_calibrate_every; });
    add_int("rm", "ttrl_k", [](RunConfig& c) -> int& { return c.ttrl_k; });
    add_int("rm", "ttrl_states", [](RunConfig& c) -> int& { return c.ttrl_states; });
    add_int("rm", "group_size", [](RunConfig& c) -> int& { return c.rm_group_size; });
    add_double("rm", "success_reward",
               [](RunConfig& c) -> double& { return c.label_mapping.success_reward; });
    add_double("rm", "failure_reward",
               [](RunConfig& c) -> double& { return c.label_mapping.failure_reward; });
    add_double("rm", "continue_reward",
               [](RunConfig& c) -> double& { return c.label_mapping.continue_reward; });

    // [env]
    add_int("env", "rooms", [](RunConfig& c) -> int& { return c.env.num_rooms; });
    add_int("env", "receptacles", [](RunConfig& c) -> int& { return c.env.num_receptacles; });
    add_int("env", "openable", [](RunConfig& c) -> int& { return c.env.num_openable; });
    add_int("env", "objects", [](RunConfig& c) -> int& { return c.env.num_objects; });
    add_int("env", "max_steps", [](RunConfig& c) -> int& { return c.env.max_episode_steps; });
    add_double("env", "p_start_holding",
               [](RunConfig& c) -> double& { return c.env.p_start_holding; });
    add_double("env", "p_closed", [](RunConfig& c) -> double& { return c.env.p_closed; });
    add_bool("env", "location_hint", [](RunConfig& c) -> bool& { return c.env.location_hint; });
    add("env", "task_kinds",
        [](RunConfig& c, const std::string& v, int line, const std::string& f) {
          c.env.task_kinds = task_kinds_from_string(v, line, f);
        },
        [](const RunConfig& c) { return task_kinds_to_string(c.env.task_kinds); });

    // [search]
    add_int("search", "iterations", [](RunConfig& c) -> int& { return c.search.iterations; });
    add_int("search", "max_depth", [](RunConfig& c) -> int& { return c.search.max_depth; });
    add_int("search", "group_size", [](RunConfig& c) -> int& { return c.search.group_size; });
    add_double("search", "exploration_c",
               [](RunConfig& c) -> double& { return c.search.exploration_c; });
    add_double("search", "gamma", [](RunConfig& c) -> double& { return c.search.gamma; });
    add_double("search", "p_expand_all",
               [](RunConfig& c) -> double& { return c.search.p_expand_all; });
    add_int("search", "path_budget", [](RunConfig& c) -> int& { return c.search.path_budget; });
    add_double("search", "expansion_temperature",
               [](RunConfig& c) -> double& { return c.search.expansion_temperature; });
    add_double("search", "rollout_temperature",
               [](RunConfig& c) -> double& { return c.search.rollout_temperature; });
    add_int("search", "rollouts_per_expansion",
            [](RunConfig& c) -> int& { return c.search.rollouts_per_expansion; });

    // [optim]
    add_double("optim", "eps_low", [](RunConfig& c) -> double& { return c.optim.eps_low; });
    add_double("optim", "eps_high", [](RunConfig& c) -> double& { return c.optim.eps_high; });
    add_double("optim", "beta", [](RunConfig& c) -> double& { return c.optim.beta; });
    add_double("optim", "lr0", [](RunConfig& c) -> double& { return c.optim.lr0; });
    add_double("optim", "warmup_ratio",
               [](RunConfig& c) -> double& { return c.optim.warmup_ratio; });
    add_int("optim", "batch_size", [](RunConfig& c) -> int& { return c.optim.batch_size; });
    add_int("optim", "valid_samples_per_iteration",
            [](RunConfig& c) -> int& { return c.optim.valid_samples_per_iteration; });
    add_int("optim", "total_steps", [](RunConfig& c) -> int& { return c.optim.total_steps; });
    add_int("optim", "steps_per_iter", [](RunConfig& c) -> int& { return c.optim.steps_per_iter; });
    add("optim", "optimizer",
        [](RunConfig& c, const std::string& v, int line, const std::string& f) {
          if (v == "sgd") c.optim.optimizer = optim::Optimizer::Sgd;
          else if (v == "adam") c.optim.optimizer = optim::Optimizer::Adam;
          else throw ConfigError("unknown optimizer '" + v + "'", line, f);
        },
        [](const RunConfig& c) {
          return c.optim.optimizer == optim::Optimizer::Sgd ? "sgd" : "adam";
        });
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

evolve::RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg = default_config();
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", lineno, line);
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& e : entries())
        if (e.section == section) known = true;
      if (!known) throw ConfigError("unknown section [" + section + "]", lineno, section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", lineno, line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& e : entries()) {
      if (e.section == section && e.key == key) {
        e.set(cfg, value, lineno);
        found = true;
        break;
      }
    }
    if (!found)
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]", lineno, key);
  }
  return cfg;
}

evolve::RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file: " + path, 0, path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const evolve::RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& e : entries()) {
    if (e.section != section) {
      if (!section.empty()) out += "\n";
      section = e.section;
      out += "[" + section + "]\n";
    }
    out += e.key + " = " + e.get(cfg) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const evolve::RunConfig& cfg) {
  // out_dir is a filesystem detail, not an experiment identity
  RunConfig c = cfg;
  c.out_dir = "";
  return fnv1a64(serialize_config(c));
}

void apply_env_overrides(evolve::RunConfig& cfg) {
  for (const auto& e : entries()) {
    std::string name = "SEEA_" + e.section + "_" + e.key;
    for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = std::getenv(name.c_str())) e.set(cfg, v, 0);
  }
}

evolve::RunConfig default_config() { return RunConfig{}; }

evolve::RunConfig fast_preset() {
  RunConfig c;
  c.iterations = 20;
  c.eval_episodes = 100;
  c.optim.valid_samples_per_iteration = 64;
  c.optim.batch_size = 32;
  c.optim.optimizer = optim::Optimizer::Adam;
  c.optim.lr0 = 0.1;
  c.optim.steps_per_iter = 48;
  c.optim.eps_low = 0.1;
  c.optim.eps_high = 0.5;
  c.optim.beta = 0.005;
  c.optim.total_steps = 1920;
  c.search.iterations = 30;
  c.search.group_size = 10;
  c.search.gamma = 0.95;
  c.search.rollout_temperature = 0.6;
  c.search.expansion_temperature = 2.0;
  c.search.rollouts_per_expansion = 3;
  c.search.p_expand_all = 0.6;
  c.rm_calibrate_every = 50;
  return c;
}

evolve::RunConfig full_preset() {
  RunConfig c;
  c.optim.lr0 = 1e-6;
  c.optim.batch_size = 128;
  c.optim.valid_samples_per_iteration = 512;
  c.rm_calibrate_every = 500;
  return c;
}

evolve::RunConfig preset_by_name(const std::string& name) {
  if (name == "default") return default_config();
  if (name == "fast") return fast_preset();
  if (name == "full") return full_preset();
  throw ConfigError("unknown preset '" + name + "'", 0, name);
}

}  // namespace seea::config
