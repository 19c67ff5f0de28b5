#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "seea/config.hpp"
#include "seea/evolve.hpp"

using namespace seea;
namespace fs = std::filesystem;

namespace {

evolve::RunConfig tiny_config(const std::string& out) {
  evolve::RunConfig c = config::preset_by_name("fast");
  c.iterations = 2;
  c.eval_episodes = 10;
  c.optim.valid_samples_per_iteration = 8;
  c.optim.batch_size = 4;
  c.optim.steps_per_iter = 4;
  c.optim.total_steps = 20;  // covers the longest run in these tests
  c.search.iterations = 10;
  c.search.group_size = 4;
  c.out_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config round-trips through serialize/parse with a stable hash") {
  auto cfg = config::preset_by_name("fast");
  auto text = config::serialize_config(cfg);
  auto back = config::parse_config_text(text);
  CHECK(config::serialize_config(back) == text);
  CHECK(config::config_hash(back) == config::config_hash(cfg));
}

TEST_CASE("config errors carry line diagnostics") {
  CHECK_THROWS_AS(config::parse_config_text("[optim]\nnot_a_key = 3\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config_text("[nosuchsection]\nx = 1\n"), config::ConfigError);
  try {
    config::parse_config_text("[optim]\nlr0 = banana\n");
    CHECK(false);
  } catch (const config::ConfigError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("validate rejects bad ranges and allows zero iterations") {
  auto cfg = tiny_config("x");
  cfg.optim.eps_low = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config("x");
  cfg.iterations = -1;
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config("x");
  cfg.iterations = 0;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("two identical runs write byte-identical metrics.csv") {
  TempDir d1("seea_det_a"), d2("seea_det_b");
  auto c1 = tiny_config(d1.path.string());
  auto c2 = tiny_config(d2.path.string());
  auto text = config::serialize_config(c1);
  evolve::run(c1, text, "");
  evolve::run(c2, config::serialize_config(c2), "");
  auto m1 = slurp(d1.path / "metrics.csv");
  auto m2 = slurp(d2.path / "metrics.csv");
  CHECK(!m1.empty());
  CHECK(m1 == m2);
  CHECK(fs::exists(d1.path / "resolved-config.json"));
  CHECK(fs::exists(d1.path / "train_log.csv"));
}

TEST_CASE("zero-iteration run writes only CSV headers") {
  TempDir d("seea_zero");
  auto c = tiny_config(d.path.string());
  c.iterations = 0;
  evolve::run(c, config::serialize_config(c), "");
  auto m = slurp(d.path / "metrics.csv");
  CHECK(m.rfind('\n') == m.size() - 1);
  CHECK(m.find('\n') == m.rfind('\n'));  // exactly one line: the header
}

TEST_CASE("checkpoint save/load round-trip and resume-identical metrics") {
  TempDir d_full("seea_full"), d_half("seea_half");
  auto c_full = tiny_config(d_full.path.string());
  c_full.iterations = 3;
  auto text = config::serialize_config(c_full);
  evolve::run(c_full, text, "");

  auto c_half = c_full;
  c_half.out_dir = d_half.path.string();
  auto half_text = config::serialize_config(c_half);
  c_half.iterations = 2;
  // run 2 iterations under the 3-iteration config text, then resume
  {
    auto c2 = c_half;
    evolve::run(c2, half_text, "");
  }
  auto c3 = c_half;
  c3.iterations = 3;
  evolve::run(c3, half_text, (d_half.path / "checkpoint-latest.json").string());

  // metrics rows must match the uninterrupted run line for line
  CHECK(slurp(d_half.path / "metrics.csv") == slurp(d_full.path / "metrics.csv"));

  // loading restores parameters exactly
  auto st = evolve::checkpoint_load((d_full.path / "checkpoint-latest.json").string(), text);
  evolve::checkpoint_save(st, text, (d_full.path / "resaved.json").string());
  auto st2 = evolve::checkpoint_load((d_full.path / "resaved.json").string(), text);
  CHECK(st.policy_params.values == st2.policy_params.values);
  CHECK(st.rm.values == st2.rm.values);
  CHECK(st.iter == st2.iter);
}

TEST_CASE("checkpoint refuses config mismatch and bad format_version") {
  TempDir d("seea_ckpt");
  auto c = tiny_config(d.path.string());
  c.iterations = 1;
  auto text = config::serialize_config(c);
  evolve::run(c, text, "");
  auto ckpt = (d.path / "checkpoint-latest.json").string();
  CHECK_THROWS(evolve::checkpoint_load(ckpt, std::string("different config text")));
  CHECK_NOTHROW(evolve::checkpoint_load(ckpt, text));

  // corrupt the format_version
  auto body = slurp(ckpt);
  auto pos = body.find("\"format_version\":");
  REQUIRE(pos != std::string::npos);
  body.replace(pos, std::string("\"format_version\":1").size(), "\"format_version\":9");
  std::ofstream(ckpt) << body;
  CHECK_THROWS(evolve::checkpoint_load(ckpt, text));
}

TEST_CASE("environment variable overrides reach the config") {
  auto cfg = config::preset_by_name("fast");
  setenv("SEEA_OPTIM_BETA", "0.25", 1);
  config::apply_env_overrides(cfg);
  unsetenv("SEEA_OPTIM_BETA");
  CHECK(cfg.optim.beta == doctest::Approx(0.25));
}
