#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rca/cli.hpp"
#include "rca/errors.hpp"

using namespace rca;
using namespace rca::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rca_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small(const fs::path& out, std::uint64_t seed = 5) {
  return resolve_config({{"seed", seed},
                         {"out", out.string()},
                         {"gen", {{"train_per_cause", 4}, {"test_per_cause", 2}}},
                         {"train", {{"rl_steps", 3}, {"sft_max_epochs", 20}, {"batch_size", 4}}},
                         {"eval", {{"samples", 2}}}},
                        json::object());
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(RCA_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config layering") {
  const auto defaults = resolve_config(json::object(), json::object());
  CHECK(defaults.seed == 1);
  CHECK(defaults.variants.size() == 2);

  const auto c = resolve_config({{"seed", 9}, {"eval", {{"samples", 6}, {"variant", "randomized"}}}},
                                {{"eval", {{"samples", 3}}}});
  CHECK(c.seed == 9);
  CHECK(c.eval.samples == 3);  // flag beats file
  REQUIRE(c.variants.size() == 1);
  CHECK(c.variants[0] == eval::Variant::RANDOMIZED);
  CHECK(c.train.seed == stage_seed(c, "train"));
  CHECK(c.eval.seed == stage_seed(c, "eval"));
  CHECK(stage_seed(c, "train") != stage_seed(c, "eval"));

  // The resolved config serializes back to something that resolves identically.
  CHECK(resolve_config(c.to_json(), json::object()).to_json() == c.to_json());
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_AS(resolve_config({{"sed", 1}}, json::object()), ValidationError);
  CHECK_THROWS_AS(resolve_config({{"train", {{"learning_rat", 0.1}}}}, json::object()), ValidationError);
  CHECK_THROWS_AS(resolve_config({{"eval", {{"samples", 0}}}}, json::object()), ValidationError);
  CHECK_THROWS_AS(resolve_config({{"eval", {{"variant", "sideways"}}}}, json::object()), ValidationError);
  CHECK_THROWS_AS(resolve_config({{"train", {{"clip_eps", 2.0}}}}, json::object()), ValidationError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/rca.json", json::object()), DependencyError);

  const auto bad = scratch("bad.json");
  std::ofstream(bad) << "{\"seed\": ";
  CHECK_THROWS_AS(load_run_config(bad.string(), json::object()), ParseError);
  fs::remove(bad);
}

TEST_CASE("method names") {
  for (auto m : {Method::BASE, Method::SFT, Method::RL, Method::SFT_RL}) CHECK(parse_method(to_string(m)) == m);
  CHECK(file_tag(Method::SFT_RL) == "sft_rl");
  CHECK_THROWS_AS(parse_method("dpo"), ValidationError);
}

TEST_CASE("gen writes balanced, reproducible splits") {
  const auto out = scratch("gen");
  auto cfg = small(out);
  const auto r = cmd_gen(cfg);
  CHECK(r.train_records == 32);
  CHECK(r.test_records == 16);
  CHECK(r.retry_rate < 0.2);
  const Paths p{out};
  const auto train = read_jsonl(p.train_data().string());
  std::array<int, kNumCauses> hist{};
  for (const auto& rec : train) ++hist[index_of(rec.ground_truth_cause)];
  for (int n : hist) CHECK(n == 4);
  CHECK(train.front().instance_id == "train-00000");

  const auto first = slurp(p.train_data());
  const auto manifest = slurp(p.manifest("gen"));
  cmd_gen(cfg);
  CHECK(slurp(p.train_data()) == first);
  CHECK(slurp(p.manifest("gen")) == manifest);

  cfg.gen.train_per_cause = 0;
  CHECK_THROWS_AS(cmd_gen(cfg), ValidationError);
  fs::remove_all(out);
}

TEST_CASE("commands need their upstream artifacts") {
  const auto out = scratch("missing");
  const auto cfg = small(out);
  CHECK_THROWS_AS(cmd_diagnose(cfg, std::nullopt, std::nullopt), DependencyError);
  CHECK_THROWS_AS(cmd_sftdata(cfg), DependencyError);
  CHECK_THROWS_AS(cmd_train(cfg, Method::SFT), DependencyError);
  CHECK_THROWS_AS(cmd_eval(cfg, "rl"), DependencyError);
  CHECK_THROWS_AS(cmd_compare(cfg, {"base", "rl"}), DependencyError);
  fs::remove_all(out);
}

TEST_CASE("diagnose agrees with the planted labels") {
  const auto out = scratch("diagnose");
  const auto cfg = small(out);
  cmd_gen(cfg);
  const auto r = cmd_diagnose(cfg, std::nullopt, std::string("test-00003"));
  CHECK(r.records == 16);
  CHECK(r.agreement() == 1.0);
  CHECK(r.shown_trace.find("\\boxed") != std::string::npos);
  CHECK_THROWS_AS(cmd_diagnose(cfg, std::nullopt, std::string("test-99999")), ValidationError);

  // Damage the second line of a copy of the test split.
  const Paths p{out};
  std::ifstream in(p.test_data());
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  const auto broken = out / "broken.jsonl";
  std::ofstream(broken) << l1 << "\n" << l2.substr(0, l2.size() / 2) << "\n";
  try {
    cmd_diagnose(cfg, broken.string(), std::nullopt);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  fs::remove_all(out);
}

TEST_CASE("end to end on a small run") {
  const auto out = scratch("e2e");
  const auto cfg = small(out);
  cmd_gen(cfg);
  const auto sft = cmd_sftdata(cfg);
  CHECK(sft.acceptance_rate() == 1.0);
  for (auto m : {Method::BASE, Method::SFT, Method::RL, Method::SFT_RL}) {
    const auto t = cmd_train(cfg, m);
    CHECK(fs::exists(t.checkpoint));
  }
  for (const char* m : {"base", "sft", "rl", "sft+rl", "oracle"}) {
    const auto reps = cmd_eval(cfg, m);
    CHECK(reps.size() == 2);
  }
  const Paths p{out};
  const auto randomized = slurp(p.report("sft_rl", eval::Variant::RANDOMIZED));
  cmd_eval(cfg, "sft+rl");
  CHECK(slurp(p.report("sft_rl", eval::Variant::RANDOMIZED)) == randomized);

  const auto oracle = cmd_eval(cfg, "oracle");
  for (const auto& r : oracle) CHECK(r.pass_at_1 == 1.0);

  const auto table = cmd_compare(cfg, {});
  CHECK(table.rows.size() == 4);
  CHECK(fs::exists(p.comparison()));
  fs::remove_all(out);
}

TEST_CASE("binary exit codes") {
  const auto out = scratch("exit");
  const std::string o = " --out " + out.string();
  CHECK(run_binary("gen --seed 3" + o) == 0);
  CHECK(run_binary("train --method sft" + o) == 3);
  CHECK(run_binary("train --method dpo" + o) == 2);
  CHECK(run_binary("eval --samples 0" + o) == 2);
  CHECK(run_binary("gen --config /nonexistent.json" + o) == 3);
  const auto bad = out / "bad.json";
  std::ofstream(bad) << "[";
  CHECK(run_binary("gen --config " + bad.string() + o) == 4);
  fs::remove_all(out);
}
