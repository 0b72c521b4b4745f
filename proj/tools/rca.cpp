#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rca/cli.hpp"
#include "rca/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kMissingDependency = 3, kMalformed = 4 };

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> rand_seed;
  std::optional<std::size_t> samples;
  std::string method = "sft+rl";
  std::string eval_method = "sft+rl";
  std::optional<std::string> dataset;
  std::optional<std::string> show_trace;
  std::vector<std::string> compare_methods;
};

nlohmann::json overrides(const Flags& f) {
  nlohmann::json o = nlohmann::json::object();
  if (f.seed) o["seed"] = *f.seed;
  if (f.out) o["out"] = *f.out;
  if (f.variant) o["eval"]["variant"] = *f.variant;
  if (f.rand_seed) o["eval"]["randomization_seed"] = *f.rand_seed;
  if (f.samples) o["eval"]["samples"] = *f.samples;
  return o;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run config");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
}

int run(const std::string& command, const Flags& f) {
  const auto config = rca::cli::load_run_config(f.config, overrides(f));
  if (command == "gen") {
    const auto r = rca::cli::cmd_gen(config);
    std::printf("train %zu  test %zu  retry rate %.4f\n", r.train_records, r.test_records, r.retry_rate);
  } else if (command == "diagnose") {
    const auto r = rca::cli::cmd_diagnose(config, f.dataset, f.show_trace);
    if (!r.shown_trace.empty()) std::printf("%s\n", r.shown_trace.c_str());
    std::printf("records %zu  agreement %.4f\n", r.records, r.agreement());
  } else if (command == "sftdata") {
    const auto r = rca::cli::cmd_sftdata(config);
    std::printf("accepted %zu/%zu  rejected %zu  failures %zu  mean reduction %.4f\n", r.records.size(), r.total,
                r.rejected, r.failures.size(), r.mean_reduction());
  } else if (command == "train") {
    const auto r = rca::cli::cmd_train(config, rca::cli::parse_method(f.method));
    std::printf("checkpoint %s  sft epochs %zu  rl steps %zu  final reward %.4f\n", r.checkpoint.string().c_str(),
                r.sft_epochs, r.rl_steps, r.final_reward);
  } else if (command == "eval") {
    for (const auto& r : rca::cli::cmd_eval(config, f.eval_method)) {
      std::printf("%-8s %-10s pass@1 %.4f  maj@%zu %.4f  flagged %zu\n", r.method.c_str(),
                  std::string(rca::eval::to_string(r.config.variant)).c_str(), r.pass_at_1, r.config.samples,
                  r.maj_at_k, r.flagged);
    }
  } else if (command == "compare") {
    std::printf("%s", rca::cli::cmd_compare(config, f.compare_methods).text().c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drive-test root cause analysis toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("gen", "generate train/test datasets");
  auto* diagnose = app.add_subcommand("diagnose", "run the rule oracle over a dataset");
  auto* sftdata = app.add_subcommand("sftdata", "build compressed SFT traces with the agent pipeline");
  auto* train = app.add_subcommand("train", "train a policy arm");
  auto* eval = app.add_subcommand("eval", "evaluate a policy arm or the oracle");
  auto* compare = app.add_subcommand("compare", "tabulate evaluated arms");
  for (auto* cmd : {gen, diagnose, sftdata, train, eval, compare}) add_common(cmd, f);

  diagnose->add_option("--dataset", f.dataset, "records file (default: <out>/test.jsonl)");
  diagnose->add_option("--show-trace", f.show_trace, "print the structured trace of this instance id");
  train->add_option("--method", f.method, "base | sft | rl | sft+rl")->capture_default_str();
  eval->add_option("--method", f.eval_method, "base | sft | rl | sft+rl | oracle")->capture_default_str();
  eval->add_option("--variant", f.variant, "standard | randomized | both");
  eval->add_option("--rand-seed", f.rand_seed, "label randomization seed");
  eval->add_option("--samples", f.samples, "samples per instance");
  compare->add_option("--methods", f.compare_methods, "arms to include (default: all evaluated)");

  CLI11_PARSE(app, argc, argv);

  const auto command = app.get_subcommands().front()->get_name();
  try {
    return run(command, f);
  } catch (const rca::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const rca::DependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingDependency;
  } catch (const rca::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMalformed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
