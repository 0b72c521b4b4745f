#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rca/agentpipe.hpp"
#include "rca/evalharness.hpp"
#include "rca/simulator.hpp"
#include "rca/trainer.hpp"

namespace rca::cli {

inline constexpr int kSchemaVersion = 1;

struct GenSection {
  std::size_t train_per_cause = 100;
  std::size_t test_per_cause = 25;
  bool permute_catalogs = false;  // standard C1..C8 binding unless set
  sim::InstanceShape shape;
  sim::RadioModelConfig radio;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "run";
  GenSection gen;
  agent::PipelineConfig pipeline;
  train::TrainConfig train;
  eval::EvalConfig eval;  // its variant field is unused; see `variants`
  std::vector<eval::Variant> variants = {eval::Variant::STANDARD, eval::Variant::RANDOMIZED};

  nlohmann::json to_json() const;
};

nlohmann::json default_config_json();

// Layers `file` then `overrides` over the defaults (JSON merge patch) and
// rejects keys the defaults do not have.
RunConfig resolve_config(const nlohmann::json& file, const nlohmann::json& overrides);
RunConfig load_run_config(const std::optional<std::string>& path, const nlohmann::json& overrides);

// Per-stage seeds fanned out from the master seed by stage name.
std::uint64_t stage_seed(const RunConfig& config, std::string_view stage);

enum class Method { BASE, SFT, RL, SFT_RL };
std::string_view to_string(Method m);
Method parse_method(std::string_view text);
// "sft+rl" becomes "sft_rl" so it is safe in file names.
std::string file_tag(Method m);

struct Paths {
  std::filesystem::path out;
  std::filesystem::path train_data() const { return out / "train.jsonl"; }
  std::filesystem::path test_data() const { return out / "test.jsonl"; }
  std::filesystem::path sft_data() const { return out / "sft.jsonl"; }
  std::filesystem::path checkpoint(Method m) const { return out / ("policy_" + file_tag(m) + ".json"); }
  std::filesystem::path report(const std::string& method_tag, eval::Variant v) const {
    return out / ("eval_" + method_tag + "_" + std::string(eval::to_string(v)) + ".json");
  }
  std::filesystem::path manifest(const std::string& command) const { return out / (command + "_manifest.json"); }
  std::filesystem::path comparison() const { return out / "comparison.json"; }
};

struct GenResult {
  std::size_t train_records = 0;
  std::size_t test_records = 0;
  double retry_rate = 0.0;
};
GenResult cmd_gen(const RunConfig& config);

struct DiagnoseResult {
  std::size_t records = 0;
  std::size_t agreeing = 0;
  double agreement() const { return records == 0 ? 0.0 : static_cast<double>(agreeing) / static_cast<double>(records); }
  std::string shown_trace;  // empty unless a trace was requested
};
// Reads `dataset` (defaults to the test split) and re-diagnoses each record.
DiagnoseResult cmd_diagnose(const RunConfig& config, const std::optional<std::string>& dataset,
                            const std::optional<std::string>& show_trace_id);

agent::SftBuildReport cmd_sftdata(const RunConfig& config);

struct TrainResult {
  std::filesystem::path checkpoint;
  std::size_t sft_epochs = 0;
  std::size_t rl_steps = 0;
  double final_reward = 0.0;
};
TrainResult cmd_train(const RunConfig& config, Method method);

// `method` is a trained arm or "oracle"; one report per configured variant.
std::vector<eval::EvalReport> cmd_eval(const RunConfig& config, const std::string& method);

// Tabulates every standard-variant report found for `methods` (all four arms when empty).
eval::Comparison cmd_compare(const RunConfig& config, const std::vector<std::string>& methods);

}  // namespace rca::cli
