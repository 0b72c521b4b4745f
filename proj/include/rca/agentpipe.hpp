#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rca/promptkit.hpp"
#include "rca/simulator.hpp"
#include "rca/structured_trace.hpp"

namespace rca::agent {

enum class Strategy { ELIMINATION, CONTRADICTION };
enum class Backend { MOCK_ORACLE, REMOTE_LLM };

std::string_view to_string(Strategy s);
std::string_view to_string(Backend b);
Strategy parse_strategy(std::string_view text);
Backend parse_backend(std::string_view text);

struct RemoteParams {
  std::string base_url;  // e.g. http://127.0.0.1:8000
  std::string model;
  std::string api_key;
  double temperature = 0.0;
};

// Reads RCA_LLM_BASE_URL, RCA_LLM_API_KEY and RCA_LLM_MODEL.
RemoteParams remote_params_from_env();

struct AgentSpec {
  Strategy strategy = Strategy::ELIMINATION;
  Backend backend = Backend::MOCK_ORACLE;
  RemoteParams remote;
};

void validate(const AgentSpec& spec);

struct PipelineConfig {
  std::vector<AgentSpec> agents = {{Strategy::ELIMINATION, Backend::MOCK_ORACLE, {}},
                                   {Strategy::CONTRADICTION, Backend::MOCK_ORACLE, {}}};
  int max_in_flight = 4;
  int retries = 2;  // extra attempts after a transport failure
  double timeout_s = 60.0;
};

void validate(const PipelineConfig& config);

struct Trajectory {
  std::string text;
  // Empty when the text falls outside the closed token grammar (remote output).
  std::vector<int> tokens;
  std::size_t token_count = 0;
  std::optional<std::string> terminal_answer;
  bool operator==(const Trajectory&) const = default;
};

Trajectory make_trajectory(std::string text);

std::string strategy_instruction(Strategy s);
std::string wrap_prompt(Strategy s, const RenderedQuery& query);

// Deterministic long-form reasoning derived from oracle evidence.
Trajectory mock_trajectory(Strategy s, const sim::LabeledInstance& instance);

// One remote chat-completion call with retries; throws TransportError.
Trajectory remote_solve(const AgentSpec& spec, const RenderedQuery& query, int retries, double timeout_s);

// `instance` is required for the mock backend.
Trajectory agent_solve(const AgentSpec& spec, const RenderedQuery& query, const sim::LabeledInstance* instance,
                       int retries = 2, double timeout_s = 60.0);

// Index of the selected trajectory: first member of the largest answer group, ties to the lowest index.
std::size_t majority_vote(const std::vector<Trajectory>& trajectories);

struct AggregateResult {
  std::optional<StructuredTrace> trace;
  std::string rejection;  // set when trace is empty
};

AggregateResult aggregate(const Trajectory& selected, const sim::LabeledInstance& instance);

struct FailureReport {
  std::string instance_id;
  std::string reason;
};

struct SftBuildReport {
  std::vector<DatasetRecord> records;
  std::vector<FailureReport> failures;  // transport errors
  std::size_t rejected = 0;             // wrong majority answer
  std::size_t total = 0;
  std::vector<double> reduction_ratios;  // |trace| / |selected trajectory| per accepted record

  double acceptance_rate() const;
  double mean_reduction() const;
  // Counts per bucket of width `width` over [0, 1].
  std::map<double, std::size_t> reduction_histogram(double width = 0.1) const;
};

SftBuildReport build_sft_dataset(const std::vector<DatasetRecord>& records, const PipelineConfig& config);

}  // namespace rca::agent
