#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rca/promptkit.hpp"
#include "rca/simulator.hpp"
#include "rca/trainer.hpp"

namespace rca::eval {

enum class Variant { STANDARD, RANDOMIZED };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct EvalConfig {
  std::size_t samples = 4;
  double temperature = 1.0;
  std::uint64_t seed = 1;
  Variant variant = Variant::STANDARD;
  std::uint64_t randomization_seed = 7;
  bool operator==(const EvalConfig&) const = default;
};

using Answer = std::optional<std::string>;
using AnswerMatrix = std::vector<std::vector<Answer>>;

double pass_at_1(const AnswerMatrix& answers, const std::vector<std::string>& truths);
// Mode among non-none answers, ties to the lexicographically smallest label; none only if all are none.
Answer majority_answer(const std::vector<Answer>& answers);
double maj_at_k(const AnswerMatrix& answers, const std::vector<std::string>& truths);

// Produces n display-label answers for one instance.
class AnswerSampler {
 public:
  virtual ~AnswerSampler() = default;
  virtual std::vector<Answer> answer(const sim::LabeledInstance& instance, std::size_t n, double temperature,
                                     std::uint64_t seed) const = 0;
};

class PolicySampler : public AnswerSampler {
 public:
  explicit PolicySampler(train::Policy policy) : policy_(std::move(policy)) {}
  std::vector<Answer> answer(const sim::LabeledInstance& instance, std::size_t n, double temperature,
                             std::uint64_t seed) const override;

 private:
  train::Policy policy_;
};

// Deterministic wrapper around the rule oracle.
class OracleSampler : public AnswerSampler {
 public:
  std::vector<Answer> answer(const sim::LabeledInstance& instance, std::size_t n, double temperature,
                             std::uint64_t seed) const override;
};

struct InstanceResult {
  std::string instance_id;
  std::string truth_label;
  CauseId truth{};
  std::vector<Answer> answers;
  std::vector<std::optional<CauseId>> predicted;  // answers mapped through the instance's catalog
  bool flagged = false;  // the instance could not be read; answers are all none
  bool operator==(const InstanceResult&) const = default;
};

inline constexpr std::size_t kNoneColumn = kNumCauses;

struct EvalReport {
  std::string method;
  EvalConfig config;
  double pass_at_1 = 0.0;
  double maj_at_k = 0.0;
  // Rows: true cause. Columns: predicted cause, last column for unparseable answers.
  std::array<std::array<std::size_t, kNumCauses + 1>, kNumCauses> confusion{};
  std::vector<InstanceResult> instances;
  std::size_t flagged = 0;
  bool operator==(const EvalReport&) const = default;
};

EvalReport evaluate(const AnswerSampler& sampler, const std::vector<DatasetRecord>& records, const EvalConfig& config,
                    std::string method = {});
// Single-threaded reference with identical output.
EvalReport evaluate_serial(const AnswerSampler& sampler, const std::vector<DatasetRecord>& records,
                           const EvalConfig& config, std::string method = {});

std::string report_json(const EvalReport& report);

struct ComparisonRow {
  std::string name;
  double pass_at_1 = 0.0;
  double maj_at_k = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::string json() const;
  std::string text() const;
};

Comparison compare_methods(const std::vector<std::pair<std::string, EvalReport>>& reports);

}  // namespace rca::eval
