#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rca/domain.hpp"
#include "rca/promptkit.hpp"
#include "rca/simulator.hpp"

namespace rca::train {

// Standardized evidence read from an instance; the last entry is a constant bias.
inline constexpr std::size_t kNumFeatures = 10;

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  bool operator==(const FeatureVector&) const = default;
};

const std::array<const char*, kNumFeatures>& feature_names();
FeatureVector extract_features(const sim::LabeledInstance& instance);

// Answer tokens are the 8 semantic causes, so the policy never sees display labels.
inline constexpr std::size_t kVocabSize = kNumCauses;
inline constexpr int token_of(CauseId c) { return static_cast<int>(index_of(c)); }
CauseId cause_of_token(int token);

// Autoregressive linear-softmax policy. The next-token logits are
// logits[v] = sum_f theta[ctx][v][f] * phi[f], where ctx is BOS (0) or 1 + previous token.
class Policy {
 public:
  explicit Policy(std::size_t trace_length = 1);
  static Policy random(std::uint64_t seed, double scale, std::size_t trace_length = 1);

  std::size_t trace_length() const { return trace_length_; }
  std::size_t num_params() const { return theta_.size(); }
  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  static std::size_t context_of(std::optional<int> previous);
  std::size_t index(std::size_t ctx, std::size_t token, std::size_t feature) const;

  std::array<double, kVocabSize> logits(const FeatureVector& phi, std::size_t ctx) const;
  std::array<double, kVocabSize> probabilities(const FeatureVector& phi, std::size_t ctx) const;
  std::array<double, kVocabSize> log_probabilities(const FeatureVector& phi, std::size_t ctx) const;
  double sequence_log_prob(const FeatureVector& phi, const std::vector<int>& tokens) const;

  // temperature 0 decodes greedily (lowest token wins ties).
  std::vector<int> sample(const FeatureVector& phi, double temperature, std::uint64_t seed) const;

  bool operator==(const Policy&) const = default;

 private:
  std::size_t trace_length_;
  std::vector<double> theta_;
};

// Text a policy trajectory renders to under a catalog.
std::string trajectory_text(const std::vector<int>& tokens, const RootCauseCatalog& catalog);

class PolicySnapshot {
 public:
  enum class Role { REFERENCE, OLD };
  PolicySnapshot(const Policy& policy, Role role) : policy_(policy), role_(role) {}
  const Policy& policy() const { return policy_; }
  Role role() const { return role_; }

 private:
  const Policy policy_;
  const Role role_;
};

struct TrainConfig {
  std::size_t group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.01;
  double learning_rate = 1e-3;
  double momentum = 0.0;
  std::size_t batch_size = 16;
  std::size_t rl_steps = 200;
  std::size_t inner_epochs = 2;  // gradient updates per sampled batch
  double temperature = 1.0;
  double adv_std_floor = 1e-8;
  std::uint64_t seed = 1;

  double sft_learning_rate = 1e-3;
  std::size_t sft_max_epochs = 500;
  std::size_t sft_patience = 20;
  double sft_min_delta = 1e-6;
  double validation_fraction = 0.1;

  std::size_t trace_length = 1;
  double init_scale = 0.01;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

// ---- data ------------------------------------------------------------------

struct TrainItem {
  FeatureVector phi;
  RootCauseCatalog catalog;
  CauseId truth{};
};

struct SftExample {
  FeatureVector phi;
  std::vector<int> tokens;
};

TrainItem make_item(const DatasetRecord& record);
// Target tokens from the record's structured trace; throws ValidationError when it has none.
SftExample make_sft_example(const DatasetRecord& record, std::size_t trace_length = 1);

// ---- objectives --------------------------------------------------------------

int reward(std::string_view trajectory_text, std::string_view truth_label);

struct LossAndGrad {
  double value = 0.0;
  std::vector<double> grad;
};

LossAndGrad sft_loss(const Policy& policy, const std::vector<SftExample>& batch);

struct SampledTrajectory {
  std::vector<int> tokens;
  std::vector<double> old_log_probs;
  std::string text;
  int reward = 0;
  double advantage = 0.0;
};

struct GroupRollout {
  FeatureVector phi;
  std::string truth_label;
  std::vector<SampledTrajectory> trajectories;
};

GroupRollout sample_group(const PolicySnapshot& old, const TrainItem& item, std::size_t n, double temperature,
                          std::uint64_t seed);
std::vector<double> group_advantages(const std::vector<int>& rewards, double std_floor = 1e-8);
void assign_advantages(GroupRollout& group, double std_floor);

// rho = min(eta * A, clip(eta, 1 - eps, 1 + eps) * A)
double clipped_term(double ratio, double advantage, double eps);

// Exact KL(p || r) over the vocabulary.
double categorical_kl(const std::array<double, kVocabSize>& log_p, const std::array<double, kVocabSize>& log_r);

struct GrpoEvaluation {
  double objective = 0.0;
  std::vector<double> grad;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
};

GrpoEvaluation grpo_objective(const Policy& policy, const PolicySnapshot& reference,
                              const std::vector<GroupRollout>& rollouts, const TrainConfig& config);

// ---- loops -------------------------------------------------------------------

struct StepMetrics {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double clip_fraction = 0.0;
  double kl = 0.0;
  bool operator==(const StepMetrics&) const = default;
};

// Optimizer state carried between GRPO steps.
struct GrpoState {
  std::size_t step = 0;
  std::vector<double> velocity;
};

std::vector<GroupRollout> sample_batch(const PolicySnapshot& old, const std::vector<TrainItem>& items,
                                       const std::vector<std::size_t>& picks, const TrainConfig& config,
                                       std::uint64_t step_seed);
std::vector<GroupRollout> sample_batch_serial(const PolicySnapshot& old, const std::vector<TrainItem>& items,
                                              const std::vector<std::size_t>& picks, const TrainConfig& config,
                                              std::uint64_t step_seed);

StepMetrics grpo_step(Policy& policy, GrpoState& state, const PolicySnapshot& reference,
                      const std::vector<TrainItem>& items, const TrainConfig& config);

std::vector<StepMetrics> run_grpo(Policy& policy, const PolicySnapshot& reference, const std::vector<TrainItem>& items,
                                  const TrainConfig& config);

struct SftHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
};

// Full-batch descent; keeps the parameters with the lowest validation loss.
SftHistory run_sft(Policy& policy, const std::vector<SftExample>& examples, const TrainConfig& config);

struct TwoStageResult {
  Policy sft;
  Policy rl;
  SftHistory sft_history;
  std::vector<StepMetrics> rl_history;
};

TwoStageResult train_two_stage(const Policy& base, const std::vector<SftExample>& sft_data,
                               const std::vector<TrainItem>& rl_data, const TrainConfig& config);

// ---- checkpoints -------------------------------------------------------------

std::uint64_t vocabulary_hash(std::size_t trace_length);
std::uint64_t feature_spec_hash();

std::string checkpoint_json(const Policy& policy, const TrainConfig& config);
// Throws DataIntegrityError on a hash mismatch.
Policy policy_from_checkpoint(const std::string& json_text, TrainConfig* config = nullptr);
void save_checkpoint(const std::string& path, const Policy& policy, const TrainConfig& config);
Policy load_checkpoint(const std::string& path, TrainConfig* config = nullptr);

}  // namespace rca::train
