#include "rca/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/seeding.hpp"

namespace rca::train {

namespace {

constexpr int kCheckpointVersion = 1;

double clip5(double v) { return std::clamp(v, -5.0, 5.0); }

template <std::size_t N>
std::array<double, N> log_softmax(const std::array<double, N>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = z[i] - lse;
  return out;
}

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

// ---- features ----------------------------------------------------------------

const std::array<const char*, kNumFeatures>& feature_names() {
  static const std::array<const char*, kNumFeatures> names = {
      "speed_excess", "lobe_exceedance", "weak_rsrp",     "overshoot", "overlap_margin",
      "mod30_flag",   "handover_burst",  "missed_handover", "rb_shortfall", "bias"};
  return names;
}

FeatureVector extract_features(const sim::LabeledInstance& instance) {
  const auto m = oracle::measure_window(instance.scenario, instance.trace, instance.symptom);
  FeatureVector f;
  f.values = {clip5((m.max_speed - 40.0) / 10.0),
              clip5(m.mean_lobe_exceedance / 5.0),
              clip5((-95.0 - m.mean_serving_rsrp) / 10.0),
              clip5((m.mean_serving_distance - 1000.0) / 300.0),
              clip5((6.0 - std::min(m.min_overlap_delta.value_or(18.0), 18.0)) / 6.0),
              m.mod30_conflict_samples > 0 ? 1.0 : -1.0,
              clip5(m.max_handovers_in_window - 2.5),
              clip5(m.longest_missed_handover_run - 2.5),
              clip5((160.0 - m.mean_rb) / 20.0),
              1.0};
  for (double v : f.values) {
    if (!std::isfinite(v)) throw NumericalGuardError("non-finite feature value");
  }
  return f;
}

CauseId cause_of_token(int token) {
  if (token < 0 || static_cast<std::size_t>(token) >= kVocabSize) throw ValidationError("token outside the vocabulary");
  return kAllCauses[static_cast<std::size_t>(token)];
}

// ---- policy ------------------------------------------------------------------

Policy::Policy(std::size_t trace_length)
    : trace_length_(trace_length), theta_((kVocabSize + 1) * kVocabSize * kNumFeatures, 0.0) {
  if (trace_length == 0) throw ValidationError("trace length must be positive");
}

Policy Policy::random(std::uint64_t seed, double scale, std::size_t trace_length) {
  Policy p(trace_length);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& t : p.theta_) t = scale * n(rng);
  return p;
}

std::size_t Policy::context_of(std::optional<int> previous) {
  return previous ? static_cast<std::size_t>(*previous) + 1 : 0;
}

std::size_t Policy::index(std::size_t ctx, std::size_t token, std::size_t feature) const {
  return (ctx * kVocabSize + token) * kNumFeatures + feature;
}

std::array<double, kVocabSize> Policy::logits(const FeatureVector& phi, std::size_t ctx) const {
  std::array<double, kVocabSize> z{};
  for (std::size_t v = 0; v < kVocabSize; ++v) {
    const double* w = &theta_[index(ctx, v, 0)];
    double s = 0.0;
    for (std::size_t f = 0; f < kNumFeatures; ++f) s += w[f] * phi.values[f];
    z[v] = s;
  }
  return z;
}

std::array<double, kVocabSize> Policy::log_probabilities(const FeatureVector& phi, std::size_t ctx) const {
  return log_softmax(logits(phi, ctx));
}

std::array<double, kVocabSize> Policy::probabilities(const FeatureVector& phi, std::size_t ctx) const {
  auto lp = log_probabilities(phi, ctx);
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

double Policy::sequence_log_prob(const FeatureVector& phi, const std::vector<int>& tokens) const {
  double total = 0.0;
  std::optional<int> prev;
  for (int t : tokens) {
    total += log_probabilities(phi, context_of(prev))[static_cast<std::size_t>(t)];
    prev = t;
  }
  return total;
}

std::vector<int> Policy::sample(const FeatureVector& phi, double temperature, std::uint64_t seed) const {
  if (temperature < 0.0) throw ValidationError("temperature must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> out;
  std::optional<int> prev;
  for (std::size_t j = 0; j < trace_length_; ++j) {
    const auto z = logits(phi, context_of(prev));
    int pick = 0;
    if (temperature == 0.0) {
      pick = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    } else {
      std::array<double, kVocabSize> scaled{};
      for (std::size_t v = 0; v < kVocabSize; ++v) scaled[v] = z[v] / temperature;
      const auto lp = log_softmax(scaled);
      const double r = u(rng);
      double acc = 0.0;
      pick = static_cast<int>(kVocabSize) - 1;
      for (std::size_t v = 0; v < kVocabSize; ++v) {
        acc += std::exp(lp[v]);
        if (r < acc) {
          pick = static_cast<int>(v);
          break;
        }
      }
    }
    out.push_back(pick);
    prev = pick;
  }
  return out;
}

std::string trajectory_text(const std::vector<int>& tokens, const RootCauseCatalog& catalog) {
  if (tokens.empty()) return {};
  std::string text;
  for (std::size_t j = 0; j + 1 < tokens.size(); ++j) text += catalog.label_of(cause_of_token(tokens[j])) + " ";
  return text + "\\boxed{" + catalog.label_of(cause_of_token(tokens.back())) + "}";
}

void validate(const TrainConfig& c) {
  if (c.group_size < 2) throw ValidationError("group size must be at least 2");
  if (!(c.clip_eps > 0.0 && c.clip_eps < 1.0)) throw ValidationError("clip epsilon must lie in (0,1)");
  if (c.kl_beta < 0.0) throw ValidationError("KL weight must be >= 0");
  if (c.learning_rate < 0.0 || c.sft_learning_rate < 0.0) throw ValidationError("learning rates must be >= 0");
  if (c.momentum < 0.0 || c.momentum >= 1.0) throw ValidationError("momentum must lie in [0,1)");
  if (c.batch_size == 0 || c.inner_epochs == 0) throw ValidationError("batch size and inner epochs must be positive");
  if (c.temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0))
    throw ValidationError("validation fraction must lie in [0,1)");
  if (c.trace_length == 0) throw ValidationError("trace length must be positive");
}

// ---- data --------------------------------------------------------------------

TrainItem make_item(const DatasetRecord& record) {
  const auto inst = reconstruct_instance(record);
  return {extract_features(inst), inst.catalog, inst.ground_truth};
}

SftExample make_sft_example(const DatasetRecord& record, std::size_t trace_length) {
  if (!record.trace) throw ValidationError(record.instance_id + " has no structured trace");
  const auto cause = record.query.catalog.cause_of(record.trace->answer_label);
  if (!cause) throw ValidationError(record.instance_id + ": trace answer is not a catalog label");
  const auto inst = reconstruct_instance(record);
  // Multi-token heads repeat the answer; only the last token is read as the answer.
  return {extract_features(inst), std::vector<int>(trace_length, token_of(*cause))};
}

// ---- objectives --------------------------------------------------------------

int reward(std::string_view text, std::string_view truth_label) {
  const auto answer = parse_answer(text);
  return answer && *answer == truth_label ? 1 : 0;
}

LossAndGrad sft_loss(const Policy& policy, const std::vector<SftExample>& batch) {
  if (batch.empty()) throw ValidationError("empty SFT batch");
  LossAndGrad out{0.0, std::vector<double>(policy.num_params(), 0.0)};
  const double per_record = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    if (ex.tokens.empty()) throw ValidationError("zero-length trace in SFT batch");
    const double w = per_record / static_cast<double>(ex.tokens.size());
    std::optional<int> prev;
    for (int t : ex.tokens) {
      const auto ctx = Policy::context_of(prev);
      const auto lp = policy.log_probabilities(ex.phi, ctx);
      out.value -= w * lp[static_cast<std::size_t>(t)];
      for (std::size_t v = 0; v < kVocabSize; ++v) {
        const double g = w * (std::exp(lp[v]) - (static_cast<int>(v) == t ? 1.0 : 0.0));
        for (std::size_t f = 0; f < kNumFeatures; ++f) out.grad[policy.index(ctx, v, f)] += g * ex.phi.values[f];
      }
      prev = t;
    }
  }
  return out;
}

GroupRollout sample_group(const PolicySnapshot& old, const TrainItem& item, std::size_t n, double temperature,
                          std::uint64_t seed) {
  if (n < 2) throw ValidationError("a group needs at least 2 samples");
  GroupRollout g{item.phi, item.catalog.label_of(item.truth), {}};
  for (std::size_t i = 0; i < n; ++i) {
    SampledTrajectory s;
    s.tokens = old.policy().sample(item.phi, temperature, derive_seed(seed, {i}));
    std::optional<int> prev;
    for (int t : s.tokens) {
      s.old_log_probs.push_back(old.policy().log_probabilities(item.phi, Policy::context_of(prev))[t]);
      prev = t;
    }
    s.text = trajectory_text(s.tokens, item.catalog);
    s.reward = reward(s.text, g.truth_label);
    g.trajectories.push_back(std::move(s));
  }
  return g;
}

std::vector<double> group_advantages(const std::vector<int>& rewards, double std_floor) {
  if (rewards.size() < 2) throw ValidationError("advantages need a group of at least 2");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (int r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (int r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < std_floor) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

void assign_advantages(GroupRollout& group, double std_floor) {
  std::vector<int> r;
  for (const auto& t : group.trajectories) r.push_back(t.reward);
  const auto adv = group_advantages(r, std_floor);
  for (std::size_t i = 0; i < adv.size(); ++i) group.trajectories[i].advantage = adv[i];
}

double clipped_term(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

double categorical_kl(const std::array<double, kVocabSize>& log_p, const std::array<double, kVocabSize>& log_r) {
  double kl = 0.0;
  for (std::size_t v = 0; v < kVocabSize; ++v) kl += std::exp(log_p[v]) * (log_p[v] - log_r[v]);
  return kl;
}

GrpoEvaluation grpo_objective(const Policy& policy, const PolicySnapshot& reference,
                              const std::vector<GroupRollout>& rollouts, const TrainConfig& config) {
  if (rollouts.empty()) throw ValidationError("no rollouts to optimize");
  GrpoEvaluation out;
  out.grad.assign(policy.num_params(), 0.0);
  const double eps = config.clip_eps;
  std::size_t tokens = 0, clipped = 0;
  double kl_sum = 0.0;

  for (const auto& g : rollouts) {
    const double group_weight = 1.0 / (static_cast<double>(rollouts.size()) * static_cast<double>(g.trajectories.size()));
    for (const auto& traj : g.trajectories) {
      if (traj.tokens.empty()) throw ValidationError("empty trajectory in a rollout");
      const double w = group_weight / static_cast<double>(traj.tokens.size());
      const double adv = traj.advantage;
      std::optional<int> prev;
      for (std::size_t j = 0; j < traj.tokens.size(); ++j) {
        const auto a = static_cast<std::size_t>(traj.tokens[j]);
        const auto ctx = Policy::context_of(prev);
        prev = traj.tokens[j];
        if (!std::isfinite(traj.old_log_probs[j]))
          throw NumericalGuardError("sampled token has zero probability under the old policy");

        const auto lp = policy.log_probabilities(g.phi, ctx);
        const auto lr = reference.policy().log_probabilities(g.phi, ctx);
        const double ratio = std::exp(lp[a] - traj.old_log_probs[j]);
        const double kl = categorical_kl(lp, lr);
        out.objective += w * (clipped_term(ratio, adv, eps) - config.kl_beta * kl);
        kl_sum += kl;
        ++tokens;

        // The unclipped branch is active unless the clipped one is strictly smaller and saturated.
        const bool saturated = ratio < 1.0 - eps || ratio > 1.0 + eps;
        const bool clip_active = saturated && std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv < ratio * adv;
        if (clip_active) ++clipped;
        const double surrogate_scale = clip_active ? 0.0 : adv * ratio;

        for (std::size_t v = 0; v < kVocabSize; ++v) {
          const double p = std::exp(lp[v]);
          const double d_logp = (v == a ? 1.0 : 0.0) - p;
          const double d_kl = p * (lp[v] - lr[v] - kl);
          const double g_logit = w * (surrogate_scale * d_logp - config.kl_beta * d_kl);
          if (g_logit == 0.0) continue;
          for (std::size_t f = 0; f < kNumFeatures; ++f) out.grad[policy.index(ctx, v, f)] += g_logit * g.phi.values[f];
        }
      }
    }
  }
  out.clip_fraction = tokens ? static_cast<double>(clipped) / static_cast<double>(tokens) : 0.0;
  out.mean_kl = tokens ? kl_sum / static_cast<double>(tokens) : 0.0;
  return out;
}

// ---- loops -------------------------------------------------------------------

std::vector<GroupRollout> sample_batch_serial(const PolicySnapshot& old, const std::vector<TrainItem>& items,
                                              const std::vector<std::size_t>& picks, const TrainConfig& config,
                                              std::uint64_t step_seed) {
  std::vector<GroupRollout> out;
  out.reserve(picks.size());
  for (std::size_t b = 0; b < picks.size(); ++b) {
    out.push_back(sample_group(old, items[picks[b]], config.group_size, config.temperature, derive_seed(step_seed, {b})));
    assign_advantages(out.back(), config.adv_std_floor);
  }
  return out;
}

std::vector<GroupRollout> sample_batch(const PolicySnapshot& old, const std::vector<TrainItem>& items,
                                       const std::vector<std::size_t>& picks, const TrainConfig& config,
                                       std::uint64_t step_seed) {
  std::vector<GroupRollout> out(picks.size());
  const auto n = static_cast<std::ptrdiff_t>(picks.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    const auto i = static_cast<std::size_t>(b);
    out[i] = sample_group(old, items[picks[i]], config.group_size, config.temperature, derive_seed(step_seed, {i}));
    assign_advantages(out[i], config.adv_std_floor);
  }
  return out;
}

StepMetrics grpo_step(Policy& policy, GrpoState& state, const PolicySnapshot& reference,
                      const std::vector<TrainItem>& items, const TrainConfig& config) {
  validate(config);
  if (items.empty()) throw ValidationError("no training items");
  const auto step_seed = derive_seed(config.seed, {0x6770ULL, state.step});
  std::mt19937_64 rng(step_seed);
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  std::vector<std::size_t> picks(config.batch_size);
  for (auto& p : picks) p = pick(rng);

  const PolicySnapshot old(policy, PolicySnapshot::Role::OLD);
  const auto rollouts = sample_batch(old, items, picks, config, step_seed);

  StepMetrics m;
  m.step = state.step;
  std::size_t count = 0;
  for (const auto& g : rollouts) {
    for (const auto& t : g.trajectories) {
      m.mean_reward += t.reward;
      m.mean_abs_advantage += std::abs(t.advantage);
      ++count;
    }
  }
  m.mean_reward /= static_cast<double>(count);
  m.mean_abs_advantage /= static_cast<double>(count);

  if (state.velocity.size() != policy.num_params()) state.velocity.assign(policy.num_params(), 0.0);
  for (std::size_t e = 0; e < config.inner_epochs; ++e) {
    const auto eval = grpo_objective(policy, reference, rollouts, config);
    for (std::size_t i = 0; i < state.velocity.size(); ++i)
      state.velocity[i] = config.momentum * state.velocity[i] + eval.grad[i];
    axpy(policy.params(), config.learning_rate, state.velocity);
    m.clip_fraction = eval.clip_fraction;
    m.kl = eval.mean_kl;
  }
  ++state.step;
  return m;
}

std::vector<StepMetrics> run_grpo(Policy& policy, const PolicySnapshot& reference, const std::vector<TrainItem>& items,
                                  const TrainConfig& config) {
  GrpoState state;
  std::vector<StepMetrics> history;
  history.reserve(config.rl_steps);
  for (std::size_t s = 0; s < config.rl_steps; ++s) history.push_back(grpo_step(policy, state, reference, items, config));
  return history;
}

SftHistory run_sft(Policy& policy, const std::vector<SftExample>& examples, const TrainConfig& config) {
  validate(config);
  if (examples.empty()) throw ValidationError("no SFT examples");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, {0x5F7ULL}));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(examples.size())));
  if (n_val == examples.size()) n_val = 0;
  std::vector<SftExample> train, val;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : train).push_back(examples[order[i]]);
  const auto& monitor = val.empty() ? train : val;

  SftHistory h;
  std::vector<double> velocity(policy.num_params(), 0.0);
  Policy best = policy;
  double best_loss = sft_loss(policy, monitor).value;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.sft_max_epochs; ++epoch) {
    const auto step = sft_loss(policy, train);
    for (std::size_t i = 0; i < velocity.size(); ++i) velocity[i] = config.momentum * velocity[i] + step.grad[i];
    axpy(policy.params(), -config.sft_learning_rate, velocity);
    const double v = sft_loss(policy, monitor).value;
    h.train_loss.push_back(step.value);
    h.validation_loss.push_back(v);
    if (v < best_loss - config.sft_min_delta) {
      best_loss = v;
      best = policy;
      h.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.sft_patience) {
      break;
    }
  }
  policy = best;
  return h;
}

TwoStageResult train_two_stage(const Policy& base, const std::vector<SftExample>& sft_data,
                               const std::vector<TrainItem>& rl_data, const TrainConfig& config) {
  if (sft_data.empty() || rl_data.empty()) throw ValidationError("both training sets must be non-empty");
  TwoStageResult r{base, base, {}, {}};
  r.sft_history = run_sft(r.sft, sft_data, config);
  const PolicySnapshot reference(r.sft, PolicySnapshot::Role::REFERENCE);
  r.rl = r.sft;
  r.rl_history = run_grpo(r.rl, reference, rl_data, config);
  return r;
}

// ---- checkpoints -------------------------------------------------------------

std::uint64_t vocabulary_hash(std::size_t trace_length) {
  std::string s = "len=" + std::to_string(trace_length);
  for (CauseId c : kAllCauses) s += "|" + std::string(to_string(c));
  return fnv1a64(s);
}

std::uint64_t feature_spec_hash() {
  std::string s;
  for (const char* n : feature_names()) s += std::string(n) + "|";
  return fnv1a64(s);
}

namespace {

nlohmann::json config_json(const TrainConfig& c) {
  return {{"group_size", c.group_size},
          {"clip_eps", c.clip_eps},
          {"kl_beta", c.kl_beta},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"rl_steps", c.rl_steps},
          {"inner_epochs", c.inner_epochs},
          {"temperature", c.temperature},
          {"adv_std_floor", c.adv_std_floor},
          {"seed", c.seed},
          {"sft_learning_rate", c.sft_learning_rate},
          {"sft_max_epochs", c.sft_max_epochs},
          {"sft_patience", c.sft_patience},
          {"sft_min_delta", c.sft_min_delta},
          {"validation_fraction", c.validation_fraction},
          {"trace_length", c.trace_length},
          {"init_scale", c.init_scale}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.group_size = j.at("group_size").get<std::size_t>();
  c.clip_eps = j.at("clip_eps").get<double>();
  c.kl_beta = j.at("kl_beta").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.rl_steps = j.at("rl_steps").get<std::size_t>();
  c.inner_epochs = j.at("inner_epochs").get<std::size_t>();
  c.temperature = j.at("temperature").get<double>();
  c.adv_std_floor = j.at("adv_std_floor").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sft_learning_rate = j.at("sft_learning_rate").get<double>();
  c.sft_max_epochs = j.at("sft_max_epochs").get<std::size_t>();
  c.sft_patience = j.at("sft_patience").get<std::size_t>();
  c.sft_min_delta = j.at("sft_min_delta").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.trace_length = j.at("trace_length").get<std::size_t>();
  c.init_scale = j.at("init_scale").get<double>();
  return c;
}

}  // namespace

std::string checkpoint_json(const Policy& policy, const TrainConfig& config) {
  const nlohmann::json j = {{"version", kCheckpointVersion},
                            {"vocabulary_hash", vocabulary_hash(policy.trace_length())},
                            {"feature_spec_hash", feature_spec_hash()},
                            {"trace_length", policy.trace_length()},
                            {"config", config_json(config)},
                            {"theta", policy.params()}};
  return j.dump(1);
}

Policy policy_from_checkpoint(const std::string& json_text, TrainConfig* config) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw DataIntegrityError("unsupported checkpoint version");
    const auto len = j.at("trace_length").get<std::size_t>();
    if (j.at("vocabulary_hash").get<std::uint64_t>() != vocabulary_hash(len))
      throw DataIntegrityError("checkpoint vocabulary does not match this build");
    if (j.at("feature_spec_hash").get<std::uint64_t>() != feature_spec_hash())
      throw DataIntegrityError("checkpoint feature spec does not match this build");
    Policy p(len);
    auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != p.num_params()) throw DataIntegrityError("checkpoint parameter count mismatch");
    p.params() = std::move(theta);
    if (config) *config = config_from_json(j.at("config"));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Policy& policy, const TrainConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << checkpoint_json(policy, config) << '\n';
}

Policy load_checkpoint(const std::string& path, TrainConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_checkpoint(ss.str(), config);
}

}  // namespace rca::train
