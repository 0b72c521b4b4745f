#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/seeding.hpp"
#include "rca/trainer.hpp"

using namespace rca;
using namespace rca::train;

namespace {

std::vector<DatasetRecord> labeled_records(std::size_t n, std::uint64_t first_seed) {
  std::vector<sim::InstanceRequest> req;
  for (std::size_t i = 0; i < n; ++i) req.push_back({kAllCauses[i % kNumCauses], first_seed + i, 0});
  std::vector<DatasetRecord> out;
  const auto insts = sim::build_batch(req);
  for (std::size_t i = 0; i < insts.size(); ++i) {
    auto r = make_record(insts[i], "t" + std::to_string(i), i);
    const auto& in = insts[i];
    r.trace = oracle::diagnose(in.scenario, in.trace, in.symptom, in.catalog).trace;
    out.push_back(std::move(r));
  }
  return out;
}

const std::vector<DatasetRecord>& corpus() {
  static const auto recs = labeled_records(96, 700);
  return recs;
}

std::vector<TrainItem> items(std::size_t from, std::size_t to) {
  std::vector<TrainItem> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(make_item(corpus()[i]));
  return out;
}

std::vector<SftExample> examples(std::size_t from, std::size_t to, std::size_t len = 1) {
  std::vector<SftExample> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(make_sft_example(corpus()[i], len));
  return out;
}

template <class F>
double central_difference(Policy p, std::size_t i, F&& f, double h = 1e-5) {
  const double x = p.params()[i];
  p.params()[i] = x + h;
  const double up = f(p);
  p.params()[i] = x - h;
  const double down = f(p);
  return (up - down) / (2.0 * h);
}

// Worst per-coordinate relative error, with a small absolute floor for coordinates near zero.
template <class F>
double worst_relative_error(const Policy& p, const std::vector<double>& grad, F&& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.num_params(); ++i) {
    const double fd = central_difference(p, i, f);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-4});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

SampledTrajectory single(int token, double old_lp, double adv) {
  SampledTrajectory t;
  t.tokens = {token};
  t.old_log_probs = {old_lp};
  t.advantage = adv;
  return t;
}

}  // namespace

TEST_CASE("reward indicator") {
  CHECK(reward("because of the overshoot \\boxed{C3}", "C3") == 1);
  CHECK(reward("\\boxed{C1}", "C3") == 0);
  CHECK(reward("no boxed answer", "C3") == 0);
  CHECK(reward("\\boxed{3}", "C3") == 1);
}

TEST_CASE("sft loss reference values") {
  const Policy zero(1);
  const auto ex = examples(0, 8);
  CHECK(sft_loss(zero, ex).value == doctest::Approx(std::log(8.0)));
  CHECK(std::log(8.0) == doctest::Approx(2.0794).epsilon(1e-4));

  // A confident policy drives the loss towards zero.
  Policy sharp(1);
  SftExample one{ex[0].phi, ex[0].tokens};
  one.phi.values.fill(0.0);
  one.phi.values[kNumFeatures - 1] = 1.0;
  sharp.params()[sharp.index(0, static_cast<std::size_t>(one.tokens[0]), kNumFeatures - 1)] = 60.0;
  CHECK(sft_loss(sharp, {one}).value == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(sft_loss(zero, {}), ValidationError);
  CHECK_THROWS_AS(sft_loss(zero, {SftExample{ex[0].phi, {}}}), ValidationError);
}

TEST_CASE("sft gradient matches finite differences") {
  for (std::uint64_t draw = 0; draw < 10; ++draw) {
    const std::size_t len = 1 + draw % 2;
    const auto p = Policy::random(900 + draw, 0.5, len);
    const auto batch = examples(draw * 8, draw * 8 + 8, len);
    const auto g = sft_loss(p, batch);
    const double err = worst_relative_error(p, g.grad, [&](const Policy& q) { return sft_loss(q, batch).value; });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("group advantages") {
  const auto a = group_advantages({1, 0, 0, 0, 0, 0, 0, 0});
  CHECK(a[0] == doctest::Approx(2.6458).epsilon(1e-4));
  for (std::size_t i = 1; i < 8; ++i) CHECK(a[i] == doctest::Approx(-0.3780).epsilon(1e-3));
  const auto b = group_advantages({1, 0});
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == doctest::Approx(-1.0));
  for (double v : group_advantages({1, 1, 1, 1})) CHECK(v == 0.0);
  for (double v : group_advantages({0, 0})) CHECK(v == 0.0);
  CHECK_THROWS_AS(group_advantages({1}), ValidationError);
}

TEST_CASE("clipped surrogate term") {
  CHECK(clipped_term(2.0, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(clipped_term(1.0, 0.7, 0.2) == doctest::Approx(0.7));
  CHECK(clipped_term(0.5, 1.0, 0.2) == doctest::Approx(0.5));
  CHECK(clipped_term(2.0, -1.0, 0.2) == doctest::Approx(-2.0));
}

TEST_CASE("exact categorical KL") {
  std::array<double, kVocabSize> uniform{}, peaked{};
  uniform.fill(-std::log(8.0));
  double z = 0.0;
  for (std::size_t v = 0; v < kVocabSize; ++v) z += std::exp(v == 0 ? 5.0 : 0.0);
  for (std::size_t v = 0; v < kVocabSize; ++v) peaked[v] = (v == 0 ? 5.0 : 0.0) - std::log(z);
  CHECK(categorical_kl(uniform, uniform) == doctest::Approx(0.0));
  double expect = 0.0;
  for (std::size_t v = 0; v < kVocabSize; ++v) expect += (1.0 / 8.0) * (uniform[v] - peaked[v]);
  CHECK(categorical_kl(uniform, peaked) == doctest::Approx(expect));
  CHECK(categorical_kl(uniform, peaked) > 0.0);
}

TEST_CASE("grpo objective at the old policy") {
  const auto p = Policy::random(17, 0.3);
  const PolicySnapshot old(p, PolicySnapshot::Role::OLD);
  TrainConfig cfg;
  cfg.kl_beta = 0.0;
  std::vector<GroupRollout> rollouts;
  const auto its = items(0, 6);
  for (std::size_t i = 0; i < its.size(); ++i) {
    rollouts.push_back(sample_group(old, its[i], 8, 1.0, 100 + i));
    assign_advantages(rollouts.back(), cfg.adv_std_floor);
  }
  const auto eval = grpo_objective(p, old, rollouts, cfg);

  double mean_adv = 0.0;
  std::vector<double> pg(p.num_params(), 0.0);
  for (const auto& g : rollouts) {
    for (const auto& t : g.trajectories) {
      mean_adv += t.advantage / (rollouts.size() * g.trajectories.size());
      const auto probs = p.probabilities(g.phi, 0);
      for (std::size_t v = 0; v < kVocabSize; ++v) {
        const double d = (static_cast<int>(v) == t.tokens[0] ? 1.0 : 0.0) - probs[v];
        for (std::size_t f = 0; f < kNumFeatures; ++f)
          pg[p.index(0, v, f)] += t.advantage * d * g.phi.values[f] / (rollouts.size() * g.trajectories.size());
      }
    }
  }
  CHECK(eval.objective == doctest::Approx(mean_adv));
  CHECK(eval.clip_fraction == 0.0);
  for (std::size_t i = 0; i < pg.size(); ++i) CHECK(eval.grad[i] == doctest::Approx(pg[i]).epsilon(1e-9));
}

TEST_CASE("single-token ratio examples through the objective") {
  // Zero-feature policy is uniform, so the new log-prob of any token is -ln 8.
  const Policy p(1);
  const PolicySnapshot ref(p, PolicySnapshot::Role::REFERENCE);
  TrainConfig cfg;
  cfg.kl_beta = 0.0;
  GroupRollout g;
  g.phi.values[kNumFeatures - 1] = 1.0;
  const double lp = -std::log(8.0);
  g.trajectories = {single(0, lp - std::log(2.0), 1.0)};
  CHECK(grpo_objective(p, ref, {g}, cfg).objective == doctest::Approx(1.2));
  g.trajectories = {single(0, lp - std::log(0.5), -1.0)};
  const auto e = grpo_objective(p, ref, {g}, cfg);
  CHECK(e.objective == doctest::Approx(-0.8));
  CHECK(e.clip_fraction == 1.0);
  g.trajectories = {single(0, -std::numeric_limits<double>::infinity(), 1.0)};
  CHECK_THROWS_AS(grpo_objective(p, ref, {g}, cfg), NumericalGuardError);
}

TEST_CASE("grpo gradient matches finite differences") {
  TrainConfig cfg;
  cfg.kl_beta = 0.05;
  for (std::uint64_t draw = 0; draw < 10; ++draw) {
    const std::size_t len = 1 + draw % 2;
    const auto old_policy = Policy::random(300 + draw, 0.4, len);
    const auto reference = Policy::random(400 + draw, 0.4, len);
    const PolicySnapshot old(old_policy, PolicySnapshot::Role::OLD);
    const PolicySnapshot ref(reference, PolicySnapshot::Role::REFERENCE);
    std::vector<GroupRollout> rollouts;
    for (std::size_t i = 0; i < 4; ++i) {
      rollouts.push_back(sample_group(old, make_item(corpus()[draw * 4 + i]), 6, 1.0, derive_seed(draw, {i})));
      assign_advantages(rollouts.back(), cfg.adv_std_floor);
    }
    // Move away from the old policy so some ratios leave the clip region, but not onto a kink.
    auto p = old_policy;
    std::mt19937_64 rng(draw);
    std::normal_distribution<double> noise(0.0, 0.08);
    for (auto& v : p.params()) v += noise(rng);
    const auto eval = grpo_objective(p, ref, rollouts, cfg);
    const double err = worst_relative_error(
        p, eval.grad, [&](const Policy& q) { return grpo_objective(q, ref, rollouts, cfg).objective; });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("sampling") {
  const auto p = Policy::random(5, 0.8);
  const auto item = make_item(corpus()[3]);
  const PolicySnapshot old(p, PolicySnapshot::Role::OLD);

  const auto greedy = sample_group(old, item, 6, 0.0, 1);
  for (const auto& t : greedy.trajectories) CHECK(t.tokens == greedy.trajectories[0].tokens);
  const auto probs = p.probabilities(item.phi, 0);
  const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
  CHECK(greedy.trajectories[0].tokens[0] == best);

  const auto a = sample_group(old, item, 8, 1.0, 77);
  const auto b = sample_group(old, item, 8, 1.0, 77);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a.trajectories[i].tokens == b.trajectories[i].tokens);
    CHECK(a.trajectories[i].old_log_probs[0] == p.log_probabilities(item.phi, 0)[a.trajectories[i].tokens[0]]);
  }
  CHECK_THROWS_AS(sample_group(old, item, 1, 1.0, 1), ValidationError);

  const int n = 10000;
  std::array<int, kVocabSize> hist{};
  for (int i = 0; i < n; ++i) ++hist[static_cast<std::size_t>(p.sample(item.phi, 1.0, derive_seed(31, {std::uint64_t(i)}))[0])];
  for (std::size_t v = 0; v < kVocabSize; ++v) {
    const double sigma = std::sqrt(n * probs[v] * (1.0 - probs[v]));
    CHECK(std::abs(hist[v] - n * probs[v]) <= 3.0 * sigma + 1.0);
  }
}

TEST_CASE("parallel batch sampling matches the serial reference") {
  const auto p = Policy::random(8, 0.5);
  const PolicySnapshot old(p, PolicySnapshot::Role::OLD);
  const auto its = items(0, 32);
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < 20; ++i) picks.push_back((i * 7) % its.size());
  TrainConfig cfg;
  const auto a = sample_batch(old, its, picks, cfg, 99);
  const auto b = sample_batch_serial(old, its, picks, cfg, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].trajectories.size() == b[i].trajectories.size());
    for (std::size_t k = 0; k < a[i].trajectories.size(); ++k) {
      CHECK(a[i].trajectories[k].tokens == b[i].trajectories[k].tokens);
      CHECK(a[i].trajectories[k].advantage == b[i].trajectories[k].advantage);
    }
  }
}

TEST_CASE("grpo step bookkeeping") {
  const auto its = items(0, 48);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  auto p = Policy::random(2, 0.1);
  const auto before = p;
  const PolicySnapshot ref(p, PolicySnapshot::Role::REFERENCE);
  GrpoState state;
  const auto m = grpo_step(p, state, ref, its, cfg);
  CHECK(p == before);
  CHECK(state.step == 1);
  CHECK(m.clip_fraction >= 0.0);
  CHECK(m.clip_fraction <= 1.0);

  cfg.learning_rate = 0.02;
  cfg.rl_steps = 20;
  auto q = before;
  for (const auto& s : run_grpo(q, ref, its, cfg)) {
    CHECK(s.clip_fraction >= 0.0);
    CHECK(s.clip_fraction <= 1.0);
    CHECK(s.mean_reward >= 0.0);
    CHECK(s.mean_reward <= 1.0);
  }
  CHECK_FALSE(q == before);
}

TEST_CASE("two-stage training") {
  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.momentum = 0.9;
  cfg.rl_steps = 30;
  cfg.sft_learning_rate = 0.5;
  cfg.sft_max_epochs = 300;
  cfg.seed = 11;
  const auto base = Policy::random(cfg.seed, cfg.init_scale);
  const auto sft = examples(0, 80);
  const auto rl = items(0, 80);

  const auto r = train_two_stage(base, sft, rl, cfg);
  CHECK_FALSE(r.sft_history.validation_loss.empty());

  // Stage two starts from, and is anchored to, the stage-one policy.
  auto replay = r.sft;
  run_grpo(replay, PolicySnapshot(r.sft, PolicySnapshot::Role::REFERENCE), rl, cfg);
  CHECK(replay == r.rl);

  auto cold = base;
  const auto cold_hist = run_grpo(cold, PolicySnapshot(base, PolicySnapshot::Role::REFERENCE), rl, cfg);
  auto first_at = [](const std::vector<StepMetrics>& h) {
    for (std::size_t i = 0; i < h.size(); ++i)
      if (h[i].mean_reward >= 0.9) return i;
    return h.size() + 1;
  };
  CHECK(first_at(r.rl_history) < first_at(cold_hist));

  // Held-out accuracy of the final policy.
  int correct = 0;
  for (std::size_t i = 80; i < corpus().size(); ++i) {
    const auto it = make_item(corpus()[i]);
    correct += r.rl.sample(it.phi, 0.0, 0).back() == token_of(it.truth);
  }
  CHECK(correct >= 15);

  CHECK_THROWS_AS(train_two_stage(base, {}, rl, cfg), ValidationError);
}

TEST_CASE("records without traces cannot feed SFT") {
  auto r = corpus()[0];
  r.trace.reset();
  CHECK_THROWS_AS(make_sft_example(r), ValidationError);
}

TEST_CASE("checkpoints") {
  const auto p = Policy::random(21, 0.3, 2);
  TrainConfig cfg;
  cfg.trace_length = 2;
  cfg.rl_steps = 7;
  TrainConfig back;
  const auto q = policy_from_checkpoint(checkpoint_json(p, cfg), &back);
  CHECK(q == p);
  CHECK(back == cfg);

  auto j = nlohmann::json::parse(checkpoint_json(p, cfg));
  j["vocabulary_hash"] = j["vocabulary_hash"].get<std::uint64_t>() + 1;
  CHECK_THROWS_AS(policy_from_checkpoint(j.dump()), DataIntegrityError);
  j = nlohmann::json::parse(checkpoint_json(p, cfg));
  j["feature_spec_hash"] = 1;
  CHECK_THROWS_AS(policy_from_checkpoint(j.dump()), DataIntegrityError);
  CHECK_THROWS_AS(policy_from_checkpoint("{not json"), ParseError);

  const auto path = (std::filesystem::temp_directory_path() / "rca_trainer_ckpt.json").string();
  save_checkpoint(path, p, cfg);
  CHECK(load_checkpoint(path) == p);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), DependencyError);
}
