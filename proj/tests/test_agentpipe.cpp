#include <doctest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rca/agentpipe.hpp"
#include "rca/errors.hpp"
#include "rca/oracle.hpp"

using namespace rca;
using namespace rca::agent;

namespace {

std::vector<sim::LabeledInstance> instances(std::size_t n, std::uint64_t first_seed = 40) {
  std::vector<sim::InstanceRequest> req;
  for (std::size_t i = 0; i < n; ++i) req.push_back({kAllCauses[i % kNumCauses], first_seed + i, i + 1});
  return sim::build_batch(req);
}

std::vector<DatasetRecord> records(const std::vector<sim::LabeledInstance>& insts) {
  std::vector<DatasetRecord> out;
  for (std::size_t i = 0; i < insts.size(); ++i) out.push_back(make_record(insts[i], "i" + std::to_string(i), i, i + 1));
  return out;
}

Trajectory answer(std::optional<std::string> label) {
  return make_trajectory(label ? "thinking \\boxed{" + *label + "}" : std::string("no idea"));
}

// Minimal chat-completions endpoint: a long reply boxing `fallback`, after
// `failures_before_success` 503 responses.
class FakeLlm {
 public:
  explicit FakeLlm(std::string fallback, int failures_before_success = 0)
      : fallback_(std::move(fallback)), failures_left_(failures_before_success) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      {
        std::lock_guard lock(mu_);
        max_in_flight_ = std::max(max_in_flight_, now);
        ++requests_;
        auth_ = req.get_header_value("Authorization");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --in_flight_;
      if (failures_left_.fetch_sub(1) > 0) {
        res.status = 503;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const auto& prompt = body.at("messages").at(0).at("content").get_ref<const std::string&>();
      {
        std::lock_guard lock(mu_);
        model_ = body.at("model").get<std::string>();
        saw_instruction_ = saw_instruction_ || prompt.find("candidate") != std::string::npos;
      }
      std::string content = "I checked it all.";
      for (int i = 0; i < 80; ++i) content += " Candidate " + std::to_string(i % 8 + 1) + " was weighed against the rows.";
      content += " \\boxed{" + fallback_ + "}";
      const nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeLlm() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }
  int max_in_flight() {
    std::lock_guard lock(mu_);
    return max_in_flight_;
  }
  std::string auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }
  std::string model() {
    std::lock_guard lock(mu_);
    return model_;
  }
  bool saw_instruction() {
    std::lock_guard lock(mu_);
    return saw_instruction_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string fallback_;
  std::atomic<int> failures_left_;
  std::atomic<int> in_flight_{0};
  std::mutex mu_;
  int max_in_flight_ = 0;
  int requests_ = 0;
  std::string auth_, model_;
  bool saw_instruction_ = false;
};

AgentSpec remote(const std::string& url, Strategy s = Strategy::ELIMINATION) {
  AgentSpec a;
  a.strategy = s;
  a.backend = Backend::REMOTE_LLM;
  a.remote.base_url = url;
  a.remote.model = "toy-model";
  a.remote.api_key = "secret";
  return a;
}

}  // namespace

TEST_CASE("strategy and backend names") {
  CHECK(parse_strategy(to_string(Strategy::CONTRADICTION)) == Strategy::CONTRADICTION);
  CHECK(parse_backend(to_string(Backend::REMOTE_LLM)) == Backend::REMOTE_LLM);
  CHECK_THROWS_AS(parse_strategy("guess"), ValidationError);
  AgentSpec bad;
  bad.backend = Backend::REMOTE_LLM;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  PipelineConfig empty;
  empty.agents.clear();
  CHECK_THROWS_AS(validate(empty), ValidationError);
}

TEST_CASE("mock trajectories follow the oracle") {
  for (const auto& inst : instances(16)) {
    const auto label = inst.catalog.label_of(inst.ground_truth);
    const auto e = mock_trajectory(Strategy::ELIMINATION, inst);
    const auto c = mock_trajectory(Strategy::CONTRADICTION, inst);
    CHECK(e.terminal_answer == label);
    CHECK(c.terminal_answer == label);
    CHECK(e == mock_trajectory(Strategy::ELIMINATION, inst));
    CHECK_FALSE(e.tokens.empty());
    const auto boxed = c.text.rfind("\\boxed");
    for (const auto& entry : inst.catalog.entries()) {
      const auto pos = c.text.find(entry.label);
      CHECK(pos != std::string::npos);
      CHECK(pos < boxed);
    }
    CHECK(e.text != c.text);
  }
}

TEST_CASE("prompts carry the strategy instruction") {
  const auto inst = instances(1).front();
  const auto q = render_query(inst, "q");
  const auto e = wrap_prompt(Strategy::ELIMINATION, q);
  const auto c = wrap_prompt(Strategy::CONTRADICTION, q);
  CHECK(e.find(strategy_instruction(Strategy::ELIMINATION)) == 0);
  CHECK(c.find(strategy_instruction(Strategy::CONTRADICTION)) == 0);
  CHECK(e.find(q.text) != std::string::npos);
}

TEST_CASE("majority vote") {
  CHECK(majority_vote({answer("C3"), answer("C3")}) == 0);
  CHECK(majority_vote({answer("C3"), answer("C1")}) == 0);
  CHECK(majority_vote({answer(std::nullopt), answer("C2"), answer("C2")}) == 1);
  CHECK(majority_vote({answer("C1"), answer(std::nullopt), answer(std::nullopt)}) == 1);
  CHECK(majority_vote({answer("C5"), answer("C4"), answer("C4"), answer("C5")}) == 0);
  CHECK_THROWS_AS(majority_vote({}), ValidationError);
}

TEST_CASE("aggregation filters and compresses") {
  for (const auto& inst : instances(8)) {
    const auto good = mock_trajectory(Strategy::ELIMINATION, inst);
    const auto r = aggregate(good, inst);
    REQUIRE(r.trace.has_value());
    CHECK(r.trace->answer_label == inst.catalog.label_of(inst.ground_truth));
    CHECK(Tokenizer::standard().count_tokens(render(*r.trace)) < good.token_count);

    const auto wrong_cause = inst.ground_truth == CauseId::SPEED_GT_40 ? CauseId::INSUFFICIENT_RB : CauseId::SPEED_GT_40;
    const auto bad = aggregate(answer(inst.catalog.label_of(wrong_cause)), inst);
    CHECK_FALSE(bad.trace.has_value());
    CHECK_FALSE(bad.rejection.empty());
  }
}

TEST_CASE("mock pipeline over 100 instances") {
  const auto recs = records(instances(100));
  const auto rep = build_sft_dataset(recs, {});
  CHECK(rep.total == 100);
  CHECK(rep.acceptance_rate() == 1.0);
  CHECK(rep.failures.empty());
  CHECK(rep.mean_reduction() < 1.0);
  for (const auto& r : rep.records) {
    REQUIRE(r.trace.has_value());
    CHECK(parse_answer(render(*r.trace)) == r.ground_truth_label);
  }
  std::size_t hist_total = 0;
  for (const auto& [lo, n] : rep.reduction_histogram(0.1)) hist_total += n;
  CHECK(hist_total == rep.records.size());
  CHECK(build_sft_dataset(recs, {}).records == rep.records);
}

TEST_CASE("remote agent against a local endpoint") {
  const auto inst = instances(1).front();
  const auto label = inst.catalog.label_of(inst.ground_truth);
  FakeLlm llm(label, 1);  // first call fails, the retry succeeds
  const auto q = render_query(inst, "remote-1");
  const auto t = remote_solve(remote(llm.url()), q, 2, 5.0);
  CHECK(t.terminal_answer == label);
  CHECK(llm.requests() == 2);
  CHECK(llm.auth() == "Bearer secret");
  CHECK(llm.model() == "toy-model");
  CHECK(llm.saw_instruction());
}

TEST_CASE("remote pipeline keeps the raw trajectory and bounds concurrency") {
  const auto insts = instances(6);
  auto recs = records(insts);
  // Every instance uses the same ground-truth cause so a single canned reply is correct.
  for (auto& r : recs) r = make_record(insts[0], r.instance_id, 0, 1);
  FakeLlm llm(insts[0].catalog.label_of(insts[0].ground_truth));
  PipelineConfig cfg;
  cfg.agents = {remote(llm.url(), Strategy::ELIMINATION), remote(llm.url(), Strategy::CONTRADICTION)};
  cfg.max_in_flight = 2;
  const auto rep = build_sft_dataset(recs, cfg);
  CHECK(rep.failures.empty());
  CHECK(rep.records.size() == recs.size());
  CHECK(llm.max_in_flight() <= 2);
  for (const auto& r : rep.records) {
    REQUIRE(r.raw_trajectory.has_value());
    CHECK(r.raw_trajectory->find("I checked it all.") != std::string::npos);
  }
}

TEST_CASE("unreachable endpoint") {
  const auto inst = instances(1).front();
  const auto q = render_query(inst, "lost-1");
  try {
    remote_solve(remote("http://127.0.0.1:1"), q, 1, 1.0);
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.instance_id() == "lost-1");
  }

  PipelineConfig cfg;
  cfg.agents = {remote("http://127.0.0.1:1")};
  cfg.retries = 0;
  cfg.timeout_s = 1.0;
  const auto rep = build_sft_dataset(records({inst}), cfg);
  CHECK(rep.records.empty());
  REQUIRE(rep.failures.size() == 1);
  CHECK(rep.failures.front().instance_id == "i0");
}
