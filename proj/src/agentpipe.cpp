#include "rca/agentpipe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/text_format.hpp"

namespace rca::agent {

namespace {

std::string num(double v) { return format_decimal(v, 2); }

std::string comparator_words(const std::string& c) {
  if (c == ">") return "above";
  if (c == "<") return "below";
  return "at least";
}

bool holds(const oracle::Fact& f) {
  if (f.comparator == ">") return f.value > f.threshold;
  if (f.comparator == "<") return f.value < f.threshold;
  return f.value >= f.threshold;
}

const oracle::CauseEvidence& evidence_for(const std::vector<oracle::CauseEvidence>& ev, CauseId c) {
  return *std::find_if(ev.begin(), ev.end(), [c](const auto& e) { return e.cause == c; });
}

std::string window_line(const Symptom& s) {
  return std::to_string(s.affected_indices.size()) + " samples have throughput below 600 Mbps, starting at sample " +
         std::to_string(s.onset_index + 1) + ".";
}

// Agents read the affected rows before reasoning, as a language model would.
void read_rows(std::vector<std::string>& out, const sim::LabeledInstance& inst) {
  out.push_back("Reading the table row by row:");
  for (auto i : inst.symptom.affected_indices) {
    const auto& s = inst.trace.samples[i];
    out.push_back("Sample " + std::to_string(i + 1) + ": speed " + format_integer(s.gps_speed) + " km/h, serving PCI " +
                  std::to_string(s.serving_pci) + ", RSRP " + num(s.ss_rsrp) + " dBm, SINR " + num(s.ss_sinr) +
                  " dB, throughput " + num(s.mac_dl_throughput) + " Mbps, RBs " + num(s.dl_rb_num) + ".");
  }
}

std::string elimination_text(const oracle::Diagnosis& d, const sim::LabeledInstance& inst) {
  std::vector<std::string> out = {"Strategy: elimination.",
                                  "First, look at the affected window: " + window_line(inst.symptom),
                                  "For each candidate, check the evidence against its rule."};
  read_rows(out, inst);
  std::vector<const CatalogEntry*> kept;
  int step = 1;
  for (const auto& entry : inst.catalog.entries()) {
    const auto& e = evidence_for(d.evidence, entry.cause);
    out.push_back("Step " + std::to_string(step++) + ": candidate " + entry.label + ". " + entry.description);
    for (const auto& f : e.facts) {
      out.push_back("The evidence: " + f.name + " is " + num(f.value) + ", the rule threshold is " +
                    comparator_words(f.comparator) + " " + num(f.threshold) + ". The rule " +
                    (holds(f) ? "holds." : "fails."));
    }
    out.push_back(e.triggered ? "So " + entry.label + " is kept." : "So " + entry.label + " is eliminated.");
    if (e.triggered) kept.push_back(&entry);
  }
  std::string remaining;
  for (const auto* k : kept) remaining += (remaining.empty() ? "" : ", ") + k->label;
  out.push_back("Reviewing the remaining candidates: " + remaining + ".");
  for (const auto* k : kept) {
    const auto& e = evidence_for(d.evidence, k->cause);
    for (const auto& f : e.facts) {
      out.push_back("Double-check " + k->label + " once more: " + f.name + " is " + num(f.value) + " against " +
                    comparator_words(f.comparator) + " " + num(f.threshold) + ", the rule holds.");
    }
    out.push_back("Score of " + k->label + ": " + num(e.score) + ".");
  }
  std::string eliminated;
  for (const auto& entry : inst.catalog.entries()) {
    if (!evidence_for(d.evidence, entry.cause).triggered)
      eliminated += (eliminated.empty() ? "" : ", ") + entry.label + " eliminated";
  }
  out.push_back("Re-check the eliminated candidates quickly: " + eliminated + ".");
  const auto& label = inst.catalog.label_of(d.cause);
  out.push_back("Comparing kept candidates by score, the most likely is " + label + ".");
  out.push_back("Therefore the final answer is \\boxed{" + label + "}.");
  return join(out, "\n");
}

std::string contradiction_text(const oracle::Diagnosis& d, const sim::LabeledInstance& inst) {
  std::vector<std::string> out = {"Strategy: contradiction.", "The affected window: " + window_line(inst.symptom)};
  read_rows(out, inst);
  std::vector<const CatalogEntry*> survivors;
  for (const auto& entry : inst.catalog.entries()) {
    const auto& e = evidence_for(d.evidence, entry.cause);
    out.push_back("Assume " + entry.label + ": " + entry.description);
    for (const auto& f : e.facts) {
      out.push_back("If this held, we would expect " + f.name + " " + comparator_words(f.comparator) + " " +
                    num(f.threshold) + ". Observed value: " + num(f.value) + ". " +
                    (holds(f) ? "This is consistent." : "This is a contradiction."));
    }
    out.push_back(e.triggered ? "No contradiction, so " + entry.label + " remains."
                              : "Contradiction found, so " + entry.label + " is discarded.");
    if (e.triggered) survivors.push_back(&entry);
  }
  std::string names;
  for (const auto* s : survivors) names += (names.empty() ? "" : ", ") + s->label;
  out.push_back("Candidates without contradiction: " + names + ".");
  for (const auto* s : survivors) {
    const auto& e = evidence_for(d.evidence, s->cause);
    for (const auto& f : e.facts) {
      out.push_back("Verify " + s->label + " again: " + f.name + " is " + num(f.value) + ", " +
                    comparator_words(f.comparator) + " " + num(f.threshold) + " holds.");
    }
    out.push_back("Score of " + s->label + ": " + num(e.score) + ".");
  }
  const auto& label = inst.catalog.label_of(d.cause);
  out.push_back("Conclusion: the final answer is \\boxed{" + label + "}.");
  return join(out, "\n");
}

struct Endpoint {
  std::string host;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& base) {
  const auto scheme = base.find("://");
  if (scheme == std::string::npos) throw ValidationError("endpoint must include a scheme: " + base);
  const auto slash = base.find('/', scheme + 3);
  Endpoint e{base.substr(0, slash), slash == std::string::npos ? "" : base.substr(slash)};
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  e.path += "/v1/chat/completions";
  return e;
}

}  // namespace

std::string_view to_string(Strategy s) { return s == Strategy::ELIMINATION ? "elimination" : "contradiction"; }
std::string_view to_string(Backend b) { return b == Backend::MOCK_ORACLE ? "mock" : "remote"; }

Strategy parse_strategy(std::string_view text) {
  if (text == "elimination") return Strategy::ELIMINATION;
  if (text == "contradiction") return Strategy::CONTRADICTION;
  throw ValidationError("unknown strategy '" + std::string(text) + "'");
}

Backend parse_backend(std::string_view text) {
  if (text == "mock") return Backend::MOCK_ORACLE;
  if (text == "remote") return Backend::REMOTE_LLM;
  throw ValidationError("unknown backend '" + std::string(text) + "'");
}

RemoteParams remote_params_from_env() {
  auto get = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  RemoteParams p;
  p.base_url = get("RCA_LLM_BASE_URL");
  p.api_key = get("RCA_LLM_API_KEY");
  p.model = get("RCA_LLM_MODEL");
  return p;
}

void validate(const AgentSpec& spec) {
  if (spec.backend == Backend::REMOTE_LLM && (spec.remote.base_url.empty() || spec.remote.model.empty()))
    throw ValidationError("a remote agent needs an endpoint and a model name");
  if (spec.remote.temperature < 0.0) throw ValidationError("temperature must be >= 0");
}

void validate(const PipelineConfig& config) {
  if (config.agents.empty()) throw ValidationError("the pipeline needs at least one agent");
  if (config.max_in_flight < 1) throw ValidationError("max_in_flight must be positive");
  if (config.retries < 0) throw ValidationError("retries must be >= 0");
  if (!(config.timeout_s > 0.0)) throw ValidationError("timeout must be positive");
  for (const auto& a : config.agents) validate(a);
}

Trajectory make_trajectory(std::string text) {
  Trajectory t;
  const auto& tok = Tokenizer::standard();
  try {
    t.tokens = tok.tokenize(text);
  } catch (const TokenizationError&) {
    t.tokens.clear();
  }
  t.token_count = tok.count_tokens(text);
  t.terminal_answer = parse_answer(text);
  t.text = std::move(text);
  return t;
}

std::string strategy_instruction(Strategy s) {
  if (s == Strategy::ELIMINATION) {
    return "Evaluate each candidate root cause against the observed symptom. Rule out every candidate the data "
           "contradict, then choose among the ones left.";
  }
  return "Assume each candidate root cause in turn and look for a contradiction in the data. Keep only the "
         "candidates that survive, then choose among them.";
}

std::string wrap_prompt(Strategy s, const RenderedQuery& query) { return strategy_instruction(s) + "\n\n" + query.text; }

Trajectory mock_trajectory(Strategy s, const sim::LabeledInstance& instance) {
  const auto d = oracle::diagnose(instance.scenario, instance.trace, instance.symptom, instance.catalog);
  return make_trajectory(s == Strategy::ELIMINATION ? elimination_text(d, instance) : contradiction_text(d, instance));
}

Trajectory remote_solve(const AgentSpec& spec, const RenderedQuery& query, int retries, double timeout_s) {
  validate(spec);
  const auto endpoint = split_url(spec.remote.base_url);
  const nlohmann::json body = {
      {"model", spec.remote.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", wrap_prompt(spec.strategy, query)}}})},
      {"temperature", spec.remote.temperature}};
  const auto payload = body.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      httplib::Client client(endpoint.host);
      const auto secs = static_cast<time_t>(std::ceil(timeout_s));
      client.set_connection_timeout(secs, 0);
      client.set_read_timeout(secs, 0);
      client.set_write_timeout(secs, 0);
      httplib::Headers headers;
      if (!spec.remote.api_key.empty()) headers.emplace("Authorization", "Bearer " + spec.remote.api_key);
      auto res = client.Post(endpoint.path, headers, payload, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      const auto reply = nlohmann::json::parse(res->body);
      return make_trajectory(reply.at("choices").at(0).at("message").at("content").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw TransportError(query.instance_id, last_error + " after " + std::to_string(retries + 1) + " attempt(s)");
}

Trajectory agent_solve(const AgentSpec& spec, const RenderedQuery& query, const sim::LabeledInstance* instance,
                       int retries, double timeout_s) {
  validate(spec);
  if (spec.backend == Backend::REMOTE_LLM) return remote_solve(spec, query, retries, timeout_s);
  if (!instance) throw ValidationError("the mock backend needs the underlying instance");
  return mock_trajectory(spec.strategy, *instance);
}

std::size_t majority_vote(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw ValidationError("cannot vote over zero trajectories");
  std::size_t best = 0, best_count = 0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto count = static_cast<std::size_t>(
        std::count_if(trajectories.begin(), trajectories.end(),
                      [&](const Trajectory& t) { return t.terminal_answer == trajectories[i].terminal_answer; }));
    if (count > best_count) {
      best = i;
      best_count = count;
    }
  }
  return best;
}

AggregateResult aggregate(const Trajectory& selected, const sim::LabeledInstance& instance) {
  const auto& truth = instance.catalog.label_of(instance.ground_truth);
  if (selected.terminal_answer != truth) {
    return {std::nullopt, "answer " + selected.terminal_answer.value_or("none") + " differs from " + truth};
  }
  auto d = oracle::diagnose(instance.scenario, instance.trace, instance.symptom, instance.catalog);
  if (d.trace.answer_label != truth) return {std::nullopt, "evidence does not support " + truth};
  const auto compact = Tokenizer::standard().count_tokens(render(d.trace));
  if (compact >= selected.token_count) return {std::nullopt, "structured trace would not be shorter"};
  return {std::move(d.trace), {}};
}

double SftBuildReport::acceptance_rate() const {
  return total == 0 ? 0.0 : static_cast<double>(records.size()) / static_cast<double>(total);
}

double SftBuildReport::mean_reduction() const {
  if (reduction_ratios.empty()) return 0.0;
  double s = 0.0;
  for (double r : reduction_ratios) s += r;
  return s / static_cast<double>(reduction_ratios.size());
}

std::map<double, std::size_t> SftBuildReport::reduction_histogram(double width) const {
  if (!(width > 0.0)) throw ValidationError("histogram width must be positive");
  std::map<double, std::size_t> h;
  for (double r : reduction_ratios) h[std::floor(r / width) * width]++;
  return h;
}

SftBuildReport build_sft_dataset(const std::vector<DatasetRecord>& records, const PipelineConfig& config) {
  validate(config);
  if (records.empty()) throw ValidationError("no records to process");
  const std::size_t n = records.size(), m = config.agents.size();

  SftBuildReport report;
  report.total = n;
  std::vector<std::optional<sim::LabeledInstance>> instances(n);
  std::vector<std::string> errors(n);
  std::vector<std::vector<Trajectory>> results(n, std::vector<Trajectory>(m));
  std::vector<std::pair<std::size_t, std::size_t>> remote_tasks;

  for (std::size_t i = 0; i < n; ++i) {
    try {
      instances[i] = reconstruct_instance(records[i]);
    } catch (const DataIntegrityError& e) {
      errors[i] = e.what();
      continue;
    }
    for (std::size_t a = 0; a < m; ++a) {
      if (config.agents[a].backend == Backend::REMOTE_LLM) {
        remote_tasks.emplace_back(i, a);
      } else {
        results[i][a] = mock_trajectory(config.agents[a].strategy, *instances[i]);
      }
    }
  }

  // At most max_in_flight requests outstanding; results land in their (instance, agent) slot.
  if (!remote_tasks.empty()) {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    auto worker = [&] {
      for (auto k = next++; k < remote_tasks.size(); k = next++) {
        const auto [i, a] = remote_tasks[k];
        try {
          results[i][a] = remote_solve(config.agents[a], records[i].query, config.retries, config.timeout_s);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (errors[i].empty()) errors[i] = e.what();
        }
      }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), remote_tasks.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      report.failures.push_back({records[i].instance_id, errors[i]});
      continue;
    }
    const auto chosen = majority_vote(results[i]);
    const auto& selected = results[i][chosen];
    auto agg = aggregate(selected, *instances[i]);
    if (!agg.trace) {
      ++report.rejected;
      continue;
    }
    DatasetRecord out = records[i];
    report.reduction_ratios.push_back(static_cast<double>(Tokenizer::standard().count_tokens(render(*agg.trace))) /
                                      static_cast<double>(selected.token_count));
    out.trace = std::move(agg.trace);
    if (config.agents[chosen].backend == Backend::REMOTE_LLM) out.raw_trajectory = selected.text;
    report.records.push_back(std::move(out));
  }
  return report;
}

}  // namespace rca::agent
