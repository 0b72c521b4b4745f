#include <cstdio>
#include <fstream>
#include <memory>

#include "rca/cli.hpp"
#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/seeding.hpp"
#include "rca/structured_trace.hpp"

namespace rca::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kAllMethods[] = {"base", "sft", "rl", "sft+rl"};

void require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw DependencyError("missing upstream artifact '" + path.string() + "' (produced by `rca " +
                          std::string(producer) + "`)");
  }
}

Paths prepare_out(const RunConfig& config) {
  Paths p{config.out};
  std::error_code ec;
  fs::create_directories(p.out, ec);
  if (ec) throw ValidationError("cannot create output directory '" + p.out.string() + "': " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_manifest(const Paths& paths, const std::string& command, const RunConfig& config, json body) {
  json m = {{"command", command}, {"schema_version", kSchemaVersion}, {"config", config.to_json()}};
  m["seeds"] = {{"master", config.seed}, {"train", config.train.seed}, {"eval", config.eval.seed}};
  for (auto& [k, v] : body.items()) m[k] = v;
  write_text(paths.manifest(command), m.dump(1) + "\n");
}

std::string padded_id(std::string_view split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05zu", std::string(split).c_str(), i);
  return buf;
}

std::vector<DatasetRecord> generate_split(const RunConfig& config, std::string_view split, std::size_t per_cause,
                                          sim::GenerationStats& stats) {
  const auto seed = stage_seed(config, "gen." + std::string(split));
  const auto catalog_base = stage_seed(config, "gen.catalog." + std::string(split));
  std::vector<sim::InstanceRequest> requests;
  for (std::size_t i = 0; i < per_cause * kNumCauses; ++i) {
    // Catalog seed 0 is the standard binding, so derived seeds are forced odd.
    const auto catalog_seed = config.gen.permute_catalogs ? (derive_seed(catalog_base, {i}) | 1u) : 0u;
    requests.push_back({kAllCauses[i % kNumCauses], derive_seed(seed, {i}), catalog_seed});
  }
  const auto instances = sim::build_batch(requests, config.gen.radio, config.gen.shape, &stats);
  std::vector<DatasetRecord> records;
  records.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    records.push_back(make_record(instances[i], padded_id(split, i), requests[i].seed, requests[i].catalog_seed));
  }
  return records;
}

json cause_histogram(const std::vector<DatasetRecord>& records) {
  json h = json::object();
  for (CauseId c : kAllCauses) h[std::string(to_string(c))] = 0;
  for (const auto& r : records) {
    auto& n = h[std::string(to_string(r.ground_truth_cause))];
    n = n.get<int>() + 1;
  }
  return h;
}

json history_json(const train::SftHistory& h) {
  return {{"epochs", h.train_loss.size()},
          {"best_epoch", h.best_epoch},
          {"train_loss", h.train_loss},
          {"validation_loss", h.validation_loss}};
}

json history_json(const std::vector<train::StepMetrics>& steps) {
  json a = json::array();
  for (const auto& s : steps) {
    a.push_back({{"step", s.step},
                 {"mean_reward", s.mean_reward},
                 {"mean_abs_advantage", s.mean_abs_advantage},
                 {"clip_fraction", s.clip_fraction},
                 {"kl", s.kl}});
  }
  return a;
}

std::string method_tag(const std::string& method) {
  return method == "oracle" ? method : file_tag(parse_method(method));
}

}  // namespace

GenResult cmd_gen(const RunConfig& config) {
  if (config.gen.train_per_cause == 0 || config.gen.test_per_cause == 0)
    throw ValidationError("generation counts per cause must be positive");
  const auto paths = prepare_out(config);
  sim::GenerationStats stats;
  const auto train_records = generate_split(config, "train", config.gen.train_per_cause, stats);
  const auto test_records = generate_split(config, "test", config.gen.test_per_cause, stats);
  write_jsonl(paths.train_data().string(), train_records);
  write_jsonl(paths.test_data().string(), test_records);

  GenResult result{train_records.size(), test_records.size(), stats.retry_rate()};
  write_manifest(paths, "gen", config,
                 {{"seeds_gen",
                   {{"train", stage_seed(config, "gen.train")}, {"test", stage_seed(config, "gen.test")}}},
                  {"outputs", {{"train", paths.train_data().string()}, {"test", paths.test_data().string()}}},
                  {"counts", {{"train", cause_histogram(train_records)}, {"test", cause_histogram(test_records)}}},
                  {"attempts", stats.attempts.load()},
                  {"accepted", stats.accepted.load()},
                  {"retry_rate", result.retry_rate}});
  return result;
}

DiagnoseResult cmd_diagnose(const RunConfig& config, const std::optional<std::string>& dataset,
                            const std::optional<std::string>& show_trace_id) {
  const Paths paths{config.out};
  const fs::path source = dataset ? fs::path(*dataset) : paths.test_data();
  require(source, "gen");
  const auto records = read_jsonl(source.string());

  DiagnoseResult result;
  json rows = json::array();
  bool found = !show_trace_id;
  for (const auto& record : records) {
    const auto inst = reconstruct_instance(record);
    const auto d = oracle::diagnose(inst.scenario, inst.trace, inst.symptom, inst.catalog);
    const bool agree = d.cause == record.ground_truth_cause;
    ++result.records;
    if (agree) ++result.agreeing;
    rows.push_back({{"instance_id", record.instance_id},
                    {"truth", std::string(to_string(record.ground_truth_cause))},
                    {"diagnosis", std::string(to_string(d.cause))},
                    {"agree", agree}});
    if (show_trace_id && record.instance_id == *show_trace_id) {
      result.shown_trace = render(d.trace);
      found = true;
    }
  }
  if (!found) throw ValidationError("no record with id '" + *show_trace_id + "'");

  prepare_out(config);
  write_manifest(paths, "diagnose", config,
                 {{"dataset", source.string()},
                  {"records", result.records},
                  {"agreement", result.agreement()},
                  {"instances", rows}});
  return result;
}

agent::SftBuildReport cmd_sftdata(const RunConfig& config) {
  const Paths paths{config.out};
  require(paths.train_data(), "gen");
  auto report = agent::build_sft_dataset(read_jsonl(paths.train_data().string()), config.pipeline);
  write_jsonl(paths.sft_data().string(), report.records);

  json failures = json::array();
  for (const auto& f : report.failures) failures.push_back({{"instance_id", f.instance_id}, {"reason", f.reason}});
  json histogram = json::array();
  for (const auto& [lo, n] : report.reduction_histogram(0.1)) histogram.push_back({{"bucket_start", lo}, {"count", n}});
  write_manifest(paths, "sftdata", config,
                 {{"outputs", {{"sft", paths.sft_data().string()}}},
                  {"total", report.total},
                  {"accepted", report.records.size()},
                  {"rejected", report.rejected},
                  {"acceptance_rate", report.acceptance_rate()},
                  {"mean_reduction", report.mean_reduction()},
                  {"reduction_histogram", histogram},
                  {"failures", failures}});
  return report;
}

TrainResult cmd_train(const RunConfig& config, Method method) {
  const Paths paths{config.out};
  const auto& tc = config.train;
  const bool needs_sft = method == Method::SFT || method == Method::SFT_RL;
  const bool needs_rl = method == Method::RL || method == Method::SFT_RL;
  if (needs_sft) require(paths.sft_data(), "sftdata");
  if (needs_rl) require(paths.train_data(), "gen");
  prepare_out(config);

  std::vector<train::SftExample> sft_examples;
  if (needs_sft) {
    for (const auto& r : read_jsonl(paths.sft_data().string()))
      sft_examples.push_back(train::make_sft_example(r, tc.trace_length));
  }
  std::vector<train::TrainItem> items;
  if (needs_rl) {
    for (const auto& r : read_jsonl(paths.train_data().string())) items.push_back(train::make_item(r));
  }

  const auto base = train::Policy::random(tc.seed, tc.init_scale, tc.trace_length);
  train::Policy trained = base;
  TrainResult result;
  json history = json::object();
  switch (method) {
    case Method::BASE:
      break;
    case Method::SFT: {
      const auto h = train::run_sft(trained, sft_examples, tc);
      result.sft_epochs = h.train_loss.size();
      history["sft"] = history_json(h);
      break;
    }
    case Method::RL: {
      const auto h = train::run_grpo(trained, train::PolicySnapshot(base, train::PolicySnapshot::Role::REFERENCE),
                                     items, tc);
      result.rl_steps = h.size();
      result.final_reward = h.empty() ? 0.0 : h.back().mean_reward;
      history["rl"] = history_json(h);
      break;
    }
    case Method::SFT_RL: {
      auto two = train::train_two_stage(base, sft_examples, items, tc);
      trained = std::move(two.rl);
      result.sft_epochs = two.sft_history.train_loss.size();
      result.rl_steps = two.rl_history.size();
      result.final_reward = two.rl_history.empty() ? 0.0 : two.rl_history.back().mean_reward;
      history["sft"] = history_json(two.sft_history);
      history["rl"] = history_json(two.rl_history);
      break;
    }
  }

  result.checkpoint = paths.checkpoint(method);
  train::save_checkpoint(result.checkpoint.string(), trained, tc);
  write_manifest(paths, "train_" + file_tag(method), config,
                 {{"method", std::string(to_string(method))},
                  {"outputs", {{"checkpoint", result.checkpoint.string()}}},
                  {"sft_examples", sft_examples.size()},
                  {"rl_items", items.size()},
                  {"history", history}});
  return result;
}

std::vector<eval::EvalReport> cmd_eval(const RunConfig& config, const std::string& method) {
  const Paths paths{config.out};
  const auto tag = method_tag(method);
  require(paths.test_data(), "gen");
  std::unique_ptr<eval::AnswerSampler> sampler;
  if (method == "oracle") {
    sampler = std::make_unique<eval::OracleSampler>();
  } else {
    const auto m = parse_method(method);
    require(paths.checkpoint(m), "train --method " + method);
    sampler = std::make_unique<eval::PolicySampler>(train::load_checkpoint(paths.checkpoint(m).string()));
  }
  const auto records = read_jsonl(paths.test_data().string());

  std::vector<eval::EvalReport> reports;
  json outputs = json::array();
  for (auto variant : config.variants) {
    auto ec = config.eval;
    ec.variant = variant;
    reports.push_back(eval::evaluate(*sampler, records, ec, method));
    const auto out = paths.report(tag, variant);
    write_text(out, eval::report_json(reports.back()) + "\n");
    outputs.push_back({{"variant", std::string(eval::to_string(variant))},
                       {"report", out.string()},
                       {"pass_at_1", reports.back().pass_at_1},
                       {"maj_at_k", reports.back().maj_at_k}});
  }
  write_manifest(paths, "eval_" + tag, config, {{"method", method}, {"outputs", outputs}});
  return reports;
}

eval::Comparison cmd_compare(const RunConfig& config, const std::vector<std::string>& methods) {
  const Paths paths{config.out};
  std::vector<std::pair<std::string, eval::EvalReport>> reports;
  const bool explicit_list = !methods.empty();
  const auto wanted = explicit_list ? methods : std::vector<std::string>(std::begin(kAllMethods), std::end(kAllMethods));
  for (const auto& name : wanted) {
    const auto path = paths.report(method_tag(name), eval::Variant::STANDARD);
    if (!fs::exists(path)) {
      if (explicit_list) require(path, "eval --method " + name);
      continue;
    }
    json j;
    try {
      j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
      throw ParseError(0, path.string() + ": " + e.what());
    }
    eval::EvalReport r;
    r.method = name;
    r.pass_at_1 = j.at("pass_at_1").get<double>();
    r.maj_at_k = j.at("maj_at_k").get<double>();
    reports.emplace_back(name, std::move(r));
  }
  auto table = eval::compare_methods(reports);
  prepare_out(config);
  write_text(paths.comparison(), table.json() + "\n");
  write_text(paths.out / "comparison.txt", table.text());
  return table;
}

}  // namespace rca::cli
