#include "rca/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/seeding.hpp"

namespace rca::eval {

namespace {

void check_shape(const AnswerMatrix& answers, const std::vector<std::string>& truths) {
  if (answers.empty()) throw ValidationError("no answers to score");
  if (answers.size() != truths.size()) throw ValidationError("answer rows and truths differ in length");
  const auto width = answers.front().size();
  if (width == 0) throw ValidationError("each instance needs at least one answer");
  for (const auto& row : answers) {
    if (row.size() != width) throw ValidationError("answer matrix is not rectangular");
  }
}

InstanceResult run_one(const AnswerSampler& sampler, const DatasetRecord& original, const EvalConfig& config,
                       std::size_t index) {
  InstanceResult r;
  r.instance_id = original.instance_id;
  r.truth = original.ground_truth_cause;
  r.truth_label = original.ground_truth_label;
  try {
    const auto record = config.variant == Variant::RANDOMIZED
                            ? randomize_instance(original, derive_seed(config.randomization_seed, {fnv1a64(original.instance_id)}))
                            : original;
    r.truth_label = record.ground_truth_label;
    const auto inst = reconstruct_instance(record);
    r.answers = sampler.answer(inst, config.samples, config.temperature, derive_seed(config.seed, {index}));
    if (r.answers.size() != config.samples) throw ValidationError("sampler returned the wrong number of answers");
    for (const auto& a : r.answers) r.predicted.push_back(a ? inst.catalog.cause_of(*a) : std::nullopt);
  } catch (const std::exception&) {
    r.answers.assign(config.samples, std::nullopt);
    r.predicted.assign(config.samples, std::nullopt);
    r.flagged = true;
  }
  return r;
}

EvalReport assemble(std::vector<InstanceResult> results, const EvalConfig& config, std::string method) {
  EvalReport rep;
  rep.method = std::move(method);
  rep.config = config;
  AnswerMatrix answers;
  std::vector<std::string> truths;
  for (const auto& r : results) {
    answers.push_back(r.answers);
    truths.push_back(r.truth_label);
    if (r.flagged) ++rep.flagged;
    for (const auto& p : r.predicted) rep.confusion[index_of(r.truth)][p ? index_of(*p) : kNoneColumn]++;
  }
  rep.pass_at_1 = pass_at_1(answers, truths);
  rep.maj_at_k = maj_at_k(answers, truths);
  rep.instances = std::move(results);
  return rep;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::STANDARD ? "standard" : "randomized"; }

Variant parse_variant(std::string_view text) {
  if (text == "standard") return Variant::STANDARD;
  if (text == "randomized") return Variant::RANDOMIZED;
  throw ValidationError("unknown variant '" + std::string(text) + "'");
}

double pass_at_1(const AnswerMatrix& answers, const std::vector<std::string>& truths) {
  check_shape(answers, truths);
  double hits = 0.0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    for (const auto& a : answers[i]) hits += (a && *a == truths[i]) ? 1.0 : 0.0;
  }
  return hits / static_cast<double>(answers.size() * answers.front().size());
}

Answer majority_answer(const std::vector<Answer>& answers) {
  std::map<std::string, std::size_t> counts;  // ordered, so ties resolve to the smallest label
  for (const auto& a : answers) {
    if (a) counts[*a]++;
  }
  if (counts.empty()) return std::nullopt;
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

double maj_at_k(const AnswerMatrix& answers, const std::vector<std::string>& truths) {
  check_shape(answers, truths);
  double hits = 0.0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto m = majority_answer(answers[i]);
    hits += (m && *m == truths[i]) ? 1.0 : 0.0;
  }
  return hits / static_cast<double>(answers.size());
}

std::vector<Answer> PolicySampler::answer(const sim::LabeledInstance& instance, std::size_t n, double temperature,
                                          std::uint64_t seed) const {
  const auto phi = train::extract_features(instance);
  std::vector<Answer> out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto tokens = policy_.sample(phi, temperature, derive_seed(seed, {k}));
    out.push_back(parse_answer(train::trajectory_text(tokens, instance.catalog)));
  }
  return out;
}

std::vector<Answer> OracleSampler::answer(const sim::LabeledInstance& instance, std::size_t n, double,
                                          std::uint64_t) const {
  const auto d = oracle::diagnose(instance.scenario, instance.trace, instance.symptom, instance.catalog);
  return std::vector<Answer>(n, instance.catalog.label_of(d.cause));
}

EvalReport evaluate_serial(const AnswerSampler& sampler, const std::vector<DatasetRecord>& records,
                           const EvalConfig& config, std::string method) {
  if (records.empty()) throw ValidationError("no records to evaluate");
  if (config.samples == 0) throw ValidationError("samples per instance must be positive");
  std::vector<InstanceResult> results;
  for (std::size_t i = 0; i < records.size(); ++i) results.push_back(run_one(sampler, records[i], config, i));
  return assemble(std::move(results), config, std::move(method));
}

EvalReport evaluate(const AnswerSampler& sampler, const std::vector<DatasetRecord>& records, const EvalConfig& config,
                    std::string method) {
  if (records.empty()) throw ValidationError("no records to evaluate");
  if (config.samples == 0) throw ValidationError("samples per instance must be positive");
  std::vector<InstanceResult> results(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    results[k] = run_one(sampler, records[k], config, k);
  }
  return assemble(std::move(results), config, std::move(method));
}

std::string report_json(const EvalReport& rep) {
  using nlohmann::json;
  json confusion = json::object();
  for (CauseId truth : kAllCauses) {
    json row = json::object();
    for (CauseId pred : kAllCauses) row[std::string(to_string(pred))] = rep.confusion[index_of(truth)][index_of(pred)];
    row["NONE"] = rep.confusion[index_of(truth)][kNoneColumn];
    confusion[std::string(to_string(truth))] = row;
  }
  json instances = json::array();
  for (const auto& r : rep.instances) {
    json answers = json::array();
    for (const auto& a : r.answers) answers.push_back(a ? json(*a) : json(nullptr));
    instances.push_back({{"instance_id", r.instance_id},
                         {"truth_label", r.truth_label},
                         {"truth_cause", std::string(to_string(r.truth))},
                         {"answers", answers},
                         {"flagged", r.flagged}});
  }
  const json j = {{"method", rep.method},
                  {"config",
                   {{"samples", rep.config.samples},
                    {"temperature", rep.config.temperature},
                    {"seed", rep.config.seed},
                    {"variant", std::string(to_string(rep.config.variant))},
                    {"randomization_seed", rep.config.randomization_seed}}},
                  {"pass_at_1", rep.pass_at_1},
                  {"maj_at_k", rep.maj_at_k},
                  {"flagged", rep.flagged},
                  {"confusion", confusion},
                  {"instances", instances}};
  return j.dump(1);
}

Comparison compare_methods(const std::vector<std::pair<std::string, EvalReport>>& reports) {
  if (reports.size() < 2) throw ValidationError("a comparison needs at least two reports");
  std::set<std::string> names;
  Comparison c;
  for (const auto& [name, rep] : reports) {
    if (!names.insert(name).second) throw ValidationError("duplicate method name '" + name + "'");
    c.rows.push_back({name, rep.pass_at_1, rep.maj_at_k});
  }
  return c;
}

std::string Comparison::json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back({{"method", r.name}, {"pass_at_1", r.pass_at_1}, {"maj_at_k", r.maj_at_k}});
  return nlohmann::json{{"methods", rows_json}}.dump(1);
}

std::string Comparison::text() const {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out = "method" + std::string(width - 6, ' ') + "  pass@1  maj@k\n";
  for (const auto& r : rows) {
    out += r.name + std::string(width - r.name.size(), ' ') + "  " + fixed4(r.pass_at_1) + "  " + fixed4(r.maj_at_k) + "\n";
  }
  return out;
}

}  // namespace rca::eval
