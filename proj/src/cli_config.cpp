#include <fstream>
#include <sstream>

#include "rca/cli.hpp"
#include "rca/errors.hpp"
#include "rca/seeding.hpp"

namespace rca::sim {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InstanceShape, num_cells, route_length_s)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RadioModelConfig, path_loss_exponent, reference_loss_db,
                                                shadowing_sigma, rb_bandwidth_khz, spectral_efficiency_cap,
                                                noise_floor_dbm, handover_hysteresis, handover_time_to_trigger,
                                                stream_gain, throughput_cap_mbps, horizontal_beamwidth, ue_height_m,
                                                speed_penalty_onset_kmh, speed_penalty_db_per_kmh,
                                                pci_collision_gain_db, nominal_rb_min, nominal_rb_max)
}  // namespace rca::sim

namespace rca::cli {

using nlohmann::json;

namespace {

// Seeds are not configurable per section; they come from the master seed.
json train_json(const train::TrainConfig& c) {
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
          {"sft_learning_rate", c.sft_learning_rate},
          {"sft_max_epochs", c.sft_max_epochs},
          {"sft_patience", c.sft_patience},
          {"sft_min_delta", c.sft_min_delta},
          {"validation_fraction", c.validation_fraction},
          {"trace_length", c.trace_length},
          {"init_scale", c.init_scale}};
}

train::TrainConfig train_from(const json& j) {
  train::TrainConfig c;
  j.at("group_size").get_to(c.group_size);
  j.at("clip_eps").get_to(c.clip_eps);
  j.at("kl_beta").get_to(c.kl_beta);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("momentum").get_to(c.momentum);
  j.at("batch_size").get_to(c.batch_size);
  j.at("rl_steps").get_to(c.rl_steps);
  j.at("inner_epochs").get_to(c.inner_epochs);
  j.at("temperature").get_to(c.temperature);
  j.at("adv_std_floor").get_to(c.adv_std_floor);
  j.at("sft_learning_rate").get_to(c.sft_learning_rate);
  j.at("sft_max_epochs").get_to(c.sft_max_epochs);
  j.at("sft_patience").get_to(c.sft_patience);
  j.at("sft_min_delta").get_to(c.sft_min_delta);
  j.at("validation_fraction").get_to(c.validation_fraction);
  j.at("trace_length").get_to(c.trace_length);
  j.at("init_scale").get_to(c.init_scale);
  return c;
}

json pipeline_json(const agent::PipelineConfig& p) {
  json agents = json::array();
  for (const auto& a : p.agents) {
    agents.push_back({{"strategy", std::string(agent::to_string(a.strategy))},
                      {"backend", std::string(agent::to_string(a.backend))}});
  }
  return {{"agents", agents}, {"max_in_flight", p.max_in_flight}, {"retries", p.retries}, {"timeout_s", p.timeout_s}};
}

agent::PipelineConfig pipeline_from(const json& j) {
  agent::PipelineConfig p;
  p.agents.clear();
  for (const auto& a : j.at("agents")) {
    agent::AgentSpec spec;
    spec.strategy = agent::parse_strategy(a.at("strategy").get<std::string>());
    spec.backend = agent::parse_backend(a.at("backend").get<std::string>());
    // Endpoint and credentials never live in the config file.
    // Without RCA_LLM_BASE_URL a remote agent degrades to the mock backend.
    if (spec.backend == agent::Backend::REMOTE_LLM) {
      spec.remote = agent::remote_params_from_env();
      if (spec.remote.base_url.empty()) spec.backend = agent::Backend::MOCK_ORACLE;
    }
    p.agents.push_back(spec);
  }
  j.at("max_in_flight").get_to(p.max_in_flight);
  j.at("retries").get_to(p.retries);
  j.at("timeout_s").get_to(p.timeout_s);
  return p;
}

json eval_json(const eval::EvalConfig& e, const std::vector<eval::Variant>& variants) {
  const std::string variant = variants.size() == 1 ? std::string(eval::to_string(variants.front())) : "both";
  return {{"samples", e.samples},
          {"temperature", e.temperature},
          {"variant", variant},
          {"randomization_seed", e.randomization_seed}};
}

eval::EvalConfig eval_from(const json& j, std::vector<eval::Variant>& variants) {
  eval::EvalConfig e;
  j.at("samples").get_to(e.samples);
  j.at("temperature").get_to(e.temperature);
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "both") {
    variants = {eval::Variant::STANDARD, eval::Variant::RANDOMIZED};
  } else {
    variants = {eval::parse_variant(variant)};
  }
  j.at("randomization_seed").get_to(e.randomization_seed);
  return e;
}

void reject_unknown_keys(const json& reference, const json& candidate, const std::string& prefix) {
  if (!reference.is_object() || !candidate.is_object()) return;
  for (const auto& [key, value] : candidate.items()) {
    const auto path = prefix.empty() ? key : prefix + "." + key;
    if (!reference.contains(key)) throw ValidationError("unknown config key '" + path + "'");
    reject_unknown_keys(reference.at(key), value, path);
  }
}

}  // namespace

json RunConfig::to_json() const {
  return {{"seed", seed},
          {"out", out},
          {"gen",
           {{"train_per_cause", gen.train_per_cause},
            {"test_per_cause", gen.test_per_cause},
            {"permute_catalogs", gen.permute_catalogs},
            {"shape", gen.shape},
            {"radio", gen.radio}}},
          {"pipeline", pipeline_json(pipeline)},
          {"train", train_json(train)},
          {"eval", eval_json(eval, variants)}};
}

json default_config_json() { return RunConfig{}.to_json(); }

RunConfig resolve_config(const json& file, const json& overrides) {
  const auto defaults = default_config_json();
  auto merged = defaults;
  for (const auto* layer : {&file, &overrides}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) throw ValidationError("config must be a JSON object");
    reject_unknown_keys(defaults, *layer, "");
    merged.merge_patch(*layer);
  }

  RunConfig c;
  try {
    merged.at("seed").get_to(c.seed);
    merged.at("out").get_to(c.out);
    const auto& g = merged.at("gen");
    g.at("train_per_cause").get_to(c.gen.train_per_cause);
    g.at("test_per_cause").get_to(c.gen.test_per_cause);
    g.at("permute_catalogs").get_to(c.gen.permute_catalogs);
    g.at("shape").get_to(c.gen.shape);
    g.at("radio").get_to(c.gen.radio);
    c.pipeline = pipeline_from(merged.at("pipeline"));
    c.train = train_from(merged.at("train"));
    c.eval = eval_from(merged.at("eval"), c.variants);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  c.train.seed = stage_seed(c, "train");
  c.eval.seed = stage_seed(c, "eval");

  if (c.out.empty()) throw ValidationError("output directory must be set");
  sim::validate(c.gen.radio);
  agent::validate(c.pipeline);
  train::validate(c.train);
  if (c.eval.samples == 0) throw ValidationError("eval.samples must be at least 1");
  if (c.eval.temperature < 0.0) throw ValidationError("eval.temperature must be non-negative");
  return c;
}

RunConfig load_run_config(const std::optional<std::string>& path, const json& overrides) {
  json file;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw DependencyError("cannot read config file '" + *path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      file = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      throw ParseError(0, "config file '" + *path + "': " + e.what());
    }
  }
  return resolve_config(file, overrides);
}

std::uint64_t stage_seed(const RunConfig& config, std::string_view stage) { return derive_seed(config.seed, stage); }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::BASE: return "base";
    case Method::SFT: return "sft";
    case Method::RL: return "rl";
    case Method::SFT_RL: return "sft+rl";
  }
  return "base";
}

Method parse_method(std::string_view text) {
  for (auto m : {Method::BASE, Method::SFT, Method::RL, Method::SFT_RL}) {
    if (text == to_string(m)) return m;
  }
  throw ValidationError("unknown method '" + std::string(text) + "' (expected base, sft, rl or sft+rl)");
}

std::string file_tag(Method m) { return m == Method::SFT_RL ? "sft_rl" : std::string(to_string(m)); }

}  // namespace rca::cli
