#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rca/domain.hpp"
#include "rca/structured_trace.hpp"

namespace rca::oracle {

// Fixed thresholds of the eight causal rules.
struct RuleThresholds {
  double max_speed_kmh = 40.0;
  double weak_rsrp_dbm = -95.0;
  double overshoot_m = 1000.0;
  double overlap_db = 6.0;
  int handover_window_s = 10;
  int frequent_handover_count = 3;
  double reference_hysteresis_db = 3.0;
  int reference_ttt_s = 2;
  double min_mean_rb = 160.0;
  double ue_height_m = 1.5;
};

struct Fact {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparator;  // relation that triggers the rule, e.g. ">"
  bool operator==(const Fact&) const = default;
};

struct CauseEvidence {
  CauseId cause{};
  bool triggered = false;
  double score = 0.0;  // > 0 iff triggered
  std::vector<Fact> facts;
  bool operator==(const CauseEvidence&) const = default;
};

// Raw measurements over the symptom window, shared by the rules and the policy features.
struct WindowMeasures {
  std::size_t window_size = 0;
  double max_speed = 0.0;
  double mean_lobe_exceedance = 0.0;  // deg past the upper lobe edge, negative when inside
  double mean_serving_rsrp = 0.0;
  double mean_serving_distance = 0.0;
  std::optional<double> min_overlap_delta;  // serving RSRP minus co-frequency non-colocated BRSRP
  std::optional<int> overlap_pci;
  std::size_t mod30_conflict_samples = 0;
  std::optional<int> mod30_neighbor_pci;
  int max_handovers_in_window = 0;
  int total_handovers = 0;
  int longest_missed_handover_run = 0;
  double mean_rb = 0.0;
  double mean_throughput = 0.0;
  int onset_serving_pci = 0;
};

struct Diagnosis {
  CauseId cause{};
  std::vector<CauseEvidence> evidence;
  StructuredTrace trace;
};

// First sample below the 600 Mbps threshold plus all affected indices.
std::optional<Symptom> detect_symptom(const DriveTrace& trace);

WindowMeasures measure_window(const ScenarioConfig& scenario, const DriveTrace& trace, const Symptom& symptom,
                              const RuleThresholds& thresholds = {});

std::vector<CauseEvidence> evaluate_rules(const ScenarioConfig& scenario, const DriveTrace& trace,
                                          const Symptom& symptom, const RuleThresholds& thresholds = {});

// Highest-scoring triggered cause, precedence order on ties; throws UndiagnosableError if none fired.
CauseId select_cause(const std::vector<CauseEvidence>& evidence);

Diagnosis diagnose(const ScenarioConfig& scenario, const DriveTrace& trace, const Symptom& symptom,
                   const RootCauseCatalog& catalog = RootCauseCatalog::standard(),
                   const RuleThresholds& thresholds = {});

StructuredTrace build_structured_trace(const std::vector<CauseEvidence>& evidence, CauseId chosen,
                                       const RootCauseCatalog& catalog);

// Tie-break order used by select_cause.
const std::vector<CauseId>& precedence_order();

}  // namespace rca::oracle
