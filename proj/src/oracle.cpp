#include "rca/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "rca/errors.hpp"
#include "rca/text_format.hpp"

namespace rca::oracle {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct CellIndex {
  std::unordered_map<int, std::size_t> by_pci;

  explicit CellIndex(const ScenarioConfig& scenario) {
    for (std::size_t i = 0; i < scenario.cells.size(); ++i) by_pci.emplace(scenario.cells[i].pci, i);
  }

  std::size_t at(int pci) const {
    auto it = by_pci.find(pci);
    if (it == by_pci.end()) throw DataIntegrityError("PCI " + std::to_string(pci) + " not present in the cell table");
    return it->second;
  }
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string num(double v) { return format_decimal(v, 2); }

std::string comparator_words(const std::string& c) {
  if (c == ">") return "above";
  if (c == "<") return "below";
  if (c == ">=") return "at least";
  return c;
}

bool holds(const Fact& f) {
  if (f.comparator == ">") return f.value > f.threshold;
  if (f.comparator == "<") return f.value < f.threshold;
  if (f.comparator == ">=") return f.value >= f.threshold;
  return false;
}

}  // namespace

std::optional<Symptom> detect_symptom(const DriveTrace& trace) {
  if (trace.samples.empty()) throw ValidationError("cannot detect a symptom in an empty trace");
  Symptom s;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    if (trace.samples[i].mac_dl_throughput < kThroughputThresholdMbps) s.affected_indices.push_back(i);
  }
  if (s.affected_indices.empty()) return std::nullopt;
  s.onset_index = s.affected_indices.front();
  return s;
}

WindowMeasures measure_window(const ScenarioConfig& scenario, const DriveTrace& trace, const Symptom& symptom,
                              const RuleThresholds& th) {
  if (symptom.affected_indices.empty()) throw ValidationError("symptom window is empty");
  const CellIndex cells(scenario);
  const auto& samples = trace.samples;
  for (auto i : symptom.affected_indices) {
    if (i >= samples.size()) throw ValidationError("symptom index outside the trace");
  }

  WindowMeasures m;
  m.window_size = symptom.affected_indices.size();
  m.onset_serving_pci = samples[symptom.onset_index].serving_pci;

  std::vector<double> exceed, rsrp, dist, rb, tput;
  for (auto i : symptom.affected_indices) {
    const auto& s = samples[i];
    const auto si = cells.at(s.serving_pci);
    const auto& cell = scenario.cells[si];
    m.max_speed = std::max(m.max_speed, s.gps_speed);

    const double d = geo_distance(cell.position(), {s.longitude, s.latitude});
    const double depression = std::atan2(cell.height - th.ue_height_m, d) * kRadToDeg;
    exceed.push_back((total_downtilt(cell) - depression) - vertical_beamwidth(cell.beam_scenario) / 2.0);
    rsrp.push_back(s.ss_rsrp);
    dist.push_back(d);
    rb.push_back(s.dl_rb_num);
    tput.push_back(s.mac_dl_throughput);

    bool conflict = false;
    for (const auto& n : s.neighbors) {
      const auto ni = cells.at(n.pci);
      if (scenario.carrier[ni] == scenario.carrier[si] && scenario.cells[ni].gnodeb_id != cell.gnodeb_id) {
        const double delta = s.ss_rsrp - n.brsrp;
        if (!m.min_overlap_delta || delta < *m.min_overlap_delta) {
          m.min_overlap_delta = delta;
          m.overlap_pci = n.pci;
        }
      }
      if (!conflict && pci_mod30_conflict(s.serving_pci, n.pci)) {
        conflict = true;
        if (!m.mod30_neighbor_pci) m.mod30_neighbor_pci = n.pci;
      }
    }
    if (conflict) ++m.mod30_conflict_samples;
  }
  m.mean_lobe_exceedance = mean(exceed);
  m.mean_serving_rsrp = mean(rsrp);
  m.mean_serving_distance = mean(dist);
  m.mean_rb = mean(rb);
  m.mean_throughput = mean(tput);

  // Handover events: serving PCI changes between consecutive samples.
  std::vector<std::int64_t> events;
  for (std::size_t t = 1; t < samples.size(); ++t) {
    if (samples[t].serving_pci != samples[t - 1].serving_pci) events.push_back(samples[t].timestamp);
  }
  m.total_handovers = static_cast<int>(events.size());
  for (auto w : symptom.affected_indices) {
    const auto tw = samples[w].timestamp;
    for (std::int64_t start = tw - (th.handover_window_s - 1); start <= tw; ++start) {
      const auto n = std::count_if(events.begin(), events.end(),
                                   [&](std::int64_t e) { return e >= start && e < start + th.handover_window_s; });
      m.max_handovers_in_window = std::max(m.max_handovers_in_window, static_cast<int>(n));
    }
  }

  // Missed handover: a co-frequency neighbor beats serving + hysteresis on consecutive samples
  // while the serving cell stays the same.
  std::vector<bool> in_window(samples.size(), false);
  for (auto i : symptom.affected_indices) in_window[i] = true;
  auto better_neighbor = [&](const UserPlaneSample& s) {
    const auto si = cells.at(s.serving_pci);
    return std::any_of(s.neighbors.begin(), s.neighbors.end(), [&](const NeighborMeasurement& n) {
      return scenario.carrier[cells.at(n.pci)] == scenario.carrier[si] &&
             n.brsrp > s.ss_rsrp + th.reference_hysteresis_db;
    });
  };
  // Each maximal run counts with its full length if any of its samples lies in the window.
  std::size_t t = 0;
  while (t < samples.size()) {
    if (!better_neighbor(samples[t])) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < samples.size() && better_neighbor(samples[end + 1]) &&
           samples[end + 1].serving_pci == samples[end].serving_pci) {
      ++end;
    }
    bool hits = false;
    for (std::size_t k = t; k <= end; ++k) hits = hits || in_window[k];
    if (hits) m.longest_missed_handover_run = std::max(m.longest_missed_handover_run, static_cast<int>(end - t + 1));
    t = end + 1;
  }
  return m;
}

std::vector<CauseEvidence> evaluate_rules(const ScenarioConfig& scenario, const DriveTrace& trace,
                                          const Symptom& symptom, const RuleThresholds& th) {
  const auto m = measure_window(scenario, trace, symptom, th);
  std::vector<CauseEvidence> out;
  out.reserve(kNumCauses);

  auto add = [&](CauseId c, std::vector<Fact> facts, double score) {
    bool all = std::all_of(facts.begin(), facts.end(), holds);
    CauseEvidence e{c, all, all ? std::max(score, 1e-9) : 0.0, std::move(facts)};
    out.push_back(std::move(e));
  };

  add(CauseId::SPEED_GT_40, {{"max speed in window (km/h)", m.max_speed, th.max_speed_kmh, ">"}},
      (m.max_speed - th.max_speed_kmh) / th.max_speed_kmh);

  add(CauseId::EXCESS_DOWNTILT,
      {{"mean lobe exceedance (deg)", m.mean_lobe_exceedance, 0.0, ">"},
       {"mean serving RSRP (dBm)", m.mean_serving_rsrp, th.weak_rsrp_dbm, "<"}},
      0.5 * (m.mean_lobe_exceedance / 3.0 + (th.weak_rsrp_dbm - m.mean_serving_rsrp) / 10.0));

  add(CauseId::OVERSHOOT_GT_1KM, {{"mean serving distance (m)", m.mean_serving_distance, th.overshoot_m, ">"}},
      (m.mean_serving_distance - th.overshoot_m) / th.overshoot_m);

  {
    // 99 dB stands in for "no such neighbor".
    const double delta = m.min_overlap_delta.value_or(99.0);
    add(CauseId::NONCOLOCATED_OVERLAP,
        {{"non-colocated co-frequency neighbor margin (dB)", delta, th.overlap_db, "<"}},
        (th.overlap_db - delta) / th.overlap_db);
  }

  add(CauseId::PCI_MOD30_CONFLICT,
      {{"samples with PCI mod 30 conflict", static_cast<double>(m.mod30_conflict_samples), 0.0, ">"}},
      static_cast<double>(m.mod30_conflict_samples) / static_cast<double>(m.window_size));

  add(CauseId::FREQUENT_HANDOVER,
      {{"handovers in busiest 10 s window", static_cast<double>(m.max_handovers_in_window),
        static_cast<double>(th.frequent_handover_count), ">="}},
      (m.max_handovers_in_window - (th.frequent_handover_count - 1)) / 3.0);

  add(CauseId::HANDOVER_THRESHOLD_MISCONFIG,
      {{"missed handover run (s)", static_cast<double>(m.longest_missed_handover_run),
        static_cast<double>(th.reference_ttt_s), ">"}},
      static_cast<double>(m.longest_missed_handover_run - th.reference_ttt_s) / th.reference_ttt_s);

  add(CauseId::INSUFFICIENT_RB, {{"mean scheduled RBs", m.mean_rb, th.min_mean_rb, "<"}},
      (th.min_mean_rb - m.mean_rb) / th.min_mean_rb);
  return out;
}

const std::vector<CauseId>& precedence_order() {
  static const std::vector<CauseId> order = {
      CauseId::PCI_MOD30_CONFLICT, CauseId::NONCOLOCATED_OVERLAP,         CauseId::EXCESS_DOWNTILT,
      CauseId::OVERSHOOT_GT_1KM,   CauseId::HANDOVER_THRESHOLD_MISCONFIG, CauseId::FREQUENT_HANDOVER,
      CauseId::INSUFFICIENT_RB,    CauseId::SPEED_GT_40,
  };
  return order;
}

CauseId select_cause(const std::vector<CauseEvidence>& evidence) {
  const CauseEvidence* best = nullptr;
  for (CauseId c : precedence_order()) {
    auto it = std::find_if(evidence.begin(), evidence.end(), [c](const CauseEvidence& e) { return e.cause == c; });
    if (it == evidence.end() || !it->triggered) continue;
    if (!best || it->score > best->score) best = &*it;
  }
  if (!best) throw UndiagnosableError("no causal rule fired for the symptom window");
  return best->cause;
}

Diagnosis diagnose(const ScenarioConfig& scenario, const DriveTrace& trace, const Symptom& symptom,
                   const RootCauseCatalog& catalog, const RuleThresholds& th) {
  Diagnosis d;
  d.evidence = evaluate_rules(scenario, trace, symptom, th);
  d.cause = select_cause(d.evidence);
  d.trace = build_structured_trace(d.evidence, d.cause, catalog);
  return d;
}

StructuredTrace build_structured_trace(const std::vector<CauseEvidence>& evidence, CauseId chosen,
                                       const RootCauseCatalog& catalog) {
  auto find = [&](CauseId c) -> const CauseEvidence& {
    auto it = std::find_if(evidence.begin(), evidence.end(), [c](const CauseEvidence& e) { return e.cause == c; });
    if (it == evidence.end()) throw ValidationError("evidence list is missing a cause");
    return *it;
  };

  StructuredTrace t;
  t.answer_label = catalog.label_of(chosen);

  std::vector<std::string> lines;
  for (CauseId c : kAllCauses) {
    for (const auto& f : find(c).facts) {
      lines.push_back("- " + f.name + ": " + num(f.value) + " (rule: " + comparator_words(f.comparator) + " " +
                      num(f.threshold) + ")");
    }
  }
  t.data_analysis = join(lines, "\n");

  lines.clear();
  for (const auto& entry : catalog.entries()) {
    const auto& e = find(entry.cause);
    const Fact* decisive = &e.facts.front();
    for (const auto& f : e.facts) {
      if (holds(f) != e.triggered) continue;
      decisive = &f;
      if (!e.triggered) break;
    }
    const std::string relation =
        (holds(*decisive) ? "is " : "is not ") + comparator_words(decisive->comparator) + " " + num(decisive->threshold);
    lines.push_back(entry.label + (e.triggered ? ": plausible, " : ": ruled out, ") + decisive->name + " " +
                    num(decisive->value) + " " + relation + ".");
  }
  t.root_cause_analysis = join(lines, "\n");

  const auto& chosen_evidence = find(chosen);
  t.identification = "The most likely root cause is " + t.answer_label + " with score " +
                     num(chosen_evidence.score) + ".";
  t.summary = "Throughput fell below 600 Mbps. " + t.answer_label + ": " + std::string(describe(chosen));
  return t;
}

}  // namespace rca::oracle
