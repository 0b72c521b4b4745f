#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/simulator.hpp"

using namespace rca;
using namespace rca::sim;

namespace {

double min_throughput(const DriveTrace& t) {
  double m = 1e18;
  for (const auto& s : t.samples) m = std::min(m, s.mac_dl_throughput);
  return m;
}

const CellConfig& serving_cell(const ScenarioConfig& sc, int pci) {
  return *std::find_if(sc.cells.begin(), sc.cells.end(), [&](const CellConfig& c) { return c.pci == pci; });
}

}  // namespace

TEST_CASE("vertical pattern") {
  CHECK(tilt_pattern_loss(0.0, 6.0) == 0.0);
  CHECK(tilt_pattern_loss(6.0, 6.0) == doctest::Approx(12.0));
  CHECK(tilt_pattern_loss(24.0, 12.0) == 30.0);
  CHECK(tilt_pattern_loss(-12.0, 12.0) == doctest::Approx(12.0));
}

TEST_CASE("horizontal pattern is non-decreasing off azimuth") {
  double prev = -1.0;
  for (double a = 0.0; a <= 180.0; a += 1.0) {
    const double l = horizontal_pattern_loss(a, 65.0);
    CHECK(l >= prev);
    prev = l;
  }
  CHECK(horizontal_pattern_loss(0.0, 65.0) == 0.0);
}

TEST_CASE("reference distance and path loss monotonicity") {
  RadioModelConfig radio;
  CHECK(path_loss_db(1.0, radio) == doctest::Approx(radio.reference_loss_db));

  // Cell directly above the UE at 1 m with the beam aimed straight down.
  CellConfig cell;
  cell.longitude = 10.0;
  cell.latitude = 50.0;
  cell.height = radio.ue_height_m + 1.0;
  cell.mech_downtilt = 84.0;
  cell.digital_tilt_raw = 6;
  CHECK(mean_rsrp(cell, {10.0, 50.0}, radio) == doctest::Approx(cell.max_tx_power - radio.reference_loss_db));

  double prev = 1e9;
  for (double d = 1.0; d < 5000.0; d *= 1.3) {
    const double pl = -path_loss_db(d, radio);
    CHECK(pl <= prev);
    prev = pl;
  }
}

TEST_CASE("throughput is monotone in SINR and RBs") {
  RadioModelConfig radio;
  for (double sinr = -10.0; sinr < 40.0; sinr += 0.5) {
    CHECK(throughput_mbps(165, sinr + 0.5, radio) >= throughput_mbps(165, sinr, radio));
    CHECK(throughput_mbps(170, sinr, radio) >= throughput_mbps(165, sinr, radio));
  }
  CHECK(spectral_efficiency(60.0, radio) == radio.spectral_efficiency_cap);
  // Calibration point: a clean near-cell sample with ~165 RBs sits near 1000 Mbps.
  CHECK(throughput_mbps(165, 30.0, radio) == doctest::Approx(1000.0).epsilon(0.05));
}

TEST_CASE("nominal scenarios are healthy and deterministic") {
  const RadioModelConfig radio;
  const auto a = generate_nominal(42, 6, 10);
  CHECK(a == generate_nominal(42, 6, 10));
  CHECK_FALSE(a.planted_cause.has_value());
  CHECK(a.route.size() == 10);
  CHECK(min_throughput(simulate_drive(a, radio, a.noise_seed)) >= 600.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto n = generate_nominal(s, 6, 30);
    const auto t = simulate_drive(n, radio, n.noise_seed);
    CHECK(min_throughput(t) >= 600.0);
    CHECK(t == simulate_drive(n, radio, n.noise_seed));
    for (const auto& p : n.route) CHECK(p.speed_kmh <= 35.0);
  }
  CHECK_THROWS_AS(generate_nominal(1, 1, 30), ValidationError);
  CHECK_THROWS_AS(generate_nominal(1, 6, 5), ValidationError);
}

TEST_CASE("drive trace shape") {
  const auto inst = build_instance(CauseId::FREQUENT_HANDOVER, 5, 0);
  CHECK(inst.trace.samples.size() == inst.scenario.route.size());
  for (std::size_t i = 0; i < inst.trace.samples.size(); ++i) {
    const auto& s = inst.trace.samples[i];
    CHECK(s.timestamp == inst.scenario.route[i].timestamp);
    CHECK(s.neighbors.size() <= 5);
    for (std::size_t k = 1; k < s.neighbors.size(); ++k) CHECK(s.neighbors[k - 1].brsrp >= s.neighbors[k].brsrp);
  }
}

TEST_CASE("planted faults show their signature") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    {
      const auto inst = build_instance(CauseId::PCI_MOD30_CONFLICT, seed, 0);
      const auto m = oracle::measure_window(inst.scenario, inst.trace, inst.symptom);
      REQUIRE(m.mod30_neighbor_pci.has_value());
      CHECK(pci_mod30_conflict(m.onset_serving_pci, *m.mod30_neighbor_pci));
    }
    {
      const auto inst = build_instance(CauseId::SPEED_GT_40, seed, 0);
      double vmax = 0.0;
      for (auto i : inst.symptom.affected_indices) vmax = std::max(vmax, inst.trace.samples[i].gps_speed);
      CHECK(vmax > 40.0);
    }
    {
      const auto inst = build_instance(CauseId::INSUFFICIENT_RB, seed, 0);
      double rb = 0.0;
      for (auto i : inst.symptom.affected_indices) rb += inst.trace.samples[i].dl_rb_num;
      CHECK(rb / static_cast<double>(inst.symptom.affected_indices.size()) < 160.0);
    }
    {
      const auto inst = build_instance(CauseId::OVERSHOOT_GT_1KM, seed, 0);
      const auto& onset = inst.trace.samples[inst.symptom.onset_index];
      const auto& cell = serving_cell(inst.scenario, onset.serving_pci);
      CHECK(geo_distance(cell.position(), {onset.longitude, onset.latitude}) > 1000.0);
    }
    {
      const auto inst = build_instance(CauseId::FREQUENT_HANDOVER, seed, 0);
      const auto m = oracle::measure_window(inst.scenario, inst.trace, inst.symptom);
      CHECK(m.max_handovers_in_window >= 3);
    }
  }
}

TEST_CASE("excess downtilt weakens the serving signal relative to the nominal") {
  const RadioModelConfig radio;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 40 && checked < 5; ++seed) {
    const auto nominal = generate_nominal(seed, 6, 30);
    ScenarioConfig planted;
    try {
      planted = plant_fault(nominal, CauseId::EXCESS_DOWNTILT, seed, radio);
    } catch (const GenerationError&) {
      continue;
    }
    const auto a = simulate_drive(nominal, radio, nominal.noise_seed);
    const auto b = simulate_drive(planted, radio, planted.noise_seed);
    const auto symptom = oracle::detect_symptom(b);
    REQUIRE(symptom.has_value());
    double ra = 0.0, rb = 0.0;
    for (auto i : symptom->affected_indices) {
      ra += a.samples[i].ss_rsrp;
      rb += b.samples[i].ss_rsrp;
    }
    CHECK(rb < ra);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("instances are deterministic and diagnosable") {
  for (auto cause : kAllCauses) {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      const auto a = build_instance(cause, seed, 3);
      CHECK(a == build_instance(cause, seed, 3));
      CHECK(a.ground_truth == cause);
      CHECK(a.scenario.planted_cause == cause);
      CHECK_FALSE(a.symptom.affected_indices.empty());
      CHECK(a.trace.samples[a.symptom.onset_index].mac_dl_throughput < 600.0);
      const auto d = oracle::diagnose(a.scenario, a.trace, a.symptom, a.catalog);
      CHECK(d.cause == cause);
    }
  }
}

TEST_CASE("catalog permutations") {
  CHECK(permuted_catalog(0) == RootCauseCatalog::standard());
  const auto p = permuted_catalog(99);
  CHECK(p.entries().size() == kNumCauses);
  for (auto c : kAllCauses) CHECK(p.cause_of(p.label_of(c)) == c);
  CHECK(p == permuted_catalog(99));
}

TEST_CASE("parallel batch matches the serial reference") {
  std::vector<InstanceRequest> req;
  for (std::uint64_t i = 0; i < 24; ++i) req.push_back({kAllCauses[i % kNumCauses], 500 + i, i});
  GenerationStats s1, s2;
  const auto par = build_batch(req, {}, {}, &s1);
  const auto ser = build_batch_serial(req, {}, {}, &s2);
  CHECK(par == ser);
  CHECK(s1.attempts.load() == s2.attempts.load());
  CHECK(s1.retry_rate() < 0.2);
}

TEST_CASE("radio config validation") {
  RadioModelConfig r;
  CHECK_NOTHROW(validate(r));
  r.path_loss_exponent = 0.0;
  CHECK_THROWS_AS(validate(r), ValidationError);
}
