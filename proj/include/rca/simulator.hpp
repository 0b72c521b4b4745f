#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "rca/domain.hpp"

namespace rca::sim {

// Log-distance propagation with parabolic antenna patterns and a truncated-Shannon link.
struct RadioModelConfig {
  double path_loss_exponent = 3.0;
  double reference_loss_db = 32.0;  // at 1 m
  double shadowing_sigma = 2.0;     // dB, i.i.d. per (sample, cell)
  double rb_bandwidth_khz = 360.0;  // 30 kHz SCS x 12 subcarriers
  double spectral_efficiency_cap = 7.4;
  double noise_floor_dbm = -95.0;
  double handover_hysteresis = 3.0;
  int handover_time_to_trigger = 2;  // s

  // Multiplexing gain on top of the single-stream Shannon rate: ~165 RBs at the
  // efficiency cap gives ~1000 Mbps.
  double stream_gain = 2.3;
  double throughput_cap_mbps = 1500.0;
  double horizontal_beamwidth = 65.0;
  double ue_height_m = 1.5;
  // Effective-SINR loss per km/h above the onset speed (channel ageing).
  double speed_penalty_onset_kmh = 40.0;
  double speed_penalty_db_per_kmh = 1.0;
  // Extra weight on interference from cells whose PCI collides mod 30 with the serving cell.
  double pci_collision_gain_db = 30.0;
  // Nominal scheduler allocation range.
  double nominal_rb_min = 165.0;
  double nominal_rb_max = 190.0;
};

void validate(const RadioModelConfig& radio);

struct LabeledInstance {
  ScenarioConfig scenario;
  DriveTrace trace;
  Symptom symptom;
  CauseId ground_truth{};
  RootCauseCatalog catalog;
  bool operator==(const LabeledInstance&) const = default;
};

// Size of the generated scenarios.
struct InstanceShape {
  int num_cells = 6;
  int route_length_s = 30;
};

// Attempt accounting for the discard-and-retry generation loop.
struct GenerationStats {
  std::atomic<std::uint64_t> attempts{0};
  std::atomic<std::uint64_t> accepted{0};
  double retry_rate() const {
    const auto a = attempts.load();
    return a == 0 ? 0.0 : static_cast<double>(a - accepted.load()) / static_cast<double>(a);
  }
};

double tilt_pattern_loss(double vertical_angle_off_boresight, double beamwidth);
double horizontal_pattern_loss(double angle_off_azimuth, double beamwidth);
double path_loss_db(double distance_m, const RadioModelConfig& radio);
// Received power from `cell` at `ue` before shadowing.
double mean_rsrp(const CellConfig& cell, GeoPoint ue, const RadioModelConfig& radio);
// Spectral efficiency in bit/s/Hz for a linear SINR.
double spectral_efficiency(double sinr_db, const RadioModelConfig& radio);
double throughput_mbps(double rb_num, double sinr_db, const RadioModelConfig& radio);

ScenarioConfig generate_nominal(std::uint64_t seed, int num_cells, int route_length_s);

// Perturbs a fault-free scenario so that `cause` explains its symptom; throws GenerationError.
ScenarioConfig plant_fault(const ScenarioConfig& nominal, CauseId cause, std::uint64_t seed,
                           const RadioModelConfig& radio = {}, GenerationStats* stats = nullptr);

DriveTrace simulate_drive(const ScenarioConfig& scenario, const RadioModelConfig& radio, std::uint64_t seed);

// catalog_seed 0 keeps the standard C1..C8 binding; other values permute the labels.
LabeledInstance build_instance(CauseId cause, std::uint64_t seed, std::uint64_t catalog_seed,
                               const RadioModelConfig& radio = {}, const InstanceShape& shape = {},
                               GenerationStats* stats = nullptr);

RootCauseCatalog permuted_catalog(std::uint64_t catalog_seed);

struct InstanceRequest {
  CauseId cause{};
  std::uint64_t seed = 0;
  std::uint64_t catalog_seed = 0;
};

// OpenMP batch; results are ordered by request index and identical to build_batch_serial.
std::vector<LabeledInstance> build_batch(const std::vector<InstanceRequest>& requests,
                                         const RadioModelConfig& radio = {}, const InstanceShape& shape = {},
                                         GenerationStats* stats = nullptr);
std::vector<LabeledInstance> build_batch_serial(const std::vector<InstanceRequest>& requests,
                                                const RadioModelConfig& radio = {}, const InstanceShape& shape = {},
                                                GenerationStats* stats = nullptr);

}  // namespace rca::sim
