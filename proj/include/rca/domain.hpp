#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rca {

// Longitude/latitude in degrees.
struct GeoPoint {
  double longitude = 0.0;
  double latitude = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

// DEFAULT is index 0, SCENARIO_k is index k.
struct BeamScenario {
  int index = 0;
  static constexpr BeamScenario defaulted() { return {0}; }
  static constexpr BeamScenario scenario(int k) { return {k}; }
  bool operator==(const BeamScenario&) const = default;
};

std::string to_string(BeamScenario b);
BeamScenario parse_beam_scenario(std::string_view text);

// One row of the engineering-parameter table.
struct CellConfig {
  std::string gnodeb_id;
  std::string cell_id;
  double longitude = 0.0;
  double latitude = 0.0;
  double mech_azimuth = 0.0;
  double mech_downtilt = 0.0;
  int digital_tilt_raw = 255;
  double digital_azimuth = 0.0;
  BeamScenario beam_scenario{};
  double height = 25.0;
  int pci = 0;
  std::string txrx_mode = "32T32R";
  double max_tx_power = 34.9;
  std::string antenna_model = "NR AAU 1";

  GeoPoint position() const { return {longitude, latitude}; }
  bool operator==(const CellConfig&) const = default;
};

// Throws ValidationError when a CellConfig invariant is broken.
void validate(const CellConfig& cell);

struct RoutePoint {
  double longitude = 0.0;
  double latitude = 0.0;
  double speed_kmh = 0.0;
  std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
  bool operator==(const RoutePoint&) const = default;
};

enum class CauseId : std::uint8_t {
  SPEED_GT_40,
  EXCESS_DOWNTILT,
  OVERSHOOT_GT_1KM,
  NONCOLOCATED_OVERLAP,
  PCI_MOD30_CONFLICT,
  FREQUENT_HANDOVER,
  HANDOVER_THRESHOLD_MISCONFIG,
  INSUFFICIENT_RB,
};

inline constexpr std::size_t kNumCauses = 8;
inline constexpr std::array<CauseId, kNumCauses> kAllCauses = {
    CauseId::SPEED_GT_40,         CauseId::EXCESS_DOWNTILT,   CauseId::OVERSHOOT_GT_1KM,
    CauseId::NONCOLOCATED_OVERLAP, CauseId::PCI_MOD30_CONFLICT, CauseId::FREQUENT_HANDOVER,
    CauseId::HANDOVER_THRESHOLD_MISCONFIG, CauseId::INSUFFICIENT_RB,
};

constexpr std::size_t index_of(CauseId c) { return static_cast<std::size_t>(c); }
std::string_view to_string(CauseId c);
CauseId parse_cause(std::string_view name);
// Plain-language description shown in the prompt's cause list.
std::string_view describe(CauseId c);

struct HandoverConfig {
  double hysteresis_db = 3.0;
  int time_to_trigger_s = 2;
  bool operator==(const HandoverConfig&) const = default;
};

struct ScenarioConfig {
  std::vector<CellConfig> cells;
  // Carrier group per cell (same value = co-frequency), parallel to `cells`.
  std::vector<int> carrier;
  std::vector<RoutePoint> route;
  std::size_t initial_serving = 0;
  HandoverConfig handover{};
  // Upper bound on the scheduled RBs per sample.
  double rb_cap = 273.0;
  std::optional<CauseId> planted_cause;
  std::uint64_t noise_seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

// Throws ValidationError. `require_fault` additionally demands a planted cause.
void validate(const ScenarioConfig& scenario, bool require_fault = false);

struct NeighborMeasurement {
  int pci = 0;
  double brsrp = 0.0;
  bool operator==(const NeighborMeasurement&) const = default;
};

struct UserPlaneSample {
  std::int64_t timestamp = 0;
  double longitude = 0.0;
  double latitude = 0.0;
  double gps_speed = 0.0;
  int serving_pci = 0;
  double ss_rsrp = 0.0;
  double ss_sinr = 0.0;
  double mac_dl_throughput = 0.0;
  std::vector<NeighborMeasurement> neighbors;  // at most 5, brsrp descending
  double dl_rb_num = 0.0;
  bool operator==(const UserPlaneSample&) const = default;
};

struct DriveTrace {
  std::vector<UserPlaneSample> samples;
  bool operator==(const DriveTrace&) const = default;
};

void validate(const DriveTrace& trace);

inline constexpr double kThroughputThresholdMbps = 600.0;

struct Symptom {
  enum class Kind { THROUGHPUT_BELOW_THRESHOLD };
  Kind kind = Kind::THROUGHPUT_BELOW_THRESHOLD;
  double threshold = kThroughputThresholdMbps;
  std::size_t onset_index = 0;
  std::vector<std::size_t> affected_indices;
  bool operator==(const Symptom&) const = default;
};

struct CatalogEntry {
  std::string label;  // e.g. "C3"
  CauseId cause{};
  std::string description;
  bool operator==(const CatalogEntry&) const = default;
};

// Label-to-cause binding, in prompt presentation order.
class RootCauseCatalog {
 public:
  RootCauseCatalog() = default;
  explicit RootCauseCatalog(std::vector<CatalogEntry> entries);

  // C1..C8 bound to the causes in declaration order.
  static RootCauseCatalog standard();

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const std::string& label_of(CauseId c) const;
  std::optional<CauseId> cause_of(std::string_view label) const;

  bool operator==(const RootCauseCatalog&) const = default;

 private:
  std::vector<CatalogEntry> entries_;
};

// ---- geometric / radio helpers -------------------------------------------

// Resolves the 255 sentinel to 6 degrees; throws ValidationError outside [0,255].
double effective_digital_tilt(int raw);
double vertical_beamwidth(BeamScenario beam);
double total_downtilt(const CellConfig& cell);

inline constexpr double kEarthRadiusM = 6371000.0;
double geo_distance(GeoPoint a, GeoPoint b);
// Initial great-circle bearing from a to b, degrees clockwise from north in [0,360).
double bearing_deg(GeoPoint a, GeoPoint b);

bool pci_mod30_conflict(int pci_a, int pci_b);

// Rounds to `decimals` places so that the rendered text re-parses to the same double.
double quantize(double value, int decimals);

}  // namespace rca
