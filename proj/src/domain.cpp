#include "rca/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include "rca/errors.hpp"

namespace rca {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct CauseName {
  CauseId id;
  std::string_view name;
  std::string_view description;
};

constexpr std::array<CauseName, kNumCauses> kCauseNames = {{
    {CauseId::SPEED_GT_40, "SPEED_GT_40", "The test vehicle drives faster than 40 km/h, degrading link quality."},
    {CauseId::EXCESS_DOWNTILT, "EXCESS_DOWNTILT",
     "The serving cell downtilt is too large, leaving weak coverage at the far end."},
    {CauseId::OVERSHOOT_GT_1KM, "OVERSHOOT_GT_1KM",
     "The serving cell covers beyond 1 km, an over-shooting cell with poor RSRP."},
    {CauseId::NONCOLOCATED_OVERLAP, "NONCOLOCATED_OVERLAP",
     "A non-colocated co-frequency neighbor cell overlaps the serving coverage and interferes."},
    {CauseId::PCI_MOD30_CONFLICT, "PCI_MOD30_CONFLICT",
     "A neighbor cell shares the serving PCI mod 30, so reference signals collide."},
    {CauseId::FREQUENT_HANDOVER, "FREQUENT_HANDOVER", "Handovers happen too often and degrade the user."},
    {CauseId::HANDOVER_THRESHOLD_MISCONFIG, "HANDOVER_THRESHOLD_MISCONFIG",
     "Handover thresholds are misconfigured, so a much better neighbor is not used in time."},
    {CauseId::INSUFFICIENT_RB, "INSUFFICIENT_RB",
     "The average scheduled RBs are below 160, too few for the target throughput."},
}};

}  // namespace

std::string to_string(BeamScenario b) {
  if (b.index == 0) return "DEFAULT";
  return "SCENARIO_" + std::to_string(b.index);
}

BeamScenario parse_beam_scenario(std::string_view text) {
  if (text == "DEFAULT") return BeamScenario::defaulted();
  constexpr std::string_view prefix = "SCENARIO_";
  if (text.substr(0, prefix.size()) == prefix) {
    int k = 0;
    auto digits = text.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && k >= 1) return BeamScenario::scenario(k);
  }
  throw ValidationError("unknown beam scenario '" + std::string(text) + "'");
}

void validate(const CellConfig& cell) {
  if (cell.pci < 0) throw ValidationError("cell " + cell.cell_id + ": pci must be >= 0");
  if (!(cell.height > 0.0)) throw ValidationError("cell " + cell.cell_id + ": height must be > 0");
  if (cell.mech_downtilt < 0.0 || cell.mech_downtilt > 90.0)
    throw ValidationError("cell " + cell.cell_id + ": mechanical downtilt outside [0, 90]");
  if (cell.latitude < -90.0 || cell.latitude > 90.0) throw ValidationError("cell " + cell.cell_id + ": bad latitude");
  if (cell.longitude < -180.0 || cell.longitude > 180.0)
    throw ValidationError("cell " + cell.cell_id + ": bad longitude");
  if (cell.beam_scenario.index < 0) throw ValidationError("cell " + cell.cell_id + ": bad beam scenario");
  effective_digital_tilt(cell.digital_tilt_raw);
}

void validate(const ScenarioConfig& scenario, bool require_fault) {
  if (scenario.cells.size() < 2) throw ValidationError("scenario needs at least 2 cells");
  if (scenario.carrier.size() != scenario.cells.size())
    throw ValidationError("carrier groups must parallel the cell list");
  if (scenario.initial_serving >= scenario.cells.size()) throw ValidationError("initial serving index out of range");
  std::set<int> pcis;
  for (const auto& c : scenario.cells) {
    validate(c);
    if (!pcis.insert(c.pci).second) throw ValidationError("duplicate PCI " + std::to_string(c.pci));
  }
  if (scenario.route.empty()) throw ValidationError("route is empty");
  for (std::size_t i = 1; i < scenario.route.size(); ++i) {
    if (scenario.route[i].timestamp != scenario.route[i - 1].timestamp + 1)
      throw ValidationError("route timestamps must advance by exactly 1 s");
  }
  if (scenario.handover.hysteresis_db < 0.0 || scenario.handover.time_to_trigger_s < 1)
    throw ValidationError("invalid handover configuration");
  if (require_fault && !scenario.planted_cause) throw ValidationError("scenario has no planted cause");
}

void validate(const DriveTrace& trace) {
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    if (i > 0 && s.timestamp <= trace.samples[i - 1].timestamp)
      throw ValidationError("trace timestamps must be strictly increasing");
    if (s.mac_dl_throughput < 0.0 || s.dl_rb_num < 0.0)
      throw ValidationError("negative throughput or RB count at sample " + std::to_string(i));
    if (s.neighbors.size() > 5) throw ValidationError("more than 5 neighbors at sample " + std::to_string(i));
    for (std::size_t k = 1; k < s.neighbors.size(); ++k) {
      if (s.neighbors[k].brsrp > s.neighbors[k - 1].brsrp)
        throw ValidationError("neighbors not sorted by BRSRP at sample " + std::to_string(i));
    }
  }
}

std::string_view to_string(CauseId c) { return kCauseNames[index_of(c)].name; }

CauseId parse_cause(std::string_view name) {
  for (const auto& entry : kCauseNames) {
    if (entry.name == name) return entry.id;
  }
  throw ValidationError("unknown cause '" + std::string(name) + "'");
}

std::string_view describe(CauseId c) { return kCauseNames[index_of(c)].description; }

RootCauseCatalog::RootCauseCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
  if (entries_.size() != kNumCauses) throw ValidationError("catalog must list exactly 8 causes");
  std::set<std::string> labels;
  std::set<CauseId> causes;
  for (const auto& e : entries_) {
    if (!labels.insert(e.label).second) throw ValidationError("duplicate catalog label " + e.label);
    causes.insert(e.cause);
  }
  if (causes.size() != kNumCauses) throw ValidationError("catalog is not a permutation of the 8 causes");
}

RootCauseCatalog RootCauseCatalog::standard() {
  std::vector<CatalogEntry> entries;
  for (std::size_t k = 0; k < kNumCauses; ++k) {
    entries.push_back({"C" + std::to_string(k + 1), kAllCauses[k], std::string(describe(kAllCauses[k]))});
  }
  return RootCauseCatalog(std::move(entries));
}

const std::string& RootCauseCatalog::label_of(CauseId c) const {
  for (const auto& e : entries_) {
    if (e.cause == c) return e.label;
  }
  throw ValidationError("cause missing from catalog");
}

std::optional<CauseId> RootCauseCatalog::cause_of(std::string_view label) const {
  for (const auto& e : entries_) {
    if (e.label == label) return e.cause;
  }
  return std::nullopt;
}

double effective_digital_tilt(int raw) {
  if (raw < 0 || raw > 255) throw ValidationError("digital tilt raw value " + std::to_string(raw) + " outside [0,255]");
  return raw == 255 ? 6.0 : static_cast<double>(raw);
}

double vertical_beamwidth(BeamScenario beam) {
  if (beam.index <= 5) return 6.0;
  if (beam.index <= 11) return 12.0;
  return 25.0;
}

double total_downtilt(const CellConfig& cell) {
  return cell.mech_downtilt + effective_digital_tilt(cell.digital_tilt_raw);
}

double geo_distance(GeoPoint a, GeoPoint b) {
  const double lat1 = a.latitude * kDegToRad;
  const double lat2 = b.latitude * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude - a.longitude) * kDegToRad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(s)));
}

double bearing_deg(GeoPoint a, GeoPoint b) {
  const double lat1 = a.latitude * kDegToRad;
  const double lat2 = b.latitude * kDegToRad;
  const double dlon = (b.longitude - a.longitude) * kDegToRad;
  const double y = std::sin(dlon) * std::cos(lat2);
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  double deg = std::atan2(y, x) / kDegToRad;
  if (deg < 0.0) deg += 360.0;
  return deg >= 360.0 ? deg - 360.0 : deg;
}

bool pci_mod30_conflict(int pci_a, int pci_b) { return pci_a != pci_b && pci_a % 30 == pci_b % 30; }

double quantize(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double n = std::nearbyint(value * scale);
  double q = n / scale;
  return q == 0.0 ? 0.0 : q;  // drop negative zero
}

}  // namespace rca
