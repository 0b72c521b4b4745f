#include "rca/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <random>
#include <set>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/seeding.hpp"

namespace rca::sim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr int kNominalAttempts = 20;
constexpr int kPlantAttempts = 8;
constexpr int kInstanceAttempts = 6;
constexpr std::int64_t kEpoch2025 = 1735689600;  // 2025-01-01 00:00:00 UTC

struct Vec2 {
  double x = 0.0;  // east, m
  double y = 0.0;  // north, m
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

// Equirectangular east/north metres around an origin; accurate to well under a metre at a few km.
class LocalFrame {
 public:
  explicit LocalFrame(GeoPoint origin)
      : origin_(origin), metres_per_deg_(kEarthRadiusM * kDegToRad), cos0_(std::cos(origin.latitude * kDegToRad)) {}

  Vec2 to_local(GeoPoint p) const {
    return {(p.longitude - origin_.longitude) * metres_per_deg_ * cos0_,
            (p.latitude - origin_.latitude) * metres_per_deg_};
  }
  GeoPoint to_geo(Vec2 v) const {
    return {quantize(origin_.longitude + v.x / (metres_per_deg_ * cos0_), 6),
            quantize(origin_.latitude + v.y / metres_per_deg_, 6)};
  }

 private:
  GeoPoint origin_;
  double metres_per_deg_;
  double cos0_;
};

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const auto h = derive_seed(seed, {a, b});
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
}

double hashed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const double u1 = hashed_uniform(seed, a, 2 * b);
  const double u2 = hashed_uniform(seed, a, 2 * b + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double wrap_deg(double d) {
  d = std::fmod(d, 360.0);
  return d < 0.0 ? d + 360.0 : d;
}

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal(double mu, double sigma) { return std::normal_distribution<double>(mu, sigma)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

GeoPoint route_geo(const RoutePoint& r) { return {r.longitude, r.latitude}; }

std::size_t mid_index(const ScenarioConfig& s) { return s.route.size() / 2; }

LocalFrame frame_of(const ScenarioConfig& s) { return LocalFrame(route_geo(s.route[mid_index(s)])); }

Vec2 route_direction(const ScenarioConfig& s, const LocalFrame& f) {
  const Vec2 d = f.to_local(route_geo(s.route.back())) - f.to_local(route_geo(s.route.front()));
  const double n = d.norm();
  return n > 0 ? d * (1.0 / n) : Vec2{1.0, 0.0};
}

double depression_deg(const CellConfig& cell, GeoPoint ue, double ue_height) {
  return std::atan2(cell.height - ue_height, geo_distance(cell.position(), ue)) * kRadToDeg;
}

void place(CellConfig& cell, GeoPoint p) {
  cell.longitude = p.longitude;
  cell.latitude = p.latitude;
}

void aim(CellConfig& cell, GeoPoint target) {
  const double az = std::round(bearing_deg(cell.position(), target));
  cell.mech_azimuth = wrap_deg(az - cell.digital_azimuth);
}

void set_total_tilt(CellConfig& cell, int total, Draw& draw) {
  total = std::clamp(total, 0, 90 + 254);
  const int digital = draw.integer(0, std::min(total, 12));
  int mech = total - digital;
  if (mech > 90) mech = 90;
  const int rest = total - mech;
  cell.mech_downtilt = mech;
  cell.digital_tilt_raw = (rest == 6 && draw.coin()) ? 255 : rest;
}

std::string gnodeb_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%07d", id);
  return buf;
}

std::string fresh_gnodeb(const ScenarioConfig& s, Draw& draw) {
  std::set<std::string> used;
  for (const auto& c : s.cells) used.insert(c.gnodeb_id);
  while (true) {
    auto name = gnodeb_name(draw.integer(1, 999999));
    if (!used.count(name)) return name;
  }
}

std::string fresh_cell_id(const ScenarioConfig& s, const std::string& gnodeb, Draw& draw) {
  std::set<std::string> used;
  for (const auto& c : s.cells) {
    if (c.gnodeb_id == gnodeb) used.insert(c.cell_id);
  }
  while (true) {
    auto id = std::to_string(draw.integer(1, 40));
    if (!used.count(id)) return id;
  }
}

// A PCI not yet in use; with `residue` it collides mod 30 on purpose, otherwise its residue is unused.
int fresh_pci(const ScenarioConfig& s, std::optional<int> residue, Draw& draw) {
  std::set<int> used, residues;
  for (const auto& c : s.cells) {
    used.insert(c.pci);
    residues.insert(c.pci % 30);
  }
  std::vector<int> options;
  if (residue) {
    for (int p = *residue; p <= 1007; p += 30) {
      if (!used.count(p)) options.push_back(p);
    }
  } else {
    for (int r = 0; r < 30; ++r) {
      if (residues.count(r)) continue;
      for (int p = r; p <= 1007; p += 30) options.push_back(p);
    }
    if (options.empty()) {
      for (int p = 0; p <= 1007; ++p) {
        if (!used.count(p)) options.push_back(p);
      }
    }
  }
  if (options.empty()) throw GenerationError("PCI space exhausted");
  return options[static_cast<std::size_t>(draw.integer(0, static_cast<int>(options.size()) - 1))];
}

bool colocated(const CellConfig& a, const CellConfig& b) {
  return a.gnodeb_id == b.gnodeb_id && a.longitude == b.longitude && a.latitude == b.latitude;
}

// Recomputes positions from per-sample speeds along the original heading, keeping the mid point fixed.
void rebuild_route(ScenarioConfig& s, const std::vector<double>& speeds) {
  const LocalFrame f = frame_of(s);
  const Vec2 dir = route_direction(s, f);
  const auto n = s.route.size();
  std::vector<Vec2> pos(n);
  for (std::size_t i = 1; i < n; ++i) pos[i] = pos[i - 1] + dir * (speeds[i - 1] / 3.6);
  const Vec2 shift = f.to_local(route_geo(s.route[mid_index(s)])) - pos[mid_index(s)];
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = f.to_geo(pos[i] + shift);
    s.route[i].longitude = g.longitude;
    s.route[i].latitude = g.latitude;
    s.route[i].speed_kmh = speeds[i];
  }
}

ScenarioConfig draw_nominal(std::uint64_t seed, int num_cells, int route_length_s) {
  Draw draw(seed);
  ScenarioConfig s;
  const GeoPoint origin{quantize(draw.uniform(100.0, 140.0), 6), quantize(draw.uniform(20.0, 45.0), 6)};
  const LocalFrame f(origin);
  const std::int64_t t0 = kEpoch2025 + static_cast<std::int64_t>(draw.integer(0, 364)) * 86400 +
                          draw.integer(6 * 3600, 20 * 3600);
  const double heading = draw.uniform(0.0, 360.0) * kDegToRad;
  const Vec2 dir{std::sin(heading), std::cos(heading)};

  const auto n = static_cast<std::size_t>(route_length_s);
  std::vector<double> speeds(n);
  double v = draw.uniform(15.0, 35.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) v = std::clamp(v + draw.normal(0.0, 3.0), 15.0, 35.0);
    speeds[i] = std::round(v);
  }
  std::vector<Vec2> pos(n);
  for (std::size_t i = 1; i < n; ++i) pos[i] = pos[i - 1] + dir * (speeds[i - 1] / 3.6);
  const Vec2 centre = pos[n / 2];
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = f.to_geo(pos[i] - centre);
    s.route.push_back({g.longitude, g.latitude, speeds[i], t0 + static_cast<std::int64_t>(i)});
  }
  const GeoPoint mid = route_geo(s.route[n / 2]);

  // Residues mod 30 are drawn without replacement so the nominal network is collision-free.
  std::vector<int> residues(30);
  for (int r = 0; r < 30; ++r) residues[r] = r;
  std::shuffle(residues.begin(), residues.end(), draw.engine());
  std::size_t next_residue = 0;
  auto next_pci = [&] {
    const int r = residues[next_residue++ % 30];
    return r + 30 * draw.integer(0, 32);
  };

  std::set<std::string> gnodebs;
  auto new_gnodeb = [&] {
    while (true) {
      auto g = gnodeb_name(draw.integer(1, 999999));
      if (gnodebs.insert(g).second) return g;
    }
  };

  auto base_cell = [&](const std::string& gnodeb, int cell_id) {
    CellConfig c;
    c.gnodeb_id = gnodeb;
    c.cell_id = std::to_string(cell_id);
    c.pci = next_pci();
    const bool big = draw.integer(0, 3) == 0;
    c.txrx_mode = big ? "64T64R" : "32T32R";
    c.antenna_model = big ? "NR AAU 2" : "NR AAU 1";
    c.max_tx_power = 34.9;
    c.beam_scenario = BeamScenario{draw.integer(0, 16)};
    c.digital_azimuth = draw.integer(0, 3) == 0 ? draw.integer(1, 10) : 0;
    return c;
  };

  // Serving site beside the middle of the route.
  const double side = draw.coin() ? 1.0 : -1.0;
  const Vec2 perp = Vec2{-dir.y, dir.x} * side;
  const Vec2 site = dir * draw.uniform(-20.0, 20.0) + perp * draw.uniform(230.0, 290.0);
  const GeoPoint site_geo = f.to_geo(site);
  const double site_height = quantize(draw.uniform(20.0, 30.0), 1);
  const std::string serving_gnodeb = new_gnodeb();
  const int sectors = num_cells >= 4 ? 3 : num_cells - 1;
  const int first_cell_id = draw.integer(1, 20);

  std::vector<CellConfig> cells;
  std::vector<int> carrier;
  for (int k = 0; k < sectors; ++k) {
    CellConfig c = base_cell(serving_gnodeb, first_cell_id + k);
    place(c, site_geo);
    c.height = site_height;
    if (k == 0) {
      aim(c, mid);
      c.mech_azimuth = wrap_deg(c.mech_azimuth + draw.integer(-8, 8));
      set_total_tilt(c, static_cast<int>(std::round(depression_deg(c, mid, 1.5))), draw);
    } else {
      c.mech_azimuth = wrap_deg(cells.front().mech_azimuth + cells.front().digital_azimuth + 120.0 * k -
                                c.digital_azimuth);
      set_total_tilt(c, draw.integer(3, 10), draw);
    }
    cells.push_back(c);
    carrier.push_back(k == 0 ? 0 : 1);
  }

  // Remaining cells on distant sites facing away from the route.
  int remaining = num_cells - sectors;
  while (remaining > 0) {
    const int here = std::min(remaining, 3);
    const double b = draw.uniform(0.0, 360.0) * kDegToRad;
    const Vec2 p = Vec2{std::sin(b), std::cos(b)} * draw.uniform(1800.0, 3000.0);
    const GeoPoint g = f.to_geo(p);
    const double h = quantize(draw.uniform(25.0, 45.0), 1);
    const std::string gnodeb = new_gnodeb();
    const double away = bearing_deg(mid, g) + draw.uniform(-30.0, 30.0);
    const int id0 = draw.integer(1, 20);
    for (int k = 0; k < here; ++k) {
      CellConfig c = base_cell(gnodeb, id0 + k);
      place(c, g);
      c.height = h;
      c.mech_azimuth = wrap_deg(std::round(away + 120.0 * k) - c.digital_azimuth);
      set_total_tilt(c, draw.integer(2, 8), draw);
      cells.push_back(c);
      carrier.push_back(2);
    }
    remaining -= here;
  }

  // Table rows in a random order.
  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), draw.engine());
  for (std::size_t i = 0; i < order.size(); ++i) {
    s.cells.push_back(cells[order[i]]);
    s.carrier.push_back(carrier[order[i]]);
    if (order[i] == 0) s.initial_serving = i;
  }
  s.handover = HandoverConfig{};
  s.rb_cap = 273.0;
  s.noise_seed = splitmix64(seed ^ 0x5EEDULL);
  return s;
}

bool is_clean_nominal(const ScenarioConfig& s, const DriveTrace& trace) {
  const auto& serving = s.cells[s.initial_serving];
  for (const auto& sample : trace.samples) {
    if (sample.mac_dl_throughput < kThroughputThresholdMbps) return false;
    if (sample.serving_pci != serving.pci) return false;
    if (sample.gps_speed > 35.0) return false;
    if (geo_distance(serving.position(), {sample.longitude, sample.latitude}) >= 800.0) return false;
  }
  return true;
}

std::vector<double> route_speeds(const ScenarioConfig& s) {
  std::vector<double> v;
  for (const auto& r : s.route) v.push_back(r.speed_kmh);
  return v;
}

// Index of a non-serving cell to repurpose, preferring cells of other gNodeBs.
std::optional<std::size_t> pick_recruit(const ScenarioConfig& s, const std::set<std::size_t>& taken,
                                        bool prefer_colocated) {
  const auto& serving = s.cells[s.initial_serving];
  std::optional<std::size_t> fallback;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (i == s.initial_serving || taken.count(i)) continue;
    const bool co = colocated(s.cells[i], serving);
    if (co == prefer_colocated) return i;
    if (!fallback) fallback = i;
  }
  return fallback;
}

void perturb_speed(ScenarioConfig& s, Draw& draw) {
  const int n = static_cast<int>(s.route.size());
  const int w = draw.integer(4, 7);
  const int a = draw.integer(n / 4, std::max(n / 4, n - w - 2));
  auto speeds = route_speeds(s);
  for (int k = a; k < std::min(n, a + w); ++k) speeds[k] = draw.integer(60, 85);
  rebuild_route(s, speeds);
}

void perturb_downtilt(ScenarioConfig& s, const RadioModelConfig& radio, Draw& draw) {
  auto& cell = s.cells[s.initial_serving];
  double dep_max = 0.0;
  for (const auto& r : s.route) dep_max = std::max(dep_max, depression_deg(cell, route_geo(r), radio.ue_height_m));
  const double bw = vertical_beamwidth(cell.beam_scenario);
  set_total_tilt(cell, static_cast<int>(std::ceil(dep_max + draw.uniform(1.65, 2.0) * bw)), draw);
}

void perturb_overshoot(ScenarioConfig& s, const RadioModelConfig& radio, Draw& draw) {
  const LocalFrame f = frame_of(s);
  const GeoPoint mid = route_geo(s.route[mid_index(s)]);
  const CellConfig serving = s.cells[s.initial_serving];
  const Vec2 v = f.to_local(serving.position());
  const GeoPoint moved = f.to_geo(v * (draw.uniform(1050.0, 1400.0) / v.norm()));
  for (auto& c : s.cells) {
    if (colocated(c, serving)) place(c, moved);
  }
  auto& cell = s.cells[s.initial_serving];
  aim(cell, mid);
  set_total_tilt(cell, static_cast<int>(std::round(depression_deg(cell, mid, radio.ue_height_m))), draw);
}

void perturb_overlap(ScenarioConfig& s, const RadioModelConfig& radio, Draw& draw) {
  const LocalFrame f = frame_of(s);
  const Vec2 dir = route_direction(s, f);
  const GeoPoint mid = route_geo(s.route[mid_index(s)]);
  const auto serving = s.cells[s.initial_serving];
  std::optional<std::size_t> idx;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (i != s.initial_serving && s.cells[i].gnodeb_id != serving.gnodeb_id) {
      idx = i;
      break;
    }
  }
  if (!idx) {
    idx = pick_recruit(s, {}, false);
    if (!idx) throw GenerationError("no cell available to create an overlap");
    s.cells[*idx].gnodeb_id = fresh_gnodeb(s, draw);
  }
  const Vec2 v = f.to_local(serving.position()) - f.to_local(mid);
  const Vec2 along = dir * v.dot(dir);
  const Vec2 across = v - along;
  const double delta_db = draw.uniform(1.5, 4.0);
  const Vec2 mirrored = f.to_local(mid) + along - across * std::pow(10.0, delta_db / (10.0 * radio.path_loss_exponent));

  auto& cell = s.cells[*idx];
  place(cell, f.to_geo(mirrored));
  cell.height = serving.height;
  cell.max_tx_power = serving.max_tx_power;
  cell.beam_scenario = serving.beam_scenario;
  aim(cell, mid);
  set_total_tilt(cell, static_cast<int>(std::round(depression_deg(cell, mid, radio.ue_height_m))), draw);
  s.carrier[*idx] = s.carrier[s.initial_serving];
}

void perturb_pci(ScenarioConfig& s, const RadioModelConfig& radio, Draw& draw) {
  const auto serving = s.cells[s.initial_serving];
  const GeoPoint mid = route_geo(s.route[mid_index(s)]);
  std::optional<std::size_t> target;
  double best = -1e9;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (i == s.initial_serving || !colocated(s.cells[i], serving)) continue;
    const double p = mean_rsrp(s.cells[i], mid, radio);
    if (p > best) {
      best = p;
      target = i;
    }
  }
  if (!target) {
    target = pick_recruit(s, {}, false);
    if (!target) throw GenerationError("no neighbor available for a PCI conflict");
    auto& c = s.cells[*target];
    c.gnodeb_id = serving.gnodeb_id;
    c.cell_id = fresh_cell_id(s, serving.gnodeb_id, draw);
    place(c, serving.position());
    c.height = serving.height;
    c.mech_azimuth = wrap_deg(serving.mech_azimuth + serving.digital_azimuth + 120.0 - c.digital_azimuth);
  }
  s.carrier[*target] = s.carrier[s.initial_serving];
  s.cells[*target].pci = fresh_pci(s, serving.pci % 30, draw);
}

void perturb_frequent_handover(ScenarioConfig& s, Draw& draw) {
  constexpr int kSmallCells = 4;
  constexpr int kSpacing = 3;
  const int n = static_cast<int>(s.route.size());
  const int span = kSpacing * kSmallCells + 2;
  if (n < span + 2) throw GenerationError("route too short for a handover chain");
  const int a = draw.integer(n / 4, std::max(n / 4, n - span - 1));
  auto speeds = route_speeds(s);
  for (int k = a; k < std::min(n, a + span); ++k) speeds[k] = draw.integer(20, 30);
  rebuild_route(s, speeds);

  const LocalFrame f = frame_of(s);
  const Vec2 dir = route_direction(s, f);
  const Vec2 perp{-dir.y, dir.x};
  const auto serving = s.cells[s.initial_serving];
  std::set<std::size_t> taken;
  for (int m = 0; m < kSmallCells; ++m) {
    const auto at = static_cast<std::size_t>(a + 1 + kSpacing * m);
    const Vec2 road = f.to_local(route_geo(s.route[at]));
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const Vec2 p = road + perp * (sign * draw.uniform(8.0, 12.0));

    std::size_t idx;
    if (auto r = pick_recruit(s, taken, false); r && !colocated(s.cells[*r], serving)) {
      idx = *r;
    } else {
      s.cells.emplace_back();
      s.carrier.push_back(0);
      idx = s.cells.size() - 1;
      s.cells[idx].pci = fresh_pci(s, std::nullopt, draw);
    }
    taken.insert(idx);
    auto& c = s.cells[idx];
    c.gnodeb_id = serving.gnodeb_id;
    c.cell_id = fresh_cell_id(s, serving.gnodeb_id, draw);
    place(c, f.to_geo(p));
    c.height = quantize(draw.uniform(6.0, 10.0), 1);
    c.max_tx_power = 30.0;
    c.txrx_mode = "8T8R";
    c.antenna_model = "NR Pico";
    c.beam_scenario = BeamScenario::scenario(13);
    c.digital_azimuth = 0.0;
    aim(c, route_geo(s.route[at]));
    c.mech_downtilt = 25.0;
    c.digital_tilt_raw = 255;
    s.carrier[idx] = s.carrier[s.initial_serving];
  }
}

void perturb_handover_threshold(ScenarioConfig& s, const RadioModelConfig& radio, Draw& draw) {
  const LocalFrame f = frame_of(s);
  const Vec2 dir = route_direction(s, f);
  const auto n = s.route.size();
  const auto serving = s.cells[s.initial_serving];
  const Vec2 mid = f.to_local(route_geo(s.route[mid_index(s)]));
  const Vec2 towards_serving = f.to_local(serving.position()) - mid;
  Vec2 perp{-dir.y, dir.x};
  if (perp.dot(towards_serving) > 0) perp = perp * -1.0;

  auto idx = pick_recruit(s, {}, true);
  if (!idx) throw GenerationError("no neighbor available for a handover misconfiguration");
  auto& c = s.cells[*idx];
  if (c.gnodeb_id != serving.gnodeb_id) {
    c.gnodeb_id = serving.gnodeb_id;
    c.cell_id = fresh_cell_id(s, serving.gnodeb_id, draw);
  }
  const auto anchor = static_cast<std::size_t>(std::lround(0.75 * static_cast<double>(n - 1)));
  const auto target = static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(n - 1)));
  place(c, f.to_geo(f.to_local(route_geo(s.route[anchor])) + perp * draw.uniform(60.0, 100.0)));
  c.height = quantize(draw.uniform(15.0, 25.0), 1);
  c.max_tx_power = 34.9;
  c.beam_scenario = BeamScenario{draw.integer(0, 16)};
  aim(c, route_geo(s.route[target]));
  set_total_tilt(c, static_cast<int>(std::round(depression_deg(c, route_geo(s.route[target]), radio.ue_height_m))),
                 draw);
  s.carrier[*idx] = s.carrier[s.initial_serving];

  if (draw.coin()) {
    s.handover.hysteresis_db = draw.integer(10, 16);
  } else {
    s.handover.time_to_trigger_s = draw.integer(8, 15);
  }
}

void perturb_rb(ScenarioConfig& s, Draw& draw) { s.rb_cap = quantize(draw.uniform(40.0, 90.0), 1); }

ScenarioConfig perturb(const ScenarioConfig& nominal, CauseId cause, const RadioModelConfig& radio,
                       std::uint64_t seed) {
  Draw draw(seed);
  ScenarioConfig s = nominal;
  switch (cause) {
    case CauseId::SPEED_GT_40: perturb_speed(s, draw); break;
    case CauseId::EXCESS_DOWNTILT: perturb_downtilt(s, radio, draw); break;
    case CauseId::OVERSHOOT_GT_1KM: perturb_overshoot(s, radio, draw); break;
    case CauseId::NONCOLOCATED_OVERLAP: perturb_overlap(s, radio, draw); break;
    case CauseId::PCI_MOD30_CONFLICT: perturb_pci(s, radio, draw); break;
    case CauseId::FREQUENT_HANDOVER: perturb_frequent_handover(s, draw); break;
    case CauseId::HANDOVER_THRESHOLD_MISCONFIG: perturb_handover_threshold(s, radio, draw); break;
    case CauseId::INSUFFICIENT_RB: perturb_rb(s, draw); break;
  }
  s.planted_cause = cause;
  return s;
}

}  // namespace

void validate(const RadioModelConfig& radio) {
  if (!(radio.path_loss_exponent > 1.0)) throw ValidationError("path loss exponent must exceed 1");
  if (radio.shadowing_sigma < 0.0) throw ValidationError("shadowing sigma must be >= 0");
  if (radio.handover_hysteresis < 0.0) throw ValidationError("hysteresis must be >= 0");
  if (radio.rb_bandwidth_khz <= 0.0 || radio.spectral_efficiency_cap <= 0.0)
    throw ValidationError("RB bandwidth and efficiency cap must be positive");
}

double tilt_pattern_loss(double angle, double beamwidth) {
  const double r = angle / beamwidth;
  return std::min(12.0 * r * r, 30.0);
}

double horizontal_pattern_loss(double angle, double beamwidth) {
  const double r = angle / beamwidth;
  return std::min(12.0 * r * r, 30.0);
}

double path_loss_db(double distance_m, const RadioModelConfig& radio) {
  return radio.reference_loss_db + 10.0 * radio.path_loss_exponent * std::log10(std::max(distance_m, 1.0));
}

double mean_rsrp(const CellConfig& cell, GeoPoint ue, const RadioModelConfig& radio) {
  const double horizontal = geo_distance(cell.position(), ue);
  const double dz = cell.height - radio.ue_height_m;
  const double d3 = std::hypot(horizontal, dz);
  const double depression = std::atan2(dz, horizontal) * kRadToDeg;
  const double vertical_loss =
      tilt_pattern_loss(std::abs(depression - total_downtilt(cell)), vertical_beamwidth(cell.beam_scenario));
  double horizontal_loss = 0.0;
  if (horizontal > 1e-9) {
    double off = std::abs(wrap_deg(bearing_deg(cell.position(), ue) - cell.mech_azimuth - cell.digital_azimuth));
    if (off > 180.0) off = 360.0 - off;
    horizontal_loss = horizontal_pattern_loss(off, radio.horizontal_beamwidth);
  }
  return cell.max_tx_power - path_loss_db(d3, radio) - vertical_loss - horizontal_loss;
}

double spectral_efficiency(double sinr_db, const RadioModelConfig& radio) {
  return std::min(std::log2(1.0 + db_to_lin(sinr_db)), radio.spectral_efficiency_cap);
}

double throughput_mbps(double rb_num, double sinr_db, const RadioModelConfig& radio) {
  const double mbps = rb_num * (radio.rb_bandwidth_khz / 1000.0) * spectral_efficiency(sinr_db, radio) * radio.stream_gain;
  return std::min(std::max(mbps, 0.0), radio.throughput_cap_mbps);
}

DriveTrace simulate_drive(const ScenarioConfig& scenario, const RadioModelConfig& radio, std::uint64_t seed) {
  validate(scenario);
  validate(radio);
  const auto& cells = scenario.cells;
  const std::size_t num_cells = cells.size();
  const double noise = db_to_lin(radio.noise_floor_dbm);
  const double collision_gain = db_to_lin(radio.pci_collision_gain_db);
  const std::uint64_t rb_seed = splitmix64(seed ^ 0xB10CULL);

  DriveTrace out;
  out.samples.reserve(scenario.route.size());
  std::size_t serving = scenario.initial_serving;
  int trigger_count = 0;
  std::vector<double> rsrp(num_cells);
  std::vector<std::size_t> order(num_cells);

  for (std::size_t i = 0; i < scenario.route.size(); ++i) {
    const auto& point = scenario.route[i];
    const GeoPoint ue{point.longitude, point.latitude};
    for (std::size_t c = 0; c < num_cells; ++c) {
      rsrp[c] = quantize(mean_rsrp(cells[c], ue, radio) + radio.shadowing_sigma * hashed_normal(seed, i, c), 2);
    }

    for (std::size_t c = 0; c < num_cells; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rsrp[a] > rsrp[b]; });

    UserPlaneSample s;
    s.timestamp = point.timestamp;
    s.longitude = point.longitude;
    s.latitude = point.latitude;
    s.gps_speed = point.speed_kmh;
    s.serving_pci = cells[serving].pci;
    s.ss_rsrp = rsrp[serving];
    for (auto c : order) {
      if (c == serving) continue;
      if (s.neighbors.size() == 5) break;
      s.neighbors.push_back({cells[c].pci, rsrp[c]});
    }

    double interference = 0.0;
    for (std::size_t c = 0; c < num_cells; ++c) {
      if (c == serving || scenario.carrier[c] != scenario.carrier[serving]) continue;
      double p = db_to_lin(rsrp[c]);
      if (pci_mod30_conflict(cells[c].pci, cells[serving].pci)) p *= collision_gain;
      interference += p;
    }
    const double speed_penalty =
        std::max(0.0, point.speed_kmh - radio.speed_penalty_onset_kmh) * radio.speed_penalty_db_per_kmh;
    s.ss_sinr = quantize(10.0 * std::log10(db_to_lin(rsrp[serving]) / (interference + noise)) - speed_penalty, 2);

    double rb = radio.nominal_rb_min + (radio.nominal_rb_max - radio.nominal_rb_min) * hashed_uniform(rb_seed, i, 0);
    if (rb > scenario.rb_cap) rb = scenario.rb_cap * (0.9 + 0.1 * hashed_uniform(rb_seed, i, 1));
    s.dl_rb_num = quantize(rb, 2);
    s.mac_dl_throughput = quantize(throughput_mbps(s.dl_rb_num, s.ss_sinr, radio), 2);

    // A3-style: a listed co-frequency neighbor must beat serving + hysteresis for TTT samples.
    std::optional<std::size_t> candidate;
    for (auto c : order) {
      if (c == serving) continue;
      if (rsrp[c] <= rsrp[serving] + scenario.handover.hysteresis_db) break;
      if (scenario.carrier[c] == scenario.carrier[serving]) {
        candidate = c;
        break;
      }
    }
    // Only neighbors reported in the top set are candidates.
    if (candidate) {
      const int pci = cells[*candidate].pci;
      if (std::none_of(s.neighbors.begin(), s.neighbors.end(), [&](const auto& n) { return n.pci == pci; }))
        candidate.reset();
    }
    out.samples.push_back(std::move(s));
    if (candidate) {
      if (++trigger_count >= scenario.handover.time_to_trigger_s) {
        serving = *candidate;
        trigger_count = 0;
      }
    } else {
      trigger_count = 0;
    }
  }
  return out;
}

ScenarioConfig generate_nominal(std::uint64_t seed, int num_cells, int route_length_s) {
  if (num_cells < 2) throw ValidationError("a scenario needs at least 2 cells");
  if (route_length_s < 10) throw ValidationError("route must last at least 10 s");
  const RadioModelConfig radio{};
  for (int attempt = 0; attempt < kNominalAttempts; ++attempt) {
    ScenarioConfig s = draw_nominal(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}), num_cells, route_length_s);
    if (is_clean_nominal(s, simulate_drive(s, radio, s.noise_seed))) return s;
  }
  throw GenerationError("could not draw a fault-free scenario for seed " + std::to_string(seed));
}

ScenarioConfig plant_fault(const ScenarioConfig& nominal, CauseId cause, std::uint64_t seed,
                           const RadioModelConfig& radio, GenerationStats* stats) {
  validate(nominal);
  if (nominal.planted_cause) throw ValidationError("scenario already carries a planted fault");
  for (int attempt = 0; attempt < kPlantAttempts; ++attempt) {
    if (stats) ++stats->attempts;
    ScenarioConfig s;
    try {
      s = perturb(nominal, cause, radio, derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
      if (attempt > 0) s.noise_seed = derive_seed(nominal.noise_seed, {static_cast<std::uint64_t>(attempt)});
      validate(s, true);
    } catch (const GenerationError&) {
      continue;
    }
    const auto trace = simulate_drive(s, radio, s.noise_seed);
    const auto symptom = oracle::detect_symptom(trace);
    if (!symptom) continue;
    try {
      const auto evidence = oracle::evaluate_rules(s, trace, *symptom);
      if (oracle::select_cause(evidence) != cause) continue;
    } catch (const UndiagnosableError&) {
      continue;
    } catch (const DataIntegrityError&) {
      continue;
    }
    if (stats) ++stats->accepted;
    return s;
  }
  throw GenerationError("could not realise " + std::string(to_string(cause)) + " within the retry budget");
}

RootCauseCatalog permuted_catalog(std::uint64_t catalog_seed) {
  if (catalog_seed == 0) return RootCauseCatalog::standard();
  std::vector<CauseId> causes(kAllCauses.begin(), kAllCauses.end());
  std::mt19937_64 rng(catalog_seed);
  std::shuffle(causes.begin(), causes.end(), rng);
  std::vector<CatalogEntry> entries;
  for (std::size_t k = 0; k < causes.size(); ++k) {
    entries.push_back({"C" + std::to_string(k + 1), causes[k], std::string(describe(causes[k]))});
  }
  return RootCauseCatalog(std::move(entries));
}

LabeledInstance build_instance(CauseId cause, std::uint64_t seed, std::uint64_t catalog_seed,
                               const RadioModelConfig& radio, const InstanceShape& shape, GenerationStats* stats) {
  for (int attempt = 0; attempt < kInstanceAttempts; ++attempt) {
    const auto nominal_seed = derive_seed(seed, {static_cast<std::uint64_t>(attempt)});
    ScenarioConfig scenario;
    try {
      const auto nominal = generate_nominal(nominal_seed, shape.num_cells, shape.route_length_s);
      scenario = plant_fault(nominal, cause, derive_seed(nominal_seed, {0xFA17ULL}), radio, stats);
    } catch (const GenerationError&) {
      continue;
    }
    LabeledInstance inst;
    inst.trace = simulate_drive(scenario, radio, scenario.noise_seed);
    inst.symptom = *oracle::detect_symptom(inst.trace);
    inst.scenario = std::move(scenario);
    inst.ground_truth = cause;
    inst.catalog = permuted_catalog(catalog_seed);
    return inst;
  }
  throw GenerationError("instance generation failed for " + std::string(to_string(cause)) + " seed " +
                        std::to_string(seed));
}

std::vector<LabeledInstance> build_batch_serial(const std::vector<InstanceRequest>& requests,
                                                const RadioModelConfig& radio, const InstanceShape& shape,
                                                GenerationStats* stats) {
  std::vector<LabeledInstance> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(build_instance(r.cause, r.seed, r.catalog_seed, radio, shape, stats));
  return out;
}

std::vector<LabeledInstance> build_batch(const std::vector<InstanceRequest>& requests, const RadioModelConfig& radio,
                                         const InstanceShape& shape, GenerationStats* stats) {
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
  std::vector<LabeledInstance> out(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& r = requests[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = build_instance(r.cause, r.seed, r.catalog_seed, radio, shape, stats);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace rca::sim
