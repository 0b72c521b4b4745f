#include "rca/promptkit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/text_format.hpp"

namespace rca {

using nlohmann::json;

namespace {

constexpr std::size_t kTopNeighbors = 5;
constexpr std::size_t kUserPlaneColumns = 8 + 2 * kTopNeighbors + 1;
constexpr std::size_t kEngineeringColumns = 14;
constexpr const char* kSpaceMark = "\xE2\x96\x81";  // U+2581, marks a leading space

const char* const kPreamble =
    "Analyze the 5G drive-test user plane data and engineering parameters below to find why throughput drops "
    "below 600 Mbps on some road sections. Pick the most likely root cause from the 8 candidates listed, and give "
    "its label inside \\boxed{} in the final answer.";

const char* const kRules =
    "Given:\n"
    "- Digital tilt 255 is the default value and means a downtilt of 6 degrees. Any other value is the downtilt "
    "in degrees.\n"
    "Beam scenario and vertical beamwidth:\n"
    "- DEFAULT or SCENARIO_1 to SCENARIO_5: 6 degrees.\n"
    "- SCENARIO_6 to SCENARIO_11: 12 degrees.\n"
    "- SCENARIO_12 and above: 25 degrees.";

std::string coord(double v) { return format_decimal(v, 6); }
std::string two(double v) { return format_decimal(v, 2); }
std::string one(double v) { return format_decimal(v, 1); }

// Runs `f`, re-raising ParseError and ValidationError with the table line attached.
template <class F>
auto at_line(std::size_t line, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(line, e.what());
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
}

std::vector<std::string> table_lines(std::string_view table) {
  std::vector<std::string> lines;
  for (auto& l : split(trim(table), '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(std::move(l));
  }
  return lines;
}

std::size_t label_index(const std::string& label) {
  if (label.size() < 2 || label[0] != 'C') throw ValidationError("unexpected catalog label '" + label + "'");
  const auto k = parse_int(std::string_view(label).substr(1));
  if (k < 1 || k > static_cast<long long>(kNumCauses)) throw ValidationError("catalog label out of range: " + label);
  return static_cast<std::size_t>(k - 1);
}

void check_permutation(const std::vector<std::size_t>& p, std::size_t n, const char* what) {
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != i || sorted.size() != n) throw ValidationError(std::string(what) + " is not a permutation");
  }
  if (p.size() != n) throw ValidationError(std::string(what) + " is not a permutation");
}

}  // namespace

// ---- pipe tables -----------------------------------------------------------

std::string user_plane_header() {
  std::vector<std::string> h = {"Timestamp",
                                "Longitude",
                                "Latitude",
                                "GPS Speed (km/h)",
                                "5G KPI PCell RF Serving PCI",
                                "5G KPI PCell RF Serving SS-RSRP [dBm]",
                                "5G KPI PCell RF Serving SS-SINR [dB]",
                                "5G KPI PCell Layer2 MAC DL Throughput [Mbps]"};
  for (std::size_t k = 1; k <= kTopNeighbors; ++k)
    h.push_back("Measurement PCell Neighbor Cell Top Set(Cell Level) Top " + std::to_string(k) + " PCI");
  for (std::size_t k = 1; k <= kTopNeighbors; ++k)
    h.push_back("Measurement PCell Neighbor Cell Top Set(Cell Level) Top " + std::to_string(k) +
                " Filtered Tx BRSRP [dBm]");
  h.push_back("5G KPI PCell Layer1 DL RB Num (Including 0)");
  return join(h, "|");
}

std::string engineering_header() {
  return "gNodeB ID|Cell ID|Longitude|Latitude|Mechanical Azimuth|Mechanical Downtilt|Digital Tilt|Digital "
         "Azimuth|Beam Scenario|Height|PCI|TxRx Mode|Max Transmit Power|Antenna Model";
}

std::string render_user_plane_table(const DriveTrace& trace) {
  std::vector<std::string> lines = {user_plane_header()};
  for (const auto& s : trace.samples) {
    if (s.neighbors.size() > kTopNeighbors) throw ValidationError("more than 5 neighbors in a sample");
    std::vector<std::string> f = {format_timestamp(s.timestamp), coord(s.longitude),  coord(s.latitude),
                                  format_integer(s.gps_speed),   std::to_string(s.serving_pci),
                                  two(s.ss_rsrp),                two(s.ss_sinr),       two(s.mac_dl_throughput)};
    for (std::size_t k = 0; k < kTopNeighbors; ++k)
      f.push_back(k < s.neighbors.size() ? std::to_string(s.neighbors[k].pci) : "");
    for (std::size_t k = 0; k < kTopNeighbors; ++k)
      f.push_back(k < s.neighbors.size() ? two(s.neighbors[k].brsrp) : "");
    f.push_back(two(s.dl_rb_num));
    lines.push_back(join(f, "|"));
  }
  return join(lines, "\n");
}

std::string render_engineering_table(const std::vector<CellConfig>& cells) {
  std::vector<std::string> lines = {engineering_header()};
  for (const auto& c : cells) {
    lines.push_back(join({c.gnodeb_id, c.cell_id, coord(c.longitude), coord(c.latitude), format_integer(c.mech_azimuth),
                          format_integer(c.mech_downtilt), std::to_string(c.digital_tilt_raw),
                          format_integer(c.digital_azimuth), to_string(c.beam_scenario), one(c.height),
                          std::to_string(c.pci), c.txrx_mode, one(c.max_tx_power), c.antenna_model},
                         "|"));
  }
  return join(lines, "\n");
}

DriveTrace parse_user_plane_table(std::string_view table) {
  const auto lines = table_lines(table);
  if (lines.empty() || lines[0] != user_plane_header()) throw ParseError(1, "unexpected user plane header");
  DriveTrace trace;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    trace.samples.push_back(at_line(i + 1, [&] {
      const auto f = split(lines[i], '|');
      if (f.size() != kUserPlaneColumns)
        throw ParseError(0, "expected " + std::to_string(kUserPlaneColumns) + " fields, got " + std::to_string(f.size()));
      UserPlaneSample s;
      s.timestamp = parse_timestamp(f[0]);
      s.longitude = parse_double(f[1]);
      s.latitude = parse_double(f[2]);
      s.gps_speed = parse_double(f[3]);
      s.serving_pci = static_cast<int>(parse_int(f[4]));
      s.ss_rsrp = parse_double(f[5]);
      s.ss_sinr = parse_double(f[6]);
      s.mac_dl_throughput = parse_double(f[7]);
      bool ended = false;
      for (std::size_t k = 0; k < kTopNeighbors; ++k) {
        const auto& pci = f[8 + k];
        const auto& brsrp = f[8 + kTopNeighbors + k];
        if (pci.empty() != brsrp.empty()) throw ParseError(0, "neighbor PCI and BRSRP disagree on presence");
        if (pci.empty()) {
          ended = true;
          continue;
        }
        if (ended) throw ParseError(0, "gap in the neighbor list");
        s.neighbors.push_back({static_cast<int>(parse_int(pci)), parse_double(brsrp)});
      }
      s.dl_rb_num = parse_double(f.back());
      return s;
    }));
  }
  return trace;
}

std::vector<CellConfig> parse_engineering_table(std::string_view table) {
  const auto lines = table_lines(table);
  if (lines.empty() || lines[0] != engineering_header()) throw ParseError(1, "unexpected engineering header");
  std::vector<CellConfig> cells;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    cells.push_back(at_line(i + 1, [&] {
      const auto f = split(lines[i], '|');
      if (f.size() != kEngineeringColumns)
        throw ParseError(0, "expected 14 fields, got " + std::to_string(f.size()));
      CellConfig c;
      c.gnodeb_id = f[0];
      c.cell_id = f[1];
      c.longitude = parse_double(f[2]);
      c.latitude = parse_double(f[3]);
      c.mech_azimuth = parse_double(f[4]);
      c.mech_downtilt = parse_double(f[5]);
      c.digital_tilt_raw = static_cast<int>(parse_int(f[6]));
      c.digital_azimuth = parse_double(f[7]);
      c.beam_scenario = parse_beam_scenario(f[8]);
      c.height = parse_double(f[9]);
      c.pci = static_cast<int>(parse_int(f[10]));
      c.txrx_mode = f[11];
      c.max_tx_power = parse_double(f[12]);
      c.antenna_model = f[13];
      validate(c);
      return c;
    }));
  }
  return cells;
}

// ---- queries ---------------------------------------------------------------

RenderedQuery render_query(const sim::LabeledInstance& instance, std::string instance_id) {
  std::string text = kPreamble;
  text += "\n\n";
  for (const auto& e : instance.catalog.entries()) text += e.label + ": " + e.description + "\n";
  text += "\n";
  text += kRules;
  text += "\n\n";
  text += kUserPlaneMarker;
  text += "\n" + render_user_plane_table(instance.trace) + "\n\n";
  text += kEngineeringMarker;
  text += "\n" + render_engineering_table(instance.scenario.cells) + "\n";
  return {std::move(text), instance.catalog, std::move(instance_id)};
}

ParsedQuery parse_query(std::string_view text) {
  const auto up = text.find(kUserPlaneMarker);
  const auto eng = text.find(kEngineeringMarker);
  if (up == std::string_view::npos || eng == std::string_view::npos || eng < up)
    throw ParseError(0, "query lacks the data table sections");
  const auto given = text.find("\nGiven:");
  if (given == std::string_view::npos || given > up) throw ParseError(0, "query lacks the rules block");

  std::vector<CatalogEntry> entries;
  for (const auto& line : split(text.substr(0, given), '\n')) {
    const auto colon = line.find(": ");
    if (line.size() < 4 || line[0] != 'C' || colon == std::string::npos) continue;
    const auto label = line.substr(0, colon);
    if (!std::all_of(label.begin() + 1, label.end(), [](unsigned char ch) { return std::isdigit(ch); })) continue;
    const auto description = line.substr(colon + 2);
    auto it = std::find_if(kAllCauses.begin(), kAllCauses.end(), [&](CauseId c) { return describe(c) == description; });
    if (it == kAllCauses.end()) throw ParseError(0, "unknown cause description for " + label);
    entries.push_back({label, *it, description});
  }

  ParsedQuery q;
  try {
    q.catalog = RootCauseCatalog(std::move(entries));
  } catch (const ValidationError& e) {
    throw ParseError(0, e.what());
  }
  const auto up_body = up + std::string_view(kUserPlaneMarker).size();
  q.trace = parse_user_plane_table(text.substr(up_body, eng - up_body));
  q.cells = parse_engineering_table(text.substr(eng + std::string_view(kEngineeringMarker).size()));
  return q;
}

std::optional<std::string> parse_answer(std::string_view text) {
  constexpr std::string_view open = "\\boxed{";
  const auto start = text.rfind(open);
  if (start == std::string_view::npos) return std::nullopt;
  // Balanced braces so "\boxed{\text{C3}}" keeps its inner group.
  std::size_t depth = 1, i = start + open.size();
  const std::size_t body = i;
  for (; i < text.size() && depth > 0; ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}') --depth;
  }
  if (depth != 0) return std::nullopt;
  std::string_view inner = trim(text.substr(body, i - 1 - body));
  constexpr std::string_view wrap = "\\text{";
  if (inner.substr(0, wrap.size()) == wrap && inner.size() > wrap.size() && inner.back() == '}') {
    inner = trim(inner.substr(wrap.size(), inner.size() - wrap.size() - 1));
  }
  if (!inner.empty() && (inner[0] == 'C' || inner[0] == 'c')) inner = trim(inner.substr(1));
  if (inner.empty() || inner.size() > 3) return std::nullopt;
  if (!std::all_of(inner.begin(), inner.end(), [](unsigned char ch) { return std::isdigit(ch); })) return std::nullopt;
  const int k = std::stoi(std::string(inner));
  if (k < 1) return std::nullopt;
  return "C" + std::to_string(k);
}

// ---- dataset records -------------------------------------------------------

DatasetRecord make_record(const sim::LabeledInstance& instance, std::string instance_id, std::uint64_t seed,
                          std::uint64_t catalog_seed) {
  const auto& sc = instance.scenario;
  DatasetRecord r;
  r.instance_id = instance_id;
  r.query = render_query(instance, std::move(instance_id));
  r.ground_truth_cause = instance.ground_truth;
  r.ground_truth_label = instance.catalog.label_of(instance.ground_truth);
  r.metadata.seed = seed;
  r.metadata.planted_cause = sc.planted_cause.value_or(instance.ground_truth);
  r.metadata.noise_seed = sc.noise_seed;
  r.metadata.catalog_seed = catalog_seed;
  for (std::size_t i = 0; i < sc.cells.size(); ++i) r.metadata.carrier_by_pci[sc.cells[i].pci] = sc.carrier[i];
  r.metadata.initial_serving_pci = sc.cells.at(sc.initial_serving).pci;
  r.metadata.handover = sc.handover;
  r.metadata.rb_cap = sc.rb_cap;
  return r;
}

sim::LabeledInstance reconstruct_instance(const DatasetRecord& record) {
  ParsedQuery q;
  try {
    q = parse_query(record.query.text);
  } catch (const ParseError& e) {
    throw DataIntegrityError(record.instance_id + ": " + e.what());
  }
  if (!(q.catalog == record.query.catalog))
    throw DataIntegrityError(record.instance_id + ": cause list disagrees with the stored catalog");
  if (record.query.catalog.label_of(record.ground_truth_cause) != record.ground_truth_label)
    throw DataIntegrityError(record.instance_id + ": ground-truth label does not match the catalog");

  sim::LabeledInstance inst;
  auto& sc = inst.scenario;
  sc.cells = std::move(q.cells);
  bool found_serving = false;
  for (std::size_t i = 0; i < sc.cells.size(); ++i) {
    auto it = record.metadata.carrier_by_pci.find(sc.cells[i].pci);
    if (it == record.metadata.carrier_by_pci.end())
      throw DataIntegrityError(record.instance_id + ": no carrier for PCI " + std::to_string(sc.cells[i].pci));
    sc.carrier.push_back(it->second);
    if (sc.cells[i].pci == record.metadata.initial_serving_pci) {
      sc.initial_serving = i;
      found_serving = true;
    }
  }
  if (!found_serving) throw DataIntegrityError(record.instance_id + ": initial serving cell missing from the table");
  for (const auto& s : q.trace.samples) sc.route.push_back({s.longitude, s.latitude, s.gps_speed, s.timestamp});
  sc.handover = record.metadata.handover;
  sc.rb_cap = record.metadata.rb_cap;
  sc.planted_cause = record.metadata.planted_cause;
  sc.noise_seed = record.metadata.noise_seed;
  try {
    validate(sc, true);
    validate(q.trace);
  } catch (const ValidationError& e) {
    throw DataIntegrityError(record.instance_id + ": " + e.what());
  }
  const auto symptom = oracle::detect_symptom(q.trace);
  if (!symptom) throw DataIntegrityError(record.instance_id + ": trace shows no throughput symptom");
  inst.trace = std::move(q.trace);
  inst.symptom = *symptom;
  inst.ground_truth = record.ground_truth_cause;
  inst.catalog = record.query.catalog;
  return inst;
}

namespace {

json trace_json(const StructuredTrace& t) {
  return {{"data_analysis", t.data_analysis},
          {"root_cause_analysis", t.root_cause_analysis},
          {"identification", t.identification},
          {"summary", t.summary},
          {"answer_label", t.answer_label}};
}

StructuredTrace trace_from_json(const json& j) {
  return {j.at("data_analysis").get<std::string>(), j.at("root_cause_analysis").get<std::string>(),
          j.at("identification").get<std::string>(), j.at("summary").get<std::string>(),
          j.at("answer_label").get<std::string>()};
}

}  // namespace

std::string to_json_line(const DatasetRecord& r) {
  const auto& m = r.metadata;
  json catalog = json::array();
  for (const auto& e : r.query.catalog.entries())
    catalog.push_back({{"label", e.label}, {"cause", std::string(to_string(e.cause))}});
  std::map<int, int> ordered(m.carrier_by_pci.begin(), m.carrier_by_pci.end());
  json cells = json::array();
  for (auto [pci, carrier] : ordered) cells.push_back({{"pci", pci}, {"carrier", carrier}});

  json j = {{"instance_id", r.instance_id},
            {"query", r.query.text},
            {"ground_truth_label", r.ground_truth_label},
            {"ground_truth_cause", std::string(to_string(r.ground_truth_cause))},
            {"trace", r.trace ? trace_json(*r.trace) : json(nullptr)},
            {"metadata",
             {{"seed", m.seed},
              {"planted_cause", std::string(to_string(m.planted_cause))},
              {"noise_seed", m.noise_seed},
              {"catalog_seed", m.catalog_seed},
              {"catalog", catalog},
              {"cells", cells},
              {"initial_serving_pci", m.initial_serving_pci},
              {"handover", {{"hysteresis_db", m.handover.hysteresis_db}, {"time_to_trigger_s", m.handover.time_to_trigger_s}}},
              {"rb_cap", m.rb_cap}}}};
  if (r.raw_trajectory) j["raw_trajectory"] = *r.raw_trajectory;
  return j.dump();
}

DatasetRecord parse_json_line(std::string_view text, std::size_t line) {
  try {
    const json j = json::parse(text);
    DatasetRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.ground_truth_label = j.at("ground_truth_label").get<std::string>();
    r.ground_truth_cause = parse_cause(j.at("ground_truth_cause").get<std::string>());
    if (!j.at("trace").is_null()) r.trace = trace_from_json(j.at("trace"));
    if (j.contains("raw_trajectory")) r.raw_trajectory = j.at("raw_trajectory").get<std::string>();

    const auto& mj = j.at("metadata");
    auto& m = r.metadata;
    m.seed = mj.at("seed").get<std::uint64_t>();
    m.planted_cause = parse_cause(mj.at("planted_cause").get<std::string>());
    m.noise_seed = mj.at("noise_seed").get<std::uint64_t>();
    m.catalog_seed = mj.at("catalog_seed").get<std::uint64_t>();
    for (const auto& c : mj.at("cells")) m.carrier_by_pci[c.at("pci").get<int>()] = c.at("carrier").get<int>();
    m.initial_serving_pci = mj.at("initial_serving_pci").get<int>();
    m.handover.hysteresis_db = mj.at("handover").at("hysteresis_db").get<double>();
    m.handover.time_to_trigger_s = mj.at("handover").at("time_to_trigger_s").get<int>();
    m.rb_cap = mj.at("rb_cap").get<double>();

    std::vector<CatalogEntry> entries;
    for (const auto& e : mj.at("catalog")) {
      const auto cause = parse_cause(e.at("cause").get<std::string>());
      entries.push_back({e.at("label").get<std::string>(), cause, std::string(describe(cause))});
    }
    r.query = {j.at("query").get<std::string>(), RootCauseCatalog(std::move(entries)), r.instance_id};
    if (r.query.catalog.label_of(r.ground_truth_cause) != r.ground_truth_label)
      throw DataIntegrityError("ground-truth label does not match the catalog");
    return r;
  } catch (const json::exception& e) {
    throw ParseError(line, e.what());
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  } catch (const DataIntegrityError& e) {
    throw ParseError(line, e.what());
  }
}

void write_jsonl(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& r : records) out << to_json_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<DatasetRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    out.push_back(parse_json_line(line, n));
  }
  return out;
}

// ---- randomized variant ----------------------------------------------------

RandomizationPlan RandomizationPlan::identity(std::size_t num_cells) {
  RandomizationPlan p;
  p.label_map.resize(kNumCauses);
  p.presentation.resize(kNumCauses);
  p.rows.resize(num_cells);
  std::iota(p.label_map.begin(), p.label_map.end(), 0);
  std::iota(p.presentation.begin(), p.presentation.end(), 0);
  std::iota(p.rows.begin(), p.rows.end(), 0);
  return p;
}

RandomizationPlan RandomizationPlan::draw(std::uint64_t seed, std::size_t num_cells) {
  auto p = identity(num_cells);
  std::mt19937_64 rng(seed);
  std::shuffle(p.label_map.begin(), p.label_map.end(), rng);
  std::shuffle(p.presentation.begin(), p.presentation.end(), rng);
  std::shuffle(p.rows.begin(), p.rows.end(), rng);
  return p;
}

DatasetRecord apply_randomization(const DatasetRecord& record, const RandomizationPlan& plan) {
  auto inst = reconstruct_instance(record);
  const auto& old_entries = inst.catalog.entries();
  check_permutation(plan.label_map, kNumCauses, "label map");
  check_permutation(plan.presentation, kNumCauses, "presentation order");
  check_permutation(plan.rows, inst.scenario.cells.size(), "row order");

  std::vector<CatalogEntry> entries;
  for (auto from : plan.presentation) {
    auto e = old_entries[from];
    e.label = "C" + std::to_string(plan.label_map[label_index(e.label)] + 1);
    entries.push_back(std::move(e));
  }
  inst.catalog = RootCauseCatalog(std::move(entries));

  auto& sc = inst.scenario;
  std::vector<CellConfig> cells;
  std::vector<int> carrier;
  std::size_t serving = 0;
  for (std::size_t i = 0; i < plan.rows.size(); ++i) {
    cells.push_back(sc.cells[plan.rows[i]]);
    carrier.push_back(sc.carrier[plan.rows[i]]);
    if (plan.rows[i] == sc.initial_serving) serving = i;
  }
  sc.cells = std::move(cells);
  sc.carrier = std::move(carrier);
  sc.initial_serving = serving;

  auto out = make_record(inst, record.instance_id, record.metadata.seed, record.metadata.catalog_seed);
  out.metadata = record.metadata;
  if (record.trace) out.trace = oracle::diagnose(sc, inst.trace, inst.symptom, inst.catalog).trace;
  return out;
}

DatasetRecord randomize_instance(const DatasetRecord& record, std::uint64_t seed) {
  const auto cells = record.metadata.carrier_by_pci.size();
  return apply_randomization(record, RandomizationPlan::draw(seed, cells));
}

// ---- tokens ----------------------------------------------------------------

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Splits text into (leading-space, piece) units; a space that precedes nothing printable is its own unit.
template <class Sink>
void scan_pieces(std::string_view text, Sink&& sink) {
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      sink(false, std::string_view("\n"));
      ++i;
      continue;
    }
    bool space = false;
    if (c == ' ') {
      if (i + 1 >= text.size() || text[i + 1] == ' ' || text[i + 1] == '\n') {
        sink(false, std::string_view(" "));
        ++i;
        continue;
      }
      space = true;
      c = text[++i];
    }
    std::size_t j = i + 1;
    if (is_alpha(c)) {
      while (j < text.size() && is_alpha(text[j])) ++j;
    } else if (static_cast<unsigned char>(c) >= 0x80) {
      while (j < text.size() && static_cast<unsigned char>(text[j]) >= 0x80) ++j;
    }
    sink(space, text.substr(i, j - i));
    i = j;
  }
}

}  // namespace

Tokenizer::Tokenizer(const std::vector<std::string>& lexicon) {
  auto add = [&](const std::string& p) {
    if (ids_.emplace(p, static_cast<int>(pieces_.size())).second) pieces_.push_back(p);
  };
  add("\n");
  add(kSpaceMark);
  std::vector<std::string> base;
  for (int ch = 33; ch < 127; ++ch) {
    if (!is_alpha(static_cast<char>(ch))) base.emplace_back(1, static_cast<char>(ch));
  }
  for (char ch = 'A'; ch <= 'Z'; ++ch) base.emplace_back(1, ch);
  for (char ch = 'a'; ch <= 'z'; ++ch) base.emplace_back(1, ch);
  std::set<std::string> words;
  for (const auto& phrase : lexicon) {
    scan_pieces(phrase, [&](bool, std::string_view p) {
      if (p.size() > 1 && is_alpha(p[0])) words.emplace(p);
    });
  }
  base.insert(base.end(), words.begin(), words.end());
  for (const auto& p : base) {
    add(p);
    add(kSpaceMark + p);
  }
}

const Tokenizer& Tokenizer::standard() {
  static const Tokenizer tok = [] {
    auto lexicon = trace_lexicon();
    for (CauseId c : kAllCauses) {
      lexicon.emplace_back(describe(c));
      lexicon.emplace_back(to_string(c));
    }
    lexicon.insert(lexicon.end(), {kSectionDataAnalysis, kSectionRootCause, kSectionIdentification, kSectionSummary});
    return Tokenizer(lexicon);
  }();
  return tok;
}

std::vector<int> Tokenizer::tokenize(std::string_view text) const {
  std::vector<int> out;
  scan_pieces(text, [&](bool space, std::string_view p) {
    const std::string key = p == " " ? std::string(kSpaceMark) : (space ? kSpaceMark : "") + std::string(p);
    auto it = ids_.find(key);
    if (it == ids_.end()) throw TokenizationError("out-of-vocabulary token '" + std::string(p) + "'");
    out.push_back(it->second);
  });
  return out;
}

std::string Tokenizer::detokenize(const std::vector<int>& tokens) const {
  const std::string_view mark = kSpaceMark;
  std::string out;
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size())
      throw TokenizationError("token id " + std::to_string(id) + " outside the vocabulary");
    const auto& p = pieces_[static_cast<std::size_t>(id)];
    if (std::string_view(p).substr(0, mark.size()) == mark) {
      out += ' ';
      out += p.substr(mark.size());
    } else {
      out += p;
    }
  }
  return out;
}

std::size_t Tokenizer::count_tokens(std::string_view text) const {
  std::size_t n = 0;
  scan_pieces(text, [&](bool, std::string_view) { ++n; });
  return n;
}

const std::vector<std::string>& trace_lexicon() {
  static const std::vector<std::string> words = {
      // oracle evidence and structured traces
      "max speed in window (km/h) mean lobe exceedance (deg) serving RSRP (dBm) distance (m)",
      "non-colocated co-frequency neighbor margin (dB) samples with PCI mod conflict",
      "handovers in busiest s window missed handover run (s) scheduled RBs",
      "rule: above below at least plausible ruled out is not",
      "The most likely root cause is with score Throughput fell Mbps boxed text",
      // agent trajectories
      "Agent strategy elimination contradiction check checking recheck re-check again candidate candidates",
      "evidence supports does support consistent inconsistent the a an of for and or to on at by from so this that",
      "Step First Next Then Finally Therefore Conclusion Answer answer final hypothesis hypotheses assume assuming",
      "if would should expect expected observed observation measured value threshold rule rules holds fails",
      "window affected samples sample trace data table tables cell cells gNodeB colocated same different",
      "we I let look looking keep kept remaining remains remove removed eliminate eliminated discard discarded",
      "confirm confirmed because since but however also all none any only one two three value values",
      "Reviewing Review review verify verified verifying Double-check double quickly carefully once more",
      "under it its are was be been has have than more less speed downtilt overshoot overlap frequent handover",
      "For each against So Assume If held This without Strategy starting Reading row Sample SINR Observed Contradiction No found Score Verify Candidates Comparing Re",
      "misconfiguration RB scheduling interference coverage far end vehicle throughput drop below target",
  };
  return words;
}

}  // namespace rca
