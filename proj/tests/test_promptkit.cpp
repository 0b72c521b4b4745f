#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rca/agentpipe.hpp"
#include "rca/errors.hpp"
#include "rca/oracle.hpp"
#include "rca/promptkit.hpp"
#include "rca/simulator.hpp"
#include "rca/text_format.hpp"

using namespace rca;

namespace {

std::vector<sim::LabeledInstance> sample_instances(std::size_t n, std::uint64_t catalog_seed = 0) {
  std::vector<sim::InstanceRequest> req;
  for (std::size_t i = 0; i < n; ++i) req.push_back({kAllCauses[i % kNumCauses], 300 + i, catalog_seed});
  return sim::build_batch(req);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rca_promptkit_" + name);
}

}  // namespace

TEST_CASE("table headers") {
  CHECK(user_plane_header().rfind("Timestamp|Longitude|Latitude|GPS Speed (km/h)|5G KPI PCell RF Serving PCI|", 0) == 0);
  CHECK(engineering_header().rfind("gNodeB ID|Cell ID|Longitude|Latitude|Mechanical Azimuth|", 0) == 0);
  CHECK(engineering_header() ==
        "gNodeB ID|Cell ID|Longitude|Latitude|Mechanical Azimuth|Mechanical Downtilt|Digital Tilt|Digital "
        "Azimuth|Beam Scenario|Height|PCI|TxRx Mode|Max Transmit Power|Antenna Model");
}

TEST_CASE("tables round-trip bit-exactly") {
  for (const auto& inst : sample_instances(100)) {
    const auto up = render_user_plane_table(inst.trace);
    CHECK(parse_user_plane_table(up) == inst.trace);
    CHECK(render_user_plane_table(parse_user_plane_table(up)) == up);
    const auto eng = render_engineering_table(inst.scenario.cells);
    CHECK(parse_engineering_table(eng) == inst.scenario.cells);
  }
}

TEST_CASE("table parse errors carry line numbers") {
  const auto inst = sample_instances(1).front();
  auto up = render_user_plane_table(inst.trace);
  const auto lines = split(up, '\n');
  // Corrupt the third line (second data row).
  std::string broken;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    broken += (i == 2 ? std::string("garbage|row") : lines[i]) + "\n";
  }
  try {
    parse_user_plane_table(broken);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_engineering_table("not a header\n"), ParseError);
}

TEST_CASE("rendered query layout") {
  const auto inst = sample_instances(1).front();
  const auto q = render_query(inst, "id-1");
  CHECK(q == render_query(inst, "id-1"));
  CHECK(q.catalog == inst.catalog);
  const auto causes = q.text.find("C1:");
  const auto up = q.text.find(kUserPlaneMarker);
  const auto eng = q.text.find(kEngineeringMarker);
  REQUIRE(causes != std::string::npos);
  REQUIRE(up != std::string::npos);
  REQUIRE(eng != std::string::npos);
  CHECK(causes < up);
  CHECK(up < eng);
  CHECK(q.text.find(kUserPlaneMarker, up + 1) == std::string::npos);
  CHECK(q.text.find("255") != std::string::npos);
  CHECK(q.text.find("\\boxed") != std::string::npos);

  const auto parsed = parse_query(q.text);
  CHECK(parsed.catalog == inst.catalog);
  CHECK(parsed.trace == inst.trace);
  CHECK(parsed.cells == inst.scenario.cells);
}

TEST_CASE("answer parsing") {
  CHECK(parse_answer("so the answer is \\boxed{\\text{C3}}") == "C3");
  CHECK(parse_answer("\\boxed{C3}") == "C3");
  CHECK(parse_answer("\\boxed{3}") == "C3");
  CHECK(parse_answer("\\boxed{c5}") == "C5");
  CHECK_FALSE(parse_answer("no conclusion reached").has_value());
  CHECK(parse_answer("first \\boxed{1} then \\boxed{4}") == "C4");
  CHECK_FALSE(parse_answer("\\boxed{maybe}").has_value());
  CHECK_FALSE(parse_answer("\\boxed{").has_value());
  CHECK_FALSE(parse_answer("").has_value());
  // The last occurrence decides even when it is unreadable.
  CHECK_FALSE(parse_answer("\\boxed{C2} and a broken \\boxed{").has_value());
  CHECK_NOTHROW(parse_answer(std::string(1000, '{')));
}

TEST_CASE("records reconstruct the instance") {
  for (const auto& inst : sample_instances(16, 5)) {
    const auto r = make_record(inst, "x", 1, 5);
    CHECK(r.ground_truth_label == inst.catalog.label_of(inst.ground_truth));
    CHECK(r.ground_truth_cause == inst.ground_truth);
    CHECK_FALSE(r.trace.has_value());  // traces are attached by the agent pipeline
    CHECK(reconstruct_instance(r) == inst);
    CHECK(parse_json_line(to_json_line(r)) == r);
  }
}

TEST_CASE("tampered records are rejected") {
  auto r = make_record(sample_instances(1).front(), "x", 1);
  r.metadata.carrier_by_pci.clear();
  CHECK_THROWS_AS(reconstruct_instance(r), DataIntegrityError);
}

TEST_CASE("jsonl files") {
  std::vector<DatasetRecord> recs;
  const auto insts = sample_instances(8);
  for (std::size_t i = 0; i < insts.size(); ++i) recs.push_back(make_record(insts[i], "r" + std::to_string(i), i));
  const auto path = temp_file("records.jsonl");
  write_jsonl(path.string(), recs);
  CHECK(read_jsonl(path.string()) == recs);

  std::ifstream in(path);
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  in.close();
  {
    std::ofstream out(path);
    out << first << "\n{\"broken\": \n";
  }
  try {
    read_jsonl(path.string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::filesystem::remove(path);
}

TEST_CASE("randomization") {
  const auto inst = sample_instances(8, 0);
  for (const auto& i : inst) {
    auto r = make_record(i, "x", 1);
    r.trace = oracle::diagnose(i.scenario, i.trace, i.symptom, i.catalog).trace;
    const auto same = apply_randomization(r, RandomizationPlan::identity(i.scenario.cells.size()));
    CHECK(same.query.text == r.query.text);
    CHECK(same.ground_truth_label == r.ground_truth_label);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto z = randomize_instance(r, seed);
      CHECK(z.ground_truth_cause == r.ground_truth_cause);
      CHECK(z.query.catalog.cause_of(z.ground_truth_label) == r.ground_truth_cause);
      CHECK(z == randomize_instance(r, seed));
      const auto zi = reconstruct_instance(z);
      CHECK(oracle::diagnose(zi.scenario, zi.trace, zi.symptom, zi.catalog).cause == r.ground_truth_cause);
      REQUIRE(z.trace.has_value());
      CHECK(parse_answer(render(*z.trace)) == z.ground_truth_label);
    }
  }
}

TEST_CASE("label rebinding follows the plan") {
  const auto inst = sample_instances(3).back();  // OVERSHOOT_GT_1KM, label C3
  const auto r = make_record(inst, "x", 1);
  REQUIRE(r.ground_truth_label == "C3");
  auto plan = RandomizationPlan::identity(inst.scenario.cells.size());
  std::swap(plan.label_map[2], plan.label_map[6]);  // C3 <-> C7
  const auto z = apply_randomization(r, plan);
  CHECK(z.ground_truth_label == "C7");
  CHECK(z.query.catalog.cause_of("C7") == CauseId::OVERSHOOT_GT_1KM);
}

TEST_CASE("tokenizer") {
  const auto& tok = Tokenizer::standard();
  CHECK(tok.tokenize("").empty());
  CHECK(tok.detokenize({}).empty());
  CHECK_THROWS_AS(tok.tokenize("zyzzyva"), TokenizationError);
  try {
    tok.tokenize("the zyzzyva");
  } catch (const TokenizationError& e) {
    CHECK(std::string(e.what()).find("zyzzyva") != std::string::npos);
  }
  CHECK(tok.count_tokens("zyzzyva") >= 1);

  std::size_t checked = 0;
  for (const auto& inst : sample_instances(100, 9)) {
    const auto d = oracle::diagnose(inst.scenario, inst.trace, inst.symptom, inst.catalog);
    const auto text = render(d.trace);
    const auto ids = tok.tokenize(text);
    CHECK(tok.detokenize(ids) == text);
    const auto raw = agent::mock_trajectory(agent::Strategy::ELIMINATION, inst);
    CHECK(ids.size() < raw.token_count);
    ++checked;
  }
  CHECK(checked == 100);
}
