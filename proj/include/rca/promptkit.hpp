#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rca/domain.hpp"
#include "rca/simulator.hpp"
#include "rca/structured_trace.hpp"

namespace rca {

inline constexpr const char* kUserPlaneMarker = "User plane drive test data as follows:";
inline constexpr const char* kEngineeringMarker = "Engineering parameters data as follows:";

struct RenderedQuery {
  std::string text;
  RootCauseCatalog catalog;
  std::string instance_id;
  bool operator==(const RenderedQuery&) const = default;
};

// ---- pipe tables -----------------------------------------------------------

std::string user_plane_header();
std::string engineering_header();
std::string render_user_plane_table(const DriveTrace& trace);
std::string render_engineering_table(const std::vector<CellConfig>& cells);
// Both parsers throw ParseError with a 1-based table line number.
DriveTrace parse_user_plane_table(std::string_view table);
std::vector<CellConfig> parse_engineering_table(std::string_view table);

// ---- queries ---------------------------------------------------------------

RenderedQuery render_query(const sim::LabeledInstance& instance, std::string instance_id = {});

// Everything a solver may read from the query text.
struct ParsedQuery {
  RootCauseCatalog catalog;
  DriveTrace trace;
  std::vector<CellConfig> cells;
};
ParsedQuery parse_query(std::string_view text);

// Last \boxed{...} occurrence normalized to "C<k>"; total.
std::optional<std::string> parse_answer(std::string_view text);

// ---- dataset records -------------------------------------------------------

// Scenario facts the tables do not carry.
struct RecordMetadata {
  std::uint64_t seed = 0;
  CauseId planted_cause{};
  std::uint64_t noise_seed = 0;
  std::uint64_t catalog_seed = 0;
  std::unordered_map<int, int> carrier_by_pci;
  int initial_serving_pci = 0;
  HandoverConfig handover{};
  double rb_cap = 273.0;
  bool operator==(const RecordMetadata&) const = default;
};

struct DatasetRecord {
  std::string instance_id;
  RenderedQuery query;
  std::string ground_truth_label;
  CauseId ground_truth_cause{};
  std::optional<StructuredTrace> trace;
  std::optional<std::string> raw_trajectory;
  RecordMetadata metadata;
  bool operator==(const DatasetRecord&) const = default;
};

DatasetRecord make_record(const sim::LabeledInstance& instance, std::string instance_id, std::uint64_t seed,
                          std::uint64_t catalog_seed = 0);
// Rebuilds the labeled instance from the query tables plus metadata; throws DataIntegrityError.
sim::LabeledInstance reconstruct_instance(const DatasetRecord& record);

std::string to_json_line(const DatasetRecord& record);
// `line` is only used to locate errors.
DatasetRecord parse_json_line(std::string_view text, std::size_t line = 0);
void write_jsonl(const std::string& path, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_jsonl(const std::string& path);

// ---- randomized variant ----------------------------------------------------

// All three are permutations; identity() leaves a record unchanged.
struct RandomizationPlan {
  std::vector<std::size_t> label_map;     // old label C(k+1) becomes C(label_map[k]+1)
  std::vector<std::size_t> presentation;  // new cause-list position i shows old position presentation[i]
  std::vector<std::size_t> rows;          // new engineering row i is old row rows[i]

  static RandomizationPlan identity(std::size_t num_cells);
  static RandomizationPlan draw(std::uint64_t seed, std::size_t num_cells);
};

DatasetRecord apply_randomization(const DatasetRecord& record, const RandomizationPlan& plan);
DatasetRecord randomize_instance(const DatasetRecord& record, std::uint64_t seed);

// ---- tokens ----------------------------------------------------------------

// Closed vocabulary of ASCII pieces: lexicon words, single digits and punctuation, each optionally
// carrying one leading space, plus newline and a bare space. Round-trips exactly.
class Tokenizer {
 public:
  explicit Tokenizer(const std::vector<std::string>& lexicon);
  static const Tokenizer& standard();

  std::vector<int> tokenize(std::string_view text) const;  // throws TokenizationError
  std::string detokenize(const std::vector<int>& tokens) const;
  // Lenient count for text outside the grammar: unknown words count as one token each.
  std::size_t count_tokens(std::string_view text) const;

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
};

// Words the standard tokenizer knows beyond the cause descriptions.
const std::vector<std::string>& trace_lexicon();

}  // namespace rca
