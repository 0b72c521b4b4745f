#include "rca/structured_trace.hpp"

#include <array>

#include "rca/errors.hpp"
#include "rca/text_format.hpp"

namespace rca {

std::string render(const StructuredTrace& trace) {
  std::string out;
  out += kSectionDataAnalysis;
  out += "\n" + trace.data_analysis + "\n\n";
  out += kSectionRootCause;
  out += "\n" + trace.root_cause_analysis + "\n\n";
  out += kSectionIdentification;
  out += "\n" + trace.identification + "\n\n";
  out += kSectionSummary;
  out += "\n" + trace.summary + "\n\n";
  out += "\\boxed{" + trace.answer_label + "}";
  return out;
}

StructuredTrace parse_structured_trace(const std::string& text) {
  const std::array<std::string, 4> headings = {kSectionDataAnalysis, kSectionRootCause, kSectionIdentification,
                                               kSectionSummary};
  std::array<std::size_t, 4> pos{};
  std::size_t from = 0;
  for (std::size_t i = 0; i < headings.size(); ++i) {
    pos[i] = text.find(headings[i], from);
    if (pos[i] == std::string::npos) throw ParseError(0, "structured trace lacks section '" + headings[i] + "'");
    from = pos[i] + headings[i].size();
  }
  const auto box = text.rfind("\\boxed{");
  if (box == std::string::npos || box < from) throw ParseError(0, "structured trace lacks a final boxed answer");
  const auto close = text.find('}', box);
  if (close == std::string::npos) throw ParseError(0, "unterminated boxed answer");

  auto body = [&](std::size_t i, std::size_t end) {
    const auto start = pos[i] + headings[i].size();
    return std::string(trim(std::string_view(text).substr(start, end - start)));
  };
  StructuredTrace t;
  t.data_analysis = body(0, pos[1]);
  t.root_cause_analysis = body(1, pos[2]);
  t.identification = body(2, pos[3]);
  t.summary = body(3, box);
  t.answer_label = text.substr(box + 7, close - box - 7);
  return t;
}

}  // namespace rca
