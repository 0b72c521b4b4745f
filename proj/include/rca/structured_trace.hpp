#pragma once

#include <string>

namespace rca {

// Compact four-section reasoning trace.
struct StructuredTrace {
  std::string data_analysis;
  std::string root_cause_analysis;
  std::string identification;
  std::string summary;
  std::string answer_label;

  bool operator==(const StructuredTrace&) const = default;
};

inline constexpr const char* kSectionDataAnalysis = "Task 1: Data analysis";
inline constexpr const char* kSectionRootCause = "Task 2: Root cause analysis";
inline constexpr const char* kSectionIdentification = "Task 3: Root cause identification";
inline constexpr const char* kSectionSummary = "Summary:";

// Full text: the four headed sections followed by the boxed answer on the last line.
std::string render(const StructuredTrace& trace);

// Inverse of render(); throws ParseError if a section heading is missing.
StructuredTrace parse_structured_trace(const std::string& text);

}  // namespace rca
