#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rarft/core.hpp"

namespace rarft {

/// Timestamp extraction grammar, published so external tooling can reproduce
/// extraction bit-exactly (ECMAScript regex, first match wins, captures are
/// the two numbers). The built-in scanner implements exactly this pattern.
inline constexpr std::string_view kTimestampPattern =
    R"((\d+(?:\.\d+)?)\s*(?:seconds|s)?\s*(?:to|-|,)\s*(\d+(?:\.\d+)?))";

/// Canonical rendering of a segment as answer text, used as the positive
/// reference for relevant queries ("From {start} to {end} seconds.").
inline constexpr std::string_view kTimeAnswerTemplate = "From {start} to {end} seconds.";

/// Outcome of checking raw text against the three-section template
/// <think>...</think> <answer>...</answer> <correct>...</correct>.
struct ParseDiagnostics {
    bool format_ok = false;
    std::vector<std::string> missing_tags;
    std::vector<std::string> duplicate_tags;
    bool order_violation = false;
};

struct ParseResult {
    std::optional<StructuredOutput> output;
    ParseDiagnostics diagnostics;
};

/// Strict template parse. format_ok requires exactly one occurrence of each
/// section, in template order, with nothing but whitespace outside the
/// sections. Tag substrings inside section bodies count as extra occurrences
/// (duplicate_tags). Section contents are trimmed; the answer's segment is
/// populated via extract_segment. Total over arbitrary byte sequences.
ParseResult parse_output(std::string_view raw);

/// Scans for the first match of kTimestampPattern. Returns the segment when
/// the first number does not exceed the second, otherwise nothing; no match
/// at all is the refusal signal.
std::optional<Segment> extract_segment(std::string_view answer_text);

/// Canonical three-section rendering. parse_output(render_output(s))
/// reproduces s's sections whenever they are trimmed and contain no tag
/// substrings. An absent correct section renders empty.
std::string render_output(const StructuredOutput& s);

/// Best-effort per-section extraction for malformed outputs: each section is
/// taken between its first open tag and the first close tag after it,
/// independently of the others. Used by the reward engine's non-strict
/// fallback.
struct LenientSections {
    std::optional<std::string> think;
    std::optional<std::string> answer;
    std::optional<std::string> correct;
};

LenientSections extract_sections_lenient(std::string_view raw);

/// Renders a segment per kTimeAnswerTemplate with deterministic number
/// formatting (integers without a decimal point, %g otherwise).
std::string render_time_answer(const Segment& seg);

/// Deterministic seconds formatting shared by the time-answer template and
/// the dataset builder's timestamp payload.
std::string format_seconds(double value);

}  // namespace rarft
