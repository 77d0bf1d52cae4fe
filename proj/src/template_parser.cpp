#include "rarft/template_parser.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <cmath>

#include "rarft/strings.hpp"

namespace rarft {

namespace {

constexpr std::array<std::string_view, 3> kSectionNames = {"think", "answer", "correct"};

size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    size_t count = 0;
    size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        ++count;
        pos = haystack.find(needle, pos + needle.size());
    }
    return count;
}

struct TagPositions {
    size_t open = std::string_view::npos;
    size_t close = std::string_view::npos;
    size_t open_count = 0;
    size_t close_count = 0;
};

TagPositions scan_tag(std::string_view raw, std::string_view name) {
    const std::string open = "<" + std::string(name) + ">";
    const std::string close = "</" + std::string(name) + ">";
    TagPositions t;
    t.open = raw.find(open);
    t.close = raw.find(close);
    t.open_count = count_occurrences(raw, open);
    t.close_count = count_occurrences(raw, close);
    return t;
}

// Greedy parse of \d+(?:\.\d+)? starting at pos. Returns one-past-the-end of
// the number, or npos when no digit starts here.
size_t parse_number(std::string_view s, size_t pos) {
    size_t p = pos;
    while (p < s.size() && s[p] >= '0' && s[p] <= '9') ++p;
    if (p == pos) return std::string_view::npos;
    if (p < s.size() && s[p] == '.') {
        size_t q = p + 1;
        while (q < s.size() && s[q] >= '0' && s[q] <= '9') ++q;
        if (q > p + 1) p = q;  // fraction requires at least one digit
    }
    return p;
}

size_t skip_ws(std::string_view s, size_t pos) {
    while (pos < s.size() && is_space(s[pos])) ++pos;
    return pos;
}

bool starts_at(std::string_view s, size_t pos, std::string_view token) {
    return s.compare(pos, token.size(), token) == 0;
}

constexpr std::array<std::string_view, 2> kUnits = {"seconds", "s"};
constexpr std::array<std::string_view, 3> kSeparators = {"to", "-", ","};

struct PairMatch {
    double first = 0.0;
    double second = 0.0;
};

// Attempts a full grammar match whose first number starts at pos. The units
// are tried longest-first and the match backtracks across the unit choices,
// mirroring the published regex's ordered alternation.
std::optional<PairMatch> match_at(std::string_view s, size_t pos) {
    const size_t n1_end = parse_number(s, pos);
    if (n1_end == std::string_view::npos) return std::nullopt;

    std::array<size_t, 3> unit_starts;  // after "seconds", after "s", no unit
    size_t n_choices = 0;
    const size_t after_ws = skip_ws(s, n1_end);
    for (std::string_view unit : kUnits) {
        if (starts_at(s, after_ws, unit)) unit_starts[n_choices++] = after_ws + unit.size();
    }
    unit_starts[n_choices++] = after_ws;

    for (size_t i = 0; i < n_choices; ++i) {
        const size_t sep_pos = skip_ws(s, unit_starts[i]);
        for (std::string_view sep : kSeparators) {
            if (!starts_at(s, sep_pos, sep)) continue;
            const size_t n2_start = skip_ws(s, sep_pos + sep.size());
            const size_t n2_end = parse_number(s, n2_start);
            if (n2_end == std::string_view::npos) continue;
            PairMatch m;
            m.first = std::strtod(std::string(s.substr(pos, n1_end - pos)).c_str(), nullptr);
            m.second = std::strtod(std::string(s.substr(n2_start, n2_end - n2_start)).c_str(), nullptr);
            return m;
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Segment> extract_segment(std::string_view answer_text) {
    for (size_t pos = 0; pos < answer_text.size(); ++pos) {
        if (answer_text[pos] < '0' || answer_text[pos] > '9') continue;
        if (auto m = match_at(answer_text, pos)) {
            if (m->first > m->second) return std::nullopt;  // first match decides
            return Segment{m->first, m->second};
        }
    }
    return std::nullopt;
}

ParseResult parse_output(std::string_view raw) {
    ParseResult result;
    ParseDiagnostics& diag = result.diagnostics;

    std::array<TagPositions, 3> tags;
    for (size_t i = 0; i < kSectionNames.size(); ++i) {
        tags[i] = scan_tag(raw, kSectionNames[i]);
        if (tags[i].open_count == 0 || tags[i].close_count == 0) {
            diag.missing_tags.emplace_back(kSectionNames[i]);
        } else if (tags[i].open_count > 1 || tags[i].close_count > 1) {
            diag.duplicate_tags.emplace_back(kSectionNames[i]);
        }
    }

    if (diag.missing_tags.empty() && diag.duplicate_tags.empty()) {
        // Tags are unique; enforce template order and whitespace-only gaps.
        bool ordered = true;
        size_t cursor = 0;
        for (const auto& t : tags) {
            if (t.open < cursor || t.close < t.open) {
                ordered = false;
                break;
            }
            if (!whitespace_only(raw.substr(cursor, t.open - cursor))) {
                ordered = false;
                break;
            }
            cursor = t.close + kSectionNames[&t - tags.data()].size() + 3;  // "</name>"
        }
        if (ordered && !whitespace_only(raw.substr(cursor))) ordered = false;
        diag.order_violation = !ordered;
    }

    diag.format_ok =
        diag.missing_tags.empty() && diag.duplicate_tags.empty() && !diag.order_violation;

    if (diag.format_ok) {
        auto section = [&](size_t i) {
            const size_t begin = tags[i].open + kSectionNames[i].size() + 2;
            return trim(raw.substr(begin, tags[i].close - begin));
        };
        StructuredOutput out;
        out.think = section(0);
        out.answer = section(1);
        out.correct = section(2);
        out.segment = extract_segment(out.answer);
        out.raw = std::string(raw);
        result.output = std::move(out);
    }
    return result;
}

std::string render_output(const StructuredOutput& s) {
    std::string out;
    out.reserve(s.think.size() + s.answer.size() + 64);
    out += "<think>";
    out += s.think;
    out += "</think>\n<answer>";
    out += s.answer;
    out += "</answer>\n<correct>";
    if (s.correct) out += *s.correct;
    out += "</correct>";
    return out;
}

LenientSections extract_sections_lenient(std::string_view raw) {
    LenientSections sections;
    auto grab = [&](std::string_view name) -> std::optional<std::string> {
        const std::string open = "<" + std::string(name) + ">";
        const std::string close = "</" + std::string(name) + ">";
        const size_t o = raw.find(open);
        if (o == std::string_view::npos) return std::nullopt;
        const size_t begin = o + open.size();
        const size_t c = raw.find(close, begin);
        if (c == std::string_view::npos) return std::nullopt;
        return trim(raw.substr(begin, c - begin));
    };
    sections.think = grab("think");
    sections.answer = grab("answer");
    sections.correct = grab("correct");
    return sections;
}

std::string format_seconds(double value) {
    double integral = 0.0;
    if (std::modf(value, &integral) == 0.0 && std::abs(value) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", value);
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

std::string render_time_answer(const Segment& seg) {
    std::string out(kTimeAnswerTemplate);
    const auto replace = [&](std::string_view key, const std::string& value) {
        const size_t pos = out.find(key);
        if (pos != std::string::npos) out.replace(pos, key.size(), value);
    };
    replace("{start}", format_seconds(seg.start));
    replace("{end}", format_seconds(seg.end));
    return out;
}

}  // namespace rarft
