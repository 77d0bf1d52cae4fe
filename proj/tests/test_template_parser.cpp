#include <doctest.h>

#include <optional>
#include <random>
#include <regex>

#include "rarft/template_parser.hpp"

using namespace rarft;

namespace {

struct LabeledString {
    const char* text;
    bool has_segment;
    double start;
    double end;
};

// Hand-labeled extraction corpus, worked out from the published grammar
// before the scanner was written. Inverted pairs count as "no segment".
constexpr LabeledString kLabeled[] = {
    {"The segment is 12.5 to 30.0 seconds.", true, 12.5, 30.0},
    {"4.0 to 8.0", true, 4.0, 8.0},
    {"from 4 - 8 s", true, 4.0, 8.0},
    {"3, 5", true, 3.0, 5.0},
    {"3,5", true, 3.0, 5.0},
    {"3 - 5", true, 3.0, 5.0},
    {"12.5to30", true, 12.5, 30.0},
    {"0 to 0", true, 0.0, 0.0},
    {"between 2.25 and 7.75? I'd say 2.25 to 7.75", true, 2.25, 7.75},
    {"1.5 s to 9 s", true, 1.5, 9.0},
    {"3 seconds to 5 seconds", true, 3.0, 5.0},
    {"3 seconds - 5", true, 3.0, 5.0},
    {"3s-5", true, 3.0, 5.0},
    {"roughly 10-20 seconds in", true, 10.0, 20.0},
    {"answer: 0.5,0.75", true, 0.5, 0.75},
    {"the span 100 to 250 covers it", true, 100.0, 250.0},
    {"indices 7 to 7", true, 7.0, 7.0},
    {"at 33.3 to 66.6 roughly", true, 33.3, 66.6},
    {"first 1 to 2 then 5 to 9", true, 1.0, 2.0},
    {"  8 to 9  ", true, 8.0, 9.0},
    {"v1, 2", true, 1.0, 2.0},
    {"t1-t2 is 4-9", true, 4.0, 9.0},
    {"12. 5 to 30", true, 5.0, 30.0},
    {"seconds 3 to 4 seconds", true, 3.0, 4.0},
    {"interval [2, 6]", true, 2.0, 6.0},
    {"reply to 5, 6 please", true, 5.0, 6.0},
    {"0.1to0.2", true, 0.1, 0.2},
    {"a 0,0 b", true, 0.0, 0.0},
    {"00 to 007", true, 0.0, 7.0},
    {"9.0 to 3.0", false, 0, 0},
    {"9.0 to 3.0 and 4.0 to 8.0", false, 0, 0},  // first match decides, inverted
    {"100-2", false, 0, 0},
    {"1.5.5-2", false, 0, 0},  // first match is 5.5-2, inverted
    {"This query is not relevant to the video because the action differs.", false, 0, 0},
    {"", false, 0, 0},
    {"no numbers here at all", false, 0, 0},
    {"only one number: 42", false, 0, 0},
    {"42 and some words", false, 0, 0},
    {"3 stones to 5", false, 0, 0},
    {"3 then 5", false, 0, 0},
    {"starts at 1.5s, ends around 9s", false, 0, 0},
    {"section 7; see page 9", false, 0, 0},
    {"version 2.0 release", false, 0, 0},
    {"pi is 3.14159", false, 0, 0},
    {"3 .. 5", false, 0, 0},
    {"2.-4", false, 0, 0},  // "2." does not parse as a fraction, '.' is no separator
    {"3 |> 5", false, 0, 0},
    {"from start to end", false, 0, 0},
    {"about 5 seconds", false, 0, 0},
    {"3:5", false, 0, 0},
};

// Independent reference: the published regex run through std::regex.
std::optional<Segment> regex_reference(const std::string& text) {
    static const std::regex grammar{std::string(kTimestampPattern)};
    std::smatch m;
    if (!std::regex_search(text, m, grammar)) return std::nullopt;
    const double first = std::stod(m[1].str());
    const double second = std::stod(m[2].str());
    if (first > second) return std::nullopt;
    return Segment{first, second};
}

}  // namespace

TEST_CASE("labels, regex reference and scanner all agree on the corpus") {
    CHECK(std::size(kLabeled) == 50);
    for (const auto& label : kLabeled) {
        INFO("text: ", label.text);
        const auto expected = regex_reference(label.text);
        const auto got = extract_segment(label.text);

        REQUIRE(expected.has_value() == label.has_segment);
        REQUIRE(got.has_value() == label.has_segment);
        if (label.has_segment) {
            CHECK(expected->start == label.start);
            CHECK(expected->end == label.end);
            CHECK(got->start == label.start);
            CHECK(got->end == label.end);
        }
    }
}

TEST_CASE("extract_segment spec examples") {
    const auto seg = extract_segment("The segment is 12.5 to 30.0 seconds.");
    REQUIRE(seg.has_value());
    CHECK(seg->start == 12.5);
    CHECK(seg->end == 30.0);

    CHECK(!extract_segment("This query is not relevant to the video because the action differs.")
               .has_value());
    CHECK(!extract_segment("9.0 to 3.0").has_value());
}

TEST_CASE("extract_segment equals the regex reference on random strings") {
    std::mt19937_64 rng(991);
    const std::string charset = "0123456789 .,-tos<>absx\n";
    for (int iter = 0; iter < 5000; ++iter) {
        std::string text;
        const size_t len = rng() % 40;
        for (size_t i = 0; i < len; ++i) text += charset[rng() % charset.size()];
        INFO("text: ", text);
        const auto got = extract_segment(text);
        const auto expected = regex_reference(text);
        REQUIRE(got.has_value() == expected.has_value());
        if (got) {
            CHECK(got->start == expected->start);
            CHECK(got->end == expected->end);
        }
    }
}

TEST_CASE("parse_output accepts the canonical template") {
    const auto result =
        parse_output("<think>t</think> <answer>4.0 to 8.0</answer> <correct>N/A</correct>");
    CHECK(result.diagnostics.format_ok);
    REQUIRE(result.output.has_value());
    CHECK(result.output->think == "t");
    CHECK(result.output->answer == "4.0 to 8.0");
    CHECK(result.output->correct == "N/A");
    REQUIRE(result.output->segment.has_value());
    CHECK(result.output->segment->start == 4.0);
    CHECK(result.output->segment->end == 8.0);
}

TEST_CASE("parse_output reports missing tags") {
    const auto result = parse_output("<answer>x</answer>");
    CHECK(!result.diagnostics.format_ok);
    CHECK(!result.output.has_value());
    CHECK(result.diagnostics.missing_tags == std::vector<std::string>{"think", "correct"});
    CHECK(!result.diagnostics.order_violation);
}

TEST_CASE("parse_output reports order violations") {
    const auto result = parse_output("<answer>a</answer><think>t</think><correct>c</correct>");
    CHECK(!result.diagnostics.format_ok);
    CHECK(result.diagnostics.order_violation);
    CHECK(result.diagnostics.missing_tags.empty());
}

TEST_CASE("text outside the sections is an order violation") {
    CHECK(!parse_output("Sure! <think>t</think><answer>a</answer><correct>c</correct>")
               .diagnostics.format_ok);
    CHECK(!parse_output("<think>t</think><answer>a</answer><correct>c</correct> bye")
               .diagnostics.format_ok);
    CHECK(!parse_output("<think>t</think> noise <answer>a</answer><correct>c</correct>")
               .diagnostics.format_ok);
    // whitespace alone is fine
    CHECK(parse_output("\n <think>t</think>\n<answer>a</answer>\t<correct>c</correct>  \n")
              .diagnostics.format_ok);
}

TEST_CASE("duplicate or nested tags are duplicate_tags failures") {
    const auto dup =
        parse_output("<think>t</think><answer>a</answer><answer>b</answer><correct>c</correct>");
    CHECK(!dup.diagnostics.format_ok);
    CHECK(dup.diagnostics.duplicate_tags == std::vector<std::string>{"answer"});

    const auto nested = parse_output(
        "<think>has <answer> inside</think><answer>a</answer><correct>c</correct>");
    CHECK(!nested.diagnostics.format_ok);
    CHECK(nested.diagnostics.duplicate_tags == std::vector<std::string>{"answer"});
}

TEST_CASE("diagnostics invariant: format_ok iff no failure recorded") {
    std::mt19937_64 rng(17);
    const std::string charset = "<>/thinkanswercorrect 0123456789.";
    for (int iter = 0; iter < 20000; ++iter) {
        std::string text;
        const size_t len = rng() % 60;
        for (size_t i = 0; i < len; ++i) text += charset[rng() % charset.size()];
        const auto result = parse_output(text);
        const auto& d = result.diagnostics;
        CHECK(d.format_ok ==
              (d.missing_tags.empty() && d.duplicate_tags.empty() && !d.order_violation));
        CHECK(d.format_ok == result.output.has_value());
    }
}

TEST_CASE("render then parse is the identity on trimmed tag-free sections") {
    std::mt19937_64 rng(42);
    const std::string charset = "abcdefgh 0123456789.,-";
    auto section = [&]() {
        std::string s;
        const size_t len = rng() % 20;
        for (size_t i = 0; i < len; ++i) s += charset[rng() % charset.size()];
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s;
    };
    for (int iter = 0; iter < 1000; ++iter) {
        StructuredOutput original;
        original.think = section();
        original.answer = section();
        original.correct = section();
        const auto result = parse_output(render_output(original));
        REQUIRE(result.diagnostics.format_ok);
        CHECK(result.output->think == original.think);
        CHECK(result.output->answer == original.answer);
        CHECK(result.output->correct == original.correct);
    }
}

TEST_CASE("empty sections survive the round-trip") {
    StructuredOutput empty;
    const auto result = parse_output(render_output(empty));
    CHECK(result.diagnostics.format_ok);
    CHECK(result.output->think.empty());
    CHECK(result.output->answer.empty());
    CHECK(result.output->correct->empty());
}

TEST_CASE("canonical rendering") {
    StructuredOutput s;
    s.think = "a";
    s.answer = "b";
    s.correct = "c";
    CHECK(render_output(s) == "<think>a</think>\n<answer>b</answer>\n<correct>c</correct>");
}

TEST_CASE("appending non-numeric text never creates a segment") {
    std::mt19937_64 rng(7);
    const std::string words = "notrelevant the video differs in action and object ";
    std::string answer = "This query does not match.";
    REQUIRE(!extract_segment(answer).has_value());
    for (int iter = 0; iter < 200; ++iter) {
        answer += words[rng() % words.size()];
        CHECK(!extract_segment(answer).has_value());
    }
}

TEST_CASE("parse_output is total on arbitrary bytes") {
    std::mt19937_64 rng(123);
    for (int iter = 0; iter < 20000; ++iter) {
        std::string text;
        const size_t len = rng() % 100;
        for (size_t i = 0; i < len; ++i) text += static_cast<char>(rng() & 0xFF);
        CHECK_NOTHROW(parse_output(text));
        CHECK_NOTHROW(extract_segment(text));
    }
}

TEST_CASE("lenient extraction recovers individual sections") {
    const auto sections =
        extract_sections_lenient("junk <answer> 3 to 4 </answer> more <correct>q</correct>");
    CHECK(!sections.think.has_value());
    REQUIRE(sections.answer.has_value());
    CHECK(*sections.answer == "3 to 4");
    CHECK(sections.correct == "q");

    CHECK(!extract_sections_lenient("<answer>never closed").answer.has_value());
}

TEST_CASE("time answers render deterministically") {
    CHECK(render_time_answer(Segment{4.0, 8.0}) == "From 4 to 8 seconds.");
    CHECK(render_time_answer(Segment{12.5, 30.0}) == "From 12.5 to 30 seconds.");
    CHECK(format_seconds(0.25) == "0.25");
    CHECK(format_seconds(90.0) == "90");
}
