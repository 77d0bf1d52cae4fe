#include "rarft/reward_engine.hpp"

#include <algorithm>
#include <map>

#include "rarft/template_parser.hpp"

namespace rarft {

double format_reward(std::string_view raw) {
    return parse_output(raw).diagnostics.format_ok ? 1.0 : 0.0;
}

double iou(const Segment& a, const Segment& b) {
    const double intersection = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const double union_length = a.length() + b.length() - intersection;
    if (union_length <= 0.0) {
        return (a.start == b.start && a.end == b.end) ? 1.0 : 0.0;
    }
    return intersection / union_length;
}

double refuse_iou_reward(const GroundingSample& sample, const StructuredOutput& out) {
    if (sample.relevant()) {
        return out.segment ? iou(*sample.gt_segment, *out.segment) : 0.0;
    }
    return out.segment ? 0.0 : 1.0;
}

ExplainReferences explain_references(const GroundingSample& sample) {
    ExplainReferences refs;
    if (sample.relevant()) {
        refs.positive = render_time_answer(*sample.gt_segment);
        refs.negative = sample.paired_refusal;
    } else {
        refs.positive = sample.gt_refusal;
        if (sample.paired_segment) refs.negative = render_time_answer(*sample.paired_segment);
    }
    return refs;
}

double explain_margin(const std::optional<std::string>& positive,
                      const std::optional<std::string>& negative, const std::string& answer,
                      EmbeddingProvider& embedder) {
    if (answer.empty()) return 0.0;
    double margin = 0.0;
    if (positive && !positive->empty()) margin += text_similarity(embedder, *positive, answer);
    if (negative && !negative->empty()) margin -= text_similarity(embedder, *negative, answer);
    return margin;
}

double explain_reward(const GroundingSample& sample, const StructuredOutput& out,
                      EmbeddingProvider& embedder) {
    const auto refs = explain_references(sample);
    return explain_margin(refs.positive, refs.negative, out.answer, embedder);
}

double correction_reward(const GroundingSample& sample, const StructuredOutput& out,
                         EmbeddingProvider& embedder) {
    if (sample.relevant()) return 0.0;
    if (!out.correct || out.correct->empty()) return 0.0;
    if (!sample.original_query || sample.original_query->empty()) return 0.0;
    return text_similarity(embedder, *sample.original_query, *out.correct);
}

RewardBreakdown total_reward(const GroundingSample& sample, std::string_view raw,
                             EmbeddingProvider& embedder, const RewardOptions& options) {
    RewardBreakdown breakdown;

    const ParseResult parsed = parse_output(raw);
    breakdown.format = parsed.diagnostics.format_ok ? 1.0 : 0.0;

    std::optional<std::string> answer;
    std::optional<std::string> correct;
    if (parsed.output) {
        answer = parsed.output->answer;
        correct = parsed.output->correct;
    } else if (!options.strict_format_gating) {
        const LenientSections sections = extract_sections_lenient(raw);
        answer = sections.answer;
        correct = sections.correct;
    }

    if (answer) {
        const std::optional<Segment> segment = extract_segment(*answer);
        if (sample.relevant()) {
            breakdown.refuse_iou = segment ? iou(*sample.gt_segment, *segment) : 0.0;
        } else {
            breakdown.refuse_iou = segment ? 0.0 : 1.0;
        }
        const auto refs = explain_references(sample);
        breakdown.explain = explain_margin(refs.positive, refs.negative, *answer, embedder);
    }

    if (!sample.relevant() && correct && !correct->empty() && sample.original_query &&
        !sample.original_query->empty()) {
        breakdown.correction = text_similarity(embedder, *sample.original_query, *correct);
    }

    breakdown.total =
        breakdown.format + breakdown.refuse_iou + breakdown.explain + breakdown.correction;
    return breakdown;
}

void resolve_explain_references(std::vector<GroundingSample>& samples) {
    // (video_id, query) -> relevant sample index
    std::map<std::pair<std::string, std::string>, size_t> relevant_by_key;
    for (size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].relevant()) {
            relevant_by_key.emplace(std::make_pair(samples[i].video_id, samples[i].query), i);
        }
    }

    // Strongest-tier sibling (then smallest sample_id) per relevant sample.
    std::map<size_t, size_t> best_sibling;
    auto better = [&](size_t lhs, size_t rhs) {
        const auto& a = samples[lhs];
        const auto& b = samples[rhs];
        const int ta = modified_element_count(*a.difficulty);
        const int tb = modified_element_count(*b.difficulty);
        if (ta != tb) return ta < tb;
        return a.sample_id < b.sample_id;
    };

    for (size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].relevant() || !samples[i].original_query) continue;
        auto it = relevant_by_key.find({samples[i].video_id, *samples[i].original_query});
        if (it == relevant_by_key.end()) continue;
        if (!samples[i].paired_segment) samples[i].paired_segment = samples[it->second].gt_segment;
        auto [pos, inserted] = best_sibling.emplace(it->second, i);
        if (!inserted && better(i, pos->second)) pos->second = i;
    }

    for (const auto& [relevant_idx, sibling_idx] : best_sibling) {
        if (!samples[relevant_idx].paired_refusal) {
            samples[relevant_idx].paired_refusal = samples[sibling_idx].gt_refusal;
        }
    }
}

}  // namespace rarft
