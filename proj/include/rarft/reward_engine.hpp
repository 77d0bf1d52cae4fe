#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rarft/core.hpp"
#include "rarft/providers.hpp"

namespace rarft {

/// The four per-objective scores and their plain (unweighted) sum.
struct RewardBreakdown {
    double format = 0.0;      // {0, 1}
    double refuse_iou = 0.0;  // [0, 1]
    double explain = 0.0;     // difference of two cosines, [-2, 2], no clamping
    double correction = 0.0;  // [-1, 1], forced 0 for relevant queries
    double total = 0.0;       // format + refuse_iou + explain + correction
};

struct RewardOptions {
    /// When true, a format failure zeroes the other three components instead
    /// of falling back to per-section best-effort extraction.
    bool strict_format_gating = false;
};

/// 1 when the raw text matches the three-section template exactly, else 0.
double format_reward(std::string_view raw);

/// Temporal intersection-over-union. Identical zero-length segments score 1;
/// any other zero-union pair is disjoint and scores 0.
double iou(const Segment& a, const Segment& b);

/// Relevant with a predicted segment: IoU against the ground truth.
/// Irrelevant without a predicted segment: 1. Everything else: 0.
double refuse_iou_reward(const GroundingSample& sample, const StructuredOutput& out);

/// Reference answers for the similarity margin. The positive is the sample's
/// own ground-truth answer; the negative is sourced from the paired sibling
/// record (see resolve_explain_references) and may be absent.
struct ExplainReferences {
    std::optional<std::string> positive;
    std::optional<std::string> negative;
};

ExplainReferences explain_references(const GroundingSample& sample);

/// sim(a_pos, answer) - sim(a_neg, answer) over provider embeddings. A
/// missing or empty reference (or an empty answer) contributes 0 to its term.
double explain_margin(const std::optional<std::string>& positive,
                      const std::optional<std::string>& negative, const std::string& answer,
                      EmbeddingProvider& embedder);

double explain_reward(const GroundingSample& sample, const StructuredOutput& out,
                      EmbeddingProvider& embedder);

/// 0 for relevant queries; sim(original query, <correct> section) for
/// irrelevant ones, with a missing or empty section scoring 0.
double correction_reward(const GroundingSample& sample, const StructuredOutput& out,
                         EmbeddingProvider& embedder);

/// Parses the raw output once and computes all four components. With
/// strict_format_gating off (default), a malformed output still earns the
/// non-format components from whichever sections parse individually.
RewardBreakdown total_reward(const GroundingSample& sample, std::string_view raw,
                             EmbeddingProvider& embedder, const RewardOptions& options = {});

/// Fills paired_segment / paired_refusal across the dataset: an irrelevant
/// sample is paired with the relevant sample sharing its video_id whose query
/// equals its original_query; a relevant sample is paired with its
/// strongest-tier irrelevant sibling (ties broken by sample_id). Fields
/// already populated are left untouched.
void resolve_explain_references(std::vector<GroundingSample>& samples);

}  // namespace rarft
