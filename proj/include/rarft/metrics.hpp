#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rarft/core.hpp"
#include "rarft/providers.hpp"

namespace rarft {

class EmptyInput : public Error {
public:
    explicit EmptyInput(const std::string& what) : Error(what + ": empty input") {}
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class MissingPrediction : public Error {
public:
    explicit MissingPrediction(const std::string& sample_id)
        : Error("no prediction for sample_id '" + sample_id + "'") {}
};

class DuplicatePrediction : public Error {
public:
    explicit DuplicatePrediction(const std::string& sample_id)
        : Error("multiple predictions for sample_id '" + sample_id + "'") {}
};

/// One model output under evaluation. `parsed` is the strict template parse
/// when it succeeds, otherwise a best-effort reconstruction from whichever
/// sections exist (nothing when not even an answer section is present).
/// predicted_relevant is true iff parsed is present with a segment.
struct PredictionRecord {
    std::string sample_id;
    std::string raw_output;
    std::optional<StructuredOutput> parsed;
    bool predicted_relevant = false;
};

PredictionRecord make_prediction(std::string sample_id, std::string raw_output);

/// Relevance-aware IoU: IoU for grounded relevant queries, 1 for refused
/// irrelevant queries, 0 otherwise.
double ra_iou(const GroundingSample& sample, const PredictionRecord& pred);

/// Proportion of scores strictly greater than the threshold m in (0, 1].
double recall_at(std::span<const double> scores, double threshold);

struct F1Scores {
    double relevant = 0.0;
    double irrelevant = 0.0;
    double average = 0.0;
};

/// Per-class one-vs-rest F1 over (ground truth, predicted-relevant) pairs;
/// zero-denominator precision/recall count as 0; average is the macro mean.
F1Scores f1_scores(const std::vector<std::pair<Relevance, bool>>& pairs);

/// Set IoU between predicted and ground-truth category sets. The ground
/// truth must be non-empty (only computed for irrelevant samples); an empty
/// prediction scores 0.
double rt_iou(const std::set<RelevanceCategory>& predicted,
              const std::set<RelevanceCategory>& ground_truth);

/// Asks the judge which taxonomy categories a refusal answer invokes.
/// Unknown paths are dropped with a warning; an empty array is a valid empty
/// set. One re-ask on unparsable JSON, then LlmSchemaError.
std::set<RelevanceCategory> extract_pred_categories(const std::string& refusal_text,
                                                    LlmClient& llm);

/// Embedding cosine similarity clamped into [0, 1].
double sbert_score(const std::string& generated, const std::string& reference,
                   EmbeddingProvider& embedder);

/// Judge-scored reasoning consistency in [0, 5]. One re-ask on unparsable
/// output, then LlmSchemaError; values outside [0, 5] raise OutOfRange.
double llm_score(const std::string& generated, const std::string& reference, LlmClient& llm);

struct ExplanationQuality {
    double rt_iou_mean = 0.0;
    double sbert_mean = 0.0;
    double llm_score_mean = 0.0;
};

struct MetricBlock {
    size_t n_samples = 0;
    double ra_miou = 0.0;
    std::vector<std::pair<double, double>> recall_at;  // (threshold, proportion)
    F1Scores f1;
    std::optional<ExplanationQuality> explanation;  // only with the judge enabled
};

struct EvalReport {
    MetricBlock overall;
    std::map<DifficultyTier, MetricBlock> per_tier;  // empty for tierless datasets
};

struct EvalOptions {
    bool judge_enabled = false;
    std::vector<double> recall_thresholds = {0.3, 0.5, 0.7};
};

/// Deterministic single-threaded reduce over sorted sample ids. Explanation
/// quality (RT-IoU, SBert, LLM score) is restricted to irrelevant samples
/// and requires judge_enabled with both providers. Per-tier blocks restrict
/// the irrelevant side to one tier while keeping all relevant samples.
EvalReport aggregate_report(const std::vector<GroundingSample>& dataset,
                            const std::vector<PredictionRecord>& predictions,
                            EmbeddingProvider* embedder, LlmClient* llm,
                            const EvalOptions& options = {});

/// Stable-key-order JSON rendering of the report.
nlohmann::json report_to_json(const EvalReport& report);

/// CSV export in Table-style column order:
/// R@0.3, R@0.5, R@0.7, mIoU, F1 rel., F1 irrel., F1 avg.
std::string report_to_csv(const EvalReport& report);

}  // namespace rarft
