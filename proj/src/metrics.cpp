#include "rarft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "rarft/prompts.hpp"
#include "rarft/reward_engine.hpp"
#include "rarft/template_parser.hpp"

namespace rarft {

using nlohmann::json;

PredictionRecord make_prediction(std::string sample_id, std::string raw_output) {
    PredictionRecord pred;
    pred.sample_id = std::move(sample_id);
    pred.raw_output = std::move(raw_output);

    ParseResult parsed = parse_output(pred.raw_output);
    if (parsed.output) {
        pred.parsed = std::move(parsed.output);
    } else {
        const LenientSections sections = extract_sections_lenient(pred.raw_output);
        if (sections.answer) {
            StructuredOutput out;
            out.think = sections.think.value_or("");
            out.answer = *sections.answer;
            out.correct = sections.correct;
            out.segment = extract_segment(out.answer);
            out.raw = pred.raw_output;
            pred.parsed = std::move(out);
        }
    }
    pred.predicted_relevant = pred.parsed && pred.parsed->segment;
    return pred;
}

double ra_iou(const GroundingSample& sample, const PredictionRecord& pred) {
    if (sample.relevant()) {
        if (!pred.predicted_relevant) return 0.0;
        return iou(*sample.gt_segment, *pred.parsed->segment);
    }
    return pred.predicted_relevant ? 0.0 : 1.0;
}

double recall_at(std::span<const double> scores, double threshold) {
    if (scores.empty()) throw EmptyInput("recall_at");
    if (!(threshold > 0.0) || threshold > 1.0) {
        throw InvariantError("recall threshold must lie in (0, 1]");
    }
    size_t hits = 0;
    for (double s : scores) {
        if (s > threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

F1Scores f1_scores(const std::vector<std::pair<Relevance, bool>>& pairs) {
    if (pairs.empty()) throw EmptyInput("f1_scores");

    auto class_f1 = [&](bool positive_is_relevant) {
        size_t tp = 0, fp = 0, fn = 0;
        for (const auto& [gt, predicted_relevant] : pairs) {
            const bool gt_positive = (gt == Relevance::Relevant) == positive_is_relevant;
            const bool pred_positive = predicted_relevant == positive_is_relevant;
            if (gt_positive && pred_positive) ++tp;
            if (!gt_positive && pred_positive) ++fp;
            if (gt_positive && !pred_positive) ++fn;
        }
        const double precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
        return (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
    };

    F1Scores f1;
    f1.relevant = class_f1(true);
    f1.irrelevant = class_f1(false);
    f1.average = (f1.relevant + f1.irrelevant) / 2.0;
    return f1;
}

double rt_iou(const std::set<RelevanceCategory>& predicted,
              const std::set<RelevanceCategory>& ground_truth) {
    if (ground_truth.empty()) throw EmptyInput("rt_iou ground-truth categories");
    if (predicted.empty()) return 0.0;
    size_t intersection = 0;
    for (const auto& c : predicted) intersection += ground_truth.count(c);
    const size_t union_size = predicted.size() + ground_truth.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(union_size);
}

namespace {

json complete_json_with_retry(LlmClient& llm, const std::string& system_prompt,
                              const std::string& payload, const char* what) {
    const CompletionOptions options{ResponseFormat::Json, 0.0};
    std::string last_response;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last_response = llm.complete(system_prompt, payload, options);
        json doc = json::parse(last_response, nullptr, /*allow_exceptions=*/false);
        if (!doc.is_discarded()) return doc;
    }
    throw LlmSchemaError(std::string(what) + ": response is not valid JSON after re-ask: " +
                         last_response.substr(0, 200));
}

}  // namespace

std::set<RelevanceCategory> extract_pred_categories(const std::string& refusal_text,
                                                    LlmClient& llm) {
    const json payload = {{"generated_response", refusal_text}};
    const json doc =
        complete_json_with_retry(llm, prompts::category_judge(), payload.dump(), "category judge");
    if (!doc.is_array()) {
        throw LlmSchemaError("category judge: expected a JSON array of category paths");
    }
    std::set<RelevanceCategory> categories;
    for (const auto& entry : doc) {
        if (!entry.is_string()) {
            throw LlmSchemaError("category judge: array entries must be strings");
        }
        try {
            categories.insert(parse_category_path(entry.get<std::string>()));
        } catch (const UnknownCategory& e) {
            std::cerr << "warning: judge returned unknown category, dropped: " << e.path() << "\n";
        }
    }
    return categories;
}

double sbert_score(const std::string& generated, const std::string& reference,
                   EmbeddingProvider& embedder) {
    const double cosine = text_similarity(embedder, generated, reference);
    return std::clamp(cosine, 0.0, 1.0);
}

double llm_score(const std::string& generated, const std::string& reference, LlmClient& llm) {
    const json payload = {{"generated_response", generated}, {"gt_response", reference}};
    const CompletionOptions options{ResponseFormat::Text, 0.0};

    std::string last_response;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last_response = llm.complete(prompts::consistency_score(), payload.dump(), options);
        // The grader replies with a Python dict literal ({'score': 4.0});
        // normalize single quotes before JSON parsing.
        std::string normalized = last_response;
        std::replace(normalized.begin(), normalized.end(), '\'', '"');
        json doc = json::parse(normalized, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("score") ||
            !doc["score"].is_number()) {
            continue;
        }
        const double score = doc["score"].get<double>();
        if (score < 0.0 || score > 5.0) {
            throw OutOfRange("llm score " + std::to_string(score) + " outside [0, 5]");
        }
        return score;
    }
    throw LlmSchemaError("llm score: response is not a {'score': x} literal after re-ask: " +
                         last_response.substr(0, 200));
}

namespace {

struct Paired {
    const GroundingSample* sample;
    const PredictionRecord* prediction;
};

MetricBlock compute_block(const std::vector<Paired>& items, EmbeddingProvider* embedder,
                          LlmClient* llm, const EvalOptions& options) {
    MetricBlock block;
    block.n_samples = items.size();

    std::vector<double> scores;
    std::vector<std::pair<Relevance, bool>> pairs;
    scores.reserve(items.size());
    pairs.reserve(items.size());
    for (const auto& item : items) {
        scores.push_back(ra_iou(*item.sample, *item.prediction));
        pairs.emplace_back(item.sample->relevance, item.prediction->predicted_relevant);
    }

    double sum = 0.0;
    for (double s : scores) sum += s;
    block.ra_miou = scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
    for (double m : options.recall_thresholds) {
        block.recall_at.emplace_back(m, recall_at(scores, m));
    }
    block.f1 = f1_scores(pairs);

    if (options.judge_enabled && embedder && llm) {
        ExplanationQuality quality;
        size_t n_irrelevant = 0;
        for (const auto& item : items) {
            if (item.sample->relevant()) continue;
            ++n_irrelevant;

            const std::set<RelevanceCategory> gt_set(item.sample->gt_categories.begin(),
                                                     item.sample->gt_categories.end());
            const auto& parsed = item.prediction->parsed;
            const bool has_answer = parsed && !parsed->answer.empty();
            if (has_answer) {
                quality.rt_iou_mean += rt_iou(extract_pred_categories(parsed->answer, *llm), gt_set);
                quality.sbert_mean += sbert_score(parsed->answer, *item.sample->gt_refusal, *embedder);
                quality.llm_score_mean += llm_score(parsed->answer, *item.sample->gt_refusal, *llm);
            }
            // otherwise all three contribute 0 for this sample
        }
        if (n_irrelevant > 0) {
            quality.rt_iou_mean /= static_cast<double>(n_irrelevant);
            quality.sbert_mean /= static_cast<double>(n_irrelevant);
            quality.llm_score_mean /= static_cast<double>(n_irrelevant);
            block.explanation = quality;
        }
    }
    return block;
}

}  // namespace

EvalReport aggregate_report(const std::vector<GroundingSample>& dataset,
                            const std::vector<PredictionRecord>& predictions,
                            EmbeddingProvider* embedder, LlmClient* llm,
                            const EvalOptions& options) {
    if (dataset.empty()) throw EmptyInput("aggregate_report dataset");

    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& pred : predictions) {
        if (!by_id.emplace(pred.sample_id, &pred).second) {
            throw DuplicatePrediction(pred.sample_id);
        }
    }

    std::vector<Paired> items;
    items.reserve(dataset.size());
    for (const auto& sample : dataset) {
        auto it = by_id.find(sample.sample_id);
        if (it == by_id.end()) throw MissingPrediction(sample.sample_id);
        items.push_back({&sample, it->second});
    }
    if (by_id.size() != dataset.size()) {
        throw InvariantError("predictions contain sample_ids not present in the dataset");
    }

    std::sort(items.begin(), items.end(), [](const Paired& a, const Paired& b) {
        return a.sample->sample_id < b.sample->sample_id;
    });

    EvalReport report;
    report.overall = compute_block(items, embedder, llm, options);

    std::set<DifficultyTier> tiers;
    for (const auto& item : items) {
        if (item.sample->difficulty) tiers.insert(*item.sample->difficulty);
    }
    for (DifficultyTier tier : tiers) {
        std::vector<Paired> subset;
        for (const auto& item : items) {
            if (item.sample->relevant() || item.sample->difficulty == tier) subset.push_back(item);
        }
        report.per_tier.emplace(tier, compute_block(subset, embedder, llm, options));
    }
    return report;
}

namespace {

std::string threshold_key(double m) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", m);
    return buf;
}

json block_to_json(const MetricBlock& block) {
    json recall = json::object();
    for (const auto& [m, value] : block.recall_at) recall[threshold_key(m)] = value;
    json out = {{"n_samples", block.n_samples},
                {"ra_miou", block.ra_miou},
                {"recall_at", recall},
                {"f1",
                 {{"relevant", block.f1.relevant},
                  {"irrelevant", block.f1.irrelevant},
                  {"average", block.f1.average}}}};
    if (block.explanation) {
        out["explanation_quality"] = {{"rt_iou_mean", block.explanation->rt_iou_mean},
                                      {"sbert_mean", block.explanation->sbert_mean},
                                      {"llm_score_mean", block.explanation->llm_score_mean}};
    }
    return out;
}

}  // namespace

json report_to_json(const EvalReport& report) {
    json out = block_to_json(report.overall);
    if (!report.per_tier.empty()) {
        json tiers = json::object();
        for (const auto& [tier, block] : report.per_tier) {
            tiers[difficulty_name(tier)] = block_to_json(block);
        }
        out["per_tier"] = tiers;
    }
    return out;
}

std::string report_to_csv(const EvalReport& report) {
    const MetricBlock& b = report.overall;
    auto recall_value = [&](double m) {
        for (const auto& [threshold, value] : b.recall_at) {
            if (threshold == m) return value;
        }
        return 0.0;
    };
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", recall_value(0.3),
                  recall_value(0.5), recall_value(0.7), b.ra_miou, b.f1.relevant, b.f1.irrelevant,
                  b.f1.average);
    return std::string("r_at_0.3,r_at_0.5,r_at_0.7,miou,f1_relevant,f1_irrelevant,f1_average\n") +
           buf;
}

}  // namespace rarft
