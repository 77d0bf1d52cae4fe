#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rarft/core.hpp"
#include "rarft/providers.hpp"

namespace rarft {

/// The categories echoed by the generator differ from the requested plan.
class PlanMismatch : public Error {
public:
    using Error::Error;
};

/// The generator response lacks one of the requested difficulty tiers.
class MissingTier : public Error {
public:
    explicit MissingTier(DifficultyTier tier)
        : Error("generator response is missing tier '" + difficulty_name(tier) + "'") {}
};

struct BuilderOptions {
    double classification_temperature = 0.0;
    double generation_temperature = 0.7;
    int max_in_flight = 8;
};

/// Categories that can turn one query irrelevant, in the judge's
/// diagnostic-strength order. The first three drive tier construction.
struct CategoryPlan {
    std::string query;
    std::vector<std::pair<RelevanceCategory, std::string>> eligible;  // (category, reason)
    bool short_plan = false;  // fewer than 3 distinct categories even after the re-ask

    std::vector<RelevanceCategory> selected_top3() const;
};

/// Runs the category-extraction prompt on one query. Unknown paths are
/// dropped with a warning; fewer than three distinct categories triggers one
/// re-ask, after which the plan is emitted as-is with short_plan set. Throws
/// LlmSchemaError on unparsable JSON after the re-ask and UnknownCategory
/// when not a single valid category was returned.
CategoryPlan extract_categories(const std::string& query, LlmClient& llm,
                                const BuilderOptions& options = {});

struct NegativeVariant {
    DifficultyTier tier = DifficultyTier::Strong;
    std::string irrel_query;
    std::vector<RelevanceCategory> applied_categories;  // prefix of the top-3, plan order
    std::string reasoning;       // full block-structured reasoning
    std::string refusal_answer;  // content of the <irrelevant_answer> block
};

struct NegativeBundle {
    std::vector<NegativeVariant> variants;  // strong, then moderate, then weak
};

/// Runs the negative-generation prompt for one relevant sample. The plans are
/// prefix-nested over the top-3 categories (strong: c1; moderate: c1,c2;
/// weak: c1,c2,c3), truncated to what the plan offers. Validates tier
/// completeness, the category echo, and the reasoning block structure.
NegativeBundle generate_negatives(const GroundingSample& sample, const CategoryPlan& plan,
                                  LlmClient& llm, const BuilderOptions& options = {});

/// Converts one variant into an irrelevant dataset record derived from its
/// source sample (id suffixed with the tier name).
GroundingSample variant_to_sample(const GroundingSample& source, const NegativeVariant& variant);

struct BuildReport {
    size_t relevant_emitted = 0;
    std::map<DifficultyTier, size_t> irrelevant_emitted;
    size_t resumed = 0;  // skipped because already checkpointed
    std::vector<std::pair<std::string, std::string>> skips;  // (sample_id, reason)
    size_t llm_calls = 0;
    double llm_seconds = 0.0;

    size_t total_irrelevant() const;
};

nlohmann::json build_report_to_json(const BuildReport& report);

/// Builds the hard-irrelevant dataset: for every relevant input sample,
/// emits the sample itself plus up to three tiered irrelevant records.
/// Per-sample failures are recorded in the report and never abort the run.
/// Completed sample ids are checkpointed (write-temp-then-rename) so an
/// interrupted build resumes without re-sending finished samples.
BuildReport build_dataset(const std::vector<GroundingSample>& corpus, LlmClient& llm,
                          const std::string& out_path, const BuilderOptions& options = {},
                          const std::string& checkpoint_path = "");

}  // namespace rarft
