#include "rarft/dataset_builder.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "rarft/prompts.hpp"
#include "rarft/strings.hpp"
#include "rarft/template_parser.hpp"

namespace rarft {

using nlohmann::json;

std::vector<RelevanceCategory> CategoryPlan::selected_top3() const {
    std::vector<RelevanceCategory> top;
    for (size_t i = 0; i < eligible.size() && i < 3; ++i) top.push_back(eligible[i].first);
    return top;
}

namespace {

json complete_json(LlmClient& llm, const std::string& system_prompt, const std::string& payload,
                   double temperature, const char* what) {
    const CompletionOptions options{ResponseFormat::Json, temperature};
    std::string last_response;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last_response = llm.complete(system_prompt, payload, options);
        json doc = json::parse(last_response, nullptr, /*allow_exceptions=*/false);
        if (!doc.is_discarded()) return doc;
    }
    throw LlmSchemaError(std::string(what) + ": response is not valid JSON after re-ask: " +
                         last_response.substr(0, 200));
}

void merge_eligible(CategoryPlan& plan, const json& doc) {
    if (!doc.is_object() || !doc.contains("eligible_categories") ||
        !doc["eligible_categories"].is_array()) {
        throw LlmSchemaError("category extraction: missing eligible_categories array");
    }
    std::set<RelevanceCategory> seen;
    for (const auto& [cat, reason] : plan.eligible) seen.insert(cat);

    for (const auto& entry : doc["eligible_categories"]) {
        if (!entry.is_object() || !entry.contains("path") || !entry["path"].is_string()) {
            throw LlmSchemaError("category extraction: entries need a string 'path'");
        }
        RelevanceCategory cat;
        try {
            cat = parse_category_path(entry["path"].get<std::string>());
        } catch (const UnknownCategory& e) {
            std::cerr << "warning: category extraction returned unknown path, dropped: "
                      << e.path() << "\n";
            continue;
        }
        if (!seen.insert(cat).second) continue;
        plan.eligible.emplace_back(cat, entry.value("reason", ""));
    }
}

}  // namespace

CategoryPlan extract_categories(const std::string& query, LlmClient& llm,
                                const BuilderOptions& options) {
    if (query.empty()) throw InvariantError("cannot extract categories for an empty query");

    const std::string payload = json{{"related_query", query}}.dump();
    CategoryPlan plan;
    plan.query = query;

    merge_eligible(plan, complete_json(llm, prompts::category_extraction(), payload,
                                       options.classification_temperature, "category extraction"));
    if (plan.eligible.size() < 3) {
        // One re-ask, then live with whatever we have.
        merge_eligible(plan, complete_json(llm, prompts::category_extraction(), payload,
                                           options.classification_temperature,
                                           "category extraction"));
    }
    if (plan.eligible.empty()) {
        throw UnknownCategory("no valid category for query '" + query + "'");
    }
    if (plan.eligible.size() < 3) {
        plan.short_plan = true;
        std::cerr << "warning: only " << plan.eligible.size() << " categories for query '" << query
                  << "'\n";
    }
    return plan;
}

namespace {

constexpr DifficultyTier kTierOrder[] = {DifficultyTier::Strong, DifficultyTier::Moderate,
                                         DifficultyTier::Weak};

// Exactly one <tag>...</tag> block; returns its trimmed content.
std::string single_block(const std::string& text, const std::string& tag, const char* what) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const size_t first = text.find(open);
    if (first == std::string::npos || text.find(open, first + open.size()) != std::string::npos) {
        throw LlmSchemaError(std::string(what) + ": reasoning needs exactly one <" + tag +
                             "> block");
    }
    const size_t begin = first + open.size();
    const size_t end = text.find(close, begin);
    if (end == std::string::npos || text.find(close, end + close.size()) != std::string::npos) {
        throw LlmSchemaError(std::string(what) + ": reasoning needs exactly one </" + tag + ">");
    }
    return trim(std::string_view(text).substr(begin, end - begin));
}

NegativeVariant parse_variant(const json& entry, DifficultyTier tier,
                              const std::vector<RelevanceCategory>& planned) {
    const std::string tier_name = difficulty_name(tier);
    const char* what = "negative generation";

    NegativeVariant variant;
    variant.tier = tier;
    if (!entry.is_object()) throw LlmSchemaError(std::string(what) + ": tier entry not an object");
    if (!entry.contains("irrel_query") || !entry["irrel_query"].is_string() ||
        entry["irrel_query"].get<std::string>().empty()) {
        throw LlmSchemaError(std::string(what) + ": missing irrel_query for " + tier_name);
    }
    variant.irrel_query = entry["irrel_query"].get<std::string>();

    if (!entry.contains("applied_categories") || !entry["applied_categories"].is_array()) {
        throw LlmSchemaError(std::string(what) + ": missing applied_categories for " + tier_name);
    }
    for (const auto& c : entry["applied_categories"]) {
        if (!c.is_object() || !c.contains("path") || !c["path"].is_string()) {
            throw LlmSchemaError(std::string(what) + ": applied_categories entries need a path");
        }
        variant.applied_categories.push_back(parse_category_path(c["path"].get<std::string>()));
    }
    if (variant.applied_categories != planned) {
        throw PlanMismatch("tier '" + tier_name + "' echoed different categories than planned");
    }

    if (!entry.contains("difficulty_tag") || entry["difficulty_tag"] != tier_name) {
        throw LlmSchemaError(std::string(what) + ": difficulty_tag must be '" + tier_name + "'");
    }

    if (!entry.contains("reasoning") || !entry["reasoning"].is_string()) {
        throw LlmSchemaError(std::string(what) + ": missing reasoning for " + tier_name);
    }
    variant.reasoning = entry["reasoning"].get<std::string>();
    variant.refusal_answer = single_block(variant.reasoning, "irrelevant_answer", what);
    for (const auto& cat : variant.applied_categories) {
        single_block(variant.reasoning, category_tag(cat), what);
    }
    return variant;
}

}  // namespace

NegativeBundle generate_negatives(const GroundingSample& sample, const CategoryPlan& plan,
                                  LlmClient& llm, const BuilderOptions& options) {
    if (!sample.relevant() || !sample.gt_segment) {
        throw InvariantError("negatives are generated from relevant samples only");
    }
    const auto top = plan.selected_top3();
    if (top.empty()) throw InvariantError("category plan is empty");

    json plans = json::array();
    std::vector<std::pair<DifficultyTier, std::vector<RelevanceCategory>>> planned;
    for (size_t count = 1; count <= top.size() && count <= 3; ++count) {
        const DifficultyTier tier = kTierOrder[count - 1];
        std::vector<RelevanceCategory> cats(top.begin(), top.begin() + count);
        json applied = json::array();
        for (const auto& c : cats) applied.push_back({{"path", category_path(c)}});
        plans.push_back({{"difficulty", difficulty_name(tier)}, {"applied_categories", applied}});
        planned.emplace_back(tier, std::move(cats));
    }

    const json payload = {
        {"related_query", sample.query},
        {"related_query_timestamp", format_seconds(sample.gt_segment->start) + "-" +
                                        format_seconds(sample.gt_segment->end) + " second"},
        {"plans", plans},
        {"video_context", sample.video_context}};

    const json doc = complete_json(llm, prompts::negative_generation(), payload.dump(),
                                   options.generation_temperature, "negative generation");
    if (!doc.is_object() || !doc.contains("negs") || !doc["negs"].is_object()) {
        throw LlmSchemaError("negative generation: missing negs object");
    }

    NegativeBundle bundle;
    for (const auto& [tier, cats] : planned) {
        const std::string tier_name = difficulty_name(tier);
        if (!doc["negs"].contains(tier_name)) throw MissingTier(tier);
        bundle.variants.push_back(parse_variant(doc["negs"][tier_name], tier, cats));
    }
    return bundle;
}

GroundingSample variant_to_sample(const GroundingSample& source, const NegativeVariant& variant) {
    GroundingSample neg;
    neg.sample_id = source.sample_id + "-" + difficulty_name(variant.tier);
    neg.video_id = source.video_id;
    neg.video_context = source.video_context;
    neg.query = variant.irrel_query;
    neg.relevance = Relevance::Irrelevant;
    neg.difficulty = variant.tier;
    neg.gt_refusal = variant.refusal_answer;
    neg.original_query = source.query;
    neg.gt_categories = variant.applied_categories;
    neg.paired_segment = source.gt_segment;
    return neg;
}

size_t BuildReport::total_irrelevant() const {
    size_t total = 0;
    for (const auto& [tier, count] : irrelevant_emitted) total += count;
    return total;
}

json build_report_to_json(const BuildReport& report) {
    json skips = json::array();
    for (const auto& [id, reason] : report.skips) {
        skips.push_back({{"sample_id", id}, {"reason", reason}});
    }
    json per_tier = json::object();
    for (const auto& [tier, count] : report.irrelevant_emitted) {
        per_tier[difficulty_name(tier)] = count;
    }
    return json{{"relevant_emitted", report.relevant_emitted},
                {"irrelevant_emitted", per_tier},
                {"irrelevant_total", report.total_irrelevant()},
                {"resumed", report.resumed},
                {"skips", skips},
                {"llm_calls", report.llm_calls},
                {"llm_seconds", report.llm_seconds}};
}

namespace {

// Counts calls and wall time on the way through.
class MeteredLlm : public LlmClient {
public:
    explicit MeteredLlm(LlmClient& inner) : inner_(inner) {}

    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         const CompletionOptions& options) override {
        const auto start = std::chrono::steady_clock::now();
        auto response = inner_.complete(system_prompt, user_payload, options);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        std::lock_guard lock(mutex_);
        ++calls_;
        seconds_ += elapsed.count();
        return response;
    }

    std::string model_id() const override { return inner_.model_id(); }

    size_t calls() const { return calls_; }
    double seconds() const { return seconds_; }

private:
    LlmClient& inner_;
    std::mutex mutex_;
    size_t calls_ = 0;
    double seconds_ = 0.0;
};

std::set<std::string> load_checkpoint(const std::string& path) {
    std::set<std::string> completed;
    std::ifstream in(path);
    if (!in) return completed;
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_object() && doc.contains("completed") && doc["completed"].is_array()) {
        for (const auto& id : doc["completed"]) {
            if (id.is_string()) completed.insert(id.get<std::string>());
        }
    }
    return completed;
}

void store_checkpoint(const std::string& path, const std::set<std::string>& completed) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        out << json{{"completed", completed}}.dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

BuildReport build_dataset(const std::vector<GroundingSample>& corpus, LlmClient& llm,
                          const std::string& out_path, const BuilderOptions& options,
                          const std::string& checkpoint_path) {
    for (const auto& sample : corpus) {
        if (!sample.relevant()) {
            throw InvariantError("build corpus must contain relevant samples only (got '" +
                                 sample.sample_id + "')");
        }
    }

    const std::string ckpt = checkpoint_path.empty() ? out_path + ".checkpoint" : checkpoint_path;
    std::set<std::string> completed = load_checkpoint(ckpt);

    BuildReport report;
    std::vector<const GroundingSample*> pending;
    for (const auto& sample : corpus) {
        if (completed.count(sample.sample_id)) {
            ++report.resumed;
        } else {
            pending.push_back(&sample);
        }
    }

    std::ofstream out(out_path, completed.empty() ? std::ios::trunc : std::ios::app);
    if (!out) throw Error("cannot open output file: " + out_path);

    MeteredLlm metered(llm);

    // LLM calls fan out across workers; results are flushed strictly in
    // corpus order so the output file is deterministic for a given input.
    struct Outcome {
        std::vector<json> lines;
        std::vector<DifficultyTier> tiers;
        std::string failure;  // non-empty marks a skip
    };
    std::vector<std::optional<Outcome>> outcomes(pending.size());
    std::mutex sink_mutex;  // guards outcomes, out, completed, report
    size_t next_flush = 0;
    std::atomic<size_t> next{0};

    auto flush_ready = [&] {
        while (next_flush < outcomes.size() && outcomes[next_flush]) {
            const GroundingSample& sample = *pending[next_flush];
            Outcome& outcome = *outcomes[next_flush];
            if (!outcome.failure.empty()) {
                report.skips.emplace_back(sample.sample_id, outcome.failure);
            } else {
                for (const auto& line : outcome.lines) out << line.dump() << "\n";
                out.flush();
                ++report.relevant_emitted;
                for (DifficultyTier tier : outcome.tiers) ++report.irrelevant_emitted[tier];
                completed.insert(sample.sample_id);
                store_checkpoint(ckpt, completed);
            }
            outcomes[next_flush].reset();
            ++next_flush;
        }
    };

    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const GroundingSample& sample = *pending[i];
            Outcome outcome;
            try {
                const CategoryPlan plan = extract_categories(sample.query, metered, options);
                const NegativeBundle bundle = generate_negatives(sample, plan, metered, options);

                outcome.lines.push_back(sample_to_json(sample));
                for (const auto& variant : bundle.variants) {
                    const GroundingSample neg = variant_to_sample(sample, variant);
                    validate_sample(sample_to_json(neg));  // every emitted record must round-trip
                    outcome.lines.push_back(sample_to_json(neg));
                    outcome.tiers.push_back(variant.tier);
                }
            } catch (const std::exception& e) {
                outcome = Outcome{};
                outcome.failure = e.what();
            }
            std::lock_guard lock(sink_mutex);
            outcomes[i] = std::move(outcome);
            flush_ready();
        }
    };

    const size_t n_threads =
        std::min<size_t>(std::max(1, options.max_in_flight), std::max<size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    report.llm_calls = metered.calls();
    report.llm_seconds = metered.seconds();
    return report;
}

}  // namespace rarft
