#include "rarft/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace rarft {

namespace {

struct CategoryEntry {
    CategoryParent parent;
    CategoryChild child;
    const char* path;
};

// Taxonomy order: Action, Object, Scene, Attribute.
constexpr std::array<CategoryEntry, kCategoryCount> kTaxonomy = {{
    {CategoryParent::Action, CategoryChild::ActionSequence, "Action/ActionSequence"},
    {CategoryParent::Action, CategoryChild::FineGrainedAction, "Action/FineGrainedAction"},
    {CategoryParent::Object, CategoryChild::ObjectExistence, "Object/ObjectExistence"},
    {CategoryParent::Object, CategoryChild::ObjectPartRelation, "Object/ObjectPartRelation"},
    {CategoryParent::Object, CategoryChild::ObjectSpatialRelation, "Object/ObjectSpatialRelation"},
    {CategoryParent::Object, CategoryChild::ObjectMoving, "Object/ObjectMoving"},
    {CategoryParent::Scene, CategoryChild::SceneExistence, "Scene/SceneExistence"},
    {CategoryParent::Scene, CategoryChild::SceneTransition, "Scene/SceneTransition"},
    {CategoryParent::Attribute, CategoryChild::AttributeValue, "Attribute/AttributeValue"},
    {CategoryParent::Attribute, CategoryChild::Counting, "Attribute/Counting"},
    {CategoryParent::Attribute, CategoryChild::Comparison, "Attribute/Comparison"},
}};

const CategoryEntry& entry_for(RelevanceCategory c) {
    for (const auto& e : kTaxonomy) {
        if (e.parent == c.parent && e.child == c.child) return e;
    }
    throw UnknownCategory("<inconsistent parent/child pair>");
}

}  // namespace

Segment make_segment(double start, double end) {
    if (!std::isfinite(start) || !std::isfinite(end)) {
        throw InvariantError("segment endpoints must be finite");
    }
    if (start < 0.0 || end < 0.0) {
        throw InvariantError("segment endpoints must be non-negative");
    }
    if (start > end) {
        throw InvariantError("segment start must not exceed end");
    }
    return Segment{start, end};
}

const std::vector<RelevanceCategory>& all_categories() {
    static const std::vector<RelevanceCategory> cats = [] {
        std::vector<RelevanceCategory> v;
        v.reserve(kTaxonomy.size());
        for (const auto& e : kTaxonomy) v.push_back({e.parent, e.child});
        return v;
    }();
    return cats;
}

std::string category_path(RelevanceCategory c) { return entry_for(c).path; }

std::string category_tag(RelevanceCategory c) {
    std::string tag = entry_for(c).path;
    for (char& ch : tag) {
        if (ch == '/') {
            ch = '_';
        } else {
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
    }
    return tag;
}

RelevanceCategory parse_category_path(std::string_view path) {
    for (const auto& e : kTaxonomy) {
        if (path == e.path) return {e.parent, e.child};
    }
    throw UnknownCategory(std::string(path));
}

int modified_element_count(DifficultyTier tier) {
    switch (tier) {
        case DifficultyTier::Strong: return 1;
        case DifficultyTier::Moderate: return 2;
        case DifficultyTier::Weak: return 3;
    }
    throw InvariantError("invalid difficulty tier");
}

std::string difficulty_name(DifficultyTier tier) {
    switch (tier) {
        case DifficultyTier::Strong: return "strong";
        case DifficultyTier::Moderate: return "moderate";
        case DifficultyTier::Weak: return "weak";
    }
    throw InvariantError("invalid difficulty tier");
}

DifficultyTier parse_difficulty(std::string_view name) {
    if (name == "strong") return DifficultyTier::Strong;
    if (name == "moderate") return DifficultyTier::Moderate;
    if (name == "weak") return DifficultyTier::Weak;
    throw SchemaError("difficulty", "expected strong|moderate|weak, got '" + std::string(name) + "'");
}

namespace {

std::string require_string(const nlohmann::json& record, const char* field) {
    auto it = record.find(field);
    if (it == record.end()) throw SchemaError(field, "missing");
    if (!it->is_string()) throw SchemaError(field, "expected a string");
    return it->get<std::string>();
}

bool forbidden_if_present(const nlohmann::json& record, const char* field) {
    auto it = record.find(field);
    return it != record.end() && !it->is_null();
}

}  // namespace

GroundingSample validate_sample(const nlohmann::json& record) {
    if (!record.is_object()) throw SchemaError("<record>", "expected a JSON object");

    GroundingSample s;
    s.sample_id = require_string(record, "sample_id");
    s.video_id = require_string(record, "video_id");
    s.video_context = require_string(record, "video_context");
    s.query = require_string(record, "query");

    const std::string relevance = require_string(record, "relevance");
    if (relevance == "relevant") {
        s.relevance = Relevance::Relevant;
    } else if (relevance == "irrelevant") {
        s.relevance = Relevance::Irrelevant;
    } else {
        throw SchemaError("relevance", "expected relevant|irrelevant, got '" + relevance + "'");
    }

    if (s.relevance == Relevance::Relevant) {
        auto it = record.find("gt_segment");
        if (it == record.end()) throw SchemaError("gt_segment", "missing for relevant record");
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
            throw SchemaError("gt_segment", "expected [start, end] numbers");
        }
        s.gt_segment = make_segment((*it)[0].get<double>(), (*it)[1].get<double>());

        for (const char* field : {"gt_refusal", "original_query", "gt_categories", "difficulty"}) {
            if (forbidden_if_present(record, field)) {
                throw InvariantError(std::string("relevant record must not carry '") + field + "'");
            }
        }
    } else {
        s.gt_refusal = require_string(record, "gt_refusal");
        s.original_query = require_string(record, "original_query");
        s.difficulty = parse_difficulty(require_string(record, "difficulty"));

        auto it = record.find("gt_categories");
        if (it == record.end()) throw SchemaError("gt_categories", "missing for irrelevant record");
        if (!it->is_array() || it->empty()) throw SchemaError("gt_categories", "expected a non-empty array");
        std::set<RelevanceCategory> seen;
        for (const auto& elem : *it) {
            if (!elem.is_string()) throw SchemaError("gt_categories", "expected category path strings");
            RelevanceCategory cat = parse_category_path(elem.get<std::string>());
            if (!seen.insert(cat).second) {
                throw InvariantError("gt_categories contains duplicate '" + category_path(cat) + "'");
            }
            s.gt_categories.push_back(cat);
        }

        const int expected = modified_element_count(*s.difficulty);
        if (static_cast<int>(s.gt_categories.size()) != expected) {
            throw InvariantError("gt_categories size " + std::to_string(s.gt_categories.size()) +
                                 " does not match difficulty '" + difficulty_name(*s.difficulty) +
                                 "' (expects " + std::to_string(expected) + ")");
        }

        if (forbidden_if_present(record, "gt_segment")) {
            throw InvariantError("irrelevant record must not carry 'gt_segment'");
        }
    }

    return s;
}

nlohmann::json sample_to_json(const GroundingSample& sample) {
    nlohmann::json record;
    record["sample_id"] = sample.sample_id;
    record["video_id"] = sample.video_id;
    record["video_context"] = sample.video_context;
    record["query"] = sample.query;
    record["relevance"] = sample.relevant() ? "relevant" : "irrelevant";
    if (sample.gt_segment) {
        record["gt_segment"] = {sample.gt_segment->start, sample.gt_segment->end};
    }
    if (sample.gt_refusal) record["gt_refusal"] = *sample.gt_refusal;
    if (sample.original_query) record["original_query"] = *sample.original_query;
    if (sample.difficulty) record["difficulty"] = difficulty_name(*sample.difficulty);
    if (!sample.gt_categories.empty()) {
        nlohmann::json cats = nlohmann::json::array();
        for (const auto& c : sample.gt_categories) cats.push_back(category_path(c));
        record["gt_categories"] = cats;
    }
    return record;
}

}  // namespace rarft
