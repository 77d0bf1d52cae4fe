#include <doctest.h>

#include <random>

#include "rarft/core.hpp"
#include "support/test_util.hpp"

using namespace rarft;
using nlohmann::json;

TEST_CASE("category path parsing covers the whole taxonomy") {
    CHECK(all_categories().size() == 11);
    for (const auto& cat : all_categories()) {
        const auto parsed = parse_category_path(category_path(cat));
        CHECK(parsed == cat);
    }
}

TEST_CASE("category path examples") {
    const auto obj = parse_category_path("Object/ObjectExistence");
    CHECK(obj.parent == CategoryParent::Object);
    CHECK(obj.child == CategoryChild::ObjectExistence);

    const auto cnt = parse_category_path("Attribute/Counting");
    CHECK(cnt.parent == CategoryParent::Attribute);
    CHECK(cnt.child == CategoryChild::Counting);

    CHECK_THROWS_AS(parse_category_path("Foo/Bar"), UnknownCategory);
    // case-sensitive exact match
    CHECK_THROWS_AS(parse_category_path("object/objectexistence"), UnknownCategory);
    CHECK_THROWS_AS(parse_category_path("Object/Counting"), UnknownCategory);
}

TEST_CASE("category tags lowercase the path") {
    CHECK(category_tag(parse_category_path("Object/ObjectExistence")) == "object_objectexistence");
    CHECK(category_tag(parse_category_path("Action/ActionSequence")) == "action_actionsequence");
}

TEST_CASE("difficulty tiers map to modified element counts") {
    CHECK(modified_element_count(DifficultyTier::Strong) == 1);
    CHECK(modified_element_count(DifficultyTier::Moderate) == 2);
    CHECK(modified_element_count(DifficultyTier::Weak) == 3);
    CHECK(parse_difficulty("strong") == DifficultyTier::Strong);
    CHECK(parse_difficulty("weak") == DifficultyTier::Weak);
    CHECK_THROWS_AS(parse_difficulty("hard"), SchemaError);
}

TEST_CASE("segments validate their bounds") {
    CHECK(make_segment(4.0, 8.0).length() == 4.0);
    CHECK(make_segment(3.0, 3.0).length() == 0.0);  // zero-length is legal
    CHECK_THROWS_AS(make_segment(5.0, 4.0), InvariantError);
    CHECK_THROWS_AS(make_segment(-1.0, 4.0), InvariantError);
    CHECK_THROWS_AS(make_segment(0.0, std::numeric_limits<double>::infinity()), InvariantError);
}

namespace {

json relevant_record() {
    return json{{"sample_id", "s1"},
                {"video_id", "v1"},
                {"video_context", "a person opens a door"},
                {"query", "the person opens the door"},
                {"relevance", "relevant"},
                {"gt_segment", {4.0, 8.0}}};
}

json irrelevant_record() {
    return json{{"sample_id", "s2"},
                {"video_id", "v1"},
                {"video_context", "a person opens a door"},
                {"query", "the person closes the window"},
                {"relevance", "irrelevant"},
                {"difficulty", "strong"},
                {"gt_refusal", "the video shows a door being opened, not a window"},
                {"original_query", "the person opens the door"},
                {"gt_categories", {"Object/ObjectExistence"}}};
}

}  // namespace

TEST_CASE("validate_sample accepts well-formed records") {
    const auto rel = validate_sample(relevant_record());
    CHECK(rel.relevant());
    CHECK(rel.gt_segment == Segment{4.0, 8.0});
    CHECK(!rel.gt_refusal);

    const auto irr = validate_sample(irrelevant_record());
    CHECK(!irr.relevant());
    CHECK(irr.difficulty == DifficultyTier::Strong);
    CHECK(irr.gt_categories.size() == 1);
}

TEST_CASE("validate_sample reports the offending field") {
    auto record = irrelevant_record();
    record.erase("gt_refusal");
    try {
        validate_sample(record);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.field() == "gt_refusal");
    }
}

TEST_CASE("validate_sample enforces the category cardinality") {
    auto record = irrelevant_record();
    record["gt_categories"] = {"Object/ObjectExistence", "Attribute/Counting"};  // strong wants 1
    CHECK_THROWS_AS(validate_sample(record), InvariantError);

    record["difficulty"] = "moderate";
    CHECK_NOTHROW(validate_sample(record));
}

TEST_CASE("validate_sample rejects cross-populated records") {
    auto relevant = relevant_record();
    relevant["gt_refusal"] = "should not be here";
    CHECK_THROWS_AS(validate_sample(relevant), InvariantError);

    auto irrelevant = irrelevant_record();
    irrelevant["gt_segment"] = {1.0, 2.0};
    CHECK_THROWS_AS(validate_sample(irrelevant), InvariantError);
}

TEST_CASE("validate_sample rejects duplicate categories") {
    auto record = irrelevant_record();
    record["difficulty"] = "moderate";
    record["gt_categories"] = {"Object/ObjectExistence", "Object/ObjectExistence"};
    CHECK_THROWS_AS(validate_sample(record), InvariantError);
}

TEST_CASE("deleting any required field always errors, never defaults") {
    std::mt19937_64 rng(20240811);
    const std::vector<json> bases = {relevant_record(), irrelevant_record()};
    for (const auto& base : bases) {
        std::vector<std::string> keys;
        for (const auto& [key, value] : base.items()) keys.push_back(key);
        for (int iter = 0; iter < 200; ++iter) {
            auto record = base;
            const size_t n_delete = 1 + rng() % keys.size();
            for (size_t d = 0; d < n_delete; ++d) record.erase(keys[rng() % keys.size()]);
            if (record == base) continue;
            CHECK_THROWS_AS(validate_sample(record), Error);
        }
    }
}

TEST_CASE("sample_to_json round-trips through validate_sample") {
    for (const auto& record : {relevant_record(), irrelevant_record()}) {
        const auto sample = validate_sample(record);
        CHECK(sample_to_json(validate_sample(sample_to_json(sample))) == sample_to_json(sample));
    }
}

TEST_CASE("paired references are not serialized") {
    auto sample = testutil::relevant_sample("s", 1.0, 2.0);
    sample.paired_refusal = "in-memory only";
    const auto record = sample_to_json(sample);
    CHECK(!record.contains("paired_refusal"));
    CHECK(!record.contains("paired_segment"));
}
