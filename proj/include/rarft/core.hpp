#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rarft {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dataset record violates the JSONL schema (missing/mistyped field).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& field, const std::string& detail = "")
        : Error("schema error on field '" + field + "'" + (detail.empty() ? "" : ": " + detail)),
          field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// A structurally well-formed record violates a domain invariant.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// A category path outside the 11-leaf taxonomy.
class UnknownCategory : public Error {
public:
    explicit UnknownCategory(const std::string& path)
        : Error("unknown category path: '" + path + "'"), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// ---------------------------------------------------------------------------
// Temporal segments
// ---------------------------------------------------------------------------

/// A temporal interval [start, end] in seconds. start <= end, both finite
/// and non-negative. Zero-length segments (start == end) are legal.
struct Segment {
    double start = 0.0;
    double end = 0.0;

    double length() const { return end - start; }
    bool operator==(const Segment&) const = default;
};

/// Validates the Segment invariants, throwing InvariantError on violation.
Segment make_segment(double start, double end);

// ---------------------------------------------------------------------------
// Semantic relevance category taxonomy
// ---------------------------------------------------------------------------

enum class CategoryParent { Action, Object, Scene, Attribute };

enum class CategoryChild {
    ActionSequence,
    FineGrainedAction,
    ObjectExistence,
    ObjectPartRelation,
    ObjectSpatialRelation,
    ObjectMoving,
    SceneExistence,
    SceneTransition,
    AttributeValue,
    Counting,
    Comparison,
};

inline constexpr int kCategoryCount = 11;

/// One leaf of the taxonomy. The canonical string form is "Parent/Child"
/// (case-sensitive) and is bijective with the (parent, child) pair.
struct RelevanceCategory {
    CategoryParent parent;
    CategoryChild child;

    bool operator==(const RelevanceCategory&) const = default;
    auto operator<=>(const RelevanceCategory&) const = default;
};

/// All 11 categories in taxonomy order.
const std::vector<RelevanceCategory>& all_categories();

/// "Parent/Child" canonical form.
std::string category_path(RelevanceCategory c);

/// Block-tag form used in generated reasoning: path lowercased, '/' -> '_'
/// (e.g. "Object/ObjectExistence" -> "object_objectexistence").
std::string category_tag(RelevanceCategory c);

/// Exact, case-sensitive parse of a canonical "Parent/Child" path.
/// Throws UnknownCategory for anything not among the 11.
RelevanceCategory parse_category_path(std::string_view path);

// ---------------------------------------------------------------------------
// Difficulty tiers
// ---------------------------------------------------------------------------

/// Strong/Moderate/Weak hard-irrelevance. The tier is defined by how many
/// semantic elements of the original query were modified: 1, 2 or 3.
enum class DifficultyTier { Strong, Moderate, Weak };

/// 1 for Strong, 2 for Moderate, 3 for Weak.
int modified_element_count(DifficultyTier tier);

/// Lowercase name used in the JSONL schema ("strong"/"moderate"/"weak").
std::string difficulty_name(DifficultyTier tier);

/// Inverse of difficulty_name. Throws SchemaError("difficulty") otherwise.
DifficultyTier parse_difficulty(std::string_view name);

// ---------------------------------------------------------------------------
// Dataset samples and model outputs
// ---------------------------------------------------------------------------

enum class Relevance { Relevant, Irrelevant };

/// One evaluation/training unit.
///
/// Exactly one of the two field groups is populated, matching `relevance`:
///   Relevant   -> gt_segment
///   Irrelevant -> gt_refusal, original_query, gt_categories, difficulty
/// with |gt_categories| equal to the tier's modified element count.
///
/// paired_segment / paired_refusal are in-memory cross-references resolved
/// from sibling records (see resolve_explain_references in the reward
/// engine); they are not part of the serialized schema.
struct GroundingSample {
    std::string sample_id;
    std::string video_id;
    std::string video_context;
    std::string query;
    Relevance relevance = Relevance::Relevant;
    std::optional<DifficultyTier> difficulty;
    std::optional<Segment> gt_segment;
    std::optional<std::string> gt_refusal;
    std::optional<std::string> original_query;
    std::vector<RelevanceCategory> gt_categories;

    std::optional<Segment> paired_segment;
    std::optional<std::string> paired_refusal;

    bool relevant() const { return relevance == Relevance::Relevant; }
};

/// Decodes and validates one JSONL dataset record.
///
/// Required always: sample_id, video_id, video_context, query, relevance.
/// Relevant records additionally require gt_segment: [start, end];
/// irrelevant records require gt_refusal, original_query, gt_categories and
/// difficulty. Missing or mistyped fields raise SchemaError naming the
/// field; violated cross-field rules raise InvariantError. Defaults are
/// never invented.
GroundingSample validate_sample(const nlohmann::json& record);

/// Serializes a sample back to the JSONL record shape (paired_* fields are
/// in-memory only and are not written).
nlohmann::json sample_to_json(const GroundingSample& sample);

/// Parsed model output: the three template sections plus the timestamp
/// segment extracted from the answer, if any. `correct` is absent only for
/// leniently parsed outputs whose <correct> section is missing.
struct StructuredOutput {
    std::string think;
    std::string answer;
    std::optional<std::string> correct;
    std::optional<Segment> segment;
    std::string raw;
};

}  // namespace rarft
