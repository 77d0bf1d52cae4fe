#include "rarft/prompts.hpp"

namespace rarft::prompts {

namespace {

constexpr std::string_view kTaxonomyBlock =
    R"(## Category taxonomy (Parent / Child)

### Action
- Action/ActionSequence — Change the temporal ordering of actions.
- Action/FineGrainedAction — Replace an action verb with a visually similar but directionally or temporally distinct one.

### Object
- Object/ObjectExistence — Add or remove an identifiable object.
- Object/ObjectPartRelation — Modify part–whole relations or accessory relations.
- Object/ObjectSpatialRelation — Change relative spatial positions of objects.
- Object/ObjectMoving — Change the motion direction or trajectory of an object.

### Scene
- Scene/SceneExistence — Replace the type of scene.
- Scene/SceneTransition — Change scene order, transition direction, or timing.

### Attribute
- Attribute/AttributeValue — Change intrinsic properties such as color, size, material, shape, or state.
- Attribute/Counting — Change the number of objects or actions.
- Attribute/Comparison — Flip comparative relations such as size or speed.)";

constexpr std::string_view kCategoryExtractionHead =
    R"(You are a multi-label classifier for building Video Temporal Grounding (VTG) datasets.

## Task introduction
- The input "related_query" is a valid VTG query.
- Do NOT rewrite the query.
- Identify category paths that can modify the query into a plausible but video-irrelevant (negative) query.
- Select all applicable category paths and briefly justify why each can produce an irrelevant query.

)";

constexpr std::string_view kCategoryExtractionTail =
    R"(

## Output requirements
- Output ONLY the JSON below.
- Use exact "Parent/Child" names.
- Return all applicable, distinct categories, sorted by diagnostic strength.
- Output at least 3 categories whenever possible.

[OUTPUT JSON]
{
  "eligible_categories": [
    {"path": "Parent/Child", "reason": "<justification>"},
    {"path": "Parent/Child", "reason": "<justification>"}
  ]
})";

constexpr std::string_view kNegativeGenerationHead =
    R"(You generate hard negative (irrelevant) queries for Video Temporal Grounding (VTG).

## Purpose
- Create irrelevant (negative) queries from valid related queries.
- For each negative query, generate structured reasoning that a Video-LLM could output.

## Task
- Input: related_query, reference timestamp, optional video_context, and category-based plans.
- For each plan:
  1. Edit the related_query ONLY along its categories to produce one irrelevant query.
  2. Generate reasoning using the REQUIRED block format:
    <irrelevant_answer>...</irrelevant_answer> <category1>...</category1> <category2>...</category2> ...

- <irrelevant_answer> block:
  * Must state misalignment between the query and the video.
  * Strength depends on difficulty (high/medium/easy).

- <category> blocks:
  * One block per applied category (tag = path lowercased with slashes as underscores).
  * Briefly explain why the irrelevant query does not match the video for that category.

- Difficulty levels:
  - 1 category → strong
  - 2 categories → moderated
  - 3 categories → weak

)";

constexpr std::string_view kNegativeGenerationTail =
    R"(

## Input format
- related_query: "<string>"
- related_query_timestamp: "<start>-<end> second"
- plans: list of 1–3 items, each with difficulty and applied_categories.
- video_context:
  * A textual description of the video, provided as a string OR a JSON array of strings.
  * Each entry may include an associated time range and a natural-language description of what appears in the video.

## Output format (JSON only)
The model must output a single JSON object.
Each difficulty present in the input plans must appear once under "negs".
All fields must be included exactly as shown.

{
  "negs": {
    "<difficulty>": {
      "irrel_query": "<generated negative query>",
      "applied_categories": [
        {"path": "Parent/Child"}, ...
      ],
      "reasoning":
        "<irrelevant_answer> ... </irrelevant_answer>"
        "<parent_child> ... </parent_child>" ... ,
      "difficulty_tag": "<difficulty>"
    }
  }
})";

constexpr std::string_view kCategoryJudgeHead =
    R"(You are a strict multi-label classifier.
Identify which reasoning categories from the video–text mismatch categories below are used or implied in a Generated Response that explains why a query is irrelevant to a video.
Select all applicable categories according to the meaning expressed in the response.

## Video–Text Mismatch Categories
)";

constexpr std::string_view kCategoryJudgeTail =
    R"(

## Rules
1. Include a category only if it is clearly supported or implied by the reasoning.
2. Multiple categories may apply, but avoid redundant or speculative labels.
3. Use only the exact category paths listed above.
4. Ignore style, tone, or fluency — focus purely on reasoning content.
5. If none apply, return an empty list.

## Output Format
Return only a JSON array of strings containing the selected categories.
Examples:
["Object/ObjectExistence", "Attribute/Counting"]
If none apply: [])";

constexpr std::string_view kConsistencyScoreText =
    R"(You are a evaluator designed to assess the reasoning consistency between a Generated Response and a Ground Truth (GT) Response.

## TASK:
Your job is to evaluate how faithfully the Generated Response reproduces the reasoning in the GT Response.

## INSTRUCTIONS:

### Reasoning Consistency Evaluation:
- Evaluate how faithfully the Generated Response reproduces the reasoning and justification in the GT Response.
- A consistent response must keep the GT's mismatch points, evidence, and contextual explanations. It must not distort their meaning.
- Omissions or contradictions of GT reasoning elements must be penalized.
- Extra explanations are allowed if they are logically consistent with the GT.
- The reasoning must remain factually and logically compatible with the GT Response.
- Do not consider fluency, tone, or paraphrasing style. Focus only on semantic and factual consistency.

### Scoring Scale (0–5):
Assign a score between 0 and 5, allowing decimal values, based on how well the reasoning aligns with the ground-truth reasoning.

### Evaluation Mindset:
- You MUST prioritize factual and logical alignment over stylistic similarity.
- Do NOT penalize harmless elaborations.
- You MUST penalize any omission or contradiction of GT reasoning.
- You MUST NOT assign a score above 4.9 unless reasoning is perfectly consistent.

## OUTPUT:
Return ONLY a Python dictionary literal. No explanations.

Examples:
{'score': 4.0}
{'score': 1.5}
{'score': 3.7})";

std::string concat(std::string_view head, std::string_view mid, std::string_view tail) {
    std::string out;
    out.reserve(head.size() + mid.size() + tail.size());
    out.append(head).append(mid).append(tail);
    return out;
}

}  // namespace

const std::string& category_extraction() {
    static const std::string text =
        concat(kCategoryExtractionHead, kTaxonomyBlock, kCategoryExtractionTail);
    return text;
}

const std::string& negative_generation() {
    static const std::string text =
        concat(kNegativeGenerationHead, kTaxonomyBlock, kNegativeGenerationTail);
    return text;
}

const std::string& category_judge() {
    static const std::string text = concat(kCategoryJudgeHead, kTaxonomyBlock, kCategoryJudgeTail);
    return text;
}

const std::string& consistency_score() {
    static const std::string text(kConsistencyScoreText);
    return text;
}

}  // namespace rarft::prompts
