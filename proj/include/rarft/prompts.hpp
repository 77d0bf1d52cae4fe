#pragma once

#include <string>
#include <string_view>

namespace rarft::prompts {

/// System prompts sent to the LLM. These texts define the dataset
/// construction and judging behavior; they are frozen resources whose
/// SHA-256 digests are pinned below and republished in docs/formats.md.
/// Any edit must update the digests deliberately.
const std::string& category_extraction();  // multi-label category classifier
const std::string& negative_generation();  // hard-irrelevant query + refusal generator
const std::string& category_judge();       // categories implied by a refusal answer
const std::string& consistency_score();    // 0-5 reasoning-consistency grader

inline constexpr std::string_view kCategoryExtractionSha256 =
    "18dcf8e5677bd8c47a3931a1911e8081ff9cba96372060156f279f2d4ad15b1d";
inline constexpr std::string_view kNegativeGenerationSha256 =
    "e591cfc518b40d4122f242079886de8f4b358d35233763835f3789db8befa1a3";
inline constexpr std::string_view kCategoryJudgeSha256 =
    "faa48df36d49831d2cb564156e9fbc625ae6c000ce9894e96858c400ca8a5d3f";
inline constexpr std::string_view kConsistencyScoreSha256 =
    "4bb681677490af3f8a57ddfe9057246fd0a9277ed33e02c786c8d78f3d79c13c";

}  // namespace rarft::prompts
