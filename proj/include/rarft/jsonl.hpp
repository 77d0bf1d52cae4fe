#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rarft/core.hpp"

namespace rarft {

/// Parses one JSON document per non-empty line; errors carry the 1-based
/// line number. Throws Error when the file cannot be opened.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& lines);

/// Reads and validates a dataset file (one record per line).
std::vector<GroundingSample> load_dataset(const std::string& path);

/// One line of a model-outputs file: {"sample_id": ..., "output": raw text}.
struct OutputRecord {
    std::string sample_id;
    std::string output;
};

std::vector<OutputRecord> load_outputs(const std::string& path);

}  // namespace rarft
