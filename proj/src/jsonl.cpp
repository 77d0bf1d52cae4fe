#include "rarft/jsonl.hpp"

#include <fstream>

#include "rarft/strings.hpp"

namespace rarft {

using nlohmann::json;

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    std::vector<json> docs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (whitespace_only(line)) continue;
        json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded()) {
            throw Error(path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open output file: " + path);
    for (const auto& line : lines) out << line.dump() << "\n";
}

std::vector<GroundingSample> load_dataset(const std::string& path) {
    std::vector<GroundingSample> samples;
    size_t line_no = 0;
    for (const auto& doc : read_jsonl(path)) {
        ++line_no;
        try {
            samples.push_back(validate_sample(doc));
        } catch (const Error& e) {
            throw Error(path + " record " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return samples;
}

std::vector<OutputRecord> load_outputs(const std::string& path) {
    std::vector<OutputRecord> records;
    size_t line_no = 0;
    for (const auto& doc : read_jsonl(path)) {
        ++line_no;
        if (!doc.is_object() || !doc.contains("sample_id") || !doc["sample_id"].is_string() ||
            !doc.contains("output") || !doc["output"].is_string()) {
            throw Error(path + " record " + std::to_string(line_no) +
                        ": expected {\"sample_id\": ..., \"output\": ...}");
        }
        records.push_back({doc["sample_id"].get<std::string>(), doc["output"].get<std::string>()});
    }
    return records;
}

}  // namespace rarft
