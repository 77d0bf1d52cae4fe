#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rarft/config.hpp"
#include "rarft/core.hpp"
#include "rarft/dataset_builder.hpp"
#include "rarft/grpo_sim.hpp"
#include "rarft/jsonl.hpp"
#include "rarft/metrics.hpp"
#include "rarft/reward_engine.hpp"

namespace {

using nlohmann::json;
using namespace rarft;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitPartial = 2;

ToolConfig config_from_flag(const std::string& path) {
    return path.empty() ? ToolConfig{} : load_config(path);
}

// Maps dataset sample ids onto their raw outputs, requiring exact coverage.
std::map<std::string, std::string> match_outputs(const std::vector<GroundingSample>& dataset,
                                                 const std::vector<OutputRecord>& outputs) {
    std::map<std::string, std::string> by_id;
    for (const auto& record : outputs) {
        if (!by_id.emplace(record.sample_id, record.output).second) {
            throw DuplicatePrediction(record.sample_id);
        }
    }
    std::vector<std::string> missing;
    for (const auto& sample : dataset) {
        if (!by_id.count(sample.sample_id)) missing.push_back(sample.sample_id);
    }
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) ids += " " + id;
        throw Error("outputs file is missing sample_ids:" + ids);
    }
    return by_id;
}

int cmd_build_dataset(const std::string& input, const std::string& out,
                      const std::string& config_path, bool resume) {
    const ToolConfig config = config_from_flag(config_path);
    check_provider_credentials(config, /*needs_embedder=*/false, /*needs_llm=*/true);

    if (!std::filesystem::exists(input)) {
        std::cerr << "error: input file does not exist: " << input << "\n";
        return kExitFailure;
    }
    const auto corpus = load_dataset(input);

    const std::string checkpoint = out + ".checkpoint";
    if (!resume) std::filesystem::remove(checkpoint);

    auto llm = make_llm(config);
    BuilderOptions options;
    options.max_in_flight = config.concurrency;
    const BuildReport report = build_dataset(corpus, *llm, out, options, checkpoint);

    const json report_json = build_report_to_json(report);
    {
        std::ofstream rep(out + ".report.json");
        rep << report_json.dump(2) << "\n";
    }
    std::cout << "build report: " << report_json.dump() << "\n";
    return report.skips.empty() ? kExitOk : kExitPartial;
}

int cmd_score(const std::string& dataset_path, const std::string& outputs_path,
              const std::string& config_path, const std::string& out_path) {
    const ToolConfig config = config_from_flag(config_path);
    check_provider_credentials(config, /*needs_embedder=*/true, /*needs_llm=*/false);

    auto dataset = load_dataset(dataset_path);
    resolve_explain_references(dataset);
    const auto by_id = match_outputs(dataset, load_outputs(outputs_path));

    auto embedder = make_embedder(config);
    const RewardOptions reward_options{config.strict_format_gating};

    struct Accumulator {
        size_t n = 0;
        RewardBreakdown sum;
        void add(const RewardBreakdown& b) {
            ++n;
            sum.format += b.format;
            sum.refuse_iou += b.refuse_iou;
            sum.explain += b.explain;
            sum.correction += b.correction;
            sum.total += b.total;
        }
        json mean() const {
            const double d = n ? static_cast<double>(n) : 1.0;
            return json{{"n", n},
                        {"format", sum.format / d},
                        {"refuse_iou", sum.refuse_iou / d},
                        {"explain", sum.explain / d},
                        {"correction", sum.correction / d},
                        {"total", sum.total / d}};
        }
    };
    Accumulator overall, relevant, irrelevant;

    std::vector<json> lines;
    lines.reserve(dataset.size());
    for (const auto& sample : dataset) {
        const RewardBreakdown b =
            total_reward(sample, by_id.at(sample.sample_id), *embedder, reward_options);
        lines.push_back(json{{"sample_id", sample.sample_id},
                             {"format", b.format},
                             {"refuse_iou", b.refuse_iou},
                             {"explain", b.explain},
                             {"correction", b.correction},
                             {"total", b.total}});
        overall.add(b);
        (sample.relevant() ? relevant : irrelevant).add(b);
    }
    if (!out_path.empty()) write_jsonl(out_path, lines);

    const json summary = {{"overall", overall.mean()},
                          {"relevant", relevant.mean()},
                          {"irrelevant", irrelevant.mean()}};
    std::cout << "reward summary: " << summary.dump() << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& dataset_path, const std::string& outputs_path,
                 const std::string& config_path, const std::string& out_path,
                 const std::string& csv_path, const std::string& judge) {
    const bool judge_enabled = judge == "on";
    const ToolConfig config = config_from_flag(config_path);
    check_provider_credentials(config, /*needs_embedder=*/judge_enabled,
                               /*needs_llm=*/judge_enabled);

    const auto dataset = load_dataset(dataset_path);
    const auto outputs = load_outputs(outputs_path);
    if (outputs.empty()) {
        std::cerr << "error: outputs file is empty: " << outputs_path << "\n";
        return kExitFailure;
    }
    const auto by_id = match_outputs(dataset, outputs);

    std::vector<PredictionRecord> predictions;
    predictions.reserve(outputs.size());
    for (const auto& record : outputs) {
        predictions.push_back(make_prediction(record.sample_id, record.output));
    }

    std::unique_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<LlmClient> llm;
    EvalOptions options;
    options.judge_enabled = judge_enabled;
    if (judge_enabled) {
        embedder = make_embedder(config);
        llm = make_llm(config);
    }

    const EvalReport report =
        aggregate_report(dataset, predictions, embedder.get(), llm.get(), options);
    const json report_json = report_to_json(report);

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw Error("cannot open output file: " + out_path);
        out << report_json.dump(2) << "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::trunc);
        if (!csv) throw Error("cannot open output file: " + csv_path);
        csv << report_to_csv(report);
    }
    std::cout << "eval report: " << report_json.dump() << "\n";
    return kExitOk;
}

int cmd_simulate_grpo(const std::string& scenario_path, const std::string& config_path,
                      const std::string& trace_path, SimConfig sim) {
    const ToolConfig config = config_from_flag(config_path);
    check_provider_credentials(config, /*needs_embedder=*/true, /*needs_llm=*/false);

    std::ifstream in(scenario_path);
    if (!in) {
        std::cerr << "error: cannot open scenario file: " << scenario_path << "\n";
        return kExitFailure;
    }
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        std::cerr << "error: scenario file is not valid JSON: " << scenario_path << "\n";
        return kExitFailure;
    }

    ScenarioSpec scenario;
    try {
        scenario = scenario_from_json(doc);
    } catch (const Error& e) {
        std::cerr << "error: invalid scenario: " << e.what() << "\n";
        return kExitFailure;
    }

    auto embedder = make_embedder(config);
    const RewardOptions reward_options{config.strict_format_gating};
    const SimulationTrace trace = run_simulation(sim, scenario, *embedder, reward_options);

    if (!trace_path.empty()) {
        std::vector<json> lines;
        lines.reserve(trace.steps.size());
        for (const auto& step : trace.steps) {
            lines.push_back(json{{"step", step.step},
                                 {"mean_reward", step.mean_reward},
                                 {"kl", step.kl},
                                 {"policy_probs", step.policy_probs}});
        }
        write_jsonl(trace_path, lines);
    }

    const auto probs = trace.final_policy.probabilities();
    json distribution = json::array();
    for (size_t i = 0; i < probs.size(); ++i) {
        distribution.push_back(json{{"candidate", trace.alphabet[i]},
                                    {"reward", trace.candidate_rewards[i]},
                                    {"probability", probs[i]}});
    }
    std::cout << "final policy: " << distribution.dump() << "\n";
    std::cout << "converged=" << (trace.converged_to_max ? "true" : "false");
    if (!trace.unique_max_reward) std::cout << " (no learning signal: no unique best candidate)";
    std::cout << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Refusal-aware reward engineering and evaluation toolkit for VTG"};
    app.require_subcommand(1);

    std::string input, out, config_path, dataset_path, outputs_path, csv_path, scenario_path,
        trace_path;
    std::string judge = "off";
    bool resume = false;
    SimConfig sim;
    sim.seed = 7;

    auto* build = app.add_subcommand("build-dataset", "Construct hard-irrelevant records");
    build->add_option("--input", input, "Relevant-sample JSONL corpus")->required();
    build->add_option("--out", out, "Output dataset JSONL path")->required();
    build->add_option("--config", config_path, "Config JSON path");
    build->add_flag("--resume", resume, "Resume from the checkpoint file");

    auto* score = app.add_subcommand("score", "Compute reward breakdowns for model outputs");
    score->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
    score->add_option("--outputs", outputs_path, "Model outputs JSONL")->required();
    score->add_option("--config", config_path, "Config JSON path");
    score->add_option("--out", out, "Per-sample breakdown JSONL path");

    auto* evaluate = app.add_subcommand("evaluate", "Compute relevance-aware metrics");
    evaluate->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
    evaluate->add_option("--outputs", outputs_path, "Model outputs JSONL")->required();
    evaluate->add_option("--config", config_path, "Config JSON path");
    evaluate->add_option("--out", out, "Report JSON path");
    evaluate->add_option("--csv", csv_path, "Optional CSV export path");
    evaluate->add_option("--judge", judge, "on|off: enable judge-backed metrics")
        ->check(CLI::IsMember({"on", "off"}));

    auto* simulate = app.add_subcommand("simulate-grpo", "Run the desk-scale GRPO simulation");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON path")->required();
    simulate->add_option("--config", config_path, "Config JSON path");
    simulate->add_option("--trace-out", trace_path, "Trace JSONL path");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--steps", sim.steps, "Number of optimization steps");
    simulate->add_option("--beta", sim.beta, "KL regularization strength");
    simulate->add_option("--lr", sim.learning_rate, "Learning rate");
    simulate->add_option("--group-size", sim.group_size, "Sampled responses per step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) return cmd_build_dataset(input, out, config_path, resume);
        if (score->parsed()) return cmd_score(dataset_path, outputs_path, config_path, out);
        if (evaluate->parsed()) {
            return cmd_evaluate(dataset_path, outputs_path, config_path, out, csv_path, judge);
        }
        if (simulate->parsed()) {
            return cmd_simulate_grpo(scenario_path, config_path, trace_path, sim);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
