#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rarft/core.hpp"
#include "rarft/providers.hpp"
#include "rarft/reward_engine.hpp"

namespace rarft {

class GroupTooSmall : public Error {
public:
    explicit GroupTooSmall(size_t n)
        : Error("reward group needs at least 2 entries, got " + std::to_string(n)) {}
};

class UnknownResponse : public Error {
public:
    explicit UnknownResponse(const std::string& response)
        : Error("response is not in the candidate alphabet: '" + response + "'") {}
};

class AlphabetMismatch : public Error {
public:
    AlphabetMismatch() : Error("policies are defined over different alphabets") {}
};

/// Group-normalized advantages: (r_i - mean) / population std. Groups whose
/// reward variance is below 1e-12 carry no learning signal and yield all
/// zeros.
std::vector<double> normalize_advantages(std::span<const double> rewards);

/// Softmax policy over a fixed finite alphabet of candidate raw outputs.
struct ToyPolicy {
    std::vector<std::string> alphabet;
    std::vector<double> logits;

    static ToyPolicy uniform(std::vector<std::string> alphabet);

    /// softmax(logits): strictly positive, sums to 1.
    std::vector<double> probabilities() const;

    /// Index of a response within the alphabet; throws UnknownResponse.
    size_t index_of(const std::string& response) const;
};

/// One sampled group of responses with their rewards and (once populated)
/// normalized advantages.
struct ResponseGroup {
    std::vector<std::string> responses;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// sum_i (pi(o_i) / pi_old(o_i)) * advantage_i, with no ratio clipping.
double surrogate_value(const ToyPolicy& policy, const ToyPolicy& old_policy,
                       const ResponseGroup& group);

/// Forward KL over the shared alphabet: sum_x pi(x) ln(pi(x)/ref(x)).
double kl_divergence(const ToyPolicy& policy, const ToyPolicy& reference);

/// surrogate_value - beta * kl_divergence.
double objective(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& reference,
                 const ResponseGroup& group, double beta);

/// Exact gradient of the objective with respect to the policy logits
/// (softmax Jacobian applied in closed form).
std::vector<double> objective_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                       const ToyPolicy& reference, const ResponseGroup& group,
                                       double beta);

struct SimConfig {
    int group_size = 8;         // G >= 2
    double beta = 0.01;         // >= 0
    double learning_rate = 0.1; // > 0
    int steps = 500;            // >= 1
    uint64_t seed = 0;
};

/// One ascent step on the logits.
ToyPolicy gradient_step(const ToyPolicy& policy, const ToyPolicy& old_policy,
                        const ToyPolicy& reference, const ResponseGroup& group,
                        const SimConfig& config);

/// A desk-scale optimization scenario: one sample plus a small alphabet of
/// candidate raw outputs whose rewards the policy will learn to rank.
struct ScenarioSpec {
    std::string name;
    GroundingSample sample;
    std::vector<std::string> candidates;  // 4 to 16 entries
};

/// Declarative scenario format: {"name"?, "sample": <dataset record>,
/// "paired_segment"?: [s, e], "paired_refusal"?: "...", "candidates": [...]}.
ScenarioSpec scenario_from_json(const nlohmann::json& doc);

struct SimStepRecord {
    int step = 0;
    double mean_reward = 0.0;    // sampled group mean, pre-update
    double kl = 0.0;             // KL(policy || reference) after the update
    std::vector<double> policy_probs;
};

struct SimulationTrace {
    std::vector<std::string> alphabet;
    std::vector<double> candidate_rewards;
    std::vector<SimStepRecord> steps;
    ToyPolicy final_policy;
    bool unique_max_reward = false;
    bool converged_to_max = false;  // unique max exists and is the final argmax
};

/// Scores every candidate once with total_reward, then iterates: snapshot the
/// policy, sample G responses from the snapshot (seeded, reproducible),
/// normalize the group rewards, and take one gradient step. Deterministic
/// given the seed.
SimulationTrace run_simulation(const SimConfig& config, const ScenarioSpec& scenario,
                               EmbeddingProvider& embedder, const RewardOptions& options = {});

}  // namespace rarft
