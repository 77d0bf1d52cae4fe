#include "rarft/grpo_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rarft {

std::vector<double> normalize_advantages(std::span<const double> rewards) {
    const size_t n = rewards.size();
    if (n < 2) throw GroupTooSmall(n);

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(n);

    double variance = 0.0;
    for (double r : rewards) variance += (r - mean) * (r - mean);
    variance /= static_cast<double>(n);

    if (variance < 1e-12) return std::vector<double>(n, 0.0);

    const double std_dev = std::sqrt(variance);
    std::vector<double> advantages(n);
    for (size_t i = 0; i < n; ++i) advantages[i] = (rewards[i] - mean) / std_dev;
    return advantages;
}

ToyPolicy ToyPolicy::uniform(std::vector<std::string> alphabet) {
    ToyPolicy p;
    p.logits.assign(alphabet.size(), 0.0);
    p.alphabet = std::move(alphabet);
    return p;
}

std::vector<double> ToyPolicy::probabilities() const {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

size_t ToyPolicy::index_of(const std::string& response) const {
    const auto it = std::find(alphabet.begin(), alphabet.end(), response);
    if (it == alphabet.end()) throw UnknownResponse(response);
    return static_cast<size_t>(it - alphabet.begin());
}

namespace {

void check_group(const ResponseGroup& group) {
    if (group.responses.size() < 2) throw GroupTooSmall(group.responses.size());
    if (group.advantages.size() != group.responses.size()) {
        throw InvariantError("response group advantages are not populated");
    }
}

}  // namespace

double surrogate_value(const ToyPolicy& policy, const ToyPolicy& old_policy,
                       const ResponseGroup& group) {
    check_group(group);
    if (policy.alphabet != old_policy.alphabet) throw AlphabetMismatch();
    const auto p = policy.probabilities();
    const auto q = old_policy.probabilities();
    double value = 0.0;
    for (size_t i = 0; i < group.responses.size(); ++i) {
        const size_t idx = policy.index_of(group.responses[i]);
        value += p[idx] / q[idx] * group.advantages[i];
    }
    return value;
}

double kl_divergence(const ToyPolicy& policy, const ToyPolicy& reference) {
    if (policy.alphabet != reference.alphabet) throw AlphabetMismatch();
    const auto p = policy.probabilities();
    const auto r = reference.probabilities();
    double kl = 0.0;
    for (size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / r[i]);
    return kl;
}

double objective(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& reference,
                 const ResponseGroup& group, double beta) {
    return surrogate_value(policy, old_policy, group) - beta * kl_divergence(policy, reference);
}

std::vector<double> objective_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                       const ToyPolicy& reference, const ResponseGroup& group,
                                       double beta) {
    check_group(group);
    if (policy.alphabet != old_policy.alphabet || policy.alphabet != reference.alphabet) {
        throw AlphabetMismatch();
    }
    const auto p = policy.probabilities();
    const auto q = old_policy.probabilities();
    const auto r = reference.probabilities();
    const size_t n = p.size();

    // d/dlogit_k sum_i (p[a_i]/q[a_i]) A_i  with  dp_x/dlogit_k = p_x(d_xk - p_k)
    std::vector<double> grad(n, 0.0);
    double weight_sum = 0.0;
    for (size_t i = 0; i < group.responses.size(); ++i) {
        const size_t idx = policy.index_of(group.responses[i]);
        const double w = group.advantages[i] * p[idx] / q[idx];
        grad[idx] += w;
        weight_sum += w;
    }
    for (size_t k = 0; k < n; ++k) grad[k] -= p[k] * weight_sum;

    if (beta != 0.0) {
        double kl = 0.0;
        for (size_t i = 0; i < n; ++i) kl += p[i] * std::log(p[i] / r[i]);
        // dKL/dlogit_k = p_k (ln(p_k/r_k) - KL)
        for (size_t k = 0; k < n; ++k) {
            grad[k] -= beta * p[k] * (std::log(p[k] / r[k]) - kl);
        }
    }
    return grad;
}

ToyPolicy gradient_step(const ToyPolicy& policy, const ToyPolicy& old_policy,
                        const ToyPolicy& reference, const ResponseGroup& group,
                        const SimConfig& config) {
    const auto grad = objective_gradient(policy, old_policy, reference, group, config.beta);
    ToyPolicy next = policy;
    for (size_t k = 0; k < next.logits.size(); ++k) {
        next.logits[k] += config.learning_rate * grad[k];
    }
    return next;
}

ScenarioSpec scenario_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("<scenario>", "expected a JSON object");
    ScenarioSpec spec;
    spec.name = doc.value("name", "unnamed");
    if (!doc.contains("sample")) throw SchemaError("sample", "missing");
    spec.sample = validate_sample(doc["sample"]);

    if (doc.contains("paired_segment")) {
        const auto& seg = doc["paired_segment"];
        if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number() || !seg[1].is_number()) {
            throw SchemaError("paired_segment", "expected [start, end] numbers");
        }
        spec.sample.paired_segment = make_segment(seg[0].get<double>(), seg[1].get<double>());
    }
    if (doc.contains("paired_refusal")) {
        if (!doc["paired_refusal"].is_string()) throw SchemaError("paired_refusal", "expected a string");
        spec.sample.paired_refusal = doc["paired_refusal"].get<std::string>();
    }

    if (!doc.contains("candidates") || !doc["candidates"].is_array()) {
        throw SchemaError("candidates", "missing or not an array");
    }
    for (const auto& c : doc["candidates"]) {
        if (!c.is_string()) throw SchemaError("candidates", "expected raw output strings");
        spec.candidates.push_back(c.get<std::string>());
    }
    if (spec.candidates.size() < 4 || spec.candidates.size() > 16) {
        throw InvariantError("scenario needs 4 to 16 candidates, got " +
                             std::to_string(spec.candidates.size()));
    }
    return spec;
}

namespace {

void check_config(const SimConfig& config) {
    if (config.group_size < 2) throw InvariantError("group_size must be at least 2");
    if (config.beta < 0.0) throw InvariantError("beta must be non-negative");
    if (config.learning_rate <= 0.0) throw InvariantError("learning_rate must be positive");
    if (config.steps < 1) throw InvariantError("steps must be positive");
}

// Uniform double in [0, 1) from the top 53 bits; pinned so traces are
// reproducible across standard library implementations.
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

size_t sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
    const double u = next_uniform(rng);
    double cumulative = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) return i;
    }
    return probs.size() - 1;
}

}  // namespace

SimulationTrace run_simulation(const SimConfig& config, const ScenarioSpec& scenario,
                               EmbeddingProvider& embedder, const RewardOptions& options) {
    check_config(config);

    SimulationTrace trace;
    trace.alphabet = scenario.candidates;
    trace.candidate_rewards.reserve(scenario.candidates.size());
    for (const auto& candidate : scenario.candidates) {
        trace.candidate_rewards.push_back(
            total_reward(scenario.sample, candidate, embedder, options).total);
    }

    ToyPolicy policy = ToyPolicy::uniform(scenario.candidates);
    const ToyPolicy reference = policy;
    std::mt19937_64 rng(config.seed);

    trace.steps.reserve(static_cast<size_t>(config.steps));
    for (int step = 0; step < config.steps; ++step) {
        const ToyPolicy old_policy = policy;
        const auto old_probs = old_policy.probabilities();

        ResponseGroup group;
        group.responses.reserve(static_cast<size_t>(config.group_size));
        group.rewards.reserve(static_cast<size_t>(config.group_size));
        for (int g = 0; g < config.group_size; ++g) {
            const size_t idx = sample_index(old_probs, rng);
            group.responses.push_back(scenario.candidates[idx]);
            group.rewards.push_back(trace.candidate_rewards[idx]);
        }
        group.advantages = normalize_advantages(group.rewards);

        policy = gradient_step(policy, old_policy, reference, group, config);

        SimStepRecord record;
        record.step = step;
        double sum = 0.0;
        for (double r : group.rewards) sum += r;
        record.mean_reward = sum / static_cast<double>(config.group_size);
        record.kl = kl_divergence(policy, reference);
        record.policy_probs = policy.probabilities();
        trace.steps.push_back(std::move(record));
    }

    trace.final_policy = policy;

    const auto rewards = trace.candidate_rewards;
    const size_t reward_argmax = static_cast<size_t>(
        std::max_element(rewards.begin(), rewards.end()) - rewards.begin());
    trace.unique_max_reward =
        std::count(rewards.begin(), rewards.end(), rewards[reward_argmax]) == 1;

    const auto final_probs = policy.probabilities();
    const size_t policy_argmax = static_cast<size_t>(
        std::max_element(final_probs.begin(), final_probs.end()) - final_probs.begin());
    trace.converged_to_max = trace.unique_max_reward && policy_argmax == reward_argmax;
    return trace;
}

}  // namespace rarft
