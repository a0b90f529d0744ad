#include "fedtier/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fedtier {

namespace {

const std::map<std::string, std::vector<double>>& five_tier_presets() {
    static const std::map<std::string, std::vector<double>> presets = {
        {"slow", {0.0, 0.0, 0.0, 0.0, 1.0}},
        {"random", {0.7, 0.1, 0.1, 0.05, 0.05}},
        {"fast", {1.0, 0.0, 0.0, 0.0, 0.0}},
        {"fast1", {0.225, 0.225, 0.225, 0.225, 0.1}},
        {"fast2", {0.2375, 0.2375, 0.2375, 0.2375, 0.05}},
        {"fast3", {0.25, 0.25, 0.25, 0.25, 0.0}},
    };
    return presets;
}

std::vector<int> sample_from(const std::vector<int>& members, int c_count, Rng& rng) {
    const std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(members.size()), c_count);
    std::vector<int> clients;
    clients.reserve(picks.size());
    for (int p : picks) {
        clients.push_back(members[static_cast<std::size_t>(p)]);
    }
    std::sort(clients.begin(), clients.end());
    return clients;
}

}  // namespace

StaticPolicy static_policy_preset(const std::string& name, int m) {
    if (name == "uniform") {
        return StaticPolicy{name, std::vector<double>(static_cast<std::size_t>(m),
                                                      1.0 / static_cast<double>(m))};
    }
    const auto& presets = five_tier_presets();
    const auto it = presets.find(name);
    if (it == presets.end()) {
        throw std::invalid_argument("unknown policy preset '" + name + "'");
    }
    if (m != 5) {
        throw std::invalid_argument("policy preset '" + name + "' is defined for 5 tiers");
    }
    return StaticPolicy{name, it->second};
}

bool is_static_preset(const std::string& name) {
    return name == "uniform" || five_tier_presets().count(name) > 0;
}

std::vector<std::string> static_preset_names() {
    std::vector<std::string> names = {"uniform"};
    for (const auto& [name, probs] : five_tier_presets()) {
        names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

void validate_static_policy(const StaticPolicy& policy, const TierTable& table,
                            int c_count) {
    if (static_cast<int>(policy.tier_probs.size()) != table.m) {
        throw std::invalid_argument("policy '" + policy.name +
                                    "': probability vector length must equal tier count");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < policy.tier_probs.size(); ++t) {
        const double p = policy.tier_probs[t];
        if (p < 0.0 || !std::isfinite(p)) {
            throw std::invalid_argument("policy '" + policy.name +
                                        "': probabilities must be non-negative");
        }
        if (p > 0.0 && static_cast<int>(table.members[t].size()) < c_count) {
            throw std::invalid_argument("policy '" + policy.name + "': tier " +
                                        std::to_string(t + 1) + " has fewer than " +
                                        std::to_string(c_count) + " clients");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("policy '" + policy.name + "': probabilities must sum to 1");
    }
}

Selection select_vanilla(std::span<const int> pool, int c_count, Rng& rng) {
    if (c_count < 1 || static_cast<int>(pool.size()) < c_count) {
        throw std::invalid_argument("select_vanilla: pool smaller than clients per round");
    }
    const std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(pool.size()), c_count);
    std::vector<int> clients;
    clients.reserve(picks.size());
    for (int p : picks) {
        clients.push_back(pool[static_cast<std::size_t>(p)]);
    }
    std::sort(clients.begin(), clients.end());
    return Selection{std::nullopt, std::move(clients)};
}

Selection select_static(const TierTable& table, const StaticPolicy& policy,
                        int c_count, Rng& rng) {
    validate_static_policy(policy, table, c_count);
    const int tier = rng.discrete(policy.tier_probs);
    return Selection{tier, sample_from(table.members[static_cast<std::size_t>(tier)],
                                       c_count, rng)};
}

std::vector<double> change_probs(std::span<const double> tier_accuracies) {
    std::vector<double> probs(tier_accuracies.size());
    double denom = 0.0;
    for (std::size_t t = 0; t < tier_accuracies.size(); ++t) {
        const double a = std::clamp(tier_accuracies[t], 0.0, 1.0);
        probs[t] = 1.0 - a;
        denom += probs[t];
    }
    if (denom <= 0.0) {
        // every tier is at accuracy 1
        std::fill(probs.begin(), probs.end(),
                  1.0 / static_cast<double>(tier_accuracies.size()));
        return probs;
    }
    for (double& p : probs) {
        p /= denom;
    }
    return probs;
}

AdaptiveState make_adaptive_state(int m, int rounds, double credit_gamma, int interval,
                                  std::span<const double> initial_tier_acc) {
    if (m < 1 || rounds < 1 || interval < 1 || !(credit_gamma > 0.0)) {
        throw std::invalid_argument("make_adaptive_state: invalid configuration");
    }
    if (static_cast<int>(initial_tier_acc.size()) != m) {
        throw std::invalid_argument("make_adaptive_state: accuracy vector length mismatch");
    }
    AdaptiveState state;
    state.initial_credit = static_cast<long long>(
        std::ceil(credit_gamma * static_cast<double>(rounds) / static_cast<double>(m)));
    state.credits.assign(static_cast<std::size_t>(m), state.initial_credit);
    state.probs.assign(static_cast<std::size_t>(m), 1.0 / static_cast<double>(m));
    state.interval = interval;
    state.last_eval_acc.assign(initial_tier_acc.begin(), initial_tier_acc.end());
    state.current_tier = 0;
    return state;
}

AdaptiveOutcome adaptive_step(AdaptiveState& state, int round_index,
                              std::span<const double> tier_accuracies,
                              const TierTable& table, int c_count,
                              ExhaustionPolicy exhaustion, Rng& rng) {
    if (static_cast<int>(tier_accuracies.size()) != table.m ||
        static_cast<int>(state.probs.size()) != table.m) {
        throw std::invalid_argument("adaptive_step: tier count mismatch");
    }
    AdaptiveOutcome outcome;

    if (state.interval > 0 && round_index >= state.interval &&
        round_index % state.interval == 0) {
        const auto cur = static_cast<std::size_t>(state.current_tier);
        if (tier_accuracies[cur] <= state.last_eval_acc[cur]) {
            state.probs = change_probs(tier_accuracies);
            outcome.probs_updated = true;
        }
        state.last_eval_acc.assign(tier_accuracies.begin(), tier_accuracies.end());
    }

    bool any_credit = std::any_of(state.credits.begin(), state.credits.end(),
                                  [](long long c) { return c > 0; });
    if (!any_credit) {
        if (exhaustion == ExhaustionPolicy::VanillaFallback) {
            std::vector<int> pool;
            for (const auto& members : table.members) {
                pool.insert(pool.end(), members.begin(), members.end());
            }
            std::sort(pool.begin(), pool.end());
            outcome.vanilla_fallback = true;
            outcome.selection = select_vanilla(pool, c_count, rng);
            return outcome;
        }
        std::fill(state.credits.begin(), state.credits.end(), state.initial_credit);
        outcome.credits_reset = true;
    }

    std::vector<double> gated(state.probs.size(), 0.0);
    double mass = 0.0;
    for (std::size_t t = 0; t < gated.size(); ++t) {
        if (state.credits[t] > 0) {
            gated[t] = state.probs[t];
            mass += gated[t];
        }
    }
    if (mass <= 0.0) {
        // probability mass sits entirely on exhausted tiers; fall back to a
        // uniform draw over the tiers that still have credits
        for (std::size_t t = 0; t < gated.size(); ++t) {
            gated[t] = state.credits[t] > 0 ? 1.0 : 0.0;
        }
    }
    const int tier = rng.discrete(gated);
    state.credits[static_cast<std::size_t>(tier)] -= 1;
    state.current_tier = tier;

    outcome.selection = Selection{
        tier, sample_from(table.members[static_cast<std::size_t>(tier)], c_count, rng)};
    return outcome;
}

}  // namespace fedtier
