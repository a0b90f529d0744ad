#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedtier/rng.hpp"
#include "fedtier/tiering.hpp"

namespace fedtier {

// Fixed probability vector over tiers; entries are non-negative and sum to 1.
struct StaticPolicy {
    std::string name;
    std::vector<double> tier_probs;
};

// Named presets. "uniform" adapts to any tier count; the rest are defined
// for five tiers.
StaticPolicy static_policy_preset(const std::string& name, int m);
bool is_static_preset(const std::string& name);
std::vector<std::string> static_preset_names();

// Rejects negative entries, a sum off 1 by more than 1e-9, a length other
// than the tier count, and probability mass on tiers smaller than c_count.
void validate_static_policy(const StaticPolicy& policy, const TierTable& table,
                            int c_count);

struct Selection {
    std::optional<int> tier;   // absent for vanilla selection
    std::vector<int> clients;  // ascending, c_count distinct ids
};

// Uniform sample without replacement over the whole (non-dropout) pool.
Selection select_vanilla(std::span<const int> pool, int c_count, Rng& rng);

// Draw a tier from the policy vector, then sample uniformly within it.
Selection select_static(const TierTable& table, const StaticPolicy& policy,
                        int c_count, Rng& rng);

// New tier probabilities from per-tier accuracies: p_t proportional to
// (1 - A_t), uniform when every accuracy is 1.
std::vector<double> change_probs(std::span<const double> tier_accuracies);

enum class ExhaustionPolicy { ResetCredits, VanillaFallback };

// Credit-limited adaptive selection state. Probabilities start uniform and
// are re-derived from tier accuracies at every interval boundary where the
// current tier failed to improve.
struct AdaptiveState {
    std::vector<long long> credits;
    std::vector<double> probs;
    int interval = 10;
    std::vector<double> last_eval_acc;
    int current_tier = 0;
    long long initial_credit = 0;
};

// credits_t = ceil(credit_gamma * rounds / m) for every tier.
AdaptiveState make_adaptive_state(int m, int rounds, double credit_gamma, int interval,
                                  std::span<const double> initial_tier_acc);

struct AdaptiveOutcome {
    Selection selection;
    bool probs_updated = false;
    bool credits_reset = false;
    bool vanilla_fallback = false;
};

// One adaptive round: possibly refresh probabilities, then draw a tier from
// the credit-positive tiers (renormalized, which matches rejection sampling
// but always terminates), decrement its credit by one, and sample clients.
// When every tier is exhausted the exhaustion policy either resets all
// credits or falls back to vanilla selection for the round.
AdaptiveOutcome adaptive_step(AdaptiveState& state, int round_index,
                              std::span<const double> tier_accuracies,
                              const TierTable& table, int c_count,
                              ExhaustionPolicy exhaustion, Rng& rng);

}  // namespace fedtier
