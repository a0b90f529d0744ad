#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedtier {

// Vanilla-selection straggler odds: k clients total, c drawn per round,
// slow of them in the slowest latency level.
struct StragglerParams {
    long long k = 0;
    long long c = 0;
    long long slow = 0;
};

// Probability that at least one of the c drawn clients comes from the
// slowest level: 1 - binom(k-slow, c) / binom(k, c). Exact integer
// arithmetic up to k = 64, log-gamma beyond.
double straggler_prob(const StragglerParams& params);

// Closed-form lower bound 1 - ((k - slow) / k)^c; never exceeds the exact
// probability and matches it at c = 1.
double straggler_prob_bound(const StragglerParams& params);

// Expected total training time: dot(tier_latencies, tier_probs) * rounds.
double estimate_training_time(std::span<const double> tier_latencies,
                              std::span<const double> tier_probs,
                              std::int64_t rounds);

// |estimated - actual| / actual * 100. actual must be positive.
double mape(double estimated, double actual);

// Client-sampling rates that amplify a per-round (epsilon, delta) guarantee:
// q_uniform for uniform selection over all k clients, q_j per tier when tier
// j (weight theta_j, size n_j) is picked with probability theta_j / n_tiers.
// Only the q factors are computed; callers report them next to the nominal
// (epsilon, delta).
struct PrivacyParams {
    double epsilon = 0.0;
    double delta = 0.0;
    long long c = 0;
    long long k = 0;
    std::vector<long long> tier_sizes;
    std::vector<double> tier_weights;
};

struct Amplification {
    double q_uniform = 0.0;
    std::vector<double> q;
    double q_max = 0.0;
};

Amplification privacy_amplification(const PrivacyParams& params);

}  // namespace fedtier
