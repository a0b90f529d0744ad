#include "fedtier/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace fedtier {

namespace {

void check_straggler(const StragglerParams& p) {
    if (p.k < 1 || p.c < 1 || p.c > p.k || p.slow < 0 || p.slow > p.k) {
        throw std::invalid_argument("straggler: need 1 <= c <= k and 0 <= slow <= k");
    }
}

// C(n, r) exactly; fits unsigned __int128 for n <= 64.
unsigned __int128 binom_exact(long long n, long long r) {
    if (r < 0 || r > n) {
        return 0;
    }
    r = std::min(r, n - r);
    unsigned __int128 result = 1;
    for (long long i = 1; i <= r; ++i) {
        result = result * static_cast<unsigned __int128>(n - r + i) /
                 static_cast<unsigned __int128>(i);
    }
    return result;
}

double log_binom(double n, double r) {
    return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

}  // namespace

double straggler_prob(const StragglerParams& p) {
    check_straggler(p);
    if (p.slow == 0) {
        return 0.0;
    }
    if (p.c > p.k - p.slow) {
        return 1.0;  // too few non-slow clients to fill the draw
    }
    double ratio;
    if (p.k <= 64) {
        const unsigned __int128 num = binom_exact(p.k - p.slow, p.c);
        const unsigned __int128 den = binom_exact(p.k, p.c);
        ratio = static_cast<double>(num) / static_cast<double>(den);
    } else {
        const double log_ratio =
            log_binom(static_cast<double>(p.k - p.slow), static_cast<double>(p.c)) -
            log_binom(static_cast<double>(p.k), static_cast<double>(p.c));
        ratio = std::exp(log_ratio);
    }
    return 1.0 - ratio;
}

double straggler_prob_bound(const StragglerParams& p) {
    check_straggler(p);
    const double keep = static_cast<double>(p.k - p.slow) / static_cast<double>(p.k);
    return 1.0 - std::pow(keep, static_cast<double>(p.c));
}

double estimate_training_time(std::span<const double> tier_latencies,
                              std::span<const double> tier_probs,
                              std::int64_t rounds) {
    if (tier_latencies.size() != tier_probs.size()) {
        throw std::domain_error("estimate_training_time: latency/probability length mismatch");
    }
    if (tier_latencies.empty() || rounds < 1) {
        throw std::invalid_argument("estimate_training_time: need tiers and rounds >= 1");
    }
    double sum = 0.0;
    double expected = 0.0;
    for (std::size_t i = 0; i < tier_probs.size(); ++i) {
        if (tier_probs[i] < 0.0) {
            throw std::invalid_argument("estimate_training_time: negative probability");
        }
        sum += tier_probs[i];
        expected += tier_latencies[i] * tier_probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("estimate_training_time: probabilities must sum to 1");
    }
    return expected * static_cast<double>(rounds);
}

double mape(double estimated, double actual) {
    if (!(actual > 0.0)) {
        throw std::domain_error("mape: actual must be positive");
    }
    return std::abs(estimated - actual) / actual * 100.0;
}

Amplification privacy_amplification(const PrivacyParams& p) {
    if (p.k < 1 || p.c < 1 || p.c > p.k) {
        throw std::invalid_argument("privacy_amplification: need 1 <= c <= k");
    }
    if (p.delta < 0.0 || p.delta >= 1.0) {
        throw std::invalid_argument("privacy_amplification: delta must be in [0, 1)");
    }
    const std::size_t n_tiers = p.tier_sizes.size();
    if (n_tiers == 0 || p.tier_weights.size() != n_tiers) {
        throw std::invalid_argument(
            "privacy_amplification: tier_sizes and tier_weights must match and be non-empty");
    }
    Amplification amp;
    amp.q_uniform = static_cast<double>(p.c) / static_cast<double>(p.k);
    amp.q.resize(n_tiers);
    amp.q_max = 0.0;
    for (std::size_t j = 0; j < n_tiers; ++j) {
        if (p.tier_sizes[j] < 1) {
            throw std::invalid_argument("privacy_amplification: tier sizes must be positive");
        }
        if (p.tier_weights[j] < 0.0) {
            throw std::invalid_argument("privacy_amplification: tier weights must be >= 0");
        }
        const double tier_pick = p.tier_weights[j] / static_cast<double>(n_tiers);
        amp.q[j] = tier_pick * static_cast<double>(p.c) / static_cast<double>(p.tier_sizes[j]);
        if (amp.q[j] > 1.0) {
            throw std::domain_error("privacy_amplification: sampling rate q_j exceeds 1");
        }
        amp.q_max = std::max(amp.q_max, amp.q[j]);
    }
    return amp;
}

}  // namespace fedtier
