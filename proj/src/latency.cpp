#include "fedtier/latency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedtier {

double client_latency(const ResourceProfile& profile, int n_samples, Rng& rng) {
    if (!(profile.cpu_share > 0.0) || !(profile.per_sample_cost > 0.0) ||
        profile.comm_base < 0.0 || profile.jitter_sd < 0.0) {
        throw std::invalid_argument("client_latency: invalid resource profile");
    }
    if (n_samples < 1) {
        throw std::invalid_argument("client_latency: n_samples must be >= 1");
    }
    double latency = profile.comm_base +
                     profile.per_sample_cost * static_cast<double>(n_samples) / profile.cpu_share;
    if (profile.jitter_sd > 0.0) {
        latency *= rng.lognormal(profile.jitter_sd);
    }
    return latency;
}

double round_latency(std::span<const double> latencies) {
    if (latencies.empty()) {
        throw std::domain_error("round_latency: no latencies");
    }
    return *std::max_element(latencies.begin(), latencies.end());
}

}  // namespace fedtier
