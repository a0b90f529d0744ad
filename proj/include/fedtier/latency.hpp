#pragma once

#include <span>

#include "fedtier/rng.hpp"

namespace fedtier {

// Compute/communication profile of a simulated client. Latency is affine in
// the sample count and inverse in the CPU share; jitter_sd > 0 multiplies by
// a median-1 lognormal factor.
struct ResourceProfile {
    double cpu_share = 1.0;
    double comm_base = 0.5;
    double per_sample_cost = 1.0;
    double jitter_sd = 0.0;
};

double client_latency(const ResourceProfile& profile, int n_samples, Rng& rng);

// Round latency is the slowest selected client.
double round_latency(std::span<const double> latencies);

}  // namespace fedtier
