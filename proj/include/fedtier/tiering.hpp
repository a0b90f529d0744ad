#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fedtier {

// Accumulated profiling latency per client; each profiling round contributes
// min(actual latency, t_max). Clients whose total saturates
// sync_rounds * t_max are dropouts and excluded from training.
struct ProfileTable {
    std::vector<double> accumulated_latency;  // seconds, indexed by client id
    int sync_rounds = 0;
    double t_max = 0.0;
    std::vector<int> dropouts;  // ascending client ids

    bool is_dropout(int client) const;
};

// Clients grouped into m latency tiers; tier 0 is fastest. avg_latency is
// the mean per-round latency (accumulated / sync_rounds) of the members.
struct TierTable {
    std::vector<int> tier_of;               // client -> tier, -1 for dropouts
    std::vector<std::vector<int>> members;  // tier -> ascending client ids
    std::vector<double> avg_latency;        // non-decreasing across tiers
    int m = 0;
};

using ProfileLatencyFn = std::function<double(int client, int profiling_round)>;

ProfileTable profile_clients(int client_count, int sync_rounds, double t_max,
                             const ProfileLatencyFn& latency);

// Equal-count (quantile) split of the non-dropout clients by accumulated
// latency; ties break on client id, earlier tiers absorb the remainder so
// sizes differ by at most one.
TierTable assign_tiers(const ProfileTable& profile, int m);

// Same contract as assign_tiers, applied to fresh profiling data when the
// engine re-profiles periodically.
TierTable retier(const ProfileTable& fresh_profile, int m);

// Pretty JSON with 1-based tier ids, for inspection and replay.
std::string tier_table_to_json(const TierTable& table, const ProfileTable& profile);

}  // namespace fedtier
