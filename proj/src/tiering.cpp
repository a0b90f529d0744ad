#include "fedtier/tiering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace fedtier {

bool ProfileTable::is_dropout(int client) const {
    return std::binary_search(dropouts.begin(), dropouts.end(), client);
}

ProfileTable profile_clients(int client_count, int sync_rounds, double t_max,
                             const ProfileLatencyFn& latency) {
    if (client_count < 1) {
        throw std::domain_error("profile_clients: empty client set");
    }
    if (sync_rounds < 1) {
        throw std::invalid_argument("profile_clients: sync_rounds must be >= 1");
    }
    if (!(t_max > 0.0)) {
        throw std::invalid_argument("profile_clients: t_max must be positive");
    }
    ProfileTable table;
    table.sync_rounds = sync_rounds;
    table.t_max = t_max;
    table.accumulated_latency.assign(static_cast<std::size_t>(client_count), 0.0);
    for (int r = 0; r < sync_rounds; ++r) {
        for (int c = 0; c < client_count; ++c) {
            const double observed = latency(c, r);
            if (!(observed > 0.0) || !std::isfinite(observed)) {
                throw std::domain_error("profile_clients: latency must be positive and finite");
            }
            table.accumulated_latency[static_cast<std::size_t>(c)] += std::min(observed, t_max);
        }
    }
    const double saturation = static_cast<double>(sync_rounds) * t_max;
    for (int c = 0; c < client_count; ++c) {
        if (table.accumulated_latency[static_cast<std::size_t>(c)] >= saturation) {
            table.dropouts.push_back(c);
        }
    }
    return table;
}

TierTable assign_tiers(const ProfileTable& profile, int m) {
    if (m < 1) {
        throw std::invalid_argument("assign_tiers: m must be >= 1");
    }
    const int client_count = static_cast<int>(profile.accumulated_latency.size());
    std::vector<int> active;
    for (int c = 0; c < client_count; ++c) {
        if (!profile.is_dropout(c)) {
            active.push_back(c);
        }
    }
    if (static_cast<int>(active.size()) < m) {
        throw std::invalid_argument("assign_tiers: fewer non-dropout clients than tiers");
    }
    std::sort(active.begin(), active.end(), [&](int a, int b) {
        const double la = profile.accumulated_latency[static_cast<std::size_t>(a)];
        const double lb = profile.accumulated_latency[static_cast<std::size_t>(b)];
        if (la != lb) {
            return la < lb;
        }
        return a < b;
    });

    TierTable table;
    table.m = m;
    table.tier_of.assign(static_cast<std::size_t>(client_count), -1);
    table.members.resize(static_cast<std::size_t>(m));
    table.avg_latency.resize(static_cast<std::size_t>(m));
    const std::size_t base = active.size() / static_cast<std::size_t>(m);
    const std::size_t extra = active.size() % static_cast<std::size_t>(m);
    std::size_t pos = 0;
    for (int t = 0; t < m; ++t) {
        const std::size_t count = base + (static_cast<std::size_t>(t) < extra ? 1 : 0);
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const int c = active[pos + i];
            table.tier_of[static_cast<std::size_t>(c)] = t;
            table.members[static_cast<std::size_t>(t)].push_back(c);
            sum += profile.accumulated_latency[static_cast<std::size_t>(c)] /
                   static_cast<double>(profile.sync_rounds);
        }
        std::sort(table.members[static_cast<std::size_t>(t)].begin(),
                  table.members[static_cast<std::size_t>(t)].end());
        table.avg_latency[static_cast<std::size_t>(t)] = sum / static_cast<double>(count);
        pos += count;
    }
    return table;
}

TierTable retier(const ProfileTable& fresh_profile, int m) {
    return assign_tiers(fresh_profile, m);
}

std::string tier_table_to_json(const TierTable& table, const ProfileTable& profile) {
    nlohmann::json j;
    j["tiers"] = table.m;
    j["avg_latency_s"] = table.avg_latency;
    nlohmann::json assignment = nlohmann::json::object();
    for (std::size_t c = 0; c < table.tier_of.size(); ++c) {
        if (table.tier_of[c] >= 0) {
            assignment[std::to_string(c)] = table.tier_of[c] + 1;
        }
    }
    j["assignment"] = std::move(assignment);
    j["dropouts"] = profile.dropouts;
    j["sync_rounds"] = profile.sync_rounds;
    j["t_max_s"] = profile.t_max;
    return j.dump(2) + "\n";
}

}  // namespace fedtier
