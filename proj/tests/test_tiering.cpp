#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include <json.hpp>

#include "fedtier/rng.hpp"
#include "fedtier/tiering.hpp"

using namespace fedtier;

namespace {

ProfileLatencyFn constant_latencies(std::vector<double> per_client) {
    return [lat = std::move(per_client)](int client, int) {
        return lat[static_cast<std::size_t>(client)];
    };
}

}  // namespace

TEST_CASE("a client slower than t_max every round saturates and drops out") {
    const auto table = profile_clients(1, 3, 10.0, constant_latencies({25.0}));
    CHECK(table.accumulated_latency[0] == doctest::Approx(30.0));
    CHECK(table.dropouts == std::vector<int>{0});
    CHECK(table.is_dropout(0));
}

TEST_CASE("fast clients accumulate their true latency") {
    const auto table = profile_clients(1, 3, 10.0, constant_latencies({2.0}));
    CHECK(table.accumulated_latency[0] == doctest::Approx(6.0));
    CHECK(table.dropouts.empty());
}

TEST_CASE("exactly the always-timeout clients drop out of a mixed pool") {
    const std::vector<double> lat = {2.0, 50.0, 3.0, 90.0, 9.9, 10.0};
    const auto table = profile_clients(6, 3, 10.0, constant_latencies(lat));
    CHECK(table.dropouts == std::vector<int>{1, 3, 5});  // 10.0 hits the cap exactly
    for (int c : {0, 2, 4}) {
        CHECK_FALSE(table.is_dropout(c));
    }
}

TEST_CASE("profiling validates its inputs") {
    CHECK_THROWS_AS(profile_clients(0, 3, 10.0, constant_latencies({})), std::domain_error);
    CHECK_THROWS_AS(profile_clients(1, 0, 10.0, constant_latencies({1.0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(profile_clients(1, 3, 0.0, constant_latencies({1.0})),
                    std::invalid_argument);
}

TEST_CASE("sorted equal-count split with per-tier averages") {
    const std::vector<double> lat = {1.0, 1.1, 5.0, 5.2, 20.0, 21.0};
    const auto profile = profile_clients(6, 1, 100.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 3);
    CHECK(table.members[0] == std::vector<int>{0, 1});
    CHECK(table.members[1] == std::vector<int>{2, 3});
    CHECK(table.members[2] == std::vector<int>{4, 5});
    CHECK(table.avg_latency[0] == doctest::Approx(1.05));
    CHECK(table.avg_latency[1] == doctest::Approx(5.1));
    CHECK(table.avg_latency[2] == doctest::Approx(20.5));
    CHECK(table.tier_of[3] == 1);
}

TEST_CASE("a single tier holds everyone with the global mean latency") {
    const std::vector<double> lat = {1.0, 3.0, 5.0};
    const auto profile = profile_clients(3, 1, 100.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 1);
    CHECK(table.members[0] == std::vector<int>{0, 1, 2});
    CHECK(table.avg_latency[0] == doctest::Approx(3.0));
}

TEST_CASE("five separated latency groups are recovered exactly") {
    std::vector<double> lat(50);
    for (int c = 0; c < 50; ++c) {
        lat[static_cast<std::size_t>(c)] = std::vector<double>{1, 2, 4, 8, 16}[c / 10];
    }
    const auto profile = profile_clients(50, 3, 60.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 5);
    for (int c = 0; c < 50; ++c) {
        CHECK(table.tier_of[static_cast<std::size_t>(c)] == c / 10);
    }
    CHECK(std::is_sorted(table.avg_latency.begin(), table.avg_latency.end()));
}

TEST_CASE("tier sizes differ by at most one and cover the non-dropouts") {
    const std::vector<double> lat = {1, 2, 3, 4, 5, 6, 7};
    const auto profile = profile_clients(7, 1, 100.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 3);
    std::size_t total = 0, smallest = 100, largest = 0;
    for (const auto& members : table.members) {
        total += members.size();
        smallest = std::min(smallest, members.size());
        largest = std::max(largest, members.size());
    }
    CHECK(total == 7);
    CHECK(largest - smallest <= 1);
}

TEST_CASE("dropouts never land in a tier") {
    const std::vector<double> lat = {1.0, 500.0, 2.0, 3.0};
    const auto profile = profile_clients(4, 2, 10.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 3);
    CHECK(table.tier_of[1] == -1);
    std::size_t total = 0;
    for (const auto& members : table.members) {
        total += members.size();
    }
    CHECK(total == 3);
}

TEST_CASE("too few non-dropout clients is a configuration error") {
    const auto profile = profile_clients(2, 1, 100.0, constant_latencies({1.0, 2.0}));
    CHECK_THROWS_AS(assign_tiers(profile, 3), std::invalid_argument);
}

TEST_CASE("retier reproduces the table on unchanged data") {
    const std::vector<double> lat = {1.0, 1.1, 5.0, 5.2, 20.0, 21.0};
    const auto profile = profile_clients(6, 1, 100.0, constant_latencies(lat));
    const auto a = assign_tiers(profile, 3);
    const auto b = retier(profile, 3);
    CHECK(a.tier_of == b.tier_of);
    CHECK(a.avg_latency == b.avg_latency);
}

TEST_CASE("a slowed client moves to the slowest tier on retier") {
    std::vector<double> lat = {1.0, 1.1, 5.0, 5.2, 20.0, 21.0};
    lat[0] = 100.0;  // formerly the fastest
    const auto profile = profile_clients(6, 1, 1000.0, constant_latencies(lat));
    const auto table = retier(profile, 3);
    CHECK(table.tier_of[0] == 2);
}

TEST_CASE("ties at tier boundaries break on client id") {
    const std::vector<double> lat = {2.0, 2.0, 2.0, 2.0};
    const auto profile = profile_clients(4, 1, 100.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 2);
    CHECK(table.members[0] == std::vector<int>{0, 1});
    CHECK(table.members[1] == std::vector<int>{2, 3});
}

TEST_CASE("adjacent tier latency ranges never overlap") {
    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> lat(20);
        for (double& l : lat) {
            l = rng.uniform(1.0, 50.0);
        }
        const auto profile = profile_clients(20, 1, 1000.0, constant_latencies(lat));
        const auto table = assign_tiers(profile, 4);
        for (int t = 0; t + 1 < 4; ++t) {
            double hi = 0.0, lo = 1e300;
            for (int c : table.members[static_cast<std::size_t>(t)]) {
                hi = std::max(hi, lat[static_cast<std::size_t>(c)]);
            }
            for (int c : table.members[static_cast<std::size_t>(t + 1)]) {
                lo = std::min(lo, lat[static_cast<std::size_t>(c)]);
            }
            CHECK(hi <= lo);
        }
        CHECK(std::is_sorted(table.avg_latency.begin(), table.avg_latency.end()));
        // distinct latencies: strictly increasing averages
        CHECK(std::adjacent_find(table.avg_latency.begin(), table.avg_latency.end()) ==
              table.avg_latency.end());
    }
}

TEST_CASE("tier table serializes to JSON with 1-based tiers") {
    const std::vector<double> lat = {1.0, 9.0};
    const auto profile = profile_clients(2, 1, 100.0, constant_latencies(lat));
    const auto table = assign_tiers(profile, 2);
    const auto j = nlohmann::json::parse(tier_table_to_json(table, profile));
    CHECK(j["tiers"] == 2);
    CHECK(j["assignment"]["0"] == 1);
    CHECK(j["assignment"]["1"] == 2);
    CHECK(j["avg_latency_s"].size() == 2);
    CHECK(j["dropouts"].empty());
}
