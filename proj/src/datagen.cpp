#include "fedtier/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedtier/rng.hpp"

namespace fedtier {

namespace {

void check_groups(const std::vector<std::vector<int>>& groups,
                  std::span<const double> fractions) {
    if (groups.empty()) {
        throw std::invalid_argument("partition: client_groups is empty");
    }
    if (fractions.size() != groups.size()) {
        throw std::invalid_argument("partition: fractions length must equal group count");
    }
    const std::size_t size0 = groups.front().size();
    double sum = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) {
            throw std::invalid_argument("partition: group has no clients");
        }
        if (groups[g].size() != size0) {
            throw std::invalid_argument("partition: clients must divide evenly into groups");
        }
        if (fractions[g] < 0.0) {
            throw std::invalid_argument("partition: fractions must be non-negative");
        }
        sum += fractions[g];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("partition: fractions must sum to 1");
    }
}

int client_count_of(const std::vector<std::vector<int>>& groups) {
    int n = 0;
    for (const auto& g : groups) {
        n = std::max(n, *std::max_element(g.begin(), g.end()) + 1);
    }
    return n;
}

// Per-client sample targets from group fractions; group-level leftovers go
// to the last group, group-internal leftovers to its lowest-id clients.
std::vector<long long> quantity_targets(std::size_t total,
                                        const std::vector<std::vector<int>>& groups,
                                        std::span<const double> fractions,
                                        std::vector<long long>* group_totals_out) {
    std::vector<long long> group_totals(groups.size());
    long long assigned = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        group_totals[g] = static_cast<long long>(
            std::floor(fractions[g] * static_cast<double>(total) + 1e-9));
        assigned += group_totals[g];
    }
    group_totals.back() += static_cast<long long>(total) - assigned;

    std::vector<long long> targets(static_cast<std::size_t>(client_count_of(groups)), 0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const long long per = group_totals[g] / static_cast<long long>(groups[g].size());
        long long rem = group_totals[g] % static_cast<long long>(groups[g].size());
        std::vector<int> members = groups[g];
        std::sort(members.begin(), members.end());
        for (int c : members) {
            targets[static_cast<std::size_t>(c)] = per + (rem > 0 ? 1 : 0);
            if (rem > 0) {
                --rem;
            }
        }
    }
    if (group_totals_out != nullptr) {
        *group_totals_out = group_totals;
    }
    return targets;
}

std::vector<int> label_sorted_indices(const Dataset& data) {
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return data.labels[static_cast<std::size_t>(a)] < data.labels[static_cast<std::size_t>(b)];
    });
    return order;
}

// Shared core of the label-sharding modes: owner_of_shard decides who gets
// each contiguous cut, shard_sizes how large it is.
ShardMap cut_shards(const Dataset& data, int num_clients,
                    const std::vector<int>& owner_of_shard,
                    const std::vector<long long>& shard_sizes) {
    const std::vector<int> order = label_sorted_indices(data);
    ShardMap shards(static_cast<std::size_t>(num_clients));
    std::size_t pos = 0;
    for (std::size_t s = 0; s < owner_of_shard.size(); ++s) {
        const auto count = static_cast<std::size_t>(shard_sizes[s]);
        auto& shard = shards[static_cast<std::size_t>(owner_of_shard[s])];
        shard.insert(shard.end(), order.begin() + pos, order.begin() + pos + count);
        pos += count;
    }
    for (auto& shard : shards) {
        std::sort(shard.begin(), shard.end());
    }
    return shards;
}

}  // namespace

Dataset gen_dataset(int num_classes, int samples_per_class, int dim, double spread,
                    std::uint64_t seed) {
    if (dim < 1) {
        throw std::invalid_argument("gen_dataset: dim must be >= 1");
    }
    if (num_classes < 1 || samples_per_class < 1) {
        throw std::invalid_argument("gen_dataset: counts must be >= 1");
    }
    if (!(spread > 0.0)) {
        throw std::invalid_argument("gen_dataset: spread must be positive");
    }
    Rng mean_rng = make_stream(seed, "class-means");
    std::vector<std::vector<double>> means(static_cast<std::size_t>(num_classes));
    for (auto& m : means) {
        m.resize(static_cast<std::size_t>(dim));
        for (double& v : m) {
            v = mean_rng.uniform(-1.0, 1.0);
        }
    }
    Dataset ds;
    ds.num_classes = num_classes;
    ds.features.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);
    ds.labels.reserve(ds.features.capacity());
    Rng noise_rng = make_stream(seed, "class-noise");
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < samples_per_class; ++s) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            for (int j = 0; j < dim; ++j) {
                x[static_cast<std::size_t>(j)] =
                    means[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
                    spread * noise_rng.normal();
            }
            ds.features.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

ShardMap partition_quantity(const Dataset& data,
                            const std::vector<std::vector<int>>& client_groups,
                            std::span<const double> fractions, std::uint64_t seed) {
    check_groups(client_groups, fractions);
    const std::vector<long long> targets =
        quantity_targets(data.size(), client_groups, fractions, nullptr);

    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_stream(seed, "quantity-perm");
    rng.shuffle(order);

    ShardMap shards(targets.size());
    std::size_t pos = 0;
    for (std::size_t c = 0; c < targets.size(); ++c) {
        const auto count = static_cast<std::size_t>(targets[c]);
        shards[c].assign(order.begin() + pos, order.begin() + pos + count);
        std::sort(shards[c].begin(), shards[c].end());
        pos += count;
    }
    return shards;
}

ShardMap partition_noniid(const Dataset& data, int num_clients, int num_shards,
                          int shards_per_client, std::uint64_t seed) {
    if (num_clients < 1 || shards_per_client < 1 ||
        num_shards != num_clients * shards_per_client) {
        throw std::invalid_argument(
            "partition_noniid: num_shards must equal num_clients * shards_per_client");
    }
    if (data.size() < static_cast<std::size_t>(num_shards)) {
        throw std::invalid_argument("partition_noniid: fewer samples than shards");
    }
    // near-equal contiguous cuts; the first N % S shards carry one extra
    std::vector<long long> sizes(static_cast<std::size_t>(num_shards),
                                 static_cast<long long>(data.size()) / num_shards);
    for (std::size_t s = 0; s < data.size() % static_cast<std::size_t>(num_shards); ++s) {
        ++sizes[s];
    }
    std::vector<int> owners(static_cast<std::size_t>(num_shards));
    for (int s = 0; s < num_shards; ++s) {
        owners[static_cast<std::size_t>(s)] = s / shards_per_client;
    }
    Rng rng = make_stream(seed, "shard-perm");
    rng.shuffle(owners);
    return cut_shards(data, num_clients, owners, sizes);
}

ShardMap partition_quantity_noniid(const Dataset& data,
                                   const std::vector<std::vector<int>>& client_groups,
                                   std::span<const double> fractions,
                                   int shards_per_client, std::uint64_t seed) {
    check_groups(client_groups, fractions);
    if (shards_per_client < 1) {
        throw std::invalid_argument("partition_quantity_noniid: shards_per_client must be >= 1");
    }
    const std::vector<long long> targets =
        quantity_targets(data.size(), client_groups, fractions, nullptr);
    const int num_clients = static_cast<int>(targets.size());

    std::vector<int> owners(static_cast<std::size_t>(num_clients) * shards_per_client);
    for (std::size_t s = 0; s < owners.size(); ++s) {
        owners[s] = static_cast<int>(s) / shards_per_client;
    }
    Rng rng = make_stream(seed, "shard-perm");
    rng.shuffle(owners);

    // shard sizes follow the owner's target; the owner's last shard absorbs
    // its per-client remainder
    std::vector<int> seen(static_cast<std::size_t>(num_clients), 0);
    std::vector<long long> sizes(owners.size());
    for (std::size_t s = 0; s < owners.size(); ++s) {
        const auto c = static_cast<std::size_t>(owners[s]);
        const long long base = targets[c] / shards_per_client;
        const long long rem = targets[c] % shards_per_client;
        sizes[s] = base + (seen[c] == shards_per_client - 1 ? rem : 0);
        ++seen[c];
    }
    return cut_shards(data, num_clients, owners, sizes);
}

std::vector<Dataset> build_tier_testsets(const Dataset& holdout,
                                         std::span<const std::vector<int>> tier_members,
                                         const ShardMap& client_shards,
                                         const Dataset& train, int testset_size,
                                         std::uint64_t seed) {
    if (testset_size < 1) {
        throw std::invalid_argument("build_tier_testsets: testset_size must be >= 1");
    }
    const int num_classes = holdout.num_classes;
    std::vector<std::vector<int>> holdout_by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < holdout.size(); ++i) {
        holdout_by_class[static_cast<std::size_t>(holdout.labels[i])].push_back(
            static_cast<int>(i));
    }

    std::vector<Dataset> testsets;
    testsets.reserve(tier_members.size());
    for (std::size_t t = 0; t < tier_members.size(); ++t) {
        if (tier_members[t].empty()) {
            throw std::domain_error("build_tier_testsets: tier has no clients");
        }
        std::vector<long long> hist(static_cast<std::size_t>(num_classes), 0);
        long long total = 0;
        for (int c : tier_members[t]) {
            for (int idx : client_shards[static_cast<std::size_t>(c)]) {
                ++hist[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(idx)])];
                ++total;
            }
        }
        if (total == 0) {
            throw std::domain_error("build_tier_testsets: tier clients hold no samples");
        }
        // largest-remainder apportionment of testset_size by class mixture
        std::vector<long long> want(static_cast<std::size_t>(num_classes), 0);
        std::vector<std::pair<double, int>> remainders;
        long long granted = 0;
        for (int c = 0; c < num_classes; ++c) {
            const double exact = static_cast<double>(testset_size) *
                                 static_cast<double>(hist[static_cast<std::size_t>(c)]) /
                                 static_cast<double>(total);
            want[static_cast<std::size_t>(c)] = static_cast<long long>(std::floor(exact));
            granted += want[static_cast<std::size_t>(c)];
            remainders.emplace_back(exact - std::floor(exact), c);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) {
                return a.first > b.first;
            }
            return a.second < b.second;
        });
        for (std::size_t i = 0; granted < testset_size && i < remainders.size(); ++i) {
            if (hist[static_cast<std::size_t>(remainders[i].second)] > 0) {
                ++want[static_cast<std::size_t>(remainders[i].second)];
                ++granted;
            }
        }

        Dataset ts;
        ts.num_classes = num_classes;
        Rng rng = make_stream(seed, "tier-testset", static_cast<std::uint64_t>(t));
        for (int c = 0; c < num_classes; ++c) {
            const auto& avail = holdout_by_class[static_cast<std::size_t>(c)];
            const auto take = static_cast<int>(std::min<long long>(
                want[static_cast<std::size_t>(c)], static_cast<long long>(avail.size())));
            if (take == 0) {
                continue;
            }
            const std::vector<int> picks =
                rng.sample_without_replacement(static_cast<int>(avail.size()), take);
            for (int p : picks) {
                const auto h = static_cast<std::size_t>(avail[static_cast<std::size_t>(p)]);
                ts.features.push_back(holdout.features[h]);
                ts.labels.push_back(holdout.labels[h]);
            }
        }
        if (ts.labels.empty()) {
            throw std::domain_error("build_tier_testsets: holdout cannot cover tier mixture");
        }
        testsets.push_back(std::move(ts));
    }
    return testsets;
}

}  // namespace fedtier
