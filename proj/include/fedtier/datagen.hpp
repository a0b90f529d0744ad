#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedtier/data.hpp"

namespace fedtier {

// Gaussian-cluster dataset: each class is an isotropic blob around a
// distinct seeded mean in [-1,1]^dim. Rows are class-major.
Dataset gen_dataset(int num_classes, int samples_per_class, int dim, double spread,
                    std::uint64_t seed);

// Splits the dataset so that group g's clients collectively hold
// fractions[g] of the samples, divided evenly within the group. Rounding
// leftovers at the group level go to the last group; within a group the
// lowest-id clients absorb the remainder one sample each.
ShardMap partition_quantity(const Dataset& data,
                            const std::vector<std::vector<int>>& client_groups,
                            std::span<const double> fractions, std::uint64_t seed);

// Label-sorted sharding: samples sorted by label, cut into num_shards
// contiguous near-equal shards, shards dealt to clients by a seeded
// permutation. Requires num_shards == num_clients * shards_per_client.
ShardMap partition_noniid(const Dataset& data, int num_clients, int num_shards,
                          int shards_per_client, std::uint64_t seed);

// Quantity skew combined with label sharding: shard owners are drawn first,
// then the label-sorted stream is cut into shards sized to each owner's
// quantity target.
ShardMap partition_quantity_noniid(const Dataset& data,
                                   const std::vector<std::vector<int>>& client_groups,
                                   std::span<const double> fractions,
                                   int shards_per_client, std::uint64_t seed);

// Per-tier evaluation sets drawn from the holdout so that each tier's class
// mixture matches the aggregate class histogram of that tier's clients.
// Per-class demand is apportioned by largest remainder and capped by holdout
// availability.
std::vector<Dataset> build_tier_testsets(const Dataset& holdout,
                                         std::span<const std::vector<int>> tier_members,
                                         const ShardMap& client_shards,
                                         const Dataset& train, int testset_size,
                                         std::uint64_t seed);

}  // namespace fedtier
