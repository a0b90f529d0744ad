#pragma once

#include <cstddef>
#include <vector>

namespace fedtier {

// Row-major feature matrix with integer labels in [0, num_classes).
struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    int dim() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
};

// A client's shard: indices into a Dataset.
using Shard = std::vector<int>;
using ShardMap = std::vector<Shard>;  // client id -> shard

}  // namespace fedtier
