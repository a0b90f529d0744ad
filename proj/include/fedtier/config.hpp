#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedtier/latency.hpp"
#include "fedtier/model.hpp"
#include "fedtier/scheduler.hpp"

namespace fedtier {

struct GroupConfig {
    int count = 0;
    ResourceProfile profile;
};

enum class PartitionMode { Iid, Quantity, NonIid, QuantityNonIid };

struct PartitionConfig {
    PartitionMode mode = PartitionMode::Iid;
    std::vector<double> fractions;  // per group; unused for iid/noniid
    int shards_per_client = 2;
};

struct DataConfig {
    int classes = 0;
    int samples_per_class = 0;
    int holdout_per_class = 0;
    int dim = 0;
    double spread = 0.0;
    PartitionConfig partition;
};

struct ProfilingConfig {
    int sync_rounds = 3;
    double t_max = 60.0;
};

enum class PolicyKind { Vanilla, Static, Adaptive };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Vanilla;
    std::string name = "vanilla";
    std::vector<double> tier_probs;  // filled for static policies
};

struct AdaptiveConfig {
    int interval = 10;
    double credit_gamma = 1.2;
    ExhaustionPolicy exhaustion = ExhaustionPolicy::ResetCredits;
};

struct SimConfig {
    int clients = 0;
    int clients_per_round = 0;
    int tiers = 0;
    int rounds = 0;
    std::uint64_t seed = 0;
    std::vector<GroupConfig> groups;
    DataConfig data;
    TrainHyper train;
    int hidden_units = 0;
    ProfilingConfig profiling;
    PolicyConfig policy;
    AdaptiveConfig adaptive;
    int reprofile_every = 0;  // 0 = never
    int eval_every = 1;       // evaluate after round r when (r+1) % eval_every == 0
    int tier_testset_size = 250;
};

// Throws std::invalid_argument naming the offending field path.
SimConfig parse_config_json(const std::string& json_text);
SimConfig load_config_file(const std::string& path);

// Parses "vanilla", "adaptive", a static preset name, or (config files only)
// an explicit {"tier_probs": [...]} object.
PolicyConfig parse_policy_name(const std::string& name, int tiers);

void validate_config(const SimConfig& config);

}  // namespace fedtier
