#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fedtier/config.hpp"
#include "fedtier/data.hpp"
#include "fedtier/model.hpp"
#include "fedtier/scheduler.hpp"
#include "fedtier/tiering.hpp"

namespace fedtier {

struct RoundRecord {
    int round = 0;
    std::string policy;
    std::optional<int> tier;   // 0-based; absent for vanilla rounds
    std::vector<int> clients;  // ascending client ids
    double round_latency_s = 0.0;
    double wall_clock_s = 0.0;
    double global_acc = 0.0;
    std::vector<double> tier_acc;
    std::vector<long long> credits;  // adaptive runs only
    std::vector<double> probs;       // empty for vanilla
    bool credits_reset = false;
};

struct EstimatorReport {
    double estimated_s = 0.0;
    double actual_s = 0.0;
    double mape_pct = 0.0;
};

struct ExperimentResult {
    std::string policy;
    std::vector<RoundRecord> rounds;
    std::string params_digest;  // hex content hash of the final parameters
    double total_wall_clock_s = 0.0;
    double final_accuracy = 0.0;
    double final_loss = 0.0;
    std::optional<EstimatorReport> estimator;  // static policies only
    TierTable tier_table;
    ProfileTable profile_table;
    int credit_resets = 0;
};

// Full experiment: profiling, tiering, then rounds of select / train /
// aggregate / evaluate with simulated wall clock. Deterministic in the
// config seed.
ExperimentResult run_experiment(const SimConfig& config);

// Accuracy of the parameters on each tier's testset, in tier order.
std::vector<double> evaluate_tiers(const ModelParams& params,
                                   std::span<const Dataset> tier_testsets);

// Estimator check for a finished static-policy run; rejects vanilla and
// adaptive policies, whose per-tier probabilities are undefined or
// time-varying.
EstimatorReport compare_estimator(const ExperimentResult& result, const TierTable& table,
                                  const PolicyConfig& policy, int rounds);

// One row per round, stable column order:
// round,policy,tier,round_latency_s,wall_clock_s,global_acc,
// acc_tier_1..m,credits_1..m,prob_1..m
void write_rounds_csv(const ExperimentResult& result, std::ostream& out);

std::string summary_json(const ExperimentResult& result, const SimConfig& config);

std::string format_double(double v);

}  // namespace fedtier
