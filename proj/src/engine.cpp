#include "fedtier/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fedtier/analytics.hpp"
#include "fedtier/datagen.hpp"
#include "fedtier/latency.hpp"
#include "fedtier/rng.hpp"

namespace fedtier {

namespace {

std::vector<std::vector<int>> build_groups(const SimConfig& cfg) {
    std::vector<std::vector<int>> groups;
    int next = 0;
    for (const auto& g : cfg.groups) {
        std::vector<int> ids(static_cast<std::size_t>(g.count));
        std::iota(ids.begin(), ids.end(), next);
        next += g.count;
        groups.push_back(std::move(ids));
    }
    return groups;
}

std::vector<ResourceProfile> build_profiles(const SimConfig& cfg) {
    std::vector<ResourceProfile> profiles;
    profiles.reserve(static_cast<std::size_t>(cfg.clients));
    for (const auto& g : cfg.groups) {
        for (int i = 0; i < g.count; ++i) {
            profiles.push_back(g.profile);
        }
    }
    return profiles;
}

ShardMap make_shards(const SimConfig& cfg, const Dataset& train,
                     const std::vector<std::vector<int>>& groups) {
    const std::uint64_t seed = derive_seed(cfg.seed, "partition");
    switch (cfg.data.partition.mode) {
        case PartitionMode::Iid: {
            // single group, everyone holds an equal IID slice
            std::vector<std::vector<int>> one_group(1);
            for (int c = 0; c < cfg.clients; ++c) {
                one_group[0].push_back(c);
            }
            const std::vector<double> all = {1.0};
            return partition_quantity(train, one_group, all, seed);
        }
        case PartitionMode::Quantity:
            return partition_quantity(train, groups, cfg.data.partition.fractions, seed);
        case PartitionMode::NonIid:
            return partition_noniid(train, cfg.clients,
                                    cfg.clients * cfg.data.partition.shards_per_client,
                                    cfg.data.partition.shards_per_client, seed);
        case PartitionMode::QuantityNonIid:
            return partition_quantity_noniid(train, groups, cfg.data.partition.fractions,
                                             cfg.data.partition.shards_per_client, seed);
    }
    throw std::logic_error("make_shards: unhandled partition mode");
}

// FNV-1a over the raw parameter bytes plus the shape.
std::string digest_params(const ModelParams& params) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    mix(&params.dims.input, sizeof(params.dims.input));
    mix(&params.dims.hidden, sizeof(params.dims.hidden));
    mix(&params.dims.classes, sizeof(params.dims.classes));
    mix(params.values.data(), params.values.size() * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

struct TieringBundle {
    ProfileTable profile;
    TierTable table;
    std::vector<Dataset> testsets;
    std::vector<int> pool;  // non-dropout clients, ascending
};

TieringBundle tier_up(const SimConfig& cfg, const std::vector<ResourceProfile>& profiles,
                      const ShardMap& shards, const Dataset& train, const Dataset& holdout,
                      int epoch) {
    TieringBundle bundle;
    const auto profile_latency = [&](int client, int round) {
        Rng rng = make_stream(cfg.seed, "profiling-latency",
                              (static_cast<std::uint64_t>(epoch) << 32) |
                                  static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(client));
        return client_latency(profiles[static_cast<std::size_t>(client)],
                              static_cast<int>(shards[static_cast<std::size_t>(client)].size()),
                              rng);
    };
    bundle.profile = profile_clients(cfg.clients, cfg.profiling.sync_rounds,
                                     cfg.profiling.t_max, profile_latency);
    bundle.table = epoch == 0 ? assign_tiers(bundle.profile, cfg.tiers)
                              : retier(bundle.profile, cfg.tiers);
    bundle.testsets = build_tier_testsets(holdout, bundle.table.members, shards, train,
                                          cfg.tier_testset_size,
                                          derive_seed(cfg.seed, "tier-testsets",
                                                      static_cast<std::uint64_t>(epoch)));
    for (int c = 0; c < cfg.clients; ++c) {
        if (!bundle.profile.is_dropout(c)) {
            bundle.pool.push_back(c);
        }
    }
    return bundle;
}

void check_tier_sizes(const TierTable& table, int c_count) {
    for (std::size_t t = 0; t < table.members.size(); ++t) {
        if (static_cast<int>(table.members[t].size()) < c_count) {
            throw std::invalid_argument("config: tier " + std::to_string(t + 1) +
                                        " has fewer clients than clients_per_round");
        }
    }
}

}  // namespace

std::vector<double> evaluate_tiers(const ModelParams& params,
                                   std::span<const Dataset> tier_testsets) {
    std::vector<double> acc;
    acc.reserve(tier_testsets.size());
    for (const auto& ts : tier_testsets) {
        acc.push_back(evaluate(params, ts).accuracy);
    }
    return acc;
}

EstimatorReport compare_estimator(const ExperimentResult& result, const TierTable& table,
                                  const PolicyConfig& policy, int rounds) {
    if (policy.kind != PolicyKind::Static) {
        throw std::domain_error(
            "compare_estimator: defined for static policies only");
    }
    EstimatorReport report;
    report.estimated_s = estimate_training_time(table.avg_latency, policy.tier_probs, rounds);
    report.actual_s = result.total_wall_clock_s;
    report.mape_pct = mape(report.estimated_s, report.actual_s);
    return report;
}

ExperimentResult run_experiment(const SimConfig& cfg) {
    validate_config(cfg);

    const auto groups = build_groups(cfg);
    const auto profiles = build_profiles(cfg);

    // one dataset, split class-by-class into train and holdout blocks
    const int per_class = cfg.data.samples_per_class + cfg.data.holdout_per_class;
    const Dataset full = gen_dataset(cfg.data.classes, per_class, cfg.data.dim,
                                     cfg.data.spread, derive_seed(cfg.seed, "dataset"));
    Dataset train;
    Dataset holdout;
    train.num_classes = holdout.num_classes = cfg.data.classes;
    for (int c = 0; c < cfg.data.classes; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * per_class;
        for (int s = 0; s < per_class; ++s) {
            Dataset& dst = s < cfg.data.samples_per_class ? train : holdout;
            dst.features.push_back(full.features[base + s]);
            dst.labels.push_back(full.labels[base + s]);
        }
    }

    const ShardMap shards = make_shards(cfg, train, groups);
    for (int c = 0; c < cfg.clients; ++c) {
        if (shards[static_cast<std::size_t>(c)].empty()) {
            throw std::invalid_argument("config: partition leaves client " +
                                        std::to_string(c) + " with no samples");
        }
    }

    TieringBundle tiering = tier_up(cfg, profiles, shards, train, holdout, 0);
    if (static_cast<int>(tiering.pool.size()) < cfg.clients_per_round) {
        throw std::invalid_argument("config: non-dropout pool smaller than clients_per_round");
    }

    StaticPolicy static_policy;
    if (cfg.policy.kind == PolicyKind::Static) {
        static_policy = StaticPolicy{cfg.policy.name, cfg.policy.tier_probs};
        check_tier_sizes(tiering.table, cfg.clients_per_round);
        validate_static_policy(static_policy, tiering.table, cfg.clients_per_round);
    }

    const LayerDims dims{cfg.data.dim, cfg.hidden_units, cfg.data.classes};
    ModelParams params = init_params(dims, derive_seed(cfg.seed, "init"));

    std::vector<double> tier_acc;
    AdaptiveState adaptive;
    if (cfg.policy.kind == PolicyKind::Adaptive) {
        check_tier_sizes(tiering.table, cfg.clients_per_round);
        tier_acc = evaluate_tiers(params, tiering.testsets);
        adaptive = make_adaptive_state(cfg.tiers, cfg.rounds, cfg.adaptive.credit_gamma,
                                       cfg.adaptive.interval, tier_acc);
    } else {
        tier_acc.assign(static_cast<std::size_t>(cfg.tiers), 0.0);
    }

    ExperimentResult result;
    result.policy = cfg.policy.name;
    result.rounds.reserve(static_cast<std::size_t>(cfg.rounds));

    double wall_clock = 0.0;
    double global_acc = 0.0;
    int credit_resets = 0;

    for (int r = 0; r < cfg.rounds; ++r) {
        try {
            if (cfg.reprofile_every > 0 && r > 0 && r % cfg.reprofile_every == 0) {
                tiering = tier_up(cfg, profiles, shards, train, holdout,
                                  r / cfg.reprofile_every);
                if (cfg.policy.kind == PolicyKind::Static) {
                    validate_static_policy(static_policy, tiering.table,
                                           cfg.clients_per_round);
                }
                if (cfg.policy.kind == PolicyKind::Adaptive) {
                    check_tier_sizes(tiering.table, cfg.clients_per_round);
                }
            }

            Rng select_rng = make_stream(cfg.seed, "selection", static_cast<std::uint64_t>(r));
            Selection selection;
            bool reset_this_round = false;
            switch (cfg.policy.kind) {
                case PolicyKind::Vanilla:
                    selection = select_vanilla(tiering.pool, cfg.clients_per_round, select_rng);
                    break;
                case PolicyKind::Static:
                    selection = select_static(tiering.table, static_policy,
                                              cfg.clients_per_round, select_rng);
                    break;
                case PolicyKind::Adaptive: {
                    AdaptiveOutcome outcome =
                        adaptive_step(adaptive, r, tier_acc, tiering.table,
                                      cfg.clients_per_round, cfg.adaptive.exhaustion,
                                      select_rng);
                    selection = std::move(outcome.selection);
                    reset_this_round = outcome.credits_reset;
                    if (outcome.credits_reset) {
                        ++credit_resets;
                    }
                    break;
                }
            }

            // clients arrive in ascending id order so aggregation is
            // schedule-independent
            std::vector<ClientUpdate> updates;
            updates.reserve(selection.clients.size());
            for (int c : selection.clients) {
                updates.push_back(local_train(params, train,
                                              shards[static_cast<std::size_t>(c)], cfg.train,
                                              r, derive_seed(cfg.seed, "local-train",
                                                             static_cast<std::uint64_t>(r),
                                                             static_cast<std::uint64_t>(c))));
            }
            params = aggregate(updates);

            std::vector<double> latencies;
            latencies.reserve(selection.clients.size());
            for (int c : selection.clients) {
                Rng lat_rng = make_stream(cfg.seed, "round-latency",
                                          static_cast<std::uint64_t>(r),
                                          static_cast<std::uint64_t>(c));
                latencies.push_back(client_latency(
                    profiles[static_cast<std::size_t>(c)],
                    static_cast<int>(shards[static_cast<std::size_t>(c)].size()), lat_rng));
            }
            const double rl = round_latency(latencies);
            wall_clock += rl;

            if ((r + 1) % cfg.eval_every == 0 || r == cfg.rounds - 1) {
                global_acc = evaluate(params, holdout).accuracy;
                tier_acc = evaluate_tiers(params, tiering.testsets);
            }

            RoundRecord rec;
            rec.round = r;
            rec.policy = cfg.policy.name;
            rec.tier = selection.tier;
            rec.clients = selection.clients;
            rec.round_latency_s = rl;
            rec.wall_clock_s = wall_clock;
            rec.global_acc = global_acc;
            rec.tier_acc = tier_acc;
            rec.credits_reset = reset_this_round;
            if (cfg.policy.kind == PolicyKind::Adaptive) {
                rec.credits = adaptive.credits;
                rec.probs = adaptive.probs;
            } else if (cfg.policy.kind == PolicyKind::Static) {
                rec.probs = static_policy.tier_probs;
            }
            result.rounds.push_back(std::move(rec));
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(r) + ": " + e.what());
        }
    }

    result.params_digest = digest_params(params);
    result.total_wall_clock_s = wall_clock;
    const EvalResult final_eval = evaluate(params, holdout);
    result.final_accuracy = final_eval.accuracy;
    result.final_loss = final_eval.mean_loss;
    result.tier_table = tiering.table;
    result.profile_table = tiering.profile;
    result.credit_resets = credit_resets;
    if (cfg.policy.kind == PolicyKind::Static) {
        result.estimator =
            compare_estimator(result, tiering.table, cfg.policy, cfg.rounds);
    }
    return result;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

void write_rounds_csv(const ExperimentResult& result, std::ostream& out) {
    const int m = result.tier_table.m;
    out << "round,policy,tier,round_latency_s,wall_clock_s,global_acc";
    for (int t = 1; t <= m; ++t) {
        out << ",acc_tier_" << t;
    }
    for (int t = 1; t <= m; ++t) {
        out << ",credits_" << t;
    }
    for (int t = 1; t <= m; ++t) {
        out << ",prob_" << t;
    }
    out << "\n";
    for (const auto& rec : result.rounds) {
        out << rec.round << ',' << rec.policy << ',';
        if (rec.tier.has_value()) {
            out << (*rec.tier + 1);
        }
        out << ',' << format_double(rec.round_latency_s) << ','
            << format_double(rec.wall_clock_s) << ',' << format_double(rec.global_acc);
        for (int t = 0; t < m; ++t) {
            out << ',';
            if (t < static_cast<int>(rec.tier_acc.size())) {
                out << format_double(rec.tier_acc[static_cast<std::size_t>(t)]);
            }
        }
        for (int t = 0; t < m; ++t) {
            out << ',';
            if (t < static_cast<int>(rec.credits.size())) {
                out << rec.credits[static_cast<std::size_t>(t)];
            }
        }
        for (int t = 0; t < m; ++t) {
            out << ',';
            if (t < static_cast<int>(rec.probs.size())) {
                out << format_double(rec.probs[static_cast<std::size_t>(t)]);
            }
        }
        out << "\n";
    }
}

std::string summary_json(const ExperimentResult& result, const SimConfig& cfg) {
    nlohmann::json j;
    j["policy"] = result.policy;
    j["seed"] = cfg.seed;
    j["rounds"] = cfg.rounds;
    j["clients"] = cfg.clients;
    j["clients_per_round"] = cfg.clients_per_round;
    j["tiers"] = cfg.tiers;
    j["final_accuracy"] = result.final_accuracy;
    j["final_loss"] = result.final_loss;
    j["total_wall_clock_s"] = result.total_wall_clock_s;
    j["params_digest"] = result.params_digest;
    j["dropouts"] = result.profile_table.dropouts;
    j["credit_resets"] = result.credit_resets;
    if (result.estimator.has_value()) {
        j["estimator"] = {{"estimated_s", result.estimator->estimated_s},
                          {"actual_s", result.estimator->actual_s},
                          {"mape_pct", result.estimator->mape_pct}};
    } else {
        j["estimator"] = nullptr;
    }
    return j.dump(2) + "\n";
}

}  // namespace fedtier
