#include "fedtier/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedtier/analytics.hpp"
#include "fedtier/config.hpp"
#include "fedtier/engine.hpp"

namespace fedtier {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw std::invalid_argument(flag + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) {
        throw std::invalid_argument(flag + ": empty list");
    }
    return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

fs::path resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) {
        return flag_value;
    }
    if (const char* env = std::getenv("FEDTIER_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f.good()) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    f << content;
    if (!f.good()) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string policy;
    int rounds = 0;  // 0 = no override
};

SimConfig load_with_overrides(const RunOptions& opt) {
    SimConfig cfg = load_config_file(opt.config_path);
    if (opt.seed.has_value()) {
        cfg.seed = *opt.seed;
    }
    if (!opt.policy.empty()) {
        cfg.policy = parse_policy_name(opt.policy, cfg.tiers);
    }
    if (opt.rounds > 0) {
        cfg.rounds = opt.rounds;
    }
    validate_config(cfg);
    return cfg;
}

void write_run_artifacts(const SimConfig& cfg, const ExperimentResult& result,
                         const fs::path& dir, const std::string& suffix) {
    std::ostringstream csv;
    write_rounds_csv(result, csv);
    write_file(dir / ("rounds" + suffix + ".csv"), csv.str());
    write_file(dir / ("summary" + suffix + ".json"), summary_json(result, cfg));
}

int cmd_run(const RunOptions& opt, std::ostream& out) {
    const SimConfig cfg = load_with_overrides(opt);
    const fs::path dir = resolve_out_dir(opt.out_dir);
    fs::create_directories(dir);
    const ExperimentResult result = run_experiment(cfg);
    write_run_artifacts(cfg, result, dir, "");
    write_file(dir / "tiering.json",
               tier_table_to_json(result.tier_table, result.profile_table));
    out << "wrote " << (dir / "rounds.csv").string() << ", "
        << (dir / "summary.json").string() << ", " << (dir / "tiering.json").string()
        << "\n";
    return 0;
}

int cmd_sweep(const RunOptions& opt, const std::string& policies_flag, std::ostream& out) {
    const std::vector<std::string> policies = parse_name_list(policies_flag);
    if (policies.empty()) {
        throw std::invalid_argument("--policies: need at least one policy name");
    }
    const fs::path dir = resolve_out_dir(opt.out_dir);
    fs::create_directories(dir);

    nlohmann::json comparison;
    comparison["policies"] = nlohmann::json::array();
    std::optional<double> vanilla_wall;
    bool wrote_tiering = false;

    std::vector<std::pair<std::string, ExperimentResult>> results;
    for (const std::string& name : policies) {
        RunOptions per = opt;
        per.policy = name;
        const SimConfig cfg = load_with_overrides(per);
        ExperimentResult result = run_experiment(cfg);
        if (!wrote_tiering) {
            write_file(dir / "tiering.json",
                       tier_table_to_json(result.tier_table, result.profile_table));
            wrote_tiering = true;
        }
        write_run_artifacts(cfg, result, dir, "_" + name);
        if (name == "vanilla") {
            vanilla_wall = result.total_wall_clock_s;
        }
        comparison["seed"] = cfg.seed;
        comparison["rounds"] = cfg.rounds;
        results.emplace_back(name, std::move(result));
    }
    for (const auto& [name, result] : results) {
        nlohmann::json entry;
        entry["policy"] = name;
        entry["final_accuracy"] = result.final_accuracy;
        entry["total_wall_clock_s"] = result.total_wall_clock_s;
        if (vanilla_wall.has_value() && result.total_wall_clock_s > 0.0) {
            entry["speedup_vs_vanilla"] = *vanilla_wall / result.total_wall_clock_s;
        } else {
            entry["speedup_vs_vanilla"] = nullptr;
        }
        comparison["policies"].push_back(std::move(entry));
    }
    write_file(dir / "comparison.json", comparison.dump(2) + "\n");
    out << "wrote " << (dir / "comparison.json").string() << " (" << results.size()
        << " policies)\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tier-based federated learning simulator and calculators"};
    app.require_subcommand(1);

    RunOptions opt;
    std::string policies_flag;

    auto add_run_flags = [&](CLI::App* cmd, bool with_policy) {
        cmd->add_option("--config", opt.config_path, "config file (JSON)")->required();
        cmd->add_option("--out", opt.out_dir, "output directory (default: $FEDTIER_OUT or ./out)");
        cmd->add_option("--seed", opt.seed, "seed override");
        cmd->add_option("--rounds", opt.rounds, "rounds override");
        if (with_policy) {
            cmd->add_option("--policy", opt.policy, "policy override (vanilla, adaptive, or a preset)");
        }
    };

    CLI::App* run = app.add_subcommand("run", "run one experiment and write artifacts");
    add_run_flags(run, true);

    CLI::App* sweep = app.add_subcommand("sweep", "run several policies on one seed and compare");
    add_run_flags(sweep, false);
    sweep->add_option("--policies", policies_flag, "comma-separated policy names")->required();

    CLI::App* analyze = app.add_subcommand("analyze", "closed-form calculators (JSON on stdout)");
    analyze->require_subcommand(1);

    long long a_k = 0, a_c = 0, a_slow = 0;
    CLI::App* straggler = analyze->add_subcommand("straggler", "straggler-selection probability");
    straggler->add_option("--k", a_k, "total clients")->required();
    straggler->add_option("--c", a_c, "clients per round")->required();
    straggler->add_option("--slow", a_slow, "slowest-level size")->required();

    CLI::App* bound = analyze->add_subcommand("straggler-bound", "closed-form lower bound");
    bound->add_option("--k", a_k, "total clients")->required();
    bound->add_option("--c", a_c, "clients per round")->required();
    bound->add_option("--slow", a_slow, "slowest-level size")->required();

    std::string latencies_flag, probs_flag, weights_flag, sizes_flag;
    long long est_rounds = 0;
    CLI::App* estimate = analyze->add_subcommand("estimate", "expected total training time");
    estimate->add_option("--latencies", latencies_flag, "per-tier latencies, comma-separated")->required();
    estimate->add_option("--probs", probs_flag, "per-tier probabilities, comma-separated")->required();
    estimate->add_option("--rounds", est_rounds, "training rounds")->required();

    double m_est = 0.0, m_act = 0.0;
    CLI::App* mape_cmd = analyze->add_subcommand("mape", "absolute percentage error");
    mape_cmd->add_option("--estimated", m_est, "estimated seconds")->required();
    mape_cmd->add_option("--actual", m_act, "actual seconds")->required();

    double p_eps = 0.0, p_delta = 0.0;
    long long p_c = 0, p_k = 0;
    CLI::App* privacy = analyze->add_subcommand("privacy", "subsampling amplification factors");
    privacy->add_option("--epsilon", p_eps, "per-round epsilon")->required();
    privacy->add_option("--delta", p_delta, "per-round delta")->required();
    privacy->add_option("--c", p_c, "clients per round")->required();
    privacy->add_option("--k", p_k, "total clients")->required();
    privacy->add_option("--tier-sizes", sizes_flag, "per-tier client counts, comma-separated")->required();
    privacy->add_option("--tier-weights", weights_flag, "per-tier weights (default all 1)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream msg;
        const int code = app.exit(e, msg, msg);
        (code == 0 ? out : err) << msg.str();
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(opt, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(opt, policies_flag, out);
        }
        nlohmann::json j;
        if (straggler->parsed()) {
            j["pr_s"] = straggler_prob({a_k, a_c, a_slow});
        } else if (bound->parsed()) {
            j["bound"] = straggler_prob_bound({a_k, a_c, a_slow});
        } else if (estimate->parsed()) {
            const auto lat = parse_double_list(latencies_flag, "--latencies");
            const auto probs = parse_double_list(probs_flag, "--probs");
            j["seconds"] = estimate_training_time(lat, probs, est_rounds);
        } else if (mape_cmd->parsed()) {
            j["mape_pct"] = mape(m_est, m_act);
        } else if (privacy->parsed()) {
            PrivacyParams params;
            params.epsilon = p_eps;
            params.delta = p_delta;
            params.c = p_c;
            params.k = p_k;
            for (double s : parse_double_list(sizes_flag, "--tier-sizes")) {
                if (s != std::floor(s)) {
                    throw std::invalid_argument("--tier-sizes: entries must be integers");
                }
                params.tier_sizes.push_back(static_cast<long long>(s));
            }
            params.tier_weights =
                weights_flag.empty()
                    ? std::vector<double>(params.tier_sizes.size(), 1.0)
                    : parse_double_list(weights_flag, "--tier-weights");
            const Amplification amp = privacy_amplification(params);
            j["epsilon"] = params.epsilon;
            j["delta"] = params.delta;
            j["q_uniform"] = amp.q_uniform;
            j["q"] = amp.q;
            j["q_max"] = amp.q_max;
        }
        out << j.dump() << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fedtier
