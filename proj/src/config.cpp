#include "fedtier/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fedtier {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config: field '" + path + "' " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) {
        throw std::invalid_argument("config: missing required field '" +
                                    (path.empty() ? key : path + "." + key) + "'");
    }
    return j.at(key);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

int get_int(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number_integer()) {
        fail(join(path, key), "must be an integer");
    }
    return v.get<int>();
}

int get_int_or(const json& j, const std::string& key, const std::string& path, int fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    return get_int(j, key, path);
}

double get_num(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) {
        fail(join(path, key), "must be a number");
    }
    return v.get<double>();
}

double get_num_or(const json& j, const std::string& key, const std::string& path,
                  double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    return get_num(j, key, path);
}

std::vector<double> get_num_array(const json& j, const std::string& key,
                                  const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_array()) {
        fail(join(path, key), "must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) {
            fail(join(path, key), "must contain only numbers");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

PolicyConfig parse_policy(const json& j, int tiers) {
    if (j.is_string()) {
        return parse_policy_name(j.get<std::string>(), tiers);
    }
    if (j.is_object()) {
        PolicyConfig p;
        p.kind = PolicyKind::Static;
        p.name = "custom";
        p.tier_probs = get_num_array(j, "tier_probs", "policy");
        return p;
    }
    fail("policy", "must be a policy name or an object with tier_probs");
}

}  // namespace

PolicyConfig parse_policy_name(const std::string& name, int tiers) {
    PolicyConfig p;
    if (name == "vanilla") {
        p.kind = PolicyKind::Vanilla;
        p.name = name;
        return p;
    }
    if (name == "adaptive") {
        p.kind = PolicyKind::Adaptive;
        p.name = name;
        return p;
    }
    if (is_static_preset(name)) {
        p.kind = PolicyKind::Static;
        p.name = name;
        p.tier_probs = static_policy_preset(name, tiers).tier_probs;
        return p;
    }
    throw std::invalid_argument("config: field 'policy' has unknown policy '" + name + "'");
}

SimConfig parse_config_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    SimConfig cfg;
    cfg.clients = get_int(j, "clients", "");
    cfg.clients_per_round = get_int(j, "clients_per_round", "");
    cfg.tiers = get_int(j, "tiers", "");
    cfg.rounds = get_int(j, "rounds", "");
    const json& seed = require(j, "seed", "");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        fail("seed", "must be an unsigned integer");
    }
    cfg.seed = seed.get<std::uint64_t>();

    const json& groups = require(j, "groups", "");
    if (!groups.is_array() || groups.empty()) {
        fail("groups", "must be a non-empty array");
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::string path = "groups[" + std::to_string(g) + "]";
        const json& gj = groups[g];
        GroupConfig gc;
        gc.count = get_int(gj, "count", path);
        gc.profile.cpu_share = get_num(gj, "cpu_share", path);
        gc.profile.comm_base = get_num_or(gj, "comm_base", path, 0.5);
        gc.profile.per_sample_cost = get_num(gj, "per_sample_cost", path);
        gc.profile.jitter_sd = get_num_or(gj, "jitter_sd", path, 0.0);
        cfg.groups.push_back(gc);
    }

    const json& data = require(j, "data", "");
    cfg.data.classes = get_int(data, "classes", "data");
    cfg.data.samples_per_class = get_int(data, "samples_per_class", "data");
    cfg.data.holdout_per_class = get_int(data, "holdout_per_class", "data");
    cfg.data.dim = get_int(data, "dim", "data");
    cfg.data.spread = get_num(data, "spread", "data");
    const json& part = require(data, "partition", "data");
    const json& mode = require(part, "mode", "data.partition");
    if (!mode.is_string()) {
        fail("data.partition.mode", "must be a string");
    }
    const std::string mode_name = mode.get<std::string>();
    if (mode_name == "iid") {
        cfg.data.partition.mode = PartitionMode::Iid;
    } else if (mode_name == "quantity") {
        cfg.data.partition.mode = PartitionMode::Quantity;
    } else if (mode_name == "noniid") {
        cfg.data.partition.mode = PartitionMode::NonIid;
    } else if (mode_name == "quantity+noniid") {
        cfg.data.partition.mode = PartitionMode::QuantityNonIid;
    } else {
        fail("data.partition.mode",
             "must be one of iid, quantity, noniid, quantity+noniid");
    }
    if (cfg.data.partition.mode == PartitionMode::Quantity ||
        cfg.data.partition.mode == PartitionMode::QuantityNonIid) {
        cfg.data.partition.fractions = get_num_array(part, "fractions", "data.partition");
    }
    if (cfg.data.partition.mode == PartitionMode::NonIid ||
        cfg.data.partition.mode == PartitionMode::QuantityNonIid) {
        cfg.data.partition.shards_per_client =
            get_int(part, "shards_per_client", "data.partition");
    }

    if (j.contains("train")) {
        const json& train = j.at("train");
        cfg.train.learning_rate = get_num_or(train, "learning_rate", "train", 0.01);
        cfg.train.decay = get_num_or(train, "decay", "train", 0.995);
        cfg.train.batch_size = get_int_or(train, "batch_size", "train", 10);
        cfg.train.local_epochs = get_int_or(train, "local_epochs", "train", 1);
        cfg.hidden_units = get_int_or(train, "hidden_units", "train", 0);
    }

    if (j.contains("profiling")) {
        const json& prof = j.at("profiling");
        cfg.profiling.sync_rounds = get_int_or(prof, "sync_rounds", "profiling", 3);
        cfg.profiling.t_max = get_num_or(prof, "t_max", "profiling", 60.0);
    }

    cfg.policy = parse_policy(require(j, "policy", ""), cfg.tiers);

    if (j.contains("adaptive")) {
        const json& ad = j.at("adaptive");
        cfg.adaptive.interval = get_int_or(ad, "interval", "adaptive", 10);
        cfg.adaptive.credit_gamma = get_num_or(ad, "credit_gamma", "adaptive", 1.2);
        if (ad.contains("exhaustion")) {
            const json& ex = ad.at("exhaustion");
            if (!ex.is_string()) {
                fail("adaptive.exhaustion", "must be a string");
            }
            const std::string ex_name = ex.get<std::string>();
            if (ex_name == "reset") {
                cfg.adaptive.exhaustion = ExhaustionPolicy::ResetCredits;
            } else if (ex_name == "vanilla") {
                cfg.adaptive.exhaustion = ExhaustionPolicy::VanillaFallback;
            } else {
                fail("adaptive.exhaustion", "must be 'reset' or 'vanilla'");
            }
        }
    }

    cfg.reprofile_every = get_int_or(j, "reprofile_every", "", 0);
    cfg.eval_every = get_int_or(j, "eval_every", "", 1);
    cfg.tier_testset_size = get_int_or(j, "tier_testset_size", "", 250);

    validate_config(cfg);
    return cfg;
}

SimConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) {
        throw std::invalid_argument("config: cannot open file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

void validate_config(const SimConfig& cfg) {
    if (cfg.clients < 1) {
        fail("clients", "must be >= 1");
    }
    if (cfg.clients_per_round < 1 || cfg.clients_per_round > cfg.clients) {
        fail("clients_per_round", "must be in [1, clients]");
    }
    if (cfg.tiers < 1 || cfg.tiers > cfg.clients) {
        fail("tiers", "must be in [1, clients]");
    }
    if (cfg.rounds < 1) {
        fail("rounds", "must be >= 1");
    }
    int total = 0;
    for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
        const std::string path = "groups[" + std::to_string(g) + "]";
        const auto& gc = cfg.groups[g];
        if (gc.count < 1) {
            fail(path + ".count", "must be >= 1");
        }
        if (!(gc.profile.cpu_share > 0.0)) {
            fail(path + ".cpu_share", "must be positive");
        }
        if (!(gc.profile.per_sample_cost > 0.0)) {
            fail(path + ".per_sample_cost", "must be positive");
        }
        if (gc.profile.comm_base < 0.0) {
            fail(path + ".comm_base", "must be >= 0");
        }
        if (gc.profile.jitter_sd < 0.0) {
            fail(path + ".jitter_sd", "must be >= 0");
        }
        total += gc.count;
    }
    if (total != cfg.clients) {
        fail("groups", "counts must sum to clients");
    }
    if (cfg.data.classes < 1 || cfg.data.samples_per_class < 1 || cfg.data.dim < 1) {
        fail("data", "classes, samples_per_class and dim must be >= 1");
    }
    if (cfg.data.holdout_per_class < 1) {
        fail("data.holdout_per_class", "must be >= 1");
    }
    if (!(cfg.data.spread > 0.0)) {
        fail("data.spread", "must be positive");
    }
    const auto& part = cfg.data.partition;
    if (part.mode == PartitionMode::Quantity || part.mode == PartitionMode::QuantityNonIid) {
        if (part.fractions.size() != cfg.groups.size()) {
            fail("data.partition.fractions", "length must equal the number of groups");
        }
        double sum = 0.0;
        for (double f : part.fractions) {
            if (f < 0.0) {
                fail("data.partition.fractions", "must be non-negative");
            }
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            fail("data.partition.fractions", "must sum to 1");
        }
    }
    if ((part.mode == PartitionMode::NonIid || part.mode == PartitionMode::QuantityNonIid) &&
        part.shards_per_client < 1) {
        fail("data.partition.shards_per_client", "must be >= 1");
    }
    if (cfg.train.learning_rate < 0.0 || !std::isfinite(cfg.train.learning_rate)) {
        // 0 is allowed: it turns training into a no-op, useful for
        // latency-only measurement runs
        fail("train.learning_rate", "must be finite and >= 0");
    }
    if (!(cfg.train.decay > 0.0) || cfg.train.decay > 1.0) {
        fail("train.decay", "must be in (0, 1]");
    }
    if (cfg.train.batch_size < 1 || cfg.train.local_epochs < 1) {
        fail("train", "batch_size and local_epochs must be >= 1");
    }
    if (cfg.hidden_units < 0) {
        fail("train.hidden_units", "must be >= 0");
    }
    if (cfg.profiling.sync_rounds < 1) {
        fail("profiling.sync_rounds", "must be >= 1");
    }
    if (!(cfg.profiling.t_max > 0.0)) {
        fail("profiling.t_max", "must be positive");
    }
    if (cfg.policy.kind == PolicyKind::Static) {
        if (static_cast<int>(cfg.policy.tier_probs.size()) != cfg.tiers) {
            fail("policy.tier_probs", "length must equal tiers");
        }
        double sum = 0.0;
        for (double p : cfg.policy.tier_probs) {
            if (p < 0.0) {
                fail("policy.tier_probs", "must be non-negative");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            fail("policy.tier_probs", "must sum to 1");
        }
    }
    if (cfg.policy.kind == PolicyKind::Adaptive) {
        if (cfg.adaptive.interval < 1) {
            fail("adaptive.interval", "must be >= 1");
        }
        if (!(cfg.adaptive.credit_gamma > 0.0)) {
            fail("adaptive.credit_gamma", "must be positive");
        }
        if (cfg.eval_every != 1 && cfg.adaptive.interval % cfg.eval_every != 0) {
            fail("eval_every", "must divide adaptive.interval for adaptive runs");
        }
    }
    if (cfg.reprofile_every < 0) {
        fail("reprofile_every", "must be >= 0");
    }
    if (cfg.eval_every < 1) {
        fail("eval_every", "must be >= 1");
    }
    if (cfg.tier_testset_size < 1) {
        fail("tier_testset_size", "must be >= 1");
    }
}

}  // namespace fedtier
