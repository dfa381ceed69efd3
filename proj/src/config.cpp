#include "lrshield/config.hpp"

#include <algorithm>
#include <thread>

#include <nlohmann/json.hpp>

#include "lrshield/calendar.hpp"
#include "lrshield/errors.hpp"
#include "lrshield/io_util.hpp"

namespace lrshield {

namespace {

void check_keys(const nlohmann::json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(ctx + ": unknown field '" + key + "'");
    }
}

double get_num(const nlohmann::json& j, const char* key, double fallback,
               const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

int get_int(const nlohmann::json& j, const char* key, int fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError(ctx + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}

long get_long(const nlohmann::json& j, const char* key, long fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError(ctx + "." + key + ": expected an integer");
    return j.at(key).get<long>();
}

bool get_bool(const nlohmann::json& j, const char* key, bool fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(ctx + "." + key + ": expected a boolean");
    return j.at(key).get<bool>();
}

std::string get_str(const nlohmann::json& j, const char* key, const std::string& fallback,
                    const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

std::vector<double> get_num_list(const nlohmann::json& j, const char* key,
                                 std::vector<double> fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(ctx + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(ctx + "." + key + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

} // namespace

int RunConfig::effective_jobs() const {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

CivilHour RunConfig::split_boundary() const { return parse_civil(split.boundary); }

RunConfig parse_config(const nlohmann::json& doc) {
    check_keys(doc, "config",
               {"paths", "seed", "jobs", "synth", "features", "split", "svr", "svm", "attacks",
                "sweep"});
    RunConfig cfg;
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_integer() || doc.at("seed").get<long long>() < 0)
            throw ConfigError("config.seed: expected a non-negative integer");
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    }
    cfg.jobs = get_int(doc, "jobs", cfg.jobs, "config");

    if (doc.contains("paths")) {
        const auto& p = doc.at("paths");
        check_keys(p, "config.paths", {"out_dir", "network", "ingest_csvs"});
        cfg.paths.out_dir = get_str(p, "out_dir", cfg.paths.out_dir, "config.paths");
        cfg.paths.network = get_str(p, "network", cfg.paths.network, "config.paths");
        if (p.contains("ingest_csvs")) {
            const auto& v = p.at("ingest_csvs");
            if (!v.is_array()) throw ConfigError("config.paths.ingest_csvs: expected an array");
            for (const auto& e : v) {
                if (!e.is_string())
                    throw ConfigError("config.paths.ingest_csvs: expected an array of strings");
                cfg.paths.ingest_csvs.push_back(e.get<std::string>());
            }
        }
    }

    if (doc.contains("synth")) {
        const auto& s = doc.at("synth");
        check_keys(s, "config.synth",
                   {"enabled", "start_year", "end_year", "annual_amp", "daily_amp", "weekly_amp",
                    "weekend_drop", "noise_sd", "noise_rho", "system_scale", "emulate_dst",
                    "zone_base_mw"});
        cfg.synth_enabled = get_bool(s, "enabled", cfg.synth_enabled, "config.synth");
        cfg.synth.start_year = get_int(s, "start_year", cfg.synth.start_year, "config.synth");
        cfg.synth.end_year = get_int(s, "end_year", cfg.synth.end_year, "config.synth");
        cfg.synth.annual_amp = get_num(s, "annual_amp", cfg.synth.annual_amp, "config.synth");
        cfg.synth.daily_amp = get_num(s, "daily_amp", cfg.synth.daily_amp, "config.synth");
        cfg.synth.weekly_amp = get_num(s, "weekly_amp", cfg.synth.weekly_amp, "config.synth");
        cfg.synth.weekend_drop = get_num(s, "weekend_drop", cfg.synth.weekend_drop, "config.synth");
        cfg.synth.noise_sd = get_num(s, "noise_sd", cfg.synth.noise_sd, "config.synth");
        cfg.synth.noise_rho = get_num(s, "noise_rho", cfg.synth.noise_rho, "config.synth");
        cfg.synth.system_scale = get_num(s, "system_scale", cfg.synth.system_scale, "config.synth");
        cfg.synth.emulate_dst = get_bool(s, "emulate_dst", cfg.synth.emulate_dst, "config.synth");
        if (s.contains("zone_base_mw"))
            cfg.synth.zone_base_mw = get_num_list(s, "zone_base_mw", {}, "config.synth");
    }

    if (doc.contains("features")) {
        const auto& f = doc.at("features");
        check_keys(f, "config.features", {"variant", "s", "d"});
        cfg.features.variant = get_int(f, "variant", cfg.features.variant, "config.features");
        cfg.features.s = get_int(f, "s", cfg.features.s, "config.features");
        cfg.features.d = get_int(f, "d", cfg.features.d, "config.features");
    }

    if (doc.contains("split")) {
        const auto& s = doc.at("split");
        check_keys(s, "config.split", {"boundary"});
        cfg.split.boundary = get_str(s, "boundary", cfg.split.boundary, "config.split");
    }

    if (doc.contains("svr")) {
        const auto& s = doc.at("svr");
        check_keys(s, "config.svr",
                   {"epsilon", "penalty", "sigma", "max_train_rows", "tol", "max_pair_updates"});
        cfg.svr.epsilon = get_num(s, "epsilon", cfg.svr.epsilon, "config.svr");
        cfg.svr.penalty = get_num(s, "penalty", cfg.svr.penalty, "config.svr");
        cfg.svr.sigma = get_num(s, "sigma", cfg.svr.sigma, "config.svr");
        cfg.svr.max_train_rows = get_int(s, "max_train_rows", cfg.svr.max_train_rows, "config.svr");
        cfg.svr.tol = get_num(s, "tol", cfg.svr.tol, "config.svr");
        cfg.svr.max_pair_updates =
            get_long(s, "max_pair_updates", cfg.svr.max_pair_updates, "config.svr");
    }

    if (doc.contains("svm")) {
        const auto& s = doc.at("svm");
        check_keys(s, "config.svm",
                   {"penalty", "tau_min", "sigma", "tol", "max_pair_updates", "normal_count",
                    "attacked_train_max", "train_fraction"});
        cfg.svm.penalty = get_num(s, "penalty", cfg.svm.penalty, "config.svm");
        cfg.svm.tau_min = get_num(s, "tau_min", cfg.svm.tau_min, "config.svm");
        cfg.svm.sigma = get_num(s, "sigma", cfg.svm.sigma, "config.svm");
        cfg.svm.tol = get_num(s, "tol", cfg.svm.tol, "config.svm");
        cfg.svm.max_pair_updates =
            get_long(s, "max_pair_updates", cfg.svm.max_pair_updates, "config.svm");
        cfg.svm.normal_count = get_int(s, "normal_count", cfg.svm.normal_count, "config.svm");
        cfg.svm.attacked_train_max =
            get_int(s, "attacked_train_max", cfg.svm.attacked_train_max, "config.svm");
        cfg.svm.train_fraction =
            get_num(s, "train_fraction", cfg.svm.train_fraction, "config.svm");
    }

    if (doc.contains("attacks")) {
        const auto& a = doc.at("attacks");
        check_keys(a, "config.attacks",
                   {"random_count", "k_min", "k_max", "tau_grid_pct", "cm_hours", "lo_hours",
                    "lo_lines_per_hour", "critical_frac", "critical_min_lines", "node_limit",
                    "m_dual", "max_redraws"});
        cfg.attacks.random_count =
            get_int(a, "random_count", cfg.attacks.random_count, "config.attacks");
        cfg.attacks.k_min = get_int(a, "k_min", cfg.attacks.k_min, "config.attacks");
        cfg.attacks.k_max = get_int(a, "k_max", cfg.attacks.k_max, "config.attacks");
        cfg.attacks.tau_grid_pct =
            get_num_list(a, "tau_grid_pct", cfg.attacks.tau_grid_pct, "config.attacks");
        cfg.attacks.cm_hours = get_int(a, "cm_hours", cfg.attacks.cm_hours, "config.attacks");
        cfg.attacks.lo_hours = get_int(a, "lo_hours", cfg.attacks.lo_hours, "config.attacks");
        cfg.attacks.lo_lines_per_hour =
            get_int(a, "lo_lines_per_hour", cfg.attacks.lo_lines_per_hour, "config.attacks");
        cfg.attacks.critical_frac =
            get_num(a, "critical_frac", cfg.attacks.critical_frac, "config.attacks");
        cfg.attacks.critical_min_lines =
            get_int(a, "critical_min_lines", cfg.attacks.critical_min_lines, "config.attacks");
        cfg.attacks.node_limit = get_int(a, "node_limit", cfg.attacks.node_limit, "config.attacks");
        cfg.attacks.m_dual = get_num(a, "m_dual", cfg.attacks.m_dual, "config.attacks");
        cfg.attacks.max_redraws =
            get_int(a, "max_redraws", cfg.attacks.max_redraws, "config.attacks");
    }

    if (doc.contains("sweep")) {
        const auto& s = doc.at("sweep");
        check_keys(s, "config.sweep", {"enabled", "tau_min_pct", "penalty"});
        cfg.sweep.enabled = get_bool(s, "enabled", cfg.sweep.enabled, "config.sweep");
        cfg.sweep.tau_min_pct = get_num_list(s, "tau_min_pct", cfg.sweep.tau_min_pct, "config.sweep");
        cfg.sweep.penalty = get_num_list(s, "penalty", cfg.sweep.penalty, "config.sweep");
    }

    // Semantic range checks live in validate_config so the validate command
    // can list every violation of a parseable file.
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = read_json_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc);
}

std::vector<std::string> config_violations(const RunConfig& cfg) {
    std::vector<std::string> out;
    const std::string c = "config";
    const auto bad = [&](const std::string& msg) { out.push_back(c + msg); };
    if (cfg.jobs < 0) bad(".jobs: must be >= 0");
    if (cfg.synth.start_year < 1970 || cfg.synth.end_year > 2100 ||
        cfg.synth.start_year > cfg.synth.end_year)
        bad(".synth: bad year range");
    if (cfg.synth.noise_rho < 0 || cfg.synth.noise_rho >= 1)
        bad(".synth.noise_rho: must lie in [0, 1)");
    if (cfg.synth.noise_sd < 0) bad(".synth.noise_sd: must be >= 0");
    if (cfg.synth.system_scale <= 0) bad(".synth.system_scale: must be > 0");
    if (cfg.features.variant < 1 || cfg.features.variant > 3)
        bad(".features.variant: must be 1, 2 or 3");
    if (cfg.features.s == 0 || cfg.features.s < -1 || cfg.features.d < -1)
        bad(".features: s must be -1 or >= 1, d must be -1 or >= 0");
    try {
        (void)parse_civil(cfg.split.boundary);
    } catch (const Error& e) {
        bad(std::string(".split.boundary: ") + e.what());
    }
    if (cfg.svr.epsilon < 0) bad(".svr.epsilon: must be >= 0");
    if (cfg.svr.penalty <= 0) bad(".svr.penalty: must be > 0");
    if (cfg.svr.sigma <= 0) bad(".svr.sigma: must be > 0");
    if (cfg.svr.max_train_rows < 0) bad(".svr.max_train_rows: must be >= 0");
    if (cfg.svr.tol <= 0) bad(".svr.tol: must be > 0");
    if (cfg.svm.penalty <= 0) bad(".svm.penalty: must be > 0");
    if (cfg.svm.tau_min < 0 || cfg.svm.tau_min >= 1) bad(".svm.tau_min: must lie in [0, 1)");
    if (cfg.svm.tol <= 0) bad(".svm.tol: must be > 0");
    if (cfg.svm.normal_count < 0) bad(".svm.normal_count: must be >= 0");
    if (cfg.svm.train_fraction <= 0 || cfg.svm.train_fraction >= 1)
        bad(".svm.train_fraction: must lie in (0, 1)");
    if (cfg.attacks.random_count < 0) bad(".attacks.random_count: must be >= 0");
    if (cfg.attacks.k_min < 2) bad(".attacks.k_min: must be >= 2");
    if (cfg.attacks.k_max != 0 && cfg.attacks.k_max < cfg.attacks.k_min)
        bad(".attacks.k_max: must be 0 or >= k_min");
    for (double t : cfg.attacks.tau_grid_pct)
        if (t <= 0 || t > 20) {
            bad(".attacks.tau_grid_pct: entries in (0, 20]");
            break;
        }
    if (cfg.attacks.cm_hours < 0 || cfg.attacks.lo_hours < 0 ||
        cfg.attacks.lo_lines_per_hour < 0)
        bad(".attacks: hour/line counts must be >= 0");
    if (cfg.attacks.critical_frac <= 0 || cfg.attacks.critical_frac > 1)
        bad(".attacks.critical_frac: must lie in (0, 1]");
    if (cfg.attacks.critical_min_lines < 1) bad(".attacks.critical_min_lines: must be >= 1");
    if (cfg.attacks.node_limit < 1) bad(".attacks.node_limit: must be >= 1");
    if (cfg.attacks.m_dual <= 0) bad(".attacks.m_dual: must be > 0");
    if (cfg.attacks.max_redraws < 1) bad(".attacks.max_redraws: must be >= 1");
    for (double t : cfg.sweep.tau_min_pct)
        if (t < 0 || t >= 100) {
            bad(".sweep.tau_min_pct: entries in [0, 100)");
            break;
        }
    for (double p : cfg.sweep.penalty)
        if (p <= 0) {
            bad(".sweep.penalty: entries must be > 0");
            break;
        }
    for (double v : cfg.synth.zone_base_mw)
        if (v <= 0) {
            bad(".synth.zone_base_mw: entries must be > 0");
            break;
        }
    return out;
}

void validate_config(const RunConfig& cfg) {
    const std::vector<std::string> violations = config_violations(cfg);
    if (!violations.empty()) throw ConfigError(violations.front());
}

std::vector<std::string> config_warnings(const RunConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.svm.tau_min > 0.2)
        out.push_back("svm.tau_min exceeds the tau <= 20% regime the study covers");
    for (double t : cfg.sweep.tau_min_pct)
        if (t > 20) {
            out.push_back("sweep.tau_min_pct has entries above the tau <= 20% regime");
            break;
        }
    for (double t : cfg.attacks.tau_grid_pct)
        if (t > 20) {
            out.push_back("attacks.tau_grid_pct has entries above the tau <= 20% regime");
            break;
        }
    return out;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    return nlohmann::json{
        {"paths",
         {{"out_dir", cfg.paths.out_dir},
          {"network", cfg.paths.network},
          {"ingest_csvs", cfg.paths.ingest_csvs}}},
        {"seed", cfg.seed},
        {"jobs", cfg.jobs},
        {"synth",
         {{"enabled", cfg.synth_enabled},
          {"start_year", cfg.synth.start_year},
          {"end_year", cfg.synth.end_year},
          {"annual_amp", cfg.synth.annual_amp},
          {"daily_amp", cfg.synth.daily_amp},
          {"weekly_amp", cfg.synth.weekly_amp},
          {"weekend_drop", cfg.synth.weekend_drop},
          {"noise_sd", cfg.synth.noise_sd},
          {"noise_rho", cfg.synth.noise_rho},
          {"system_scale", cfg.synth.system_scale},
          {"emulate_dst", cfg.synth.emulate_dst},
          {"zone_base_mw", cfg.synth.zone_base_mw}}},
        {"features",
         {{"variant", cfg.features.variant}, {"s", cfg.features.s}, {"d", cfg.features.d}}},
        {"split", {{"boundary", cfg.split.boundary}}},
        {"svr",
         {{"epsilon", cfg.svr.epsilon},
          {"penalty", cfg.svr.penalty},
          {"sigma", cfg.svr.sigma},
          {"max_train_rows", cfg.svr.max_train_rows},
          {"tol", cfg.svr.tol},
          {"max_pair_updates", cfg.svr.max_pair_updates}}},
        {"svm",
         {{"penalty", cfg.svm.penalty},
          {"tau_min", cfg.svm.tau_min},
          {"sigma", cfg.svm.sigma},
          {"tol", cfg.svm.tol},
          {"max_pair_updates", cfg.svm.max_pair_updates},
          {"normal_count", cfg.svm.normal_count},
          {"attacked_train_max", cfg.svm.attacked_train_max},
          {"train_fraction", cfg.svm.train_fraction}}},
        {"attacks",
         {{"random_count", cfg.attacks.random_count},
          {"k_min", cfg.attacks.k_min},
          {"k_max", cfg.attacks.k_max},
          {"tau_grid_pct", cfg.attacks.tau_grid_pct},
          {"cm_hours", cfg.attacks.cm_hours},
          {"lo_hours", cfg.attacks.lo_hours},
          {"lo_lines_per_hour", cfg.attacks.lo_lines_per_hour},
          {"critical_frac", cfg.attacks.critical_frac},
          {"critical_min_lines", cfg.attacks.critical_min_lines},
          {"node_limit", cfg.attacks.node_limit},
          {"m_dual", cfg.attacks.m_dual},
          {"max_redraws", cfg.attacks.max_redraws}}},
        {"sweep",
         {{"enabled", cfg.sweep.enabled},
          {"tau_min_pct", cfg.sweep.tau_min_pct},
          {"penalty", cfg.sweep.penalty}}}};
}

std::string config_hash(const RunConfig& cfg, const std::vector<std::string>& sections) {
    const nlohmann::json full = config_to_json(cfg);
    nlohmann::json subset;
    subset["seed"] = cfg.seed;
    for (const auto& name : sections) {
        if (!full.contains(name)) throw ConfigError("config_hash: unknown section '" + name + "'");
        subset[name] = full.at(name);
    }
    return hash_hex(fnv1a64(subset.dump()));
}

} // namespace lrshield
