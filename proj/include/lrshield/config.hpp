#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lrshield/load_data.hpp"

namespace lrshield {

struct PathsConfig {
    std::string out_dir = "out";
    std::string network = "data/ieee30.json";
    std::vector<std::string> ingest_csvs; // empty => synthesize
};

struct FeaturesConfig {
    int variant = 2;
    int s = -1; // -1: variant default
    int d = -1;
};

struct SplitConfig {
    std::string boundary = "2018-01-01 00:00";
};

struct SvrConfig {
    double epsilon = 0.01;
    double penalty = 100.0;
    double sigma = 0.01;
    int max_train_rows = 2000;
    double tol = 1e-3;
    long max_pair_updates = 2000000;
};

struct SvmConfig {
    double penalty = 2000.0;
    double tau_min = 0.03;
    double sigma = 0.0; // <= 0: 1/q
    double tol = 1e-3;
    long max_pair_updates = 2000000;
    int normal_count = 3000;
    int attacked_train_max = 1600;
    double train_fraction = 0.8;
};

struct AttacksConfig {
    int random_count = 2000;
    int k_min = 2;
    int k_max = 0; // 0 => every load bus
    std::vector<double> tau_grid_pct = {3, 5, 10, 15, 20};
    int cm_hours = 4;
    int lo_hours = 4;
    int lo_lines_per_hour = 2;
    double critical_frac = 0.8;
    int critical_min_lines = 2;
    int node_limit = 200000;
    double m_dual = 4000.0;
    int max_redraws = 200;
};

struct SweepConfig {
    bool enabled = true;
    std::vector<double> tau_min_pct = {1, 3};
    std::vector<double> penalty = {1000, 2000};
};

struct RunConfig {
    PathsConfig paths;
    std::uint64_t seed = 42;
    int jobs = 0; // 0 => hardware concurrency
    bool synth_enabled = true;
    SynthConfig synth;
    FeaturesConfig features;
    SplitConfig split;
    SvrConfig svr;
    SvmConfig svm;
    AttacksConfig attacks;
    SweepConfig sweep;

    int effective_jobs() const;
    CivilHour split_boundary() const;
};

// Strict parser: unknown keys and wrong types raise ConfigError naming the
// offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

// Canonical dump with every field materialized (alphabetical keys).
nlohmann::json config_to_json(const RunConfig& cfg);

// Hash over the named sections of the canonical dump plus the seed; stages
// embed this in their artifacts to detect staleness.
std::string config_hash(const RunConfig& cfg, const std::vector<std::string>& sections);

// Every hard invariant violation, rather than just the first; empty means the
// config is usable.
std::vector<std::string> config_violations(const RunConfig& cfg);

// Throws ConfigError on the first violation.
void validate_config(const RunConfig& cfg);

// Non-fatal diagnostics (e.g. parameters outside the studied regime).
std::vector<std::string> config_warnings(const RunConfig& cfg);

} // namespace lrshield
