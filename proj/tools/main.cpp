#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lrshield/config.hpp"
#include "lrshield/errors.hpp"
#include "lrshield/logging.hpp"
#include "lrshield/runner.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    long long seed = 0;
    bool seed_set = false;
    int jobs = -1;
    bool force = false;
};

// Flags beat the config file, which beats the built-in defaults.
lrshield::RunConfig resolve_config(const CliOverrides& ov) {
    lrshield::RunConfig cfg;
    if (!ov.config_path.empty()) cfg = lrshield::load_config(ov.config_path);
    if (ov.seed_set) {
        if (ov.seed < 0) throw lrshield::ConfigError("seed: must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(ov.seed);
    }
    if (ov.jobs >= 0) cfg.jobs = ov.jobs;
    if (!ov.out_dir.empty()) cfg.paths.out_dir = ov.out_dir;
    return cfg;
}

// The validate subcommand's diagnostics: hard violations plus unresolvable
// paths as errors, regime advisories as warnings.
nlohmann::json diagnose(const lrshield::RunConfig& cfg) {
    std::vector<std::string> errors = lrshield::config_violations(cfg);
    if (!std::filesystem::exists(cfg.paths.network))
        errors.push_back("config.paths.network: cannot resolve '" + cfg.paths.network + "'");
    for (const auto& p : cfg.paths.ingest_csvs)
        if (!std::filesystem::exists(p))
            errors.push_back("config.paths.ingest_csvs: cannot resolve '" + p + "'");
    return nlohmann::json{{"errors", errors}, {"warnings", lrshield::config_warnings(cfg)}};
}

void print_error(const char* kind, const std::string& message) {
    const nlohmann::json j{{"error", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lrshield: load-redistribution attack detection workbench"};
    app.require_subcommand(1);

    CliOverrides ov;
    app.add_option("--config", ov.config_path, "JSON config file (defaults apply without it)");
    auto* seed_opt =
        app.add_option("--seed", ov.seed, "Master seed (overrides the config)");
    app.add_option("--jobs", ov.jobs, "Worker threads, 0 = hardware (overrides the config)");
    app.add_option("--out-dir", ov.out_dir, "Artifact directory (overrides the config)");
    app.add_flag("--force", ov.force, "Rebuild the requested stage even if up to date");

    struct Cmd {
        const char* name;
        const char* help;
        lrshield::Stage stage;
    };
    const Cmd cmds[] = {
        {"synth-data", "Synthesize the hourly load series", lrshield::Stage::Data},
        {"ingest", "Ingest utility CSV exports into the load series", lrshield::Stage::Data},
        {"features", "Build the lagged feature receipt", lrshield::Stage::Features},
        {"train-predictor", "Train the per-load SVR forecasters", lrshield::Stage::Predictor},
        {"gen-attacks", "Generate random and optimized attack scenarios",
         lrshield::Stage::Attacks},
        {"train-detector", "Train the SVM attack detector", lrshield::Stage::Detector},
        {"evaluate", "Score prediction and detection quality", lrshield::Stage::Evaluate},
        {"mitigate", "Re-dispatch consequences with and without detection",
         lrshield::Stage::Mitigate},
        {"report", "Merge stage outputs into the final report", lrshield::Stage::Report},
        {"all", "Run every stage in order", lrshield::Stage::Report},
    };
    for (const auto& c : cmds) app.add_subcommand(c.name, c.help)->fallthrough();
    auto* validate =
        app.add_subcommand("validate", "List config violations and warnings")->fallthrough();

    CLI11_PARSE(app, argc, argv);
    ov.seed_set = seed_opt->count() > 0;

    try {
        const lrshield::RunConfig cfg = resolve_config(ov);

        if (app.got_subcommand(validate)) {
            const nlohmann::json diag = diagnose(cfg);
            std::cout << diag.dump(1) << "\n";
            return diag.at("errors").empty() ? 0 : 2;
        }

        lrshield::validate_config(cfg);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "synth-data" && !cfg.paths.ingest_csvs.empty())
            throw lrshield::ConfigError(
                "synth-data: config sets paths.ingest_csvs; use 'ingest' instead");
        if (sub == "ingest" && cfg.paths.ingest_csvs.empty())
            throw lrshield::ConfigError("ingest: config sets no paths.ingest_csvs");

        for (const auto& c : cmds) {
            if (sub == c.name) {
                lrshield::Runner runner(cfg, ov.force);
                runner.run_stage(c.stage);
                return 0;
            }
        }
        print_error("cli", "unknown subcommand: " + sub);
        return 2;
    } catch (const lrshield::ConfigError& e) {
        print_error("config", e.what());
        return 2;
    } catch (const lrshield::Error& e) {
        print_error("runtime", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
