#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "lrshield/config.hpp"
#include "lrshield/grid.hpp"
#include "lrshield/pipeline.hpp"

namespace lrshield {

enum class Stage { Data, Features, Predictor, Attacks, Detector, Evaluate, Mitigate, Report };

std::string to_string(Stage s);

// Orchestrates the pipeline stages with artifact-level caching: every stage
// writes a receipt carrying a hash of the config sections it depends on, and
// a stage is rebuilt only when its artifact is missing or its hash is stale.
class Runner {
  public:
    Runner(RunConfig cfg, bool force_target = false);

    // Runs `target`, ensuring its parents first. `force_target` from the
    // constructor applies to the target stage only.
    void run_stage(Stage target);

    // Canonical config, derived stage hashes and artifact paths.
    nlohmann::json describe() const;

    const RunConfig& config() const { return cfg_; }
    std::filesystem::path out_dir() const { return out_; }

    // Lazy accessors (parents must have been ensured).  Exposed for tests.
    const Grid& grid();
    const LoadSeries& series();
    const FeatureDataset& dataset();
    const SplitCounts& split();
    const PredictorBundle& bundle();
    const std::vector<AttackScenario>& scenarios();
    const DetectorDataset& detector_data();
    const DetectorModel& detector();

  private:
    std::string stage_hash(Stage s) const;
    bool receipt_fresh(const std::filesystem::path& artifact, const std::string& want) const;

    void ensure_data(bool force);
    void ensure_features(bool force);
    void ensure_predictor(bool force);
    void ensure_attacks(bool force);
    void ensure_detector(bool force);
    void ensure_evaluate(bool force);
    void ensure_mitigate(bool force);
    void ensure_report(bool force);

    RunConfig cfg_;
    bool force_;
    std::filesystem::path out_;

    std::optional<Grid> grid_;
    std::optional<LoadSeries> series_;
    std::optional<FeatureDataset> ds_;
    SplitCounts split_{};
    std::optional<PredictorBundle> bundle_;
    std::optional<std::vector<AttackScenario>> scenarios_;
    std::optional<DetectorDataset> det_data_;
    std::optional<DetectorModel> detector_;
};

} // namespace lrshield
