#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrshield/attack.hpp"
#include "lrshield/dcopf.hpp"
#include "lrshield/grid.hpp"
#include "lrshield/kernel_machines.hpp"
#include "lrshield/load_data.hpp"

namespace lrshield {

// ---------------------------------------------------------------------------
// Hour-ahead load prediction: one SVR per load bus.

struct PredictorConfig {
    int variant = 2;
    int s = -1, d = -1;          // -1: variant defaults
    double epsilon = 0.01;
    double penalty = 100.0;
    double sigma = 0.01;
    int max_train_rows = 2000;   // 0 = use every training sample
    TrainOptions train;
};

struct PredictorBundle {
    KernelSpec kernel;
    double epsilon = 0.01;
    double penalty = 100.0;
    int variant = 2, lag_s = 3, lag_d = 2, n_loads = 0;
    Eigen::VectorXd x_mean, x_std, y_mean, y_std;
    std::shared_ptr<const Eigen::MatrixXd> train_x; // standardized rows, all columns
    std::vector<int> train_row_ids;                 // dataset sample ids used
    std::vector<SvrModel> models;                   // one per load

    // Predictions in MW for the given dataset samples; ds must be the
    // standardized dataset the bundle was fitted on (checked by hash of the
    // scaler vectors).
    Eigen::MatrixXd predict_mw(const FeatureDataset& ds, const std::vector<int>& sample_ids,
                               int jobs = 1) const;
};

PredictorBundle train_predictor(const FeatureDataset& ds, const SplitCounts& split,
                                const PredictorConfig& cfg, int jobs);

nlohmann::json predictor_to_json(const PredictorBundle& b);
PredictorBundle predictor_from_json(const nlohmann::json& j);

struct LoadMetrics {
    Eigen::VectorXd rmse_mw; // per load
    Eigen::VectorXd mape;    // per load, fractional
};

LoadMetrics metrics_rmse_mape(const Eigen::MatrixXd& truth_mw, const Eigen::MatrixXd& pred_mw);

// ---------------------------------------------------------------------------
// Attack detector.

struct DetectorSample {
    Eigen::VectorXd u;        // [month, weekday_flag, hour, predicted MW..., observed MW...]
    int label = -1;           // +1 attacked, -1 normal
    double tau_real = 0.0;
    double tau_requested = 0.0;
    int hour = -1;            // series row of the observed loads
    AttackKind kind = AttackKind::Random;
    int scenario_id = -1;     // -1 for normals
    bool is_train = false;
};

struct DetectorDataset {
    std::vector<DetectorSample> samples;
    int q = 0; // feature dimension
};

struct DetectorBuildConfig {
    int normal_count = 3000;
    int attacked_train_max = 1600;
    double train_fraction = 0.8;
};

// Assembles normal and attacked detector samples.  Normals are a seeded
// subsample of the full prediction range; random-kind scenarios are split
// train/eval stratified by their shift bucket; optimization-based scenarios
// are always evaluation-only.
DetectorDataset build_detector_dataset(const FeatureDataset& ds, const SplitCounts& split,
                                       const LoadSeries& series, const PredictorBundle& bundle,
                                       const std::vector<AttackScenario>& scenarios,
                                       const DetectorBuildConfig& cfg, std::uint64_t master_seed,
                                       int jobs);

struct DetectorConfig {
    double penalty = 2000.0;
    double tau_min = 0.03;    // train only on shifts at least this large
    double sigma = 0.0;       // <= 0: 1/q
    TrainOptions train;
};

struct DetectorModel {
    SvmModel svm;
    Eigen::VectorXd u_mean, u_std;
    double penalty = 2000.0;
    double tau_min = 0.03;
    int q = 0;
    int trained_normals = 0, trained_attacked = 0;

    double decision(const Eigen::VectorXd& u_raw) const;
    int predict(const Eigen::VectorXd& u_raw) const; // 0 maps to +1
    Eigen::VectorXd decision_batch(const Eigen::MatrixXd& u_raw_rows) const;
};

DetectorModel train_detector(const DetectorDataset& data, const DetectorConfig& cfg);

nlohmann::json detector_to_json(const DetectorModel& m);
DetectorModel detector_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Evaluation.

// Shift bucket: tau in ((b-1)%, b%], b = 1..20.
int tau_bucket(double tau);

struct BucketStat {
    int bucket = 0;  // percent upper edge
    int count = 0;
    int detected = 0;
    double rate() const { return count > 0 ? static_cast<double>(detected) / count : 0.0; }
};

struct MilpCellStat {
    AttackKind kind = AttackKind::CostMax;
    double tau = 0.0;   // requested budget
    int count = 0;
    int detected = 0;
    double rate() const { return count > 0 ? static_cast<double>(detected) / count : 0.0; }
};

struct DetectionReport {
    std::vector<BucketStat> random_buckets;      // test-set random attacks
    std::vector<MilpCellStat> milp_cells;        // cm/lo per requested tau
    double false_alarm_all = 0.0;                // every normal sample
    double false_alarm_test = 0.0;               // held-out normals only
    int normals_total = 0, normals_test = 0;
    int attacked_test_total = 0;
};

DetectionReport evaluate_detector(const DetectorModel& model, const DetectorDataset& data);

struct SweepRow {
    double tau_min = 0.0;
    double penalty = 0.0;
    double false_alarm_all = 0.0;
    double false_alarm_test = 0.0;
    double detection_avg = 0.0;  // over test random attacks
    int trained_attacked = 0;
    std::vector<BucketStat> buckets; // per-shift detail behind the averages
};

std::vector<SweepRow> sweep_detector(const DetectorDataset& data, const DetectorConfig& base,
                                     const std::vector<double>& tau_min_grid,
                                     const std::vector<double>& penalty_grid);

// ---------------------------------------------------------------------------
// Mitigation: re-dispatch on predicted loads when an attack is flagged.

struct MitigationRecord {
    int scenario_id = -1;
    AttackKind kind = AttackKind::CostMax;
    double tau_requested = 0.0;
    int hour = -1;
    bool detected = false;
    double cost_normal = 0.0;
    double cost_attacked = 0.0;   // dispatch against falsified loads
    double cost_predicted = 0.0;  // dispatch against SVR-predicted loads
    double cost_mitigated = 0.0;  // branch the scheme actually runs
    double overflow_attacked_mw = 0.0;  // worst physical overload over all lines, 0 if none
    double overflow_predicted_mw = 0.0;
    double overflow_mitigated_mw = 0.0;
    // Target-line physical flow magnitudes (line-overflow scenarios; 0 when
    // the scenario has no target line).
    double target_flow_attacked_mw = 0.0;
    double target_flow_predicted_mw = 0.0;
    double target_flow_mitigated_mw = 0.0;
    double target_rating_mw = 0.0;
    bool discarded = false;
    std::string discard_reason;

    double increase_attacked() const { return cost_attacked - cost_normal; }
    double increase_mitigated() const { return cost_mitigated - cost_normal; }
    double target_overflow_attacked_mw() const {
        return std::max(0.0, target_flow_attacked_mw - target_rating_mw);
    }
    double target_overflow_mitigated_mw() const {
        return std::max(0.0, target_flow_mitigated_mw - target_rating_mw);
    }
};

// Consequences of one scenario via three dispatches (true, falsified and
// SVR-predicted loads); any infeasible dispatch discards the record.  The
// realized branch follows the verdict: predicted-load dispatch when detected,
// falsified-load dispatch when missed.  Physical flows are always evaluated
// against the true loads.
MitigationRecord mitigate_scenario(const Grid& grid, const AttackScenario& sc, int scenario_id,
                                   const Eigen::VectorXd& true_loads_mw,
                                   const Eigen::VectorXd& predicted_loads_mw, bool detected);

// One point per (kind, requested tau): the worst consequence in the bucket
// without the framework (always the falsified-load dispatch) and with it (the
// verdict-dependent branch).  Cost-maximization buckets measure dispatch-cost
// increase; line-overflow buckets measure the target line's physical flow.
struct MitigationCurvePoint {
    AttackKind kind;
    double tau = 0.0;
    int records = 0;
    int detected = 0;
    double max_increase_attacked = 0.0;
    double max_increase_mitigated = 0.0;
    double max_target_flow_attacked_mw = 0.0;
    double max_target_flow_mitigated_mw = 0.0;
    double max_target_overflow_attacked_mw = 0.0;
    double max_target_overflow_mitigated_mw = 0.0;
};

std::vector<MitigationCurvePoint> aggregate_mitigation(const std::vector<MitigationRecord>& records);

} // namespace lrshield
