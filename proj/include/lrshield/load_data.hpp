#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrshield/calendar.hpp"

namespace lrshield {

// Hourly multi-zone load series.  Labels are wall-clock (prevailing time):
// raw data may contain the duplicated fall-back hour twice and never contains
// the skipped spring-forward hour; normalize_calendar() collapses it to
// strictly increasing labels.
struct LoadSeries {
    std::vector<CivilHour> labels;
    Eigen::MatrixXd values; // rows = hours, cols = zones/loads (MW)
    std::vector<std::string> columns;
    bool bus_ordered = false; // true once columns follow the network load order

    int rows() const { return static_cast<int>(labels.size()); }
    int cols() const { return static_cast<int>(columns.size()); }
};

struct ZoneEntry {
    const char* code;
    int bus; // 1-based bus in the 30-bus study network
};

// Utility zones in the order that defines the load vector layout.
const std::vector<ZoneEntry>& zone_table();

// MW-per-MW factor taking utility-scale zone loads onto the study network.
inline constexpr double kZoneScale = 1.308e-3;

// Nominal zone base loads (MW, utility scale): scaled study-network loads.
Eigen::VectorXd default_zone_base_mw();

// Reads one or more CSV files: either wide (datetime,ZONE1,ZONE2,...) or long
// (datetime,zone,mw).  Rows from all files are merged and stably sorted by
// timestamp, preserving duplicate order.
LoadSeries ingest_csv(const std::vector<std::filesystem::path>& paths);

// Select and reorder zone columns per zone_table() and apply kZoneScale.
// Unknown or missing zones are errors.
LoadSeries map_zones_to_buses(const LoadSeries& series);

struct NormalizeReport {
    int duplicates_averaged = 0;
    int gaps_interpolated = 0;
};

// Collapses duplicated wall-clock labels by averaging, interpolates isolated
// single-hour gaps, and leaves the skipped spring-forward label absent (it is
// not a gap).  Gaps of two or more hours raise ValidationError.
LoadSeries normalize_calendar(const LoadSeries& series, NormalizeReport* report = nullptr);

struct SynthConfig {
    int start_year = 2015;
    int end_year = 2018;
    double annual_amp = 0.14;
    double daily_amp = 0.25;
    double weekly_amp = 0.05;
    double weekend_drop = 0.07;
    double noise_sd = 0.05;   // stationary std of the AR(1) term
    double noise_rho = 0.95;
    double system_scale = 1.0;
    bool emulate_dst = true;  // emit prevailing-time labels (raw-export shape)
    std::vector<double> zone_base_mw; // empty => default_zone_base_mw()
};

// Deterministic synthetic utility-scale series with annual/daily/weekly
// structure, weekend depression and AR(1) noise per zone.
LoadSeries synth_loads(const SynthConfig& cfg, std::uint64_t seed);

// Feature matrix layout per sample (base row h, predicting row h+1):
//   [month, weekday_flag, hour,
//    zone1: P^h..P^{h-s}, (P^{h-24d}, P^{h-24d+1}) ... (P^{h-24}, P^{h-24+1}),
//    zone2: ..., ...]
// weekday_flag is 1 on weekdays and 2 on weekends.
struct FeatureDataset {
    int variant = 2;
    int lag_s = 3;
    int lag_d = 2;
    int n_loads = 0;
    Eigen::MatrixXd x; // m x (3 + n_loads * (s + 1 + 2d))
    Eigen::MatrixXd y; // m x n_loads (next-hour loads)
    std::vector<CivilHour> sample_labels; // label of the base row
    std::vector<int> sample_rows;         // base row index in the series

    bool standardized = false;
    Eigen::VectorXd x_mean, x_std, y_mean, y_std;

    int m() const { return static_cast<int>(x.rows()); }
    int block_width() const { return lag_s + 1 + 2 * lag_d; }
    // Input dimension of one per-load predictor.
    int p() const {
        return variant == 1 ? 3 + block_width() : 3 + n_loads * block_width();
    }
    // Columns of x a given load's predictor sees.
    std::vector<int> model_columns(int load) const;
};

// Variant 1: per-load features only; 2: all loads, s=3/d=2; 3: all loads,
// s=4/d=3.  Pass s/d >= 0 to override the variant defaults.
FeatureDataset build_features(const LoadSeries& series, int variant, int s = -1, int d = -1);

struct SplitCounts {
    int train = 0;
    int test = 0;
};

// Samples whose base-row label precedes `boundary` form the training block.
// Errors when either side would be empty.
SplitCounts chronological_split(const FeatureDataset& ds, const CivilHour& boundary);

// Column-wise standardization fitted on the first `train` samples (population
// std; zero-variance columns keep divisor 1 with a warning).
void standardize(FeatureDataset& ds, const SplitCounts& split);

void write_series_csv(const std::filesystem::path& path, const LoadSeries& series);
LoadSeries read_series_csv(const std::filesystem::path& path);

} // namespace lrshield
