#include "lrshield/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"
#include "lrshield/io_util.hpp"
#include "lrshield/logging.hpp"
#include "lrshield/rng.hpp"

namespace lrshield {

namespace {

constexpr const char* kSeriesCsv = "series.csv";
constexpr const char* kStageData = "stage_data.json";
constexpr const char* kStageFeatures = "stage_features.json";
constexpr const char* kPredictor = "predictor.json";
constexpr const char* kScenarios = "scenarios.jsonl";
constexpr const char* kStageAttacks = "stage_attacks.json";
constexpr const char* kDetector = "detector.json";
constexpr const char* kEvalDetection = "eval_detection.json";
constexpr const char* kMitigation = "mitigation.json";
constexpr const char* kReport = "eval_report.json";
constexpr const char* kManifest = "manifest.json";
constexpr const char* kFig2 = "fig2_rmse_mape.csv";
constexpr const char* kFig3 = "fig3_sweep.csv";
constexpr const char* kFig4 = "fig4_detection.csv";
constexpr const char* kFig5 = "fig5_cm_lo.csv";
constexpr const char* kFig6 = "fig6_mitigation.csv";

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Data: return "data";
        case Stage::Features: return "features";
        case Stage::Predictor: return "predictor";
        case Stage::Attacks: return "attacks";
        case Stage::Detector: return "detector";
        case Stage::Evaluate: return "evaluate";
        case Stage::Mitigate: return "mitigate";
        case Stage::Report: return "report";
    }
    return "?";
}

Runner::Runner(RunConfig cfg, bool force_target)
    : cfg_(std::move(cfg)), force_(force_target), out_(cfg_.paths.out_dir) {}

std::string Runner::stage_hash(Stage s) const {
    switch (s) {
        case Stage::Data: return config_hash(cfg_, {"paths", "synth"});
        case Stage::Features:
            return config_hash(cfg_, {"paths", "synth", "features", "split"});
        case Stage::Predictor:
            return config_hash(cfg_, {"paths", "synth", "features", "split", "svr"});
        case Stage::Attacks:
            return config_hash(cfg_, {"paths", "synth", "features", "split", "attacks"});
        case Stage::Detector:
        case Stage::Mitigate:
            return config_hash(cfg_,
                               {"paths", "synth", "features", "split", "svr", "attacks", "svm"});
        case Stage::Evaluate:
            return config_hash(
                cfg_, {"paths", "synth", "features", "split", "svr", "attacks", "svm", "sweep"});
        case Stage::Report:
            return config_hash(cfg_, {"paths", "synth", "features", "split", "svr", "attacks",
                                      "svm", "sweep"});
    }
    throw Error("stage_hash: bad stage");
}

bool Runner::receipt_fresh(const std::filesystem::path& artifact, const std::string& want) const {
    if (!std::filesystem::exists(artifact)) return false;
    try {
        const nlohmann::json j = read_json_file(artifact);
        return j.is_object() && j.value("config_hash", "") == want;
    } catch (const Error&) {
        return false;
    }
}

const Grid& Runner::grid() {
    if (!grid_) {
        Grid g = Grid::build(load_network(cfg_.paths.network));
        const auto& zt = zone_table();
        if (g.net.n_load() != static_cast<int>(zt.size()))
            throw ValidationError("network: expected " + std::to_string(zt.size()) +
                                  " load buses, found " + std::to_string(g.net.n_load()));
        for (std::size_t i = 0; i < zt.size(); ++i)
            if (g.net.load_buses[i] != zt[i].bus - 1)
                throw ValidationError("network: load bus order disagrees with the zone table at "
                                      "position " + std::to_string(i));
        grid_ = std::move(g);
    }
    return *grid_;
}

const LoadSeries& Runner::series() {
    if (!series_) {
        LoadSeries s = read_series_csv(out_ / kSeriesCsv);
        const auto& zt = zone_table();
        if (s.cols() != static_cast<int>(zt.size()))
            throw ValidationError("series artifact: unexpected column count");
        for (std::size_t i = 0; i < zt.size(); ++i)
            if (s.columns[i] != zt[i].code)
                throw ValidationError("series artifact: column order drifted from the zone table");
        s.bus_ordered = true;
        series_ = std::move(s);
    }
    return *series_;
}

const FeatureDataset& Runner::dataset() {
    if (!ds_) {
        FeatureDataset ds = build_features(series(), cfg_.features.variant, cfg_.features.s,
                                           cfg_.features.d);
        split_ = chronological_split(ds, cfg_.split_boundary());
        standardize(ds, split_);
        ds_ = std::move(ds);
        log_info("features: m=", ds_->m(), " p=", ds_->p(), " train=", split_.train,
                 " test=", split_.test);
    }
    return *ds_;
}

const SplitCounts& Runner::split() {
    dataset();
    return split_;
}

const PredictorBundle& Runner::bundle() {
    if (!bundle_) bundle_ = predictor_from_json(read_json_file(out_ / kPredictor));
    return *bundle_;
}

const std::vector<AttackScenario>& Runner::scenarios() {
    if (!scenarios_) {
        ScenarioArchive a = read_scenarios_jsonl(out_ / kScenarios);
        scenarios_ = std::move(a.scenarios);
    }
    return *scenarios_;
}

const DetectorDataset& Runner::detector_data() {
    if (!det_data_) {
        DetectorBuildConfig b;
        b.normal_count = cfg_.svm.normal_count;
        b.attacked_train_max = cfg_.svm.attacked_train_max;
        b.train_fraction = cfg_.svm.train_fraction;
        det_data_ = build_detector_dataset(dataset(), split(), series(), bundle(), scenarios(), b,
                                           cfg_.seed, cfg_.effective_jobs());
    }
    return *det_data_;
}

const DetectorModel& Runner::detector() {
    if (!detector_) detector_ = detector_from_json(read_json_file(out_ / kDetector));
    return *detector_;
}

void Runner::ensure_data(bool force) {
    const std::string want = stage_hash(Stage::Data);
    if (!force && receipt_fresh(out_ / kStageData, want) &&
        std::filesystem::exists(out_ / kSeriesCsv)) {
        log_info("data: up to date");
        return;
    }
    LoadSeries raw;
    std::string source;
    if (!cfg_.paths.ingest_csvs.empty()) {
        std::vector<std::filesystem::path> paths(cfg_.paths.ingest_csvs.begin(),
                                                 cfg_.paths.ingest_csvs.end());
        raw = ingest_csv(paths);
        source = "csv";
    } else if (cfg_.synth_enabled) {
        raw = synth_loads(cfg_.synth, derive_seed(cfg_.seed, seed_stream::synth, 0));
        source = "synth";
    } else {
        throw ConfigError("no data source: synth disabled and paths.ingest_csvs empty");
    }
    const LoadSeries mapped = raw.bus_ordered ? std::move(raw) : map_zones_to_buses(raw);
    NormalizeReport rep;
    LoadSeries norm = normalize_calendar(mapped, &rep);
    write_series_csv(out_ / kSeriesCsv, norm);
    write_json_file(out_ / kStageData,
                    nlohmann::json{{"config_hash", want},
                                   {"source", source},
                                   {"rows", norm.rows()},
                                   {"columns", norm.cols()},
                                   {"first_label", format_civil(norm.labels.front())},
                                   {"last_label", format_civil(norm.labels.back())},
                                   {"duplicates_averaged", rep.duplicates_averaged},
                                   {"gaps_interpolated", rep.gaps_interpolated}});
    log_info("data: wrote ", norm.rows(), " hours (", source, ", ", rep.duplicates_averaged,
             " duplicates averaged, ", rep.gaps_interpolated, " gaps interpolated)");
    series_ = std::move(norm);
    ds_.reset();
    bundle_.reset();
    scenarios_.reset();
    det_data_.reset();
    detector_.reset();
}

void Runner::ensure_features(bool force) {
    const std::string want = stage_hash(Stage::Features);
    if (!force && receipt_fresh(out_ / kStageFeatures, want)) {
        log_info("features: up to date");
        return;
    }
    const FeatureDataset& ds = dataset();
    write_json_file(out_ / kStageFeatures,
                    nlohmann::json{{"config_hash", want},
                                   {"m", ds.m()},
                                   {"p", ds.p()},
                                   {"variant", ds.variant},
                                   {"s", ds.lag_s},
                                   {"d", ds.lag_d},
                                   {"n_loads", ds.n_loads},
                                   {"train", split_.train},
                                   {"test", split_.test}});
}

void Runner::ensure_predictor(bool force) {
    const std::string want = stage_hash(Stage::Predictor);
    if (!force && receipt_fresh(out_ / kPredictor, want)) {
        log_info("predictor: up to date");
        return;
    }
    PredictorConfig pc;
    pc.variant = cfg_.features.variant;
    pc.epsilon = cfg_.svr.epsilon;
    pc.penalty = cfg_.svr.penalty;
    pc.sigma = cfg_.svr.sigma;
    pc.max_train_rows = cfg_.svr.max_train_rows;
    pc.train.tol = cfg_.svr.tol;
    pc.train.max_pair_updates = cfg_.svr.max_pair_updates;
    bundle_ = train_predictor(dataset(), split(), pc, cfg_.effective_jobs());
    nlohmann::json j = predictor_to_json(*bundle_);
    j["config_hash"] = want;
    write_json_file(out_ / kPredictor, j);
    int sv = 0;
    for (const auto& m : bundle_->models) sv += static_cast<int>(m.sv_rows.size());
    log_info("predictor: trained ", bundle_->models.size(), " models, ", sv,
             " support rows total");
    det_data_.reset();
    detector_.reset();
}

void Runner::ensure_attacks(bool force) {
    const std::string want = stage_hash(Stage::Attacks);
    if (!force && receipt_fresh(out_ / kStageAttacks, want) &&
        std::filesystem::exists(out_ / kScenarios)) {
        log_info("attacks: up to date");
        return;
    }
    const FeatureDataset& ds = dataset();
    const LoadSeries& s = series();
    std::vector<int> candidates;
    candidates.reserve(static_cast<std::size_t>(split_.test));
    for (int k = split_.train; k < ds.m(); ++k)
        candidates.push_back(ds.sample_rows[static_cast<std::size_t>(k)] + 1);
    std::vector<Eigen::VectorXd> hourly(static_cast<std::size_t>(s.rows()));
    for (int r = 0; r < s.rows(); ++r)
        hourly[static_cast<std::size_t>(r)] = s.values.row(r).transpose();

    AttackBatchOptions opts;
    opts.random_count = cfg_.attacks.random_count;
    opts.k_min = cfg_.attacks.k_min;
    opts.k_max = cfg_.attacks.k_max;
    opts.milp_tau_grid.clear();
    for (double pct : cfg_.attacks.tau_grid_pct) opts.milp_tau_grid.push_back(pct / 100.0);
    opts.max_cm_hours = cfg_.attacks.cm_hours;
    opts.max_lo_hours = cfg_.attacks.lo_hours;
    opts.lo_lines_per_hour = cfg_.attacks.lo_lines_per_hour;
    opts.critical_frac = cfg_.attacks.critical_frac;
    opts.critical_min_lines = cfg_.attacks.critical_min_lines;
    opts.bilevel.m_dual = cfg_.attacks.m_dual;
    opts.bilevel.node_limit = cfg_.attacks.node_limit;
    opts.random.max_redraws = cfg_.attacks.max_redraws;
    opts.jobs = cfg_.effective_jobs();

    AttackBatch batch = generate_attacks(grid(), hourly, candidates, opts, cfg_.seed);
    write_scenarios_jsonl(out_ / kScenarios, batch.scenarios, cfg_.seed, want);
    int n_random = 0, n_cm = 0, n_lo = 0;
    for (const auto& sc : batch.scenarios) {
        if (sc.kind == AttackKind::Random) ++n_random;
        else if (sc.kind == AttackKind::CostMax) ++n_cm;
        else ++n_lo;
    }
    write_json_file(out_ / kStageAttacks,
                    nlohmann::json{{"config_hash", want},
                                   {"random", n_random},
                                   {"cm", n_cm},
                                   {"lo", n_lo},
                                   {"infeasible_dispatch_hours", batch.infeasible_dispatch_hours},
                                   {"random_failures", batch.random_failures},
                                   {"milp_failures", batch.milp_failures}});
    log_info("attacks: ", n_random, " random, ", n_cm, " cm, ", n_lo, " lo (",
             batch.random_failures, " random drops, ", batch.milp_failures, " milp failures)");
    scenarios_ = std::move(batch.scenarios);
    det_data_.reset();
    detector_.reset();
}

void Runner::ensure_detector(bool force) {
    const std::string want = stage_hash(Stage::Detector);
    if (!force && receipt_fresh(out_ / kDetector, want)) {
        log_info("detector: up to date");
        return;
    }
    DetectorConfig dc;
    dc.penalty = cfg_.svm.penalty;
    dc.tau_min = cfg_.svm.tau_min;
    dc.sigma = cfg_.svm.sigma;
    dc.train.tol = cfg_.svm.tol;
    dc.train.max_pair_updates = cfg_.svm.max_pair_updates;
    detector_ = train_detector(detector_data(), dc);
    nlohmann::json j = detector_to_json(*detector_);
    j["config_hash"] = want;
    write_json_file(out_ / kDetector, j);
    log_info("detector: ", detector_->svm.sv_rows.size(), " support vectors");
}

void Runner::ensure_evaluate(bool force) {
    const std::string want = stage_hash(Stage::Evaluate);
    if (!force && receipt_fresh(out_ / kEvalDetection, want)) {
        log_info("evaluate: up to date");
        return;
    }
    const FeatureDataset& ds = dataset();
    const DetectorModel& model = detector();
    const DetectionReport rep = evaluate_detector(model, detector_data());

    // Prediction quality over the held-out rows.
    std::vector<int> test_ids(static_cast<std::size_t>(split_.test));
    std::iota(test_ids.begin(), test_ids.end(), split_.train);
    const Eigen::MatrixXd pred = bundle().predict_mw(ds, test_ids, cfg_.effective_jobs());
    Eigen::MatrixXd truth(split_.test, ds.n_loads);
    for (int i = 0; i < ds.n_loads; ++i)
        truth.col(i) = ds.y.col(i).segment(split_.train, split_.test).array() * ds.y_std(i) +
                       ds.y_mean(i);
    const LoadMetrics metrics = metrics_rmse_mape(truth, pred);

    const auto& zt = zone_table();
    std::ostringstream fig2;
    fig2 << "load,zone,bus,rmse_mw,mape_pct\n";
    for (int i = 0; i < ds.n_loads; ++i)
        fig2 << i << ',' << zt[static_cast<std::size_t>(i)].code << ','
             << zt[static_cast<std::size_t>(i)].bus << ',' << fmt(metrics.rmse_mw(i)) << ','
             << fmt(100.0 * metrics.mape(i)) << '\n';
    atomic_write_file(out_ / kFig2, fig2.str());

    std::ostringstream fig4;
    fig4 << "bucket_pct,count,detected,detection_rate\n";
    for (const auto& b : rep.random_buckets)
        fig4 << b.bucket << ',' << b.count << ',' << b.detected << ',' << fmt(b.rate()) << '\n';
    atomic_write_file(out_ / kFig4, fig4.str());

    std::vector<SweepRow> sweep;
    if (cfg_.sweep.enabled) {
        DetectorConfig base;
        base.sigma = cfg_.svm.sigma;
        base.train.tol = cfg_.svm.tol;
        base.train.max_pair_updates = cfg_.svm.max_pair_updates;
        std::vector<double> taus;
        for (double pct : cfg_.sweep.tau_min_pct) taus.push_back(pct / 100.0);
        sweep = sweep_detector(detector_data(), base, taus, cfg_.sweep.penalty);
    }
    std::ostringstream fig3;
    fig3 << "tau_min_pct,penalty,false_alarm_all_pct,false_alarm_test_pct,bucket_pct,count,"
            "detected,detection_rate\n";
    for (const auto& r : sweep) {
        const std::string prefix = fmt(100.0 * r.tau_min) + ',' + fmt(r.penalty) + ',' +
                                   fmt(100.0 * r.false_alarm_all) + ',' +
                                   fmt(100.0 * r.false_alarm_test) + ',';
        for (const auto& b : r.buckets)
            fig3 << prefix << b.bucket << ',' << b.count << ',' << b.detected << ','
                 << fmt(b.rate()) << '\n';
    }
    atomic_write_file(out_ / kFig3, fig3.str());

    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& b : rep.random_buckets)
        buckets.push_back({{"bucket_pct", b.bucket},
                           {"count", b.count},
                           {"detected", b.detected},
                           {"rate", b.rate()}});
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : rep.milp_cells)
        cells.push_back({{"kind", to_string(c.kind)},
                         {"tau_pct", 100.0 * c.tau},
                         {"count", c.count},
                         {"detected", c.detected},
                         {"rate", c.rate()}});
    nlohmann::json sweep_json = nlohmann::json::array();
    for (const auto& r : sweep)
        sweep_json.push_back({{"tau_min_pct", 100.0 * r.tau_min},
                              {"penalty", r.penalty},
                              {"false_alarm_all", r.false_alarm_all},
                              {"false_alarm_test", r.false_alarm_test},
                              {"detection_avg", r.detection_avg},
                              {"trained_attacked", r.trained_attacked}});
    write_json_file(out_ / kEvalDetection,
                    nlohmann::json{{"config_hash", want},
                                   {"false_alarm_all", rep.false_alarm_all},
                                   {"false_alarm_test", rep.false_alarm_test},
                                   {"normals_total", rep.normals_total},
                                   {"normals_test", rep.normals_test},
                                   {"attacked_test_total", rep.attacked_test_total},
                                   {"random_buckets", buckets},
                                   {"milp_cells", cells},
                                   {"sweep", sweep_json},
                                   {"rmse_mw_mean", metrics.rmse_mw.mean()},
                                   {"mape_mean", metrics.mape.mean()}});
    log_info("evaluate: false alarm ", 100.0 * rep.false_alarm_all, "% (all normals), ",
             rep.attacked_test_total, " attacked test samples");
}

void Runner::ensure_mitigate(bool force) {
    const std::string want = stage_hash(Stage::Mitigate);
    if (!force && receipt_fresh(out_ / kMitigation, want)) {
        log_info("mitigate: up to date");
        return;
    }
    const DetectorDataset& data = detector_data();
    const DetectorModel& model = detector();
    const std::vector<AttackScenario>& scs = scenarios();
    const int n_loads = dataset().n_loads;

    std::vector<MitigationRecord> records;
    int discarded = 0;
    for (const auto& s : data.samples) {
        if (s.label < 0 || s.kind == AttackKind::Random) continue;
        const AttackScenario& sc = scs[static_cast<std::size_t>(s.scenario_id)];
        const Eigen::VectorXd true_loads = series().values.row(sc.hour).transpose();
        const Eigen::VectorXd predicted = s.u.segment(3, n_loads);
        const bool detected = model.decision(s.u) >= 0.0;
        MitigationRecord rec =
            mitigate_scenario(grid(), sc, s.scenario_id, true_loads, predicted, detected);
        if (rec.discarded) {
            ++discarded;
            log_warn("mitigation: scenario ", s.scenario_id, " discarded: ", rec.discard_reason);
        }
        records.push_back(std::move(rec));
    }

    // Detection broken out by consequence: an optimized attack only matters if
    // it moved the dispatch cost by more than 1% or physically overloaded a
    // line.
    struct Cell {
        int count = 0, detected = 0, conseq = 0, conseq_detected = 0;
    };
    std::map<std::pair<int, long>, Cell> cells;
    for (const auto& r : records) {
        if (r.discarded) continue;
        auto& c = cells[{static_cast<int>(r.kind), std::lround(r.tau_requested * 10000.0)}];
        c.count += 1;
        if (r.detected) c.detected += 1;
        const bool consequential = r.kind == AttackKind::CostMax
                                       ? r.increase_attacked() > 0.01 * r.cost_normal
                                       : r.overflow_attacked_mw > 1e-9;
        if (consequential) {
            c.conseq += 1;
            if (r.detected) c.conseq_detected += 1;
        }
    }
    std::ostringstream fig5;
    fig5 << "kind,tau_pct,count,detected,detection_rate,consequential,consequential_detected,"
            "consequential_rate\n";
    for (const auto& [key, c] : cells) {
        const std::string kind = to_string(static_cast<AttackKind>(key.first));
        const double tau_pct = static_cast<double>(key.second) / 100.0;
        fig5 << kind << ',' << fmt(tau_pct) << ',' << c.count << ',' << c.detected << ','
             << fmt(c.count > 0 ? static_cast<double>(c.detected) / c.count : 0.0) << ','
             << c.conseq << ',' << c.conseq_detected << ','
             << fmt(c.conseq > 0 ? static_cast<double>(c.conseq_detected) / c.conseq : 0.0)
             << '\n';
    }
    atomic_write_file(out_ / kFig5, fig5.str());

    const std::vector<MitigationCurvePoint> curves = aggregate_mitigation(records);
    std::ostringstream fig6;
    fig6 << "kind,tau_pct,records,detected,max_cost_increase_attacked,"
            "max_cost_increase_mitigated,max_target_flow_attacked_mw,"
            "max_target_flow_mitigated_mw,max_target_overflow_attacked_mw,"
            "max_target_overflow_mitigated_mw\n";
    for (const auto& p : curves)
        fig6 << to_string(p.kind) << ',' << fmt(100.0 * p.tau) << ',' << p.records << ','
             << p.detected << ',' << fmt(p.max_increase_attacked) << ','
             << fmt(p.max_increase_mitigated) << ',' << fmt(p.max_target_flow_attacked_mw) << ','
             << fmt(p.max_target_flow_mitigated_mw) << ','
             << fmt(p.max_target_overflow_attacked_mw) << ','
             << fmt(p.max_target_overflow_mitigated_mw) << '\n';
    atomic_write_file(out_ / kFig6, fig6.str());

    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json jr{{"scenario_id", r.scenario_id},
                          {"kind", to_string(r.kind)},
                          {"tau_pct", 100.0 * r.tau_requested},
                          {"hour", r.hour},
                          {"detected", r.detected},
                          {"discarded", r.discarded}};
        if (r.discarded) {
            jr["discard_reason"] = r.discard_reason;
        } else {
            jr["cost_normal"] = r.cost_normal;
            jr["cost_attacked"] = r.cost_attacked;
            jr["cost_predicted"] = r.cost_predicted;
            jr["cost_mitigated"] = r.cost_mitigated;
            jr["overflow_attacked_mw"] = r.overflow_attacked_mw;
            jr["overflow_mitigated_mw"] = r.overflow_mitigated_mw;
            if (r.kind == AttackKind::LineOverflow) {
                jr["target_flow_attacked_mw"] = r.target_flow_attacked_mw;
                jr["target_flow_mitigated_mw"] = r.target_flow_mitigated_mw;
                jr["target_rating_mw"] = r.target_rating_mw;
            }
        }
        recs.push_back(std::move(jr));
    }
    write_json_file(out_ / kMitigation, nlohmann::json{{"config_hash", want},
                                                       {"discarded", discarded},
                                                       {"records", recs}});
    log_info("mitigate: ", records.size(), " scenarios (", discarded, " discarded)");
}

void Runner::ensure_report(bool force) {
    const std::string want = stage_hash(Stage::Report);
    if (!force && receipt_fresh(out_ / kReport, want)) {
        log_info("report: up to date");
        return;
    }
    nlohmann::json stages;
    stages["data"] = read_json_file(out_ / kStageData);
    stages["features"] = read_json_file(out_ / kStageFeatures);
    stages["attacks"] = read_json_file(out_ / kStageAttacks);
    stages["detection"] = read_json_file(out_ / kEvalDetection);
    nlohmann::json mit = read_json_file(out_ / kMitigation);
    mit.erase("records");
    stages["mitigation"] = mit;

    nlohmann::json hashes;
    for (Stage s : {Stage::Data, Stage::Features, Stage::Predictor, Stage::Attacks,
                    Stage::Detector, Stage::Evaluate, Stage::Mitigate})
        hashes[to_string(s)] = stage_hash(s);

    write_json_file(out_ / kReport, nlohmann::json{{"config_hash", want},
                                                   {"config", config_to_json(cfg_)},
                                                   {"stage_hashes", hashes},
                                                   {"stages", stages}});

    nlohmann::json artifacts = nlohmann::json::array();
    std::vector<std::string> names{kSeriesCsv, kStageData,      kStageFeatures, kPredictor,
                                   kScenarios, kStageAttacks,   kDetector,      kEvalDetection,
                                   kMitigation, kFig2,          kFig3,          kFig4,
                                   kFig5,       kFig6,          kReport};
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        const auto path = out_ / name;
        if (!std::filesystem::exists(path)) continue;
        const std::string bytes = read_text_file(path);
        artifacts.push_back({{"name", name},
                             {"bytes", bytes.size()},
                             {"fnv1a64", hash_hex(fnv1a64(bytes))}});
    }
    write_json_file(out_ / kManifest, nlohmann::json{{"artifacts", artifacts}});
    log_info("report: wrote ", (out_ / kReport).string());
}

void Runner::run_stage(Stage target) {
    std::filesystem::create_directories(out_);
    ensure_data(force_ && target == Stage::Data);
    if (target == Stage::Data) return;
    ensure_features(force_ && target == Stage::Features);
    if (target == Stage::Features) return;
    if (target == Stage::Predictor) {
        ensure_predictor(force_);
        return;
    }
    if (target == Stage::Attacks) {
        ensure_attacks(force_);
        return;
    }
    ensure_predictor(false);
    ensure_attacks(false);
    if (target == Stage::Detector) {
        ensure_detector(force_);
        return;
    }
    ensure_detector(false);
    if (target == Stage::Evaluate) {
        ensure_evaluate(force_);
        return;
    }
    if (target == Stage::Mitigate) {
        ensure_mitigate(force_);
        return;
    }
    ensure_evaluate(false);
    ensure_mitigate(false);
    ensure_report(force_);
}

nlohmann::json Runner::describe() const {
    nlohmann::json hashes;
    for (Stage s : {Stage::Data, Stage::Features, Stage::Predictor, Stage::Attacks,
                    Stage::Detector, Stage::Evaluate, Stage::Mitigate, Stage::Report})
        hashes[to_string(s)] = stage_hash(s);
    return nlohmann::json{{"config", config_to_json(cfg_)},
                          {"stage_hashes", hashes},
                          {"out_dir", out_.string()}};
}

} // namespace lrshield
