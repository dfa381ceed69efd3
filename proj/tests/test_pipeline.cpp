#include <doctest.h>

#include <nlohmann/json.hpp>

#include "lrshield/attack.hpp"
#include "lrshield/dcopf.hpp"
#include "lrshield/errors.hpp"
#include "lrshield/pipeline.hpp"
#include "oracles.hpp"

using namespace lrshield;

namespace {

// Three-zone synthetic fixture trimmed to six weeks; enough rows to train a
// fast predictor while keeping the SMO calls tiny.
struct SmallWorld {
    LoadSeries series;
    FeatureDataset ds;
    SplitCounts split;
    PredictorBundle bundle;
};

SmallWorld make_world() {
    SynthConfig cfg;
    cfg.start_year = 2018;
    cfg.end_year = 2018;
    cfg.zone_base_mw = {70.0, 55.0, 45.0};
    cfg.noise_sd = 0.02;
    LoadSeries full = normalize_calendar(synth_loads(cfg, 5));

    SmallWorld w;
    w.series.columns = full.columns;
    w.series.bus_ordered = true;
    const int keep = 1200;
    w.series.labels.assign(full.labels.begin(), full.labels.begin() + keep);
    w.series.values = full.values.topRows(keep);

    w.ds = build_features(w.series, 2, 1, 1);
    w.split = chronological_split(w.ds, w.series.labels[900]);
    standardize(w.ds, w.split);

    PredictorConfig pc;
    pc.epsilon = 0.05;
    pc.penalty = 50.0;
    pc.sigma = 0.05;
    pc.max_train_rows = 80;
    w.bundle = train_predictor(w.ds, w.split, pc, 1);
    return w;
}

const SmallWorld& world() {
    static SmallWorld w = make_world();
    return w;
}

// Hand-built scenario: shift t between the first two loads so tau_real is the
// exact requested value.
AttackScenario made_scenario(const LoadSeries& series, int hour, double tau, AttackKind kind) {
    AttackScenario sc;
    sc.kind = kind;
    sc.hour = hour;
    sc.tau_requested = tau;
    const Eigen::VectorXd loads = series.values.row(hour).transpose();
    const double t = tau * std::min(loads(0), loads(1));
    sc.delta_p = Eigen::VectorXd::Zero(loads.size());
    sc.delta_p(0) = t;
    sc.delta_p(1) = -t;
    sc.p_atk = loads + sc.delta_p;
    sc.tau_real = load_shift(loads, sc.delta_p);
    if (kind == AttackKind::LineOverflow) sc.target_line = 0;
    return sc;
}

DetectorModel constant_detector(int q, double bias) {
    DetectorModel m;
    m.q = q;
    m.u_mean = Eigen::VectorXd::Zero(q);
    m.u_std = Eigen::VectorXd::Ones(q);
    m.svm.kernel = KernelSpec{};
    m.svm.train_x = std::make_shared<const Eigen::MatrixXd>(Eigen::MatrixXd::Zero(0, q));
    m.svm.bias = bias;
    return m;
}

std::vector<AttackScenario> made_scenarios(const LoadSeries& series) {
    std::vector<AttackScenario> scenarios;
    int hour = 500;
    for (int i = 0; i < 6; ++i, hour += 7)
        scenarios.push_back(made_scenario(series, hour, 0.05, AttackKind::Random));
    for (int i = 0; i < 4; ++i, hour += 7)
        scenarios.push_back(made_scenario(series, hour, 0.10, AttackKind::Random));
    scenarios.push_back(made_scenario(series, 800, 0.05, AttackKind::CostMax));
    scenarios.push_back(made_scenario(series, 810, 0.05, AttackKind::CostMax));
    scenarios.push_back(made_scenario(series, 820, 0.10, AttackKind::LineOverflow));
    scenarios.push_back(made_scenario(series, 830, 0.10, AttackKind::LineOverflow));
    return scenarios;
}

} // namespace

TEST_CASE("rmse and mape per load match hand arithmetic") {
    Eigen::MatrixXd truth(2, 2), pred(2, 2);
    truth << 10, 20, 10, 20;
    pred << 11, 18, 9, 22;
    LoadMetrics m = metrics_rmse_mape(truth, pred);
    CHECK(m.rmse_mw(0) == doctest::Approx(1.0));
    CHECK(m.rmse_mw(1) == doctest::Approx(2.0));
    CHECK(m.mape(0) == doctest::Approx(0.1));
    CHECK(m.mape(1) == doctest::Approx(0.1));

    Eigen::MatrixXd t2(2, 1), p2(2, 1);
    t2 << 0.0, 10.0;
    p2 << 5.0, 9.0;
    LoadMetrics m2 = metrics_rmse_mape(t2, p2);
    CHECK(m2.mape(0) == doctest::Approx(0.1)); // zero-truth row skipped
    CHECK(m2.rmse_mw(0) == doctest::Approx(std::sqrt(13.0)));

    CHECK_THROWS_AS(metrics_rmse_mape(truth, p2), ValidationError);
}

TEST_CASE("shift buckets are one-percent-wide right-closed intervals") {
    CHECK(tau_bucket(0.005) == 1);
    CHECK(tau_bucket(0.01) == 1);
    CHECK(tau_bucket(0.0100001) == 2);
    CHECK(tau_bucket(0.02) == 2);
    CHECK(tau_bucket(0.05) == 5);
    CHECK(tau_bucket(0.2) == 20);
    CHECK(tau_bucket(0.35) == 20);  // clamped
    CHECK(tau_bucket(1e-12) == 1);  // clamped
}

TEST_CASE("predictor learns the small world and archives losslessly") {
    const SmallWorld& w = world();
    REQUIRE(w.bundle.models.size() == 3);

    std::vector<int> test_ids;
    for (int k = w.split.train; k < w.ds.m(); k += 10) test_ids.push_back(k);
    Eigen::MatrixXd pred = w.bundle.predict_mw(w.ds, test_ids, 1);
    Eigen::MatrixXd truth(static_cast<Eigen::Index>(test_ids.size()), 3);
    for (std::size_t i = 0; i < test_ids.size(); ++i) {
        const int target = w.ds.sample_rows[static_cast<std::size_t>(test_ids[i])] + 1;
        truth.row(static_cast<Eigen::Index>(i)) = w.series.values.row(target);
    }
    LoadMetrics m = metrics_rmse_mape(truth, pred);
    for (int i = 0; i < 3; ++i) {
        CHECK(m.mape(i) < 0.25); // far better than chance on smooth data
        CHECK(m.rmse_mw(i) > 0.0);
    }

    PredictorBundle back = predictor_from_json(predictor_to_json(w.bundle));
    Eigen::MatrixXd pred2 = back.predict_mw(w.ds, test_ids, 1);
    CHECK((pred - pred2).cwiseAbs().maxCoeff() < 1e-10);

    // Jobs must not change the numbers.
    Eigen::MatrixXd pred4 = w.bundle.predict_mw(w.ds, test_ids, 4);
    CHECK((pred - pred4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("detector dataset assembles labelled feature vectors") {
    const SmallWorld& w = world();
    std::vector<AttackScenario> scenarios = made_scenarios(w.series);

    DetectorBuildConfig cfg;
    cfg.normal_count = 40;
    cfg.attacked_train_max = 0;
    cfg.train_fraction = 0.8;
    DetectorDataset data = build_detector_dataset(w.ds, w.split, w.series, w.bundle, scenarios,
                                                  cfg, 99, 1);
    CHECK(data.q == 3 + 2 * 3);
    REQUIRE(data.samples.size() == 40 + scenarios.size());

    int normal_train = 0;
    for (int i = 0; i < 40; ++i) {
        const DetectorSample& s = data.samples[static_cast<std::size_t>(i)];
        CHECK(s.label == -1);
        CHECK(s.scenario_id == -1);
        if (s.is_train) ++normal_train;
        const CivilHour& t = w.series.labels[static_cast<std::size_t>(s.hour)];
        CHECK(s.u(0) == static_cast<double>(t.month));
        CHECK(s.u(2) == static_cast<double>(t.hour));
        // Observed block carries the true loads of the target hour.
        CHECK((s.u.segment(6, 3).transpose() - w.series.values.row(s.hour)).cwiseAbs().maxCoeff() <
              1e-12);
    }
    CHECK(normal_train == 32); // floor(0.8 * 40)

    int random_train = 0, random_total = 0;
    for (std::size_t i = 40; i < data.samples.size(); ++i) {
        const DetectorSample& s = data.samples[i];
        const AttackScenario& sc = scenarios[static_cast<std::size_t>(s.scenario_id)];
        CHECK(s.label == 1);
        CHECK(s.hour == sc.hour);
        CHECK(s.kind == sc.kind);
        CHECK(s.tau_real == sc.tau_real);
        // Observed block is the falsified load vector; totals still balance.
        CHECK((s.u.segment(6, 3) - sc.p_atk).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(s.u.segment(6, 3).sum() ==
              doctest::Approx(w.series.values.row(s.hour).sum()).epsilon(1e-9));
        if (s.kind == AttackKind::Random) {
            ++random_total;
            if (s.is_train) ++random_train;
        } else {
            CHECK_FALSE(s.is_train); // optimized attacks are evaluation-only
        }
    }
    CHECK(random_total == 10);
    CHECK(random_train == 7); // floor(0.8*6) + floor(0.8*4), stratified by bucket

    // Same seed reproduces the exact split and features.
    DetectorDataset data2 = build_detector_dataset(w.ds, w.split, w.series, w.bundle, scenarios,
                                                   cfg, 99, 4);
    REQUIRE(data2.samples.size() == data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        CHECK(data2.samples[i].is_train == data.samples[i].is_train);
        CHECK((data2.samples[i].u - data.samples[i].u).cwiseAbs().maxCoeff() == 0.0);
    }

    // Training cap subsamples the attacked pool.
    DetectorBuildConfig capped = cfg;
    capped.attacked_train_max = 3;
    DetectorDataset data3 = build_detector_dataset(w.ds, w.split, w.series, w.bundle, scenarios,
                                                   capped, 99, 1);
    int capped_train = 0;
    for (const auto& s : data3.samples)
        if (s.label > 0 && s.is_train) ++capped_train;
    CHECK(capped_train == 3);

    // An hour with no matching feature sample is rejected.
    std::vector<AttackScenario> bad = {made_scenario(w.series, 10, 0.05, AttackKind::Random)};
    CHECK_THROWS_AS(build_detector_dataset(w.ds, w.split, w.series, w.bundle, bad, cfg, 99, 1),
                    ValidationError);
}

TEST_CASE("detector training respects the shift floor") {
    const SmallWorld& w = world();
    std::vector<AttackScenario> scenarios = made_scenarios(w.series);
    DetectorBuildConfig cfg;
    cfg.normal_count = 40;
    cfg.attacked_train_max = 0;
    DetectorDataset data = build_detector_dataset(w.ds, w.split, w.series, w.bundle, scenarios,
                                                  cfg, 99, 1);

    DetectorConfig dc;
    dc.penalty = 100.0;
    dc.tau_min = 0.01;
    DetectorModel m = train_detector(data, dc);
    CHECK(m.q == data.q);
    CHECK(m.trained_normals == 32);
    CHECK(m.trained_attacked == 7);

    dc.tau_min = 0.07; // drops the 5 % group from training
    DetectorModel m2 = train_detector(data, dc);
    CHECK(m2.trained_attacked == 3); // floor(0.8 * 4)
    CHECK(m2.trained_normals == 32);

    dc.tau_min = 0.5;
    CHECK_THROWS_AS(train_detector(data, dc), ValidationError);

    // Decision plumbing: batch equals single calls, bad width throws.
    dc.tau_min = 0.01;
    Eigen::MatrixXd rows(3, data.q);
    for (int i = 0; i < 3; ++i) rows.row(i) = data.samples[static_cast<std::size_t>(i)].u;
    Eigen::VectorXd dec = m.decision_batch(rows);
    for (int i = 0; i < 3; ++i) {
        CHECK(dec(i) == doctest::Approx(m.decision(rows.row(i))).epsilon(1e-12));
        CHECK(m.predict(rows.row(i)) == (dec(i) >= 0.0 ? 1 : -1));
    }
    CHECK_THROWS_AS(m.decision(Eigen::VectorXd::Zero(data.q + 1)), ValidationError);

    // Archive round trip preserves every decision value.
    DetectorModel back = detector_from_json(detector_to_json(m));
    for (const auto& s : data.samples)
        CHECK(back.decision(s.u) == doctest::Approx(m.decision(s.u)).epsilon(1e-10));
}

TEST_CASE("evaluation counts follow the sample partition") {
    const SmallWorld& w = world();
    std::vector<AttackScenario> scenarios = made_scenarios(w.series);
    DetectorBuildConfig cfg;
    cfg.normal_count = 40;
    cfg.attacked_train_max = 0;
    DetectorDataset data = build_detector_dataset(w.ds, w.split, w.series, w.bundle, scenarios,
                                                  cfg, 99, 1);

    DetectionReport hot = evaluate_detector(constant_detector(data.q, 1.0), data);
    CHECK(hot.normals_total == 40);
    CHECK(hot.normals_test == 8);
    CHECK(hot.attacked_test_total == 3 + 4); // random test + all optimized
    CHECK(hot.false_alarm_all == doctest::Approx(1.0));
    CHECK(hot.false_alarm_test == doctest::Approx(1.0));
    int bucket_count = 0;
    for (const auto& b : hot.random_buckets) {
        CHECK(b.detected == b.count);
        CHECK(b.rate() == doctest::Approx(1.0));
        CHECK((b.bucket == 5 || b.bucket == 10));
        bucket_count += b.count;
    }
    CHECK(bucket_count == 3);
    REQUIRE(hot.milp_cells.size() == 2);
    for (const auto& c : hot.milp_cells) {
        CHECK(c.count == 2);
        CHECK(c.detected == 2);
        CHECK((c.kind == AttackKind::CostMax || c.kind == AttackKind::LineOverflow));
        CHECK((c.tau == doctest::Approx(0.05) || c.tau == doctest::Approx(0.10)));
    }

    DetectionReport cold = evaluate_detector(constant_detector(data.q, -1.0), data);
    CHECK(cold.false_alarm_all == doctest::Approx(0.0));
    for (const auto& b : cold.random_buckets) CHECK(b.detected == 0);
    for (const auto& c : cold.milp_cells) CHECK(c.detected == 0);

    // A real trained model must sit between the two stubs.
    DetectorConfig dc;
    dc.penalty = 100.0;
    dc.tau_min = 0.01;
    DetectionReport rep = evaluate_detector(train_detector(data, dc), data);
    CHECK(rep.false_alarm_all >= 0.0);
    CHECK(rep.false_alarm_all <= 1.0);
    CHECK(rep.normals_total == 40);
    CHECK(rep.attacked_test_total == 7);
}

TEST_CASE("sweep grid trains one row per parameter pair") {
    const SmallWorld& w = world();
    std::vector<AttackScenario> scenarios = made_scenarios(w.series);
    DetectorBuildConfig cfg;
    cfg.normal_count = 40;
    DetectorDataset data = build_detector_dataset(w.ds, w.split, w.series, w.bundle, scenarios,
                                                  cfg, 99, 1);
    DetectorConfig base;
    base.penalty = 100.0;
    std::vector<SweepRow> rows = sweep_detector(data, base, {0.01, 0.07}, {50.0, 100.0});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].tau_min == 0.01);
    CHECK(rows[0].penalty == 50.0);
    CHECK(rows[3].tau_min == 0.07);
    CHECK(rows[3].penalty == 100.0);
    for (const auto& r : rows) {
        CHECK(r.false_alarm_all >= 0.0);
        CHECK(r.detection_avg >= 0.0);
        CHECK(r.detection_avg <= 1.0);
    }
    CHECK(rows[0].trained_attacked == 7);
    CHECK(rows[2].trained_attacked == 3);
}

TEST_CASE("mitigation record reproduces three dispatches") {
    NetworkModel net = oracles::net3_two_loads();
    Grid grid = Grid::build(net);
    Eigen::VectorXd loads(2), predicted(2);
    loads << 50.0, 40.0;
    predicted << 51.0, 39.5;

    AttackScenario sc;
    sc.kind = AttackKind::LineOverflow;
    sc.tau_requested = 0.10;
    sc.hour = 77;
    sc.target_line = 0;
    sc.delta_p = Eigen::VectorXd(2);
    sc.delta_p << 4.0, -4.0;
    sc.p_atk = loads + sc.delta_p;
    sc.tau_real = load_shift(loads, sc.delta_p);

    const Dispatch normal = solve_dcopf(grid, loads);
    const Dispatch attacked = solve_dcopf(grid, sc.p_atk);
    const Dispatch pred = solve_dcopf(grid, predicted);
    REQUIRE(normal.status == SolveStatus::Optimal);
    REQUIRE(attacked.status == SolveStatus::Optimal);
    REQUIRE(pred.status == SolveStatus::Optimal);

    MitigationRecord hit = mitigate_scenario(grid, sc, 3, loads, predicted, true);
    CHECK_FALSE(hit.discarded);
    CHECK(hit.scenario_id == 3);
    CHECK(hit.hour == 77);
    CHECK(hit.cost_normal == doctest::Approx(normal.cost).epsilon(1e-12));
    CHECK(hit.cost_attacked == doctest::Approx(attacked.cost).epsilon(1e-12));
    CHECK(hit.cost_predicted == doctest::Approx(pred.cost).epsilon(1e-12));
    CHECK(hit.cost_mitigated == doctest::Approx(pred.cost).epsilon(1e-12));
    CHECK(hit.increase_attacked() ==
          doctest::Approx(attacked.cost - normal.cost).epsilon(1e-12));

    // Target-line figures are physical flows under the true loads.
    const Eigen::VectorXd f_atk = evaluate_flows(grid, attacked.g_mw, loads);
    const Eigen::VectorXd f_svr = evaluate_flows(grid, pred.g_mw, loads);
    CHECK(hit.target_rating_mw == doctest::Approx(net.lines[0].rating_mw));
    CHECK(hit.target_flow_attacked_mw == doctest::Approx(std::abs(f_atk(0))).epsilon(1e-12));
    CHECK(hit.target_flow_predicted_mw == doctest::Approx(std::abs(f_svr(0))).epsilon(1e-12));
    CHECK(hit.target_flow_mitigated_mw == doctest::Approx(std::abs(f_svr(0))).epsilon(1e-12));
    CHECK(hit.target_overflow_attacked_mw() ==
          doctest::Approx(std::max(0.0, std::abs(f_atk(0)) - net.lines[0].rating_mw)));

    // Max overflow over all lines, again under the true loads.
    double worst = 0.0;
    for (int l = 0; l < net.n_line(); ++l)
        worst = std::max(worst, std::abs(f_atk(l)) - net.lines[static_cast<std::size_t>(l)].rating_mw);
    CHECK(hit.overflow_attacked_mw == doctest::Approx(std::max(0.0, worst)).epsilon(1e-12));

    MitigationRecord miss = mitigate_scenario(grid, sc, 4, loads, predicted, false);
    CHECK(miss.cost_mitigated == doctest::Approx(attacked.cost).epsilon(1e-12));
    CHECK(miss.overflow_mitigated_mw == doctest::Approx(hit.overflow_attacked_mw).epsilon(1e-12));
    CHECK(miss.target_flow_mitigated_mw == doctest::Approx(std::abs(f_atk(0))).epsilon(1e-12));

    // Infeasible attacked dispatch discards the record with a reason.
    AttackScenario broken = sc;
    broken.p_atk.setConstant(170.0); // above total generation capacity
    MitigationRecord rec = mitigate_scenario(grid, broken, 5, loads, predicted, true);
    CHECK(rec.discarded);
    CHECK(rec.discard_reason.find("attacked dispatch") != std::string::npos);
}

TEST_CASE("mitigation aggregation keeps per-cell maxima") {
    auto rec = [](AttackKind kind, double tau, bool detected, double inc_atk, double inc_mit,
                  double tf_atk, double tf_mit, double rating) {
        MitigationRecord r;
        r.kind = kind;
        r.tau_requested = tau;
        r.detected = detected;
        r.cost_normal = 100.0;
        r.cost_attacked = 100.0 + inc_atk;
        r.cost_mitigated = 100.0 + inc_mit;
        r.target_flow_attacked_mw = tf_atk;
        r.target_flow_mitigated_mw = tf_mit;
        r.target_rating_mw = rating;
        return r;
    };
    std::vector<MitigationRecord> records = {
        rec(AttackKind::CostMax, 0.05, true, 10.0, 1.0, 0.0, 0.0, 0.0),
        rec(AttackKind::CostMax, 0.05, false, 20.0, 20.0, 0.0, 0.0, 0.0),
        rec(AttackKind::LineOverflow, 0.10, true, 3.0, 0.5, 30.0, 12.0, 16.0),
    };
    MitigationRecord dropped = rec(AttackKind::CostMax, 0.05, true, 999.0, 999.0, 0.0, 0.0, 0.0);
    dropped.discarded = true;
    records.push_back(dropped);

    std::vector<MitigationCurvePoint> pts = aggregate_mitigation(records);
    REQUIRE(pts.size() == 2);
    const MitigationCurvePoint& cm = pts[0].kind == AttackKind::CostMax ? pts[0] : pts[1];
    const MitigationCurvePoint& lo = pts[0].kind == AttackKind::CostMax ? pts[1] : pts[0];
    CHECK(cm.tau == doctest::Approx(0.05));
    CHECK(cm.records == 2);
    CHECK(cm.detected == 1);
    CHECK(cm.max_increase_attacked == doctest::Approx(20.0));
    CHECK(cm.max_increase_mitigated == doctest::Approx(20.0)); // the missed attack dominates
    CHECK(lo.records == 1);
    CHECK(lo.max_target_flow_attacked_mw == doctest::Approx(30.0));
    CHECK(lo.max_target_flow_mitigated_mw == doctest::Approx(12.0));
    CHECK(lo.max_target_overflow_attacked_mw == doctest::Approx(14.0));
    CHECK(lo.max_target_overflow_mitigated_mw == doctest::Approx(0.0));
}
