#include "lrshield/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"
#include "lrshield/logging.hpp"
#include "lrshield/rng.hpp"
#include "lrshield/thread_pool.hpp"

namespace lrshield {

namespace {

std::vector<int> model_column_ids(int variant, int s, int d, int n_loads, int load) {
    const int w = s + 1 + 2 * d;
    std::vector<int> cols;
    if (variant >= 2) {
        cols.resize(static_cast<std::size_t>(3 + n_loads * w));
        std::iota(cols.begin(), cols.end(), 0);
        return cols;
    }
    cols = {0, 1, 2};
    for (int j = 0; j < w; ++j) cols.push_back(3 + load * w + j);
    return cols;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(rows[r], cols[c]);
    return out;
}

bool close_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
    return (a - b).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

} // namespace

PredictorBundle train_predictor(const FeatureDataset& ds, const SplitCounts& split,
                                const PredictorConfig& cfg, int jobs) {
    if (!ds.standardized) throw ValidationError("train_predictor: dataset must be standardized");
    if (split.train <= 0 || split.train > ds.m())
        throw ValidationError("train_predictor: bad split");
    if (cfg.epsilon < 0 || cfg.penalty <= 0 || cfg.sigma <= 0)
        throw ValidationError("train_predictor: epsilon >= 0, penalty > 0, sigma > 0 required");

    const int take = cfg.max_train_rows > 0 ? std::min(cfg.max_train_rows, split.train)
                                            : split.train;
    std::vector<int> ids(static_cast<std::size_t>(take));
    for (int k = 0; k < take; ++k)
        ids[static_cast<std::size_t>(k)] =
            static_cast<int>(static_cast<long long>(k) * split.train / take);

    auto xsub = std::make_shared<Eigen::MatrixXd>(take, ds.x.cols());
    Eigen::MatrixXd ysub(take, ds.n_loads);
    for (int k = 0; k < take; ++k) {
        xsub->row(k) = ds.x.row(ids[static_cast<std::size_t>(k)]);
        ysub.row(k) = ds.y.row(ids[static_cast<std::size_t>(k)]);
    }

    PredictorBundle b;
    b.kernel = KernelSpec{KernelKind::Rbf, cfg.sigma};
    b.epsilon = cfg.epsilon;
    b.penalty = cfg.penalty;
    b.variant = ds.variant;
    b.lag_s = ds.lag_s;
    b.lag_d = ds.lag_d;
    b.n_loads = ds.n_loads;
    b.x_mean = ds.x_mean;
    b.x_std = ds.x_std;
    b.y_mean = ds.y_mean;
    b.y_std = ds.y_std;
    b.train_x = xsub;
    b.train_row_ids = ids;
    b.models.resize(static_cast<std::size_t>(ds.n_loads));

    log_info("training ", ds.n_loads, " load predictors on ", take, " rows (variant ",
             ds.variant, ", p=", ds.p(), ")");
    if (ds.variant >= 2) {
        const Eigen::MatrixXd gram = kernel_matrix(b.kernel, *xsub);
        parallel_for(ds.n_loads, jobs, [&](int i) {
            const Eigen::VectorXd yi = ysub.col(i);
            b.models[static_cast<std::size_t>(i)] =
                train_svr_with_gram(xsub, gram, yi, cfg.epsilon, cfg.penalty, b.kernel, cfg.train);
        });
    } else {
        std::vector<int> all_rows(static_cast<std::size_t>(take));
        std::iota(all_rows.begin(), all_rows.end(), 0);
        parallel_for(ds.n_loads, jobs, [&](int i) {
            const auto cols = model_column_ids(ds.variant, ds.lag_s, ds.lag_d, ds.n_loads, i);
            const Eigen::MatrixXd xi = gather(*xsub, all_rows, cols);
            const Eigen::VectorXd yi = ysub.col(i);
            b.models[static_cast<std::size_t>(i)] =
                train_svr(xi, yi, cfg.epsilon, cfg.penalty, b.kernel, cfg.train);
        });
    }
    return b;
}

Eigen::MatrixXd PredictorBundle::predict_mw(const FeatureDataset& ds,
                                            const std::vector<int>& sample_ids, int jobs) const {
    if (!ds.standardized) throw ValidationError("predict_mw: dataset must be standardized");
    if (ds.variant != variant || ds.lag_s != lag_s || ds.lag_d != lag_d || ds.n_loads != n_loads)
        throw ValidationError("predict_mw: dataset layout differs from the fitted layout");
    if (!close_vec(ds.x_mean, x_mean) || !close_vec(ds.y_mean, y_mean))
        throw ValidationError("predict_mw: dataset standardization differs from the fit");
    for (int id : sample_ids)
        if (id < 0 || id >= ds.m())
            throw ValidationError("predict_mw: sample id " + std::to_string(id) + " out of range");
    if (static_cast<int>(models.size()) != n_loads)
        throw ValidationError("predict_mw: bundle has no trained models");

    const int nq = static_cast<int>(sample_ids.size());
    Eigen::MatrixXd out(nq, n_loads);
    if (variant >= 2) {
        const Eigen::MatrixXd& tx = *train_x;
        const int mtr = static_cast<int>(tx.rows());
        Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(mtr, n_loads);
        Eigen::VectorXd bias(n_loads);
        for (int i = 0; i < n_loads; ++i) {
            const SvrModel& m = models[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < m.sv_rows.size(); ++k)
                coef(m.sv_rows[k], i) = m.sv_coef(static_cast<Eigen::Index>(k));
            bias(i) = m.bias;
        }
        const int chunk = 4096;
        const int n_chunks = (nq + chunk - 1) / chunk;
        parallel_for(n_chunks, jobs, [&](int ci) {
            const int s0 = ci * chunk;
            const int len = std::min(chunk, nq - s0);
            Eigen::MatrixXd q(len, tx.cols());
            for (int r = 0; r < len; ++r)
                q.row(r) = ds.x.row(sample_ids[static_cast<std::size_t>(s0 + r)]);
            const Eigen::MatrixXd cross = kernel_cross(kernel, q, tx);
            out.middleRows(s0, len) = cross * coef;
            out.middleRows(s0, len).rowwise() += bias.transpose();
        });
    } else {
        parallel_for(n_loads, jobs, [&](int i) {
            const auto cols = model_column_ids(variant, lag_s, lag_d, n_loads, i);
            const Eigen::MatrixXd q = gather(ds.x, sample_ids, cols);
            out.col(i) = models[static_cast<std::size_t>(i)].predict_batch(q);
        });
    }
    for (int i = 0; i < n_loads; ++i)
        out.col(i) = out.col(i).array() * y_std(i) + y_mean(i);
    return out;
}

nlohmann::json predictor_to_json(const PredictorBundle& b) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : b.models) models.push_back(svr_to_json(m));
    return nlohmann::json{{"type", "lrshield-predictor"},
                          {"version", 1},
                          {"epsilon", b.epsilon},
                          {"penalty", b.penalty},
                          {"sigma", b.kernel.sigma},
                          {"variant", b.variant},
                          {"lag_s", b.lag_s},
                          {"lag_d", b.lag_d},
                          {"n_loads", b.n_loads},
                          {"x_mean", evector_to_json(b.x_mean)},
                          {"x_std", evector_to_json(b.x_std)},
                          {"y_mean", evector_to_json(b.y_mean)},
                          {"y_std", evector_to_json(b.y_std)},
                          {"train_row_ids", b.train_row_ids},
                          {"train_x", matrix_to_json(*b.train_x)},
                          {"models", models}};
}

PredictorBundle predictor_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("type", "") != "lrshield-predictor")
        throw ValidationError("predictor archive: unexpected document type");
    PredictorBundle b;
    b.epsilon = j.at("epsilon").get<double>();
    b.penalty = j.at("penalty").get<double>();
    b.kernel = KernelSpec{KernelKind::Rbf, j.at("sigma").get<double>()};
    b.variant = j.at("variant").get<int>();
    b.lag_s = j.at("lag_s").get<int>();
    b.lag_d = j.at("lag_d").get<int>();
    b.n_loads = j.at("n_loads").get<int>();
    b.x_mean = evector_from_json(j.at("x_mean"), "x_mean");
    b.x_std = evector_from_json(j.at("x_std"), "x_std");
    b.y_mean = evector_from_json(j.at("y_mean"), "y_mean");
    b.y_std = evector_from_json(j.at("y_std"), "y_std");
    b.train_row_ids = j.at("train_row_ids").get<std::vector<int>>();
    auto shared = std::make_shared<Eigen::MatrixXd>(matrix_from_json(j.at("train_x"), "train_x"));
    b.train_x = shared;
    const auto& models = j.at("models");
    if (!models.is_array() || static_cast<int>(models.size()) != b.n_loads)
        throw ValidationError("predictor archive: expected one model per load");
    std::vector<int> all_rows(static_cast<std::size_t>(shared->rows()));
    std::iota(all_rows.begin(), all_rows.end(), 0);
    for (int i = 0; i < b.n_loads; ++i) {
        std::shared_ptr<const Eigen::MatrixXd> mx = b.train_x;
        if (b.variant < 2) {
            const auto cols = model_column_ids(b.variant, b.lag_s, b.lag_d, b.n_loads, i);
            mx = std::make_shared<const Eigen::MatrixXd>(gather(*shared, all_rows, cols));
        }
        b.models.push_back(svr_from_json(models[static_cast<std::size_t>(i)], mx));
    }
    return b;
}

LoadMetrics metrics_rmse_mape(const Eigen::MatrixXd& truth_mw, const Eigen::MatrixXd& pred_mw) {
    if (truth_mw.rows() != pred_mw.rows() || truth_mw.cols() != pred_mw.cols())
        throw ValidationError("metrics: shape mismatch");
    if (truth_mw.rows() == 0) throw ValidationError("metrics: no rows");
    const int n = static_cast<int>(truth_mw.cols());
    LoadMetrics m;
    m.rmse_mw.resize(n);
    m.mape.resize(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::ArrayXd diff = (truth_mw.col(i) - pred_mw.col(i)).array();
        m.rmse_mw(i) = std::sqrt(diff.square().mean());
        double acc = 0.0;
        long cnt = 0;
        for (Eigen::Index r = 0; r < truth_mw.rows(); ++r) {
            const double t = truth_mw(r, i);
            if (std::abs(t) <= 1e-9) continue;
            acc += std::abs((t - pred_mw(r, i)) / t);
            ++cnt;
        }
        m.mape(i) = cnt > 0 ? acc / static_cast<double>(cnt) : 0.0;
    }
    return m;
}

int tau_bucket(double tau) {
    const int b = static_cast<int>(std::ceil(tau * 100.0 - 1e-9));
    return std::clamp(b, 1, 20);
}

DetectorDataset build_detector_dataset(const FeatureDataset& ds, const SplitCounts& split,
                                       const LoadSeries& series, const PredictorBundle& bundle,
                                       const std::vector<AttackScenario>& scenarios,
                                       const DetectorBuildConfig& cfg, std::uint64_t master_seed,
                                       int jobs) {
    if (split.train + split.test != ds.m() || split.test <= 0)
        throw ValidationError("detector dataset: bad split");
    if (!series.bus_ordered)
        throw ValidationError("detector dataset: series must be bus ordered");
    if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
        throw ValidationError("detector dataset: train_fraction must lie in (0, 1)");
    const int n_loads = ds.n_loads;
    const int first_base = 24 * ds.lag_d;

    // Normal samples: seeded subsample of the full prediction range.
    std::vector<int> pool(static_cast<std::size_t>(ds.m()));
    std::iota(pool.begin(), pool.end(), 0);
    int want = cfg.normal_count;
    if (want <= 0 || want > ds.m()) {
        if (want > ds.m())
            log_warn("detector dataset: normal_count ", want, " > available ", ds.m());
        want = ds.m();
    }
    {
        Rng rng = make_rng(derive_seed(master_seed, seed_stream::detector_normals, 0));
        std::shuffle(pool.begin(), pool.end(), rng);
    }
    std::vector<int> normal_ids(pool.begin(), pool.begin() + want);
    std::sort(normal_ids.begin(), normal_ids.end());

    // Attack scenarios map to the sample whose prediction targets their hour.
    std::vector<int> attack_sample(scenarios.size(), -1);
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const int k = scenarios[si].hour - 1 - first_base;
        if (k < 0 || k >= ds.m() || ds.sample_rows[static_cast<std::size_t>(k)] + 1 != scenarios[si].hour)
            throw ValidationError("detector dataset: scenario hour " +
                                  std::to_string(scenarios[si].hour) +
                                  " has no matching feature sample");
        attack_sample[si] = k;
    }

    // One prediction pass over every sample this dataset touches.
    std::vector<int> pred_ids = normal_ids;
    pred_ids.insert(pred_ids.end(), attack_sample.begin(), attack_sample.end());
    std::sort(pred_ids.begin(), pred_ids.end());
    pred_ids.erase(std::unique(pred_ids.begin(), pred_ids.end()), pred_ids.end());
    const Eigen::MatrixXd pred_mw = bundle.predict_mw(ds, pred_ids, jobs);
    std::unordered_map<int, int> pred_row;
    pred_row.reserve(pred_ids.size());
    for (std::size_t i = 0; i < pred_ids.size(); ++i)
        pred_row[pred_ids[i]] = static_cast<int>(i);

    DetectorDataset data;
    data.q = 3 + 2 * n_loads;
    data.samples.reserve(normal_ids.size() + scenarios.size());

    auto make_u = [&](int target_row, const Eigen::VectorXd& observed_mw, int sample_id) {
        Eigen::VectorXd u(data.q);
        const CivilHour& t = series.labels[static_cast<std::size_t>(target_row)];
        u(0) = t.month;
        u(1) = is_weekend(t) ? 2.0 : 1.0;
        u(2) = t.hour;
        u.segment(3, n_loads) = pred_mw.row(pred_row.at(sample_id)).transpose();
        u.segment(3 + n_loads, n_loads) = observed_mw;
        return u;
    };

    for (int id : normal_ids) {
        DetectorSample s;
        const int target = ds.sample_rows[static_cast<std::size_t>(id)] + 1;
        s.u = make_u(target, series.values.row(target).transpose(), id);
        s.label = -1;
        s.hour = target;
        data.samples.push_back(std::move(s));
    }
    const std::size_t n_norm = data.samples.size();

    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const AttackScenario& sc = scenarios[si];
        DetectorSample s;
        s.u = make_u(sc.hour, sc.p_atk, attack_sample[si]);
        s.label = 1;
        s.tau_real = sc.tau_real;
        s.tau_requested = sc.tau_requested;
        s.hour = sc.hour;
        s.kind = sc.kind;
        s.scenario_id = static_cast<int>(si);
        data.samples.push_back(std::move(s));
    }

    // Train/eval split.  Normals: plain shuffle.  Random-kind attacks:
    // stratified by shift bucket.  Optimized attacks stay evaluation-only.
    {
        std::vector<int> order(n_norm);
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_rng(derive_seed(master_seed, seed_stream::detector_split, 0));
        std::shuffle(order.begin(), order.end(), rng);
        const int ntr = static_cast<int>(cfg.train_fraction * static_cast<double>(n_norm));
        for (int i = 0; i < ntr; ++i) data.samples[static_cast<std::size_t>(order[i])].is_train = true;
    }
    std::map<int, std::vector<int>> by_bucket; // sample indices of random-kind attacks
    for (std::size_t i = n_norm; i < data.samples.size(); ++i)
        if (data.samples[i].kind == AttackKind::Random)
            by_bucket[tau_bucket(data.samples[i].tau_real)].push_back(static_cast<int>(i));
    std::vector<int> attacked_train;
    for (auto& [bucket, ids] : by_bucket) {
        Rng rng = make_rng(derive_seed(master_seed, seed_stream::detector_split,
                                       100 + static_cast<std::uint64_t>(bucket)));
        std::shuffle(ids.begin(), ids.end(), rng);
        const int ntr = static_cast<int>(cfg.train_fraction * static_cast<double>(ids.size()));
        for (int i = 0; i < ntr; ++i) attacked_train.push_back(ids[static_cast<std::size_t>(i)]);
    }
    std::sort(attacked_train.begin(), attacked_train.end());
    if (cfg.attacked_train_max > 0 &&
        static_cast<int>(attacked_train.size()) > cfg.attacked_train_max) {
        const int total = static_cast<int>(attacked_train.size());
        std::vector<int> kept;
        kept.reserve(static_cast<std::size_t>(cfg.attacked_train_max));
        for (int k = 0; k < cfg.attacked_train_max; ++k)
            kept.push_back(attacked_train[static_cast<std::size_t>(
                static_cast<long long>(k) * total / cfg.attacked_train_max)]);
        attacked_train = std::move(kept);
    }
    for (int idx : attacked_train) data.samples[static_cast<std::size_t>(idx)].is_train = true;
    return data;
}

DetectorModel train_detector(const DetectorDataset& data, const DetectorConfig& cfg) {
    if (cfg.penalty <= 0) throw ValidationError("train_detector: penalty must be positive");
    std::vector<int> rows;
    int n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const DetectorSample& s = data.samples[i];
        if (!s.is_train) continue;
        if (s.label > 0 && s.tau_real + 1e-12 < cfg.tau_min) continue;
        rows.push_back(static_cast<int>(i));
        (s.label > 0 ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("train_detector: training set lost a class (tau_min too high?)");

    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd u(n, data.q);
    Eigen::VectorXd labels(n);
    for (int i = 0; i < n; ++i) {
        u.row(i) = data.samples[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])].u;
        labels(i) = data.samples[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])].label;
    }

    DetectorModel m;
    m.penalty = cfg.penalty;
    m.tau_min = cfg.tau_min;
    m.q = data.q;
    m.trained_normals = n_neg;
    m.trained_attacked = n_pos;
    m.u_mean = u.colwise().mean();
    m.u_std.resize(data.q);
    for (int c = 0; c < data.q; ++c) {
        const double var = (u.col(c).array() - m.u_mean(c)).square().mean();
        const double sd = std::sqrt(var);
        if (sd <= 1e-12) {
            log_warn("detector feature ", c, " has zero variance in training");
            m.u_std(c) = 1.0;
        } else {
            m.u_std(c) = sd;
        }
        u.col(c) = (u.col(c).array() - m.u_mean(c)) / m.u_std(c);
    }
    const double sigma = cfg.sigma > 0 ? cfg.sigma : 1.0 / static_cast<double>(data.q);
    log_info("training detector on ", n_pos, " attacked + ", n_neg, " normal samples (C=",
             cfg.penalty, ", tau_min=", cfg.tau_min, ", sigma=", sigma, ")");
    m.svm = train_svm(u, labels, cfg.penalty, KernelSpec{KernelKind::Rbf, sigma}, cfg.train);
    return m;
}

double DetectorModel::decision(const Eigen::VectorXd& u_raw) const {
    if (u_raw.size() != q) throw ValidationError("detector: feature size mismatch");
    const Eigen::VectorXd z = (u_raw - u_mean).cwiseQuotient(u_std);
    return svm.decision(z);
}

int DetectorModel::predict(const Eigen::VectorXd& u_raw) const {
    return decision(u_raw) >= 0.0 ? 1 : -1;
}

Eigen::VectorXd DetectorModel::decision_batch(const Eigen::MatrixXd& u_raw_rows) const {
    if (u_raw_rows.cols() != q) throw ValidationError("detector: feature size mismatch");
    Eigen::MatrixXd z = u_raw_rows;
    z.rowwise() -= u_mean.transpose();
    z.array().rowwise() /= u_std.transpose().array();
    return svm.decision_batch(z);
}

nlohmann::json detector_to_json(const DetectorModel& m) {
    // Archive only the support rows; remap indices into the compact matrix.
    Eigen::MatrixXd svx(static_cast<Eigen::Index>(m.svm.sv_rows.size()), m.svm.train_x->cols());
    for (std::size_t k = 0; k < m.svm.sv_rows.size(); ++k)
        svx.row(static_cast<Eigen::Index>(k)) = m.svm.train_x->row(m.svm.sv_rows[k]);
    SvmModel compact;
    compact.kernel = m.svm.kernel;
    compact.sv_coef = m.svm.sv_coef;
    compact.bias = m.svm.bias;
    compact.sv_rows.resize(m.svm.sv_rows.size());
    std::iota(compact.sv_rows.begin(), compact.sv_rows.end(), 0);
    return nlohmann::json{{"type", "lrshield-detector"},
                          {"version", 1},
                          {"penalty", m.penalty},
                          {"tau_min", m.tau_min},
                          {"q", m.q},
                          {"trained_normals", m.trained_normals},
                          {"trained_attacked", m.trained_attacked},
                          {"u_mean", evector_to_json(m.u_mean)},
                          {"u_std", evector_to_json(m.u_std)},
                          {"sv_x", matrix_to_json(svx)},
                          {"svm", svm_to_json(compact)}};
}

DetectorModel detector_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("type", "") != "lrshield-detector")
        throw ValidationError("detector archive: unexpected document type");
    DetectorModel m;
    m.penalty = j.at("penalty").get<double>();
    m.tau_min = j.at("tau_min").get<double>();
    m.q = j.at("q").get<int>();
    m.trained_normals = j.at("trained_normals").get<int>();
    m.trained_attacked = j.at("trained_attacked").get<int>();
    m.u_mean = evector_from_json(j.at("u_mean"), "u_mean");
    m.u_std = evector_from_json(j.at("u_std"), "u_std");
    auto svx = std::make_shared<Eigen::MatrixXd>(matrix_from_json(j.at("sv_x"), "sv_x"));
    m.svm = svm_from_json(j.at("svm"), svx);
    if (m.u_mean.size() != m.q || m.u_std.size() != m.q || svx->cols() != m.q)
        throw ValidationError("detector archive: inconsistent feature dimension");
    return m;
}

DetectionReport evaluate_detector(const DetectorModel& model, const DetectorDataset& data) {
    if (data.q != model.q) throw ValidationError("evaluate_detector: feature size mismatch");
    const int n = static_cast<int>(data.samples.size());
    Eigen::MatrixXd u(n, data.q);
    for (int i = 0; i < n; ++i) u.row(i) = data.samples[static_cast<std::size_t>(i)].u;
    const Eigen::VectorXd dec = model.decision_batch(u);

    DetectionReport rep;
    std::map<int, BucketStat> buckets;
    std::map<std::pair<int, long>, MilpCellStat> cells;
    int fa_all = 0, fa_test = 0;
    for (int i = 0; i < n; ++i) {
        const DetectorSample& s = data.samples[static_cast<std::size_t>(i)];
        const bool flagged = dec(i) >= 0.0;
        if (s.label < 0) {
            rep.normals_total += 1;
            if (flagged) fa_all += 1;
            if (!s.is_train) {
                rep.normals_test += 1;
                if (flagged) fa_test += 1;
            }
            continue;
        }
        if (s.is_train) continue;
        rep.attacked_test_total += 1;
        if (s.kind == AttackKind::Random) {
            BucketStat& b = buckets[tau_bucket(s.tau_real)];
            b.bucket = tau_bucket(s.tau_real);
            b.count += 1;
            if (flagged) b.detected += 1;
        } else {
            const auto key = std::make_pair(static_cast<int>(s.kind),
                                            std::lround(s.tau_requested * 10000.0));
            MilpCellStat& c = cells[key];
            c.kind = s.kind;
            c.tau = s.tau_requested;
            c.count += 1;
            if (flagged) c.detected += 1;
        }
    }
    rep.false_alarm_all = rep.normals_total > 0
                              ? static_cast<double>(fa_all) / rep.normals_total : 0.0;
    rep.false_alarm_test = rep.normals_test > 0
                               ? static_cast<double>(fa_test) / rep.normals_test : 0.0;
    for (const auto& [k, b] : buckets) rep.random_buckets.push_back(b);
    for (const auto& [k, c] : cells) rep.milp_cells.push_back(c);
    return rep;
}

std::vector<SweepRow> sweep_detector(const DetectorDataset& data, const DetectorConfig& base,
                                     const std::vector<double>& tau_min_grid,
                                     const std::vector<double>& penalty_grid) {
    std::vector<SweepRow> rows;
    for (double tau_min : tau_min_grid) {
        for (double penalty : penalty_grid) {
            DetectorConfig cfg = base;
            cfg.tau_min = tau_min;
            cfg.penalty = penalty;
            const DetectorModel model = train_detector(data, cfg);
            const DetectionReport rep = evaluate_detector(model, data);
            SweepRow row;
            row.tau_min = tau_min;
            row.penalty = penalty;
            row.false_alarm_all = rep.false_alarm_all;
            row.false_alarm_test = rep.false_alarm_test;
            row.trained_attacked = model.trained_attacked;
            row.buckets = rep.random_buckets;
            int cnt = 0, det = 0;
            for (const auto& b : rep.random_buckets) {
                cnt += b.count;
                det += b.detected;
            }
            row.detection_avg = cnt > 0 ? static_cast<double>(det) / cnt : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

namespace {

double worst_overflow(const Grid& grid, const Eigen::VectorXd& g_mw,
                      const Eigen::VectorXd& true_loads_mw) {
    const Eigen::VectorXd f = evaluate_flows(grid, g_mw, true_loads_mw);
    double worst = 0.0;
    for (int l = 0; l < grid.net.n_line(); ++l)
        worst = std::max(worst, std::abs(f(l)) - grid.net.lines[static_cast<std::size_t>(l)].rating_mw);
    return std::max(worst, 0.0);
}

} // namespace

MitigationRecord mitigate_scenario(const Grid& grid, const AttackScenario& sc, int scenario_id,
                                   const Eigen::VectorXd& true_loads_mw,
                                   const Eigen::VectorXd& predicted_loads_mw, bool detected) {
    MitigationRecord rec;
    rec.scenario_id = scenario_id;
    rec.kind = sc.kind;
    rec.tau_requested = sc.tau_requested;
    rec.hour = sc.hour;
    rec.detected = detected;

    const Dispatch normal = solve_dcopf(grid, true_loads_mw);
    if (normal.status != SolveStatus::Optimal) {
        rec.discarded = true;
        rec.discard_reason = "baseline dispatch " + to_string(normal.status);
        return rec;
    }
    const Dispatch attacked = solve_dcopf(grid, sc.p_atk);
    if (attacked.status != SolveStatus::Optimal) {
        rec.discarded = true;
        rec.discard_reason = "attacked dispatch " + to_string(attacked.status);
        return rec;
    }
    const Dispatch predicted = solve_dcopf(grid, predicted_loads_mw);
    if (predicted.status != SolveStatus::Optimal) {
        rec.discarded = true;
        rec.discard_reason = "predicted-load dispatch " + to_string(predicted.status);
        return rec;
    }
    rec.cost_normal = normal.cost;
    rec.cost_attacked = attacked.cost;
    rec.cost_predicted = predicted.cost;
    rec.overflow_attacked_mw = worst_overflow(grid, attacked.g_mw, true_loads_mw);
    rec.overflow_predicted_mw = worst_overflow(grid, predicted.g_mw, true_loads_mw);
    rec.cost_mitigated = detected ? rec.cost_predicted : rec.cost_attacked;
    rec.overflow_mitigated_mw = detected ? rec.overflow_predicted_mw : rec.overflow_attacked_mw;
    if (sc.target_line >= 0 && sc.target_line < grid.net.n_line()) {
        const Eigen::VectorXd f_atk = evaluate_flows(grid, attacked.g_mw, true_loads_mw);
        const Eigen::VectorXd f_svr = evaluate_flows(grid, predicted.g_mw, true_loads_mw);
        rec.target_rating_mw =
            grid.net.lines[static_cast<std::size_t>(sc.target_line)].rating_mw;
        rec.target_flow_attacked_mw = std::abs(f_atk(sc.target_line));
        rec.target_flow_predicted_mw = std::abs(f_svr(sc.target_line));
        rec.target_flow_mitigated_mw =
            detected ? rec.target_flow_predicted_mw : rec.target_flow_attacked_mw;
    }
    return rec;
}

std::vector<MitigationCurvePoint> aggregate_mitigation(
    const std::vector<MitigationRecord>& records) {
    std::map<std::pair<int, long>, MitigationCurvePoint> points;
    for (const auto& r : records) {
        if (r.discarded) continue;
        const auto key = std::make_pair(static_cast<int>(r.kind),
                                        std::lround(r.tau_requested * 10000.0));
        MitigationCurvePoint& p = points[key];
        p.kind = r.kind;
        p.tau = r.tau_requested;
        p.records += 1;
        if (r.detected) p.detected += 1;
        p.max_increase_attacked = std::max(p.max_increase_attacked, r.increase_attacked());
        p.max_increase_mitigated = std::max(p.max_increase_mitigated, r.increase_mitigated());
        p.max_target_flow_attacked_mw =
            std::max(p.max_target_flow_attacked_mw, r.target_flow_attacked_mw);
        p.max_target_flow_mitigated_mw =
            std::max(p.max_target_flow_mitigated_mw, r.target_flow_mitigated_mw);
        p.max_target_overflow_attacked_mw =
            std::max(p.max_target_overflow_attacked_mw, r.target_overflow_attacked_mw());
        p.max_target_overflow_mitigated_mw =
            std::max(p.max_target_overflow_mitigated_mw, r.target_overflow_mitigated_mw());
    }
    std::vector<MitigationCurvePoint> out;
    out.reserve(points.size());
    for (const auto& [k, p] : points) out.push_back(p);
    return out;
}

} // namespace lrshield
