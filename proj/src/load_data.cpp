#include "lrshield/load_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "lrshield/errors.hpp"
#include "lrshield/io_util.hpp"
#include "lrshield/logging.hpp"
#include "lrshield/rng.hpp"

namespace lrshield {

const std::vector<ZoneEntry>& zone_table() {
    static const std::vector<ZoneEntry> table = {
        {"DOM", 2},  {"AE", 3},   {"JC", 4},   {"CE", 7},   {"AEP", 8},
        {"DPL", 10}, {"PS", 12},  {"DEOK", 14}, {"PEP", 15}, {"DAY", 16},
        {"PL", 17},  {"PN", 18},  {"PE", 19},  {"RECO", 20}, {"ATSI", 21},
        {"DUQ", 23}, {"BC", 24},  {"ME", 26},  {"EKPC", 29}, {"AP", 30},
    };
    return table;
}

Eigen::VectorXd default_zone_base_mw() {
    // Study-network nominal loads divided by kZoneScale, so the mapped system
    // sits at its nominal operating point when the level factor is 1.
    static const double pd[] = {21.7, 2.4, 7.6, 22.8, 30.0, 5.8, 11.2, 6.2, 8.2, 3.5,
                                9.0,  3.2, 9.5, 2.2,  17.5, 3.2, 8.7,  3.5, 2.4, 10.6};
    Eigen::VectorXd base(20);
    for (int i = 0; i < 20; ++i) base(i) = pd[i] / kZoneScale;
    return base;
}

namespace {

struct RawRow {
    CivilHour label;
    std::vector<double> values;
};

double parse_mw(const std::string& cell, const std::string& ctx) {
    if (cell.empty())
        throw ParseError(ctx + ": empty load value");
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError(ctx + ": invalid number '" + cell + "'");
    }
    if (pos != cell.size())
        throw ParseError(ctx + ": invalid number '" + cell + "'");
    if (!std::isfinite(v))
        throw ParseError(ctx + ": non-finite load value");
    return v;
}

} // namespace

LoadSeries ingest_csv(const std::vector<std::filesystem::path>& paths) {
    if (paths.empty())
        throw ValidationError("ingest_csv: no input files");

    std::vector<std::string> columns;
    bool long_format = false;
    std::vector<RawRow> rows;                       // wide accumulation
    std::map<std::int64_t, std::map<std::string, std::vector<double>>> long_cells;
    std::vector<std::pair<std::int64_t, CivilHour>> long_labels;

    for (const auto& path : paths) {
        std::istringstream in(read_text_file(path));
        std::string line;
        std::size_t line_no = 0;
        std::vector<std::string> header;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            std::string ctx = path.string() + ":" + std::to_string(line_no);
            auto cells = split_csv_line(line);
            if (header.empty()) {
                header = cells;
                if (header.size() < 2 || header[0] != "datetime")
                    throw ParseError(ctx + ": header must start with 'datetime'");
                bool is_long = header.size() == 3 && header[1] == "zone" && header[2] == "mw";
                if (columns.empty() && rows.empty() && long_cells.empty()) {
                    long_format = is_long;
                    if (!is_long) columns.assign(header.begin() + 1, header.end());
                } else if (long_format != is_long) {
                    throw ParseError(ctx + ": mixed wide and long CSV formats across inputs");
                } else if (!is_long) {
                    std::vector<std::string> these(header.begin() + 1, header.end());
                    if (these != columns)
                        throw ParseError(ctx + ": column set differs from the first input file");
                }
                continue;
            }
            if (cells.size() != header.size())
                throw ParseError(ctx + ": expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(cells.size()));
            CivilHour label = parse_civil(cells[0]);
            if (long_format) {
                std::int64_t key = naive_hour_serial(label);
                auto& bucket = long_cells[key];
                if (bucket.empty()) long_labels.emplace_back(key, label);
                bucket[cells[1]].push_back(parse_mw(cells[2], ctx));
            } else {
                RawRow r;
                r.label = label;
                r.values.reserve(columns.size());
                for (std::size_t i = 1; i < cells.size(); ++i)
                    r.values.push_back(parse_mw(cells[i], ctx));
                rows.push_back(std::move(r));
            }
        }
        if (header.empty())
            throw ParseError(path.string() + ": empty file");
    }

    LoadSeries out;
    if (long_format) {
        // Deterministic column order: sorted zone codes.
        std::vector<std::string> zone_order;
        {
            std::set<std::string> seen;
            for (auto& [key, zones] : long_cells)
                for (auto& [zone, vals] : zones) seen.insert(zone);
            zone_order.assign(seen.begin(), seen.end());
        }
        std::sort(long_labels.begin(), long_labels.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<CivilHour> labels;
        std::vector<std::vector<double>> data;
        for (auto& [key, label] : long_labels) {
            auto& zones = long_cells[key];
            // A duplicated wall-clock hour shows up as repeated readings; all
            // zones must agree on the count.
            std::size_t copies = 0;
            for (const auto& z : zone_order) {
                auto it = zones.find(z);
                std::size_t have = it == zones.end() ? 0 : it->second.size();
                if (copies == 0) copies = have;
                if (have != copies || have == 0)
                    throw ParseError("ingest_csv: zone '" + z + "' has " + std::to_string(have) +
                                     " readings at " + format_civil(label) + ", expected " +
                                     std::to_string(copies == 0 ? 1 : copies));
            }
            for (std::size_t c = 0; c < copies; ++c) {
                std::vector<double> row;
                row.reserve(zone_order.size());
                for (const auto& z : zone_order) row.push_back(zones[z][c]);
                labels.push_back(label);
                data.push_back(std::move(row));
            }
        }
        out.labels = std::move(labels);
        out.columns = zone_order;
        out.values.resize(static_cast<Eigen::Index>(data.size()),
                          static_cast<Eigen::Index>(zone_order.size()));
        for (std::size_t r = 0; r < data.size(); ++r)
            for (std::size_t c = 0; c < zone_order.size(); ++c)
                out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r][c];
    } else {
        std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
            return naive_hour_serial(a.label) < naive_hour_serial(b.label);
        });
        out.columns = columns;
        out.labels.reserve(rows.size());
        out.values.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(columns.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out.labels.push_back(rows[r].label);
            for (std::size_t c = 0; c < columns.size(); ++c)
                out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    rows[r].values[c];
        }
    }
    if (out.rows() == 0)
        throw ValidationError("ingest_csv: no data rows");
    return out;
}

LoadSeries map_zones_to_buses(const LoadSeries& series) {
    const auto& table = zone_table();
    std::set<std::string> known;
    for (const auto& z : table) known.insert(z.code);
    for (const auto& col : series.columns)
        if (known.count(col) == 0)
            throw ValidationError("map_zones_to_buses: unknown zone '" + col + "'");

    LoadSeries out;
    out.labels = series.labels;
    out.bus_ordered = true;
    out.columns.reserve(table.size());
    out.values.resize(series.values.rows(), static_cast<Eigen::Index>(table.size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        auto it = std::find(series.columns.begin(), series.columns.end(), table[i].code);
        if (it == series.columns.end())
            throw ValidationError(std::string("map_zones_to_buses: zone '") + table[i].code +
                                  "' missing from the input");
        auto col = static_cast<Eigen::Index>(std::distance(series.columns.begin(), it));
        out.values.col(static_cast<Eigen::Index>(i)) = series.values.col(col) * kZoneScale;
        out.columns.push_back(table[i].code);
    }
    return out;
}

LoadSeries normalize_calendar(const LoadSeries& series, NormalizeReport* report) {
    if (series.rows() == 0)
        throw ValidationError("normalize_calendar: empty series");
    NormalizeReport rep;

    // 1. Collapse duplicated labels by averaging consecutive runs.
    std::vector<CivilHour> labels;
    std::vector<Eigen::VectorXd> values;
    int r = 0;
    const int n = series.rows();
    while (r < n) {
        int r2 = r + 1;
        while (r2 < n && series.labels[static_cast<std::size_t>(r2)] ==
                             series.labels[static_cast<std::size_t>(r)])
            ++r2;
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(series.values.cols());
        for (int k = r; k < r2; ++k) avg += series.values.row(k).transpose();
        avg /= static_cast<double>(r2 - r);
        if (r2 - r > 1) {
            rep.duplicates_averaged += r2 - r - 1;
            log_debug("normalize: averaged ", r2 - r, " readings at ",
                      format_civil(series.labels[static_cast<std::size_t>(r)]));
        }
        labels.push_back(series.labels[static_cast<std::size_t>(r)]);
        values.push_back(std::move(avg));
        r = r2;
    }

    // 2. Walk the label chain; fill isolated single-hour holes, never the
    // spring-forward label (it does not exist in wall-clock time).
    std::vector<CivilHour> out_labels;
    std::vector<Eigen::VectorXd> out_values;
    out_labels.push_back(labels[0]);
    out_values.push_back(values[0]);
    for (std::size_t i = 1; i < labels.size(); ++i) {
        const CivilHour& prev = out_labels.back();
        const CivilHour& cur = labels[i];
        if (naive_hour_serial(cur) <= naive_hour_serial(prev))
            throw ValidationError("normalize_calendar: timestamps out of order near " +
                                  format_civil(cur));
        // Missing labels strictly between prev and cur, minus the skipped one.
        std::vector<CivilHour> missing;
        CivilHour walk = next_naive(prev);
        while (walk != cur) {
            if (!is_skipped_label(walk)) missing.push_back(walk);
            walk = next_naive(walk);
            if (missing.size() > 2) break;
        }
        if (missing.size() > 1)
            throw ValidationError("normalize_calendar: gap of " +
                                  std::to_string(missing.size()) + "+ hours after " +
                                  format_civil(prev));
        if (missing.size() == 1) {
            Eigen::VectorXd interp = 0.5 * (out_values.back() + values[i]);
            log_debug("normalize: interpolated missing hour ", format_civil(missing[0]));
            ++rep.gaps_interpolated;
            out_labels.push_back(missing[0]);
            out_values.push_back(std::move(interp));
        }
        out_labels.push_back(cur);
        out_values.push_back(values[i]);
    }

    LoadSeries out;
    out.columns = series.columns;
    out.bus_ordered = series.bus_ordered;
    out.labels = std::move(out_labels);
    out.values.resize(static_cast<Eigen::Index>(out.labels.size()), series.values.cols());
    for (std::size_t i = 0; i < out.labels.size(); ++i)
        out.values.row(static_cast<Eigen::Index>(i)) = out_values[i].transpose();
    if (rep.duplicates_averaged > 0)
        log_warn("normalize: averaged ", rep.duplicates_averaged, " duplicated hourly readings");
    if (rep.gaps_interpolated > 0)
        log_warn("normalize: interpolated ", rep.gaps_interpolated, " single-hour gaps");
    if (report) *report = rep;
    return out;
}

LoadSeries synth_loads(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.end_year < cfg.start_year)
        throw ValidationError("synth_loads: end_year before start_year");
    Eigen::VectorXd base = cfg.zone_base_mw.empty()
                               ? default_zone_base_mw()
                               : Eigen::Map<const Eigen::VectorXd>(cfg.zone_base_mw.data(),
                                                                   static_cast<Eigen::Index>(
                                                                       cfg.zone_base_mw.size()));
    const int nz = static_cast<int>(base.size());
    for (int z = 0; z < nz; ++z)
        if (!(base(z) > 0.0))
            throw ValidationError("synth_loads: zone base " + std::to_string(z) +
                                  " must be positive");

    // Wall-clock timeline for the requested span.
    std::vector<CivilHour> labels;
    {
        CivilHour first{cfg.start_year, 1, 1, 0};
        CivilHour last{cfg.end_year, 12, 31, 23};
        if (cfg.emulate_dst) {
            PrevailingHour cur{first, false};
            for (;;) {
                labels.push_back(cur.label);
                if (cur.label == last &&
                    (!is_duplicated_label(last) || cur.second_occurrence))
                    break;
                cur = next_prevailing(cur);
            }
        } else {
            for (CivilHour h = first;; h = next_naive(h)) {
                labels.push_back(h);
                if (h == last) break;
            }
        }
    }
    const int rows = static_cast<int>(labels.size());

    Rng rng = make_rng(derive_seed(seed, seed_stream::synth));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Per-zone shape parameters (drawn once, before any noise).
    Eigen::VectorXd peak_doy(nz), peak_hr(nz), week_phase(nz), weekend_w(nz);
    for (int z = 0; z < nz; ++z) {
        peak_doy(z) = 200.0 + 10.0 * gauss(rng);
        peak_hr(z) = 17.0 + 1.0 * gauss(rng);
        week_phase(z) = 168.0 * unif(rng);
        weekend_w(z) = 0.5 + unif(rng);
    }

    LoadSeries out;
    out.labels = labels;
    out.columns.reserve(static_cast<std::size_t>(nz));
    const auto& table = zone_table();
    for (int z = 0; z < nz; ++z)
        out.columns.push_back(z < static_cast<int>(table.size())
                                  ? table[static_cast<std::size_t>(z)].code
                                  : "Z" + std::to_string(z + 1));
    out.values.resize(rows, nz);

    const double innov = cfg.noise_sd * std::sqrt(std::max(0.0, 1.0 - cfg.noise_rho * cfg.noise_rho));
    constexpr double two_pi = 6.283185307179586;
    for (int z = 0; z < nz; ++z) {
        double ar = cfg.noise_sd * gauss(rng);
        for (int r = 0; r < rows; ++r) {
            const CivilHour& h = labels[static_cast<std::size_t>(r)];
            double doy = static_cast<double>(day_of_year(h));
            double level = 1.0;
            level += cfg.annual_amp * std::cos(two_pi * (doy - peak_doy(z)) / 365.25);
            level += cfg.daily_amp * std::cos(two_pi * (h.hour - peak_hr(z)) / 24.0);
            double week_pos = static_cast<double>(day_of_week(h)) * 24.0 + h.hour;
            level += cfg.weekly_amp * std::cos(two_pi * (week_pos - week_phase(z)) / 168.0);
            if (is_weekend(h)) level -= cfg.weekend_drop * weekend_w(z);
            level += ar;
            level = std::max(level, 0.05);
            out.values(r, z) = base(z) * cfg.system_scale * level;
            ar = cfg.noise_rho * ar + innov * gauss(rng);
        }
    }
    return out;
}

std::vector<int> FeatureDataset::model_columns(int load) const {
    if (load < 0 || load >= n_loads)
        throw ValidationError("model_columns: load index out of range");
    std::vector<int> cols = {0, 1, 2};
    if (variant == 1) {
        int start = 3 + load * block_width();
        for (int j = 0; j < block_width(); ++j) cols.push_back(start + j);
    } else {
        for (int j = 3; j < static_cast<int>(x.cols()); ++j) cols.push_back(j);
    }
    return cols;
}

FeatureDataset build_features(const LoadSeries& series, int variant, int s, int d) {
    if (!series.bus_ordered)
        throw ValidationError("build_features: series must be bus-ordered (map zones first)");
    if (variant < 1 || variant > 3)
        throw ValidationError("build_features: variant must be 1, 2 or 3");
    if (s < 0) s = variant == 3 ? 4 : 3;
    if (d < 0) d = variant == 3 ? 3 : 2;
    if (d < 1)
        throw ValidationError("build_features: need at least one day of history");

    const int n = series.rows();
    const int nl = series.cols();
    const int first_base = 24 * d;
    const int m = n - 1 - first_base;
    if (m < 2)
        throw ValidationError("build_features: series too short for d=" + std::to_string(d) +
                              " (" + std::to_string(n) + " rows)");
    // Labels must be strictly increasing (normalized).
    for (int r = 1; r < n; ++r)
        if (!(series.labels[static_cast<std::size_t>(r - 1)] <
              series.labels[static_cast<std::size_t>(r)]))
            throw ValidationError("build_features: series labels not strictly increasing; "
                                  "run calendar normalization first");

    FeatureDataset ds;
    ds.variant = variant;
    ds.lag_s = s;
    ds.lag_d = d;
    ds.n_loads = nl;
    const int bw = ds.block_width();
    ds.x.resize(m, 3 + nl * bw);
    ds.y.resize(m, nl);
    ds.sample_labels.reserve(static_cast<std::size_t>(m));
    ds.sample_rows.reserve(static_cast<std::size_t>(m));

    for (int k = 0; k < m; ++k) {
        const int h = first_base + k;
        const CivilHour& lab = series.labels[static_cast<std::size_t>(h)];
        ds.sample_rows.push_back(h);
        ds.sample_labels.push_back(lab);
        ds.x(k, 0) = static_cast<double>(lab.month);
        ds.x(k, 1) = is_weekend(lab) ? 2.0 : 1.0;
        ds.x(k, 2) = static_cast<double>(lab.hour);
        for (int i = 0; i < nl; ++i) {
            int col = 3 + i * bw;
            for (int lag = 0; lag <= s; ++lag)
                ds.x(k, col++) = series.values(h - lag, i);
            for (int day = d; day >= 1; --day) {
                ds.x(k, col++) = series.values(h - 24 * day, i);
                ds.x(k, col++) = series.values(h - 24 * day + 1, i);
            }
        }
        ds.y.row(k) = series.values.row(h + 1);
    }
    return ds;
}

SplitCounts chronological_split(const FeatureDataset& ds, const CivilHour& boundary) {
    const int m = ds.m();
    int train = 0;
    while (train < m && ds.sample_labels[static_cast<std::size_t>(train)] < boundary) ++train;
    if (train == 0)
        throw ValidationError("chronological_split: boundary " + format_civil(boundary) +
                              " precedes all samples");
    if (train == m)
        throw ValidationError("chronological_split: boundary " + format_civil(boundary) +
                              " is after all samples");
    return {train, m - train};
}

void standardize(FeatureDataset& ds, const SplitCounts& split) {
    if (ds.standardized)
        throw ValidationError("standardize: dataset already standardized");
    if (split.train <= 1 || split.train + split.test != ds.m())
        throw ValidationError("standardize: split does not match the dataset");

    auto fit = [&](const Eigen::MatrixXd& mat, Eigen::VectorXd& mean, Eigen::VectorXd& std) {
        auto head = mat.topRows(split.train);
        mean = head.colwise().mean();
        std.resize(mat.cols());
        for (Eigen::Index c = 0; c < mat.cols(); ++c) {
            double var = (head.col(c).array() - mean(c)).square().mean();
            double s = std::sqrt(var);
            if (s <= 0.0) {
                log_warn("standardize: column ", c, " has zero variance; divisor kept at 1");
                s = 1.0;
            }
            std(c) = s;
        }
    };
    fit(ds.x, ds.x_mean, ds.x_std);
    fit(ds.y, ds.y_mean, ds.y_std);
    for (Eigen::Index c = 0; c < ds.x.cols(); ++c)
        ds.x.col(c) = (ds.x.col(c).array() - ds.x_mean(c)) / ds.x_std(c);
    for (Eigen::Index c = 0; c < ds.y.cols(); ++c)
        ds.y.col(c) = (ds.y.col(c).array() - ds.y_mean(c)) / ds.y_std(c);
    ds.standardized = true;
}

void write_series_csv(const std::filesystem::path& path, const LoadSeries& series) {
    std::ostringstream os;
    os << "datetime";
    for (const auto& c : series.columns) os << "," << c;
    os << "\n";
    char buf[64];
    for (int r = 0; r < series.rows(); ++r) {
        os << format_civil(series.labels[static_cast<std::size_t>(r)]);
        for (int c = 0; c < series.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.values(r, c));
            os << "," << buf;
        }
        os << "\n";
    }
    atomic_write_file(path, os.str());
}

LoadSeries read_series_csv(const std::filesystem::path& path) {
    return ingest_csv({path});
}

} // namespace lrshield
