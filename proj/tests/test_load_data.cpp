#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lrshield/errors.hpp"
#include "lrshield/load_data.hpp"

using namespace lrshield;

namespace {

LoadSeries make_series(const std::vector<CivilHour>& labels,
                       const std::vector<std::vector<double>>& rows,
                       std::vector<std::string> columns) {
    LoadSeries s;
    s.labels = labels;
    s.columns = std::move(columns);
    s.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(s.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            s.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return s;
}

// A clean bus-ordered hourly series starting at `start` where every cell is
// 1000 * zone + hour_index, so lag features are directly readable.
LoadSeries coded_series(const CivilHour& start, int hours, int zones) {
    LoadSeries s;
    s.bus_ordered = true;
    s.values.resize(hours, zones);
    CivilHour h = start;
    for (int r = 0; r < hours; ++r) {
        s.labels.push_back(h);
        for (int z = 0; z < zones; ++z) s.values(r, z) = 1000.0 * z + r;
        h = next_naive(h);
    }
    for (int z = 0; z < zones; ++z) s.columns.push_back("L" + std::to_string(z + 1));
    return s;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {}
    ~TempFile() { std::error_code ec; std::filesystem::remove(path, ec); }
};

} // namespace

TEST_CASE("zone table covers twenty buses with positive bases") {
    const auto& table = zone_table();
    REQUIRE(table.size() == 20);
    CHECK(std::string(table[0].code) == "DOM");
    CHECK(table[0].bus == 2);
    CHECK(std::string(table[19].code) == "AP");
    CHECK(table[19].bus == 30);

    Eigen::VectorXd base = default_zone_base_mw();
    REQUIRE(base.size() == 20);
    CHECK(base.minCoeff() > 0.0);
    // Mapped back to the study network the bases sum to the nominal system load.
    CHECK((base.sum() * kZoneScale) == doctest::Approx(189.2).epsilon(1e-9));
    CHECK((base.maxCoeff() * kZoneScale) == doctest::Approx(30.0).epsilon(1e-9));
}

TEST_CASE("synthetic single-year series has the raw export shape") {
    SynthConfig cfg;
    cfg.start_year = 2018;
    cfg.end_year = 2018;
    LoadSeries raw = synth_loads(cfg, 42);
    // 2018 wall-clock: one 23-hour day, one 25-hour day -> 8760 readings with
    // the fall-back hour present twice.
    CHECK(raw.rows() == 8760);
    CHECK(raw.cols() == 20);
    int dup_labels = 0;
    for (int r = 1; r < raw.rows(); ++r)
        if (raw.labels[static_cast<std::size_t>(r)] == raw.labels[static_cast<std::size_t>(r - 1)])
            ++dup_labels;
    CHECK(dup_labels == 1);
    CHECK(raw.values.minCoeff() > 0.0);

    NormalizeReport rep;
    LoadSeries norm = normalize_calendar(raw, &rep);
    CHECK(norm.rows() == 8759);
    CHECK(rep.duplicates_averaged == 1);
    CHECK(rep.gaps_interpolated == 0);
    for (int r = 1; r < norm.rows(); ++r)
        CHECK(norm.labels[static_cast<std::size_t>(r - 1)] <
              norm.labels[static_cast<std::size_t>(r)]);

    // Deterministic in the seed.
    LoadSeries again = synth_loads(cfg, 42);
    CHECK((raw.values - again.values).cwiseAbs().maxCoeff() == 0.0);
    LoadSeries other = synth_loads(cfg, 43);
    CHECK((raw.values - other.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synthetic four-year span counts prevailing hours") {
    SynthConfig cfg;
    cfg.zone_base_mw = {100.0, 200.0};
    LoadSeries raw = synth_loads(cfg, 1);
    CHECK(raw.rows() == 35064);      // one reading per physical hour
    CHECK(raw.cols() == 2);
    LoadSeries norm = normalize_calendar(raw);
    CHECK(norm.rows() == 35060);     // four fall-back repeats collapsed
}

TEST_CASE("normalize averages duplicated labels") {
    std::vector<CivilHour> labels = {{2018, 5, 1, 0}, {2018, 5, 1, 1}, {2018, 5, 1, 1},
                                     {2018, 5, 1, 2}};
    LoadSeries s = make_series(labels, {{10.0}, {20.0}, {40.0}, {7.0}}, {"DOM"});
    NormalizeReport rep;
    LoadSeries out = normalize_calendar(s, &rep);
    REQUIRE(out.rows() == 3);
    CHECK(rep.duplicates_averaged == 1);
    CHECK(out.values(0, 0) == 10.0);
    CHECK(out.values(1, 0) == 30.0);
    CHECK(out.values(2, 0) == 7.0);
}

TEST_CASE("normalize interpolates an isolated one-hour hole") {
    std::vector<CivilHour> labels = {{2018, 5, 1, 0}, {2018, 5, 1, 2}};
    LoadSeries s = make_series(labels, {{10.0}, {30.0}}, {"DOM"});
    NormalizeReport rep;
    LoadSeries out = normalize_calendar(s, &rep);
    REQUIRE(out.rows() == 3);
    CHECK(rep.gaps_interpolated == 1);
    CHECK(out.labels[1] == CivilHour{2018, 5, 1, 1});
    CHECK(out.values(1, 0) == 20.0);
}

TEST_CASE("normalize rejects multi-hour gaps and disorder") {
    LoadSeries gap = make_series({{2018, 5, 1, 0}, {2018, 5, 1, 3}}, {{1.0}, {2.0}}, {"DOM"});
    CHECK_THROWS_AS(normalize_calendar(gap), ValidationError);
    LoadSeries rev = make_series({{2018, 5, 1, 2}, {2018, 5, 1, 1}}, {{1.0}, {2.0}}, {"DOM"});
    CHECK_THROWS_AS(normalize_calendar(rev), ValidationError);
    LoadSeries empty;
    CHECK_THROWS_AS(normalize_calendar(empty), ValidationError);
}

TEST_CASE("the spring-forward hour is not treated as a gap") {
    // 2018-03-11: 02:00 does not exist in wall-clock time.
    std::vector<CivilHour> labels = {{2018, 3, 11, 1}, {2018, 3, 11, 3}};
    LoadSeries s = make_series(labels, {{5.0}, {6.0}}, {"DOM"});
    NormalizeReport rep;
    LoadSeries out = normalize_calendar(s, &rep);
    CHECK(out.rows() == 2);
    CHECK(rep.gaps_interpolated == 0);
}

TEST_CASE("zone mapping reorders and rescales") {
    // Columns deliberately scrambled relative to the canonical order.
    std::vector<std::string> cols;
    for (const auto& z : zone_table()) cols.push_back(z.code);
    std::reverse(cols.begin(), cols.end());
    std::vector<double> row(20);
    for (int i = 0; i < 20; ++i) row[static_cast<std::size_t>(i)] = 100.0 * (i + 1);
    LoadSeries s = make_series({{2018, 1, 1, 0}}, {row}, cols);

    LoadSeries mapped = map_zones_to_buses(s);
    CHECK(mapped.bus_ordered);
    REQUIRE(mapped.cols() == 20);
    for (int i = 0; i < 20; ++i) {
        CHECK(mapped.columns[static_cast<std::size_t>(i)] ==
              zone_table()[static_cast<std::size_t>(i)].code);
        // Canonical position i held value 100 * (20 - i) in the scrambled input.
        CHECK(mapped.values(0, i) ==
              doctest::Approx(100.0 * (20 - i) * kZoneScale).epsilon(1e-12));
    }

    LoadSeries dom = make_series({{2018, 1, 1, 0}}, {{10000.0}}, {"DOM"});
    CHECK_THROWS_AS(map_zones_to_buses(dom), ValidationError); // 19 zones missing

    LoadSeries unknown = make_series({{2018, 1, 1, 0}}, {{1.0}}, {"XX"});
    CHECK_THROWS_AS(map_zones_to_buses(unknown), ValidationError);
}

TEST_CASE("feature rows read the documented lag layout") {
    // A week plus change of coded data, two loads; s=1, d=1 keeps indices small.
    LoadSeries s = coded_series({2018, 6, 4, 0}, 198, 2); // a Monday
    FeatureDataset ds = build_features(s, 2, 1, 1);
    CHECK(ds.lag_s == 1);
    CHECK(ds.lag_d == 1);
    CHECK(ds.block_width() == 4);
    CHECK(ds.p() == 3 + 2 * 4);
    REQUIRE(ds.m() == 198 - 1 - 24);

    const int k = 5; // sample base row h = 24 + 5 = 29
    const int h = 24 + k;
    CHECK(ds.sample_rows[static_cast<std::size_t>(k)] == h);
    const CivilHour lab = s.labels[static_cast<std::size_t>(h)];
    CHECK(ds.sample_labels[static_cast<std::size_t>(k)] == lab);
    CHECK(ds.x(k, 0) == static_cast<double>(lab.month));
    CHECK(ds.x(k, 1) == (is_weekend(lab) ? 2.0 : 1.0));
    CHECK(ds.x(k, 2) == static_cast<double>(lab.hour));
    for (int z = 0; z < 2; ++z) {
        const double basev = 1000.0 * z;
        const int c = 3 + z * 4;
        CHECK(ds.x(k, c + 0) == basev + h);          // P^h
        CHECK(ds.x(k, c + 1) == basev + h - 1);      // P^{h-1}
        CHECK(ds.x(k, c + 2) == basev + h - 24);     // previous day, same hour
        CHECK(ds.x(k, c + 3) == basev + h - 23);     // previous day, next hour
        CHECK(ds.y(k, z) == basev + h + 1);          // target: next hour
    }

    // Weekend flag flips on Saturday rows.
    bool saw_weekend = false, saw_weekday = false;
    for (int r = 0; r < ds.m(); ++r) {
        if (ds.x(r, 1) == 2.0) saw_weekend = true;
        if (ds.x(r, 1) == 1.0) saw_weekday = true;
    }
    CHECK(saw_weekend);
    CHECK(saw_weekday);
}

TEST_CASE("feature dimensions for each variant on a normalized year") {
    SynthConfig cfg;
    cfg.start_year = 2018;
    cfg.end_year = 2018;
    LoadSeries series = map_zones_to_buses(normalize_calendar(synth_loads(cfg, 7)));
    REQUIRE(series.rows() == 8759);

    FeatureDataset v2 = build_features(series, 2);
    CHECK(v2.m() == 8710);
    CHECK(v2.x.cols() == 163);
    CHECK(v2.p() == 163);
    CHECK(v2.y.cols() == 20);

    FeatureDataset v3 = build_features(series, 3);
    CHECK(v3.m() == 8686);
    CHECK(v3.x.cols() == 223);
    CHECK(v3.p() == 223);

    FeatureDataset v1 = build_features(series, 1);
    CHECK(v1.x.cols() == 163);
    CHECK(v1.p() == 11);
    auto cols = v1.model_columns(2);
    REQUIRE(cols.size() == 11);
    CHECK(cols[0] == 0);
    CHECK(cols[3] == 3 + 2 * 8);
    CHECK(cols[10] == 3 + 2 * 8 + 7);
    auto all_cols = v2.model_columns(5);
    CHECK(all_cols.size() == 163);

    LoadSeries unordered = series;
    unordered.bus_ordered = false;
    CHECK_THROWS_AS(build_features(unordered, 2), ValidationError);
    CHECK_THROWS_AS(build_features(series, 4), ValidationError);
}

TEST_CASE("chronological split lands on the boundary hour") {
    SynthConfig cfg;
    cfg.start_year = 2018;
    cfg.end_year = 2018;
    LoadSeries series = map_zones_to_buses(normalize_calendar(synth_loads(cfg, 7)));
    FeatureDataset ds = build_features(series, 2);
    SplitCounts split = chronological_split(ds, {2018, 7, 1, 0});
    CHECK(split.train == 4295);
    CHECK(split.test == 4415);
    CHECK(split.train + split.test == ds.m());
    CHECK(ds.sample_labels[static_cast<std::size_t>(split.train - 1)] < CivilHour{2018, 7, 1, 0});
    CHECK_FALSE(ds.sample_labels[static_cast<std::size_t>(split.train)] < CivilHour{2018, 7, 1, 0});

    CHECK_THROWS_AS(chronological_split(ds, {2017, 1, 1, 0}), ValidationError);
    CHECK_THROWS_AS(chronological_split(ds, {2030, 1, 1, 0}), ValidationError);
}

TEST_CASE("standardization is fitted on the training block only") {
    LoadSeries s = coded_series({2018, 6, 4, 0}, 120, 2);
    // Make the test block distributionally different so leakage would show.
    for (int r = 90; r < 120; ++r)
        for (int z = 0; z < 2; ++z) s.values(r, z) += 500.0;
    FeatureDataset ds = build_features(s, 2, 1, 1);
    SplitCounts split = chronological_split(ds, s.labels[static_cast<std::size_t>(70)]);
    Eigen::MatrixXd x_before = ds.x;
    standardize(ds, split);
    CHECK(ds.standardized);

    auto train_x = ds.x.topRows(split.train);
    for (Eigen::Index c = 0; c < ds.x.cols(); ++c) {
        CHECK(std::abs(train_x.col(c).mean()) < 1e-9);
        double var = train_x.col(c).array().square().mean();
        if (ds.x_std(c) != 1.0) CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
        // Reconstruction recovers the raw features.
        for (int r = 0; r < ds.m(); r += 17)
            CHECK(ds.x(r, c) * ds.x_std(c) + ds.x_mean(c) ==
                  doctest::Approx(x_before(r, c)).epsilon(1e-12));
    }
    auto train_y = ds.y.topRows(split.train);
    for (Eigen::Index c = 0; c < ds.y.cols(); ++c) {
        CHECK(std::abs(train_y.col(c).mean()) < 1e-9);
        CHECK(train_y.col(c).array().square().mean() == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(standardize(ds, split), ValidationError); // already standardized
}

TEST_CASE("series csv round trips exactly") {
    SynthConfig cfg;
    cfg.start_year = 2018;
    cfg.end_year = 2018;
    cfg.zone_base_mw = {50.0, 75.0, 125.0};
    LoadSeries s = synth_loads(cfg, 99);

    TempFile tmp("lrshield_test_series.csv");
    write_series_csv(tmp.path, s);
    LoadSeries back = read_series_csv(tmp.path);
    REQUIRE(back.rows() == s.rows());
    REQUIRE(back.cols() == s.cols());
    CHECK(back.columns == s.columns);
    for (int r = 0; r < s.rows(); ++r)
        CHECK(back.labels[static_cast<std::size_t>(r)] == s.labels[static_cast<std::size_t>(r)]);
    CHECK((back.values - s.values).cwiseAbs().maxCoeff() == 0.0); // %.17g is lossless
}

TEST_CASE("long-format csv ingests with sorted zone columns") {
    TempFile tmp("lrshield_test_long.csv");
    {
        std::ofstream out(tmp.path);
        out << "datetime,zone,mw\n";
        out << "2018-01-01 01:00,DOM,11\n";
        out << "2018-01-01 00:00,DOM,10\n";
        out << "2018-01-01 00:00,AE,20\n";
        out << "2018-01-01 01:00,AE,21\n";
    }
    LoadSeries s = ingest_csv({tmp.path});
    REQUIRE(s.rows() == 2);
    REQUIRE(s.cols() == 2);
    CHECK(s.columns[0] == "AE"); // sorted zone order
    CHECK(s.columns[1] == "DOM");
    CHECK(s.labels[0] == CivilHour{2018, 1, 1, 0});
    CHECK(s.values(0, 0) == 20.0);
    CHECK(s.values(0, 1) == 10.0);
    CHECK(s.values(1, 0) == 21.0);
    CHECK(s.values(1, 1) == 11.0);
}

TEST_CASE("long-format csv requires matching reading counts per zone") {
    TempFile tmp("lrshield_test_long_bad.csv");
    {
        std::ofstream out(tmp.path);
        out << "datetime,zone,mw\n";
        out << "2018-11-04 01:00,DOM,10\n";
        out << "2018-11-04 01:00,DOM,11\n"; // fall-back hour read twice
        out << "2018-11-04 01:00,AE,20\n";  // but only once here
    }
    CHECK_THROWS_AS(ingest_csv({tmp.path}), ParseError);
}

TEST_CASE("wide csv rejects malformed content") {
    TempFile tmp("lrshield_test_wide_bad.csv");
    {
        std::ofstream out(tmp.path);
        out << "timestamp,DOM\n";
        out << "2018-01-01 00:00,10\n";
    }
    CHECK_THROWS_AS(ingest_csv({tmp.path}), ParseError); // header must start with datetime

    {
        std::ofstream out(tmp.path);
        out << "datetime,DOM\n";
        out << "2018-01-01 00:00,abc\n";
    }
    CHECK_THROWS_AS(ingest_csv({tmp.path}), ParseError);

    {
        std::ofstream out(tmp.path);
        out << "datetime,DOM\n";
        out << "2018-01-01 00:00,1,2\n";
    }
    CHECK_THROWS_AS(ingest_csv({tmp.path}), ParseError); // field count mismatch
}
