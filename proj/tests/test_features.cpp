#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lobpred/features.hpp"
#include "lobpred/gbm_sim.hpp"

using namespace lobpred;

namespace {

BookSnapshot one_level(std::int64_t bid, std::int64_t bid_vol, std::int64_t ask, std::int64_t ask_vol) {
    return snapshot_from_row({ask, ask_vol, bid, bid_vol}, {}, 1);
}

SynthLobSeries synth(double signal, std::size_t rows, std::size_t levels = 3, std::uint64_t seed = 1) {
    SynthLobConfig cfg;
    cfg.gbm.sigma = 0.30;
    cfg.gbm.dt = 1e-5;
    cfg.gbm.n_steps = rows - 1;
    cfg.gbm.seed = seed;
    cfg.levels = levels;
    cfg.signal_strength = signal;
    cfg.seed = seed + 1;
    return synth_lob_series(cfg);
}

FeatureConfig raw_only() {
    FeatureConfig cfg;
    cfg.derived.clear();
    return cfg;
}

}  // namespace

TEST(FeatureVector, RawOnlyUsesLobsterOrder) {
    const auto s = one_level(1'000'000, 10, 1'020'000, 10);
    EXPECT_EQ(feature_vector(s, {}, raw_only()), (std::vector<double>{102, 10, 100, 10}));
    EXPECT_EQ(feature_names(raw_only(), 1),
              (std::vector<std::string>{"ask_price_1", "ask_size_1", "bid_price_1", "bid_size_1"}));
}

TEST(FeatureVector, SymmetricBookDerivedFeatures) {
    FeatureConfig cfg;
    cfg.raw_levels = false;
    const auto s = one_level(1'000'000, 10, 1'020'000, 10);
    const auto v = feature_vector(s, {}, cfg);
    const auto names = feature_names(cfg, 1);
    ASSERT_EQ(v.size(), 7u);
    ASSERT_EQ(names.size(), 7u);
    EXPECT_EQ(names, (std::vector<std::string>{"spread", "mid", "imbalance_1", "imbalance_L", "cum_depth_bid",
                                               "cum_depth_ask", "vwap_minus_mid"}));
    EXPECT_DOUBLE_EQ(v[0], 2.0);
    EXPECT_DOUBLE_EQ(v[1], 101.0);
    EXPECT_EQ(v[2], 0.0);
    EXPECT_EQ(v[3], 0.0);
    EXPECT_EQ(v[4], 10.0);
    EXPECT_EQ(v[5], 10.0);
    EXPECT_EQ(v[6], 0.0);
}

TEST(FeatureVector, LagDoublesWidth) {
    const auto a = one_level(1'000'000, 10, 1'020'000, 10);
    const auto b = one_level(1'000'100, 12, 1'020'100, 9);
    FeatureConfig cfg;
    const auto base = feature_vector(b, {}, cfg);
    cfg.lag_window = 1;
    const std::vector<BookSnapshot> history{a};
    const auto lagged = feature_vector(b, history, cfg);
    ASSERT_EQ(lagged.size(), 2 * base.size());
    EXPECT_EQ(feature_names(cfg, 1).size(), lagged.size());
    EXPECT_EQ(feature_names(cfg, 1).back(), "vwap_minus_mid_lag1");
    EXPECT_TRUE(std::equal(base.begin(), base.end(), lagged.begin()));
    cfg.lag_window = 0;
    const auto of_a = feature_vector(a, {}, cfg);
    EXPECT_TRUE(std::equal(of_a.begin(), of_a.end(), lagged.begin() + static_cast<long>(base.size())));
}

TEST(FeatureVector, InsufficientHistory) {
    FeatureConfig cfg;
    cfg.lag_window = 2;
    const auto s = one_level(100, 1, 101, 1);
    const std::vector<BookSnapshot> history{s};
    EXPECT_THROW(feature_vector(s, history, cfg), std::invalid_argument);
}

TEST(FeatureConfig, NeedsAGroup) {
    FeatureConfig cfg;
    cfg.raw_levels = false;
    cfg.derived.clear();
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_EQ(parse_derived_feature("imbalance_L"), DerivedFeature::ImbalanceL);
    EXPECT_THROW(parse_derived_feature("bogus"), std::invalid_argument);
}

TEST(FeatureVector, MissingLevelsAreZero) {
    const auto s = snapshot_from_row({101, 5, 100, 5, kAskSentinel, 0, 99, 3}, {}, 2);
    EXPECT_EQ(feature_vector(s, {}, raw_only()), (std::vector<double>{0.0101, 5, 0.01, 5, 0, 0, 0.0099, 3}));
}

TEST(BuildDataset, ShapeAndLabels) {
    const auto series = synth(0.0, 100);
    const auto snaps = snapshots_from_rows(series.rows, series.times, 3);
    const auto ds = build_dataset(snaps, 1, FeatureConfig{});
    EXPECT_EQ(ds.n_rows, 99u);
    EXPECT_EQ(ds.n_features, 12u + 7u);
    EXPECT_EQ(ds.x.size(), ds.n_rows * ds.n_features);
    for (std::size_t i = 0; i < ds.n_rows; ++i) EXPECT_EQ(ds.y[i], direction_label(series.mids[i], series.mids[i + 1]));

    FeatureConfig lagged;
    lagged.lag_window = 2;
    const auto dl = build_dataset(snaps, 3, lagged);
    EXPECT_EQ(dl.n_rows, 100u - 3 - 2);
    EXPECT_EQ(dl.y[0], direction_label(series.mids[2], series.mids[5]));
    EXPECT_THROW(build_dataset(std::span(snaps).first(5), 3, lagged), std::invalid_argument);
}

TEST(BuildDataset, ConstantBookLabelsFlat) {
    std::vector<BookSnapshot> snaps(50, one_level(1'000'000, 10, 1'000'100, 12));
    const auto ds = build_dataset(snaps, 1, FeatureConfig{});
    for (Label l : ds.y) EXPECT_EQ(l, Label::Flat);
}

TEST(BuildDataset, FullSignalRecoverableFromImbalanceSign) {
    const auto series = synth(1.0, 5'000);
    const auto snaps = snapshots_from_rows(series.rows, series.times, 3);
    FeatureConfig cfg;
    cfg.raw_levels = false;
    cfg.derived = {DerivedFeature::Imbalance1};
    const auto ds = build_dataset(snaps, 1, cfg);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        const double imb = ds.row(i)[0];
        const int sign = (imb > 0) - (imb < 0);
        // The generator's sidecar ground truth agrees with the feature.
        EXPECT_EQ(sign, series.imbalance_sign[i]);
        if (sign != 0 && ds.y[i] != Label::Flat) {
            EXPECT_EQ(to_int(ds.y[i]), sign);
            ++moved;
        }
    }
    EXPECT_GT(moved, 4'500u);
}

TEST(BuildDataset, NoLookahead) {
    const auto series = synth(0.5, 300);
    auto snaps = snapshots_from_rows(series.rows, series.times, 3);
    FeatureConfig cfg;
    cfg.lag_window = 2;
    const auto full = build_dataset(snaps, 1, cfg);
    for (std::size_t i : {0u, 10u, 150u, 296u}) {
        // Snapshot i + lag is the row's own book; everything after it may change.
        const std::size_t own = i + cfg.lag_window;
        auto mutated = snaps;
        for (std::size_t j = own + 1; j < mutated.size(); ++j) {
            mutated[j] = snapshot_from_row(RawBookRow{2'000'000, 1, 1'999'900, 1, 2'000'100, 1, 1'999'800, 1,
                                                      2'000'200, 1, 1'999'700, 1},
                                           {}, 3);
        }
        const auto other = build_dataset(mutated, 1, cfg);
        const auto a = full.row(i);
        const auto b = other.row(i);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << "row " << i;
    }
}

TEST(BuildDataset, DeterministicLayout) {
    const auto series = synth(0.2, 500);
    const auto snaps = snapshots_from_rows(series.rows, series.times, 3);
    const auto a = build_dataset(snaps, 2, FeatureConfig{});
    const auto b = build_dataset(snaps, 2, FeatureConfig{});
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.feature_names.size(), a.n_features);
}

TEST(ChronoSplit, Examples) {
    const auto series = synth(0.0, 101);
    const auto ds = build_dataset(snapshots_from_rows(series.rows, series.times, 3), 1, FeatureConfig{});
    ASSERT_EQ(ds.n_rows, 100u);
    const auto [train, test] = chrono_split(ds, 0.7);
    EXPECT_EQ(train.n_rows, 70u);
    EXPECT_EQ(test.n_rows, 30u);

    Dataset joined = train;
    joined.n_rows += test.n_rows;
    joined.x.insert(joined.x.end(), test.x.begin(), test.x.end());
    joined.y.insert(joined.y.end(), test.y.begin(), test.y.end());
    EXPECT_EQ(joined, ds);

    Dataset two = train;
    two.n_rows = 2;
    two.x.resize(2 * two.n_features);
    two.y.resize(2);
    const auto [a, b] = chrono_split(two, 0.5);
    EXPECT_EQ(a.n_rows, 1u);
    EXPECT_EQ(b.n_rows, 1u);
    EXPECT_THROW(chrono_split(two, 0.2), std::invalid_argument);
    EXPECT_THROW(chrono_split(two, 1.0), std::invalid_argument);
}

TEST(DatasetCsv, RoundTrip) {
    const auto series = synth(0.3, 200);
    const auto ds = build_dataset(snapshots_from_rows(series.rows, series.times, 3), 1, FeatureConfig{});
    std::stringstream ss;
    write_dataset_csv(ss, ds);
    EXPECT_EQ(read_dataset_csv(ss), ds);

    std::istringstream bad("a,b,label\n1,2,3\n");
    EXPECT_THROW(read_dataset_csv(bad), ParseError);
}
