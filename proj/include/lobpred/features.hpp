#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lobpred/book.hpp"
#include "lobpred/labeling.hpp"

namespace lobpred {

enum class DerivedFeature {
    Spread,
    Mid,
    Imbalance1,
    ImbalanceL,
    CumDepthBid,
    CumDepthAsk,
    VwapMinusMid,
};

std::string_view feature_name(DerivedFeature f);
DerivedFeature parse_derived_feature(std::string_view name);
std::set<DerivedFeature> all_derived_features();

struct FeatureConfig {
    bool raw_levels = true;
    std::set<DerivedFeature> derived = all_derived_features();
    std::size_t lag_window = 0;

    void validate() const;
};

/// Column names for books with `levels` levels. Raw columns follow the
/// LOBSTER order (ask_price_1, ask_size_1, bid_price_1, bid_size_1, ...),
/// derived columns follow DerivedFeature order, and lagged copies carry a
/// `_lagJ` suffix.
std::vector<std::string> feature_names(const FeatureConfig& cfg, std::size_t levels);

/// Features of `s` followed by those of the last lag_window entries of
/// `history` (most recent first). Prices are USD, volumes shares.
/// Levels absent from the book contribute price 0 and size 0.
std::vector<double> feature_vector(const BookSnapshot& s, std::span<const BookSnapshot> history,
                                   const FeatureConfig& cfg);

struct Dataset {
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    std::vector<double> x;   // row-major n_rows x n_features
    std::vector<Label> y;
    std::vector<std::string> feature_names;

    std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::vector<BookSnapshot> snapshots_from_rows(std::span<const RawBookRow> rows, std::span<const Timestamp> times,
                                              std::size_t levels);

/// Row r is built from snapshot r + lag_window and its past; its label
/// compares that snapshot's mid with the mid `horizon` snapshots later.
Dataset build_dataset(std::span<const BookSnapshot> snapshots, std::size_t horizon, const FeatureConfig& cfg);

/// First floor(n * train_fraction) rows train, the rest test. No shuffling.
std::pair<Dataset, Dataset> chrono_split(const Dataset& ds, double train_fraction);

/// Headered CSV: feature names then `label`.
void write_dataset_csv(std::ostream& out, const Dataset& ds);
Dataset read_dataset_csv(std::istream& in);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace lobpred
