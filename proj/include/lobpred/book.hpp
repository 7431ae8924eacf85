#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lobpred/lobster_io.hpp"

namespace lobpred {

class BookError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Level {
    PriceTicks price;
    std::int64_t volume = 0;

    friend bool operator==(const Level&, const Level&) = default;
};

/// Sum of best bid and best ask, i.e. the mid-quote in half-tick units.
/// Comparing two of these is exact.
struct MidQuoteX2 {
    std::int64_t value = 0;

    friend auto operator<=>(const MidQuoteX2&, const MidQuoteX2&) = default;
    double dollars() const noexcept { return static_cast<double>(value) / (2.0 * PriceTicks::kPerDollar); }
};

/// Exact decimal rendering of a mid-quote, e.g. "577.38" or "100.00005".
std::string format_dollars(MidQuoteX2 mid);
/// Exact decimal rendering of a tick price, e.g. "585.3600".
std::string format_dollars(PriceTicks price);

enum class Side : std::uint8_t { Bid, Ask };

/// Immutable L-level book. Bids are ordered best (highest) first and asks
/// best (lowest) first; sentinel levels are not retained.
class BookSnapshot {
public:
    BookSnapshot(Timestamp time, std::size_t levels, std::vector<Level> bids, std::vector<Level> asks);

    const Timestamp& time() const noexcept { return time_; }
    std::size_t levels() const noexcept { return levels_; }
    const std::vector<Level>& bids() const noexcept { return bids_; }
    const std::vector<Level>& asks() const noexcept { return asks_; }

    bool quotable() const noexcept { return !bids_.empty() && !asks_.empty(); }

private:
    Timestamp time_;
    std::size_t levels_;
    std::vector<Level> bids_;
    std::vector<Level> asks_;
};

BookSnapshot snapshot_from_row(const RawBookRow& row, Timestamp time, std::size_t levels);

/// Inverse of snapshot_from_row: missing levels become LOBSTER sentinels.
RawBookRow to_raw_row(const BookSnapshot& s);

MidQuoteX2 mid_quote(const BookSnapshot& s);

/// Volume-weighted average of all retained prices, in USD.
double vwap(const BookSnapshot& s);

PriceTicks spread(const BookSnapshot& s);

/// (bid volume - ask volume) / (bid volume + ask volume) over the first
/// `depth` levels of each side.
double imbalance(const BookSnapshot& s, std::size_t depth);

struct DepthPoint {
    PriceTicks price;
    std::int64_t volume = 0;
    Side side = Side::Bid;
};

struct DepthProfile {
    Timestamp time;
    std::vector<DepthPoint> points;  // bids ascending by price, then asks ascending
    MidQuoteX2 mid;
};

DepthProfile depth_profile(const BookSnapshot& s);

}  // namespace lobpred
