#include "lobpred/book.hpp"

#include <cstdlib>

namespace lobpred {

namespace {

std::string format_fixed(std::int64_t numerator, std::int64_t denominator, int digits) {
    const bool negative = numerator < 0;
    const std::uint64_t mag = negative ? 0 - static_cast<std::uint64_t>(numerator) : static_cast<std::uint64_t>(numerator);
    const auto den = static_cast<std::uint64_t>(denominator);
    std::string frac = std::to_string(mag % den);
    std::string out = negative ? "-" : "";
    out += std::to_string(mag / den);
    out.push_back('.');
    out.append(static_cast<std::size_t>(digits) - frac.size(), '0');
    out += frac;
    return out;
}

}  // namespace

std::string format_dollars(MidQuoteX2 mid) {
    // value / 20000 has at most 5 decimals; trim to 2 when the tail is zero.
    std::string s = format_fixed(mid.value * 5, 100'000, 5);
    while (s.size() > 3 && s.back() == '0' && s[s.size() - 3] != '.') s.pop_back();
    return s;
}

std::string format_dollars(PriceTicks price) { return format_fixed(price.value, PriceTicks::kPerDollar, 4); }

BookSnapshot::BookSnapshot(Timestamp time, std::size_t levels, std::vector<Level> bids, std::vector<Level> asks)
    : time_(time), levels_(levels), bids_(std::move(bids)), asks_(std::move(asks)) {
    if (levels_ == 0) throw BookError("levels must be positive");
    if (bids_.size() > levels_ || asks_.size() > levels_) throw BookError("more levels than L");
    for (std::size_t l = 0; l < bids_.size(); ++l) {
        if (bids_[l].volume <= 0) throw BookError("bid level " + std::to_string(l + 1) + " has non-positive volume");
        if (l > 0 && !(bids_[l].price < bids_[l - 1].price)) {
            throw BookError("bid prices not strictly decreasing at level " + std::to_string(l + 1));
        }
    }
    for (std::size_t l = 0; l < asks_.size(); ++l) {
        if (asks_[l].volume <= 0) throw BookError("ask level " + std::to_string(l + 1) + " has non-positive volume");
        if (l > 0 && !(asks_[l - 1].price < asks_[l].price)) {
            throw BookError("ask prices not strictly increasing at level " + std::to_string(l + 1));
        }
    }
    if (quotable() && bids_.front().price > asks_.front().price) {
        throw BookError("crossed book: best bid " + format_dollars(bids_.front().price) + " > best ask " +
                        format_dollars(asks_.front().price));
    }
}

BookSnapshot snapshot_from_row(const RawBookRow& row, Timestamp time, std::size_t levels) {
    if (row.size() != 4 * levels) {
        throw BookError("row has " + std::to_string(row.size()) + " fields, expected " + std::to_string(4 * levels));
    }
    std::vector<Level> bids, asks;
    bids.reserve(levels);
    asks.reserve(levels);
    bool bid_ended = false, ask_ended = false;
    for (std::size_t l = 0; l < levels; ++l) {
        const std::int64_t ask_price = row[4 * l];
        const std::int64_t ask_size = row[4 * l + 1];
        const std::int64_t bid_price = row[4 * l + 2];
        const std::int64_t bid_size = row[4 * l + 3];

        if (ask_price == kAskSentinel) {
            ask_ended = true;
        } else if (ask_ended) {
            throw BookError("ask level " + std::to_string(l + 1) + " occupied after an empty level");
        } else {
            asks.push_back({PriceTicks{ask_price}, ask_size});
        }
        if (bid_price == kBidSentinel) {
            bid_ended = true;
        } else if (bid_ended) {
            throw BookError("bid level " + std::to_string(l + 1) + " occupied after an empty level");
        } else {
            bids.push_back({PriceTicks{bid_price}, bid_size});
        }
    }
    return BookSnapshot(time, levels, std::move(bids), std::move(asks));
}

RawBookRow to_raw_row(const BookSnapshot& s) {
    RawBookRow row(4 * s.levels());
    for (std::size_t l = 0; l < s.levels(); ++l) {
        if (l < s.asks().size()) {
            row[4 * l] = s.asks()[l].price.value;
            row[4 * l + 1] = s.asks()[l].volume;
        } else {
            row[4 * l] = kAskSentinel;
            row[4 * l + 1] = 0;
        }
        if (l < s.bids().size()) {
            row[4 * l + 2] = s.bids()[l].price.value;
            row[4 * l + 3] = s.bids()[l].volume;
        } else {
            row[4 * l + 2] = kBidSentinel;
            row[4 * l + 3] = 0;
        }
    }
    return row;
}

MidQuoteX2 mid_quote(const BookSnapshot& s) {
    if (!s.quotable()) throw BookError("no quotable market");
    return MidQuoteX2{s.bids().front().price.value + s.asks().front().price.value};
}

double vwap(const BookSnapshot& s) {
    __int128 weighted = 0;
    std::int64_t volume = 0;
    for (const auto& lv : s.bids()) {
        weighted += static_cast<__int128>(lv.price.value) * lv.volume;
        volume += lv.volume;
    }
    for (const auto& lv : s.asks()) {
        weighted += static_cast<__int128>(lv.price.value) * lv.volume;
        volume += lv.volume;
    }
    if (volume == 0) throw BookError("zero total volume");
    return static_cast<double>(weighted) / static_cast<double>(static_cast<__int128>(volume) * PriceTicks::kPerDollar);
}

PriceTicks spread(const BookSnapshot& s) {
    if (!s.quotable()) throw BookError("no quotable market");
    return PriceTicks{s.asks().front().price.value - s.bids().front().price.value};
}

double imbalance(const BookSnapshot& s, std::size_t depth) {
    if (depth == 0) throw BookError("imbalance depth must be positive");
    if (s.bids().size() < depth || s.asks().size() < depth) {
        throw BookError("insufficient depth for imbalance: need " + std::to_string(depth) + " levels, have " +
                        std::to_string(s.bids().size()) + " bid / " + std::to_string(s.asks().size()) + " ask");
    }
    std::int64_t bid_volume = 0, ask_volume = 0;
    for (std::size_t l = 0; l < depth; ++l) {
        bid_volume += s.bids()[l].volume;
        ask_volume += s.asks()[l].volume;
    }
    return static_cast<double>(bid_volume - ask_volume) / static_cast<double>(bid_volume + ask_volume);
}

DepthProfile depth_profile(const BookSnapshot& s) {
    DepthProfile p;
    p.time = s.time();
    p.mid = mid_quote(s);
    p.points.reserve(s.bids().size() + s.asks().size());
    for (auto it = s.bids().rbegin(); it != s.bids().rend(); ++it) p.points.push_back({it->price, it->volume, Side::Bid});
    for (const auto& lv : s.asks()) p.points.push_back({lv.price, lv.volume, Side::Ask});
    return p;
}

}  // namespace lobpred
