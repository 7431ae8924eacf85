#pragma once

// Geometric Brownian Motion increments/paths and a synthetic LOBSTER-format
// book generator driven by a GBM mid-quote.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lobpred/book.hpp"
#include "lobpred/lobster_io.hpp"

namespace lobpred {

/// p * sigma * sqrt(dt) * eps. Throws std::invalid_argument unless p > 0 and dt > 0.
double gbm_increment(double p, double sigma, double dt, double eps);

struct GbmParams {
    double p0 = 100.0;        // USD
    double sigma = 0.30;      // annualized volatility
    double dt = 1.0 / 52.0;   // years per step
    std::size_t n_steps = 1;
    double drift = 0.0;       // per year
    std::uint64_t seed = 0;

    void validate() const;
};

struct GbmPath {
    std::vector<double> prices;    // n_steps + 1 entries, prices[0] == p0
    std::size_t clamp_count = 0;   // steps floored at one tick (1e-4 USD)
};

GbmPath gbm_path(const GbmParams& params);

struct SynthLobConfig {
    GbmParams gbm;
    std::size_t levels = 10;
    std::int64_t tick = 100;               // price grid in PriceTicks units
    std::int64_t base_spread_ticks = 1;    // best ask - best bid, in grid ticks
    std::int64_t volume_min = 1;
    std::int64_t volume_max = 100;
    double signal_strength = 0.0;          // [0, 1]
    std::uint64_t seed = 0;                // volumes and signal coupling
    Timestamp start{34'200, 0};
    std::int64_t step_nanos = 1'000'000;

    void validate() const;
};

struct SynthLobSeries {
    std::vector<RawBookRow> rows;
    std::vector<Timestamp> times;
    std::vector<MidQuoteX2> mids;
    std::vector<int> imbalance_sign;   // sign of level-1 volume imbalance per row
    std::size_t clamp_count = 0;       // GBM price floors plus grid floors
};

/// One row per GBM step (n_steps + 1 rows). The best bid tracks the GBM
/// price on the tick grid. When signal_strength > 0 and the level-1
/// imbalance of row k is nonzero, the normal draw for step k is given the
/// imbalance sign with probability signal_strength, so the next mid move
/// agrees with the imbalance with probability 0.5 + 0.5 * signal_strength.
SynthLobSeries synth_lob_series(const SynthLobConfig& cfg);

/// Placeholder message stream (one submission per row at the best bid)
/// carrying the series timestamps, so the output pairs like a LOBSTER file set.
std::vector<MessageEvent> synth_messages(const SynthLobSeries& series);

}  // namespace lobpred
