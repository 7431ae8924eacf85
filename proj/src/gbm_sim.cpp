#include "lobpred/gbm_sim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lobpred/rng.hpp"

namespace lobpred {

namespace {

constexpr double kMinPrice = 1.0 / PriceTicks::kPerDollar;

// One Euler step of the GBM recursion; floors at one tick.
double gbm_step(double p, const GbmParams& g, double eps, std::size_t& clamps) {
    double next = p + p * g.drift * g.dt + gbm_increment(p, g.sigma, g.dt, eps);
    if (!(next > 0.0)) {
        next = kMinPrice;
        ++clamps;
    }
    return next;
}

}  // namespace

double gbm_increment(double p, double sigma, double dt, double eps) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(p > 0.0)) throw std::invalid_argument("price must be positive");
    return p * sigma * std::sqrt(dt) * eps;
}

void GbmParams::validate() const {
    if (!(p0 > 0.0)) throw std::invalid_argument("p0 must be positive");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (n_steps == 0) throw std::invalid_argument("n_steps must be positive");
}

GbmPath gbm_path(const GbmParams& params) {
    params.validate();
    GbmPath path;
    path.prices.reserve(params.n_steps + 1);
    path.prices.push_back(params.p0);
    Rng rng(params.seed);
    double p = params.p0;
    for (std::size_t k = 0; k < params.n_steps; ++k) {
        p = gbm_step(p, params, rng.normal(), path.clamp_count);
        path.prices.push_back(p);
    }
    return path;
}

void SynthLobConfig::validate() const {
    gbm.validate();
    if (levels == 0) throw std::invalid_argument("levels must be positive");
    if (tick < 1) throw std::invalid_argument("tick must be >= 1");
    if (base_spread_ticks < 1) throw std::invalid_argument("base_spread_ticks must be >= 1");
    if (volume_min < 1 || volume_max < volume_min) throw std::invalid_argument("volume law needs 1 <= min <= max");
    if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) {
        throw std::invalid_argument("signal_strength must be in [0, 1]");
    }
    if (step_nanos < 0) throw std::invalid_argument("step_nanos must be non-negative");
}

SynthLobSeries synth_lob_series(const SynthLobConfig& cfg) {
    cfg.validate();
    const std::size_t n_rows = cfg.gbm.n_steps + 1;
    const auto L = static_cast<std::int64_t>(cfg.levels);
    const double tick_usd = static_cast<double>(cfg.tick) / PriceTicks::kPerDollar;
    const double half_spread = 0.5 * static_cast<double>(cfg.base_spread_ticks);

    SynthLobSeries out;
    out.rows.reserve(n_rows);
    out.times.reserve(n_rows);
    out.mids.reserve(n_rows);
    out.imbalance_sign.reserve(n_rows);

    Rng eps_rng(cfg.gbm.seed);
    Rng book_rng(cfg.seed);
    double p = cfg.gbm.p0;
    const std::int64_t t0 = cfg.start.total_nanos();

    for (std::size_t k = 0; k < n_rows; ++k) {
        // Best bid index on the grid; the deepest bid level stays >= 1 grid tick.
        std::int64_t best_bid = std::llround(p / tick_usd - half_spread);
        if (best_bid < L) {
            best_bid = L;
            ++out.clamp_count;
        }
        const std::int64_t best_ask = best_bid + cfg.base_spread_ticks;

        RawBookRow row(4 * cfg.levels);
        for (std::int64_t l = 0; l < L; ++l) {
            row[4 * l] = (best_ask + l) * cfg.tick;
            row[4 * l + 1] = book_rng.uniform_int(cfg.volume_min, cfg.volume_max);
            row[4 * l + 2] = (best_bid - l) * cfg.tick;
            row[4 * l + 3] = book_rng.uniform_int(cfg.volume_min, cfg.volume_max);
        }
        const std::int64_t diff = row[3] - row[1];
        const int imb_sign = (diff > 0) - (diff < 0);

        out.mids.push_back(MidQuoteX2{row[0] + row[2]});
        out.imbalance_sign.push_back(imb_sign);
        out.rows.push_back(std::move(row));
        out.times.push_back(Timestamp::from_nanos(t0 + static_cast<std::int64_t>(k) * cfg.step_nanos));

        if (k + 1 < n_rows) {
            double eps = eps_rng.normal();
            if (cfg.signal_strength > 0.0 && imb_sign != 0 && book_rng.bernoulli(cfg.signal_strength)) {
                eps = std::fabs(eps) * imb_sign;
            }
            p = gbm_step(p, cfg.gbm, eps, out.clamp_count);
        }
    }
    return out;
}

std::vector<MessageEvent> synth_messages(const SynthLobSeries& series) {
    std::vector<MessageEvent> events;
    events.reserve(series.rows.size());
    for (std::size_t i = 0; i < series.rows.size(); ++i) {
        MessageEvent ev;
        ev.time = series.times[i];
        ev.event_type = EventType::Submission;
        ev.order_id = static_cast<std::int64_t>(i + 1);
        ev.size = series.rows[i][3];
        ev.price = PriceTicks{series.rows[i][2]};
        ev.direction = 1;
        events.push_back(ev);
    }
    return events;
}

}  // namespace lobpred
