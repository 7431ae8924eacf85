#include "lobpred/features.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "lobpred/lobster_io.hpp"

namespace lobpred {

namespace {

constexpr DerivedFeature kDerivedOrder[] = {
    DerivedFeature::Spread,      DerivedFeature::Mid,         DerivedFeature::Imbalance1,
    DerivedFeature::ImbalanceL,  DerivedFeature::CumDepthBid, DerivedFeature::CumDepthAsk,
    DerivedFeature::VwapMinusMid,
};

std::size_t base_width(const FeatureConfig& cfg, std::size_t levels) {
    return (cfg.raw_levels ? 4 * levels : 0) + cfg.derived.size();
}

void append_base_features(const BookSnapshot& s, const FeatureConfig& cfg, std::vector<double>& out) {
    if (cfg.raw_levels) {
        for (std::size_t l = 0; l < s.levels(); ++l) {
            const bool has_ask = l < s.asks().size();
            const bool has_bid = l < s.bids().size();
            out.push_back(has_ask ? s.asks()[l].price.dollars() : 0.0);
            out.push_back(has_ask ? static_cast<double>(s.asks()[l].volume) : 0.0);
            out.push_back(has_bid ? s.bids()[l].price.dollars() : 0.0);
            out.push_back(has_bid ? static_cast<double>(s.bids()[l].volume) : 0.0);
        }
    }
    if (cfg.derived.empty()) return;

    const MidQuoteX2 mid = mid_quote(s);
    const std::size_t common_depth = std::min(s.bids().size(), s.asks().size());
    for (DerivedFeature f : cfg.derived) {
        switch (f) {
            case DerivedFeature::Spread:
                out.push_back(spread(s).dollars());
                break;
            case DerivedFeature::Mid:
                out.push_back(mid.dollars());
                break;
            case DerivedFeature::Imbalance1:
                out.push_back(imbalance(s, 1));
                break;
            case DerivedFeature::ImbalanceL:
                out.push_back(imbalance(s, std::min(s.levels(), common_depth)));
                break;
            case DerivedFeature::CumDepthBid: {
                std::int64_t v = 0;
                for (const auto& lv : s.bids()) v += lv.volume;
                out.push_back(static_cast<double>(v));
                break;
            }
            case DerivedFeature::CumDepthAsk: {
                std::int64_t v = 0;
                for (const auto& lv : s.asks()) v += lv.volume;
                out.push_back(static_cast<double>(v));
                break;
            }
            case DerivedFeature::VwapMinusMid:
                out.push_back(vwap(s) - mid.dollars());
                break;
        }
    }
}

double parse_double(std::string_view text, std::size_t line, std::size_t column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ParseError("expected number, got '" + std::string(text) + "'", line, column);
    }
    return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

std::string_view feature_name(DerivedFeature f) {
    switch (f) {
        case DerivedFeature::Spread: return "spread";
        case DerivedFeature::Mid: return "mid";
        case DerivedFeature::Imbalance1: return "imbalance_1";
        case DerivedFeature::ImbalanceL: return "imbalance_L";
        case DerivedFeature::CumDepthBid: return "cum_depth_bid";
        case DerivedFeature::CumDepthAsk: return "cum_depth_ask";
        case DerivedFeature::VwapMinusMid: return "vwap_minus_mid";
    }
    return "?";
}

DerivedFeature parse_derived_feature(std::string_view name) {
    for (DerivedFeature f : kDerivedOrder) {
        if (feature_name(f) == name) return f;
    }
    throw std::invalid_argument("unknown derived feature '" + std::string(name) + "'");
}

std::set<DerivedFeature> all_derived_features() { return {std::begin(kDerivedOrder), std::end(kDerivedOrder)}; }

void FeatureConfig::validate() const {
    if (!raw_levels && derived.empty()) throw std::invalid_argument("at least one feature group must be enabled");
}

std::vector<std::string> feature_names(const FeatureConfig& cfg, std::size_t levels) {
    cfg.validate();
    std::vector<std::string> base;
    if (cfg.raw_levels) {
        for (std::size_t l = 1; l <= levels; ++l) {
            const std::string n = std::to_string(l);
            base.push_back("ask_price_" + n);
            base.push_back("ask_size_" + n);
            base.push_back("bid_price_" + n);
            base.push_back("bid_size_" + n);
        }
    }
    for (DerivedFeature f : cfg.derived) base.emplace_back(feature_name(f));

    std::vector<std::string> names = base;
    for (std::size_t j = 1; j <= cfg.lag_window; ++j) {
        for (const auto& b : base) names.push_back(b + "_lag" + std::to_string(j));
    }
    return names;
}

std::vector<double> feature_vector(const BookSnapshot& s, std::span<const BookSnapshot> history,
                                   const FeatureConfig& cfg) {
    cfg.validate();
    if (history.size() < cfg.lag_window) {
        throw std::invalid_argument("insufficient history: need " + std::to_string(cfg.lag_window) + ", have " +
                                    std::to_string(history.size()));
    }
    std::vector<double> out;
    out.reserve(base_width(cfg, s.levels()) * (cfg.lag_window + 1));
    append_base_features(s, cfg, out);
    for (std::size_t j = 1; j <= cfg.lag_window; ++j) {
        const BookSnapshot& past = history[history.size() - j];
        if (past.levels() != s.levels()) throw std::invalid_argument("history level count differs");
        append_base_features(past, cfg, out);
    }
    return out;
}

std::vector<BookSnapshot> snapshots_from_rows(std::span<const RawBookRow> rows, std::span<const Timestamp> times,
                                              std::size_t levels) {
    if (!times.empty() && times.size() != rows.size()) {
        throw std::invalid_argument("timestamp/orderbook length mismatch: " + std::to_string(times.size()) +
                                    " vs " + std::to_string(rows.size()));
    }
    std::vector<BookSnapshot> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            out.push_back(snapshot_from_row(rows[i], times.empty() ? Timestamp{} : times[i], levels));
        } catch (const BookError& e) {
            throw BookError("orderbook row " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

Dataset build_dataset(std::span<const BookSnapshot> snapshots, std::size_t horizon, const FeatureConfig& cfg) {
    cfg.validate();
    if (horizon == 0) throw std::invalid_argument("horizon must be positive");
    const std::size_t lag = cfg.lag_window;
    if (snapshots.size() <= horizon + lag) {
        throw std::invalid_argument("too few snapshots: " + std::to_string(snapshots.size()) + " <= horizon " +
                                    std::to_string(horizon) + " + lag " + std::to_string(lag));
    }
    const std::size_t levels = snapshots.front().levels();

    // Base features once per snapshot that any row reads.
    const std::size_t width = base_width(cfg, levels);
    const std::size_t used = snapshots.size() - horizon;
    std::vector<double> base;
    base.reserve(used * width);
    for (std::size_t i = 0; i < used; ++i) {
        if (snapshots[i].levels() != levels) throw std::invalid_argument("snapshots differ in level count");
        append_base_features(snapshots[i], cfg, base);
    }

    Dataset ds;
    ds.feature_names = feature_names(cfg, levels);
    ds.n_features = ds.feature_names.size();
    ds.n_rows = used - lag;
    ds.x.reserve(ds.n_rows * ds.n_features);
    ds.y.reserve(ds.n_rows);
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
        const std::size_t i = r + lag;
        for (std::size_t j = 0; j <= lag; ++j) {
            const double* src = base.data() + (i - j) * width;
            ds.x.insert(ds.x.end(), src, src + width);
        }
        ds.y.push_back(direction_label(mid_quote(snapshots[i]), mid_quote(snapshots[i + horizon])));
    }
    return ds;
}

std::pair<Dataset, Dataset> chrono_split(const Dataset& ds, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
    if (ds.n_rows < 2) throw std::invalid_argument("need at least 2 rows to split");
    const auto n_train = static_cast<std::size_t>(static_cast<double>(ds.n_rows) * train_fraction);
    if (n_train == 0 || n_train == ds.n_rows) {
        throw std::invalid_argument("split leaves an empty side (" + std::to_string(n_train) + " of " +
                                    std::to_string(ds.n_rows) + " rows in train)");
    }
    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset part;
        part.feature_names = ds.feature_names;
        part.n_features = ds.n_features;
        part.n_rows = end - begin;
        part.x.assign(ds.x.begin() + static_cast<std::ptrdiff_t>(begin * ds.n_features),
                      ds.x.begin() + static_cast<std::ptrdiff_t>(end * ds.n_features));
        part.y.assign(ds.y.begin() + static_cast<std::ptrdiff_t>(begin), ds.y.begin() + static_cast<std::ptrdiff_t>(end));
        return part;
    };
    return {take(0, n_train), take(n_train, ds.n_rows)};
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
    std::string line;
    for (const auto& name : ds.feature_names) {
        line += name;
        line.push_back(',');
    }
    line += "label\n";
    out << line;
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
        line.clear();
        for (double v : ds.row(r)) {
            line += format_double(v);
            line.push_back(',');
        }
        line += std::to_string(to_int(ds.y[r]));
        line.push_back('\n');
        out << line;
    }
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing dataset header", 1, 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Dataset ds;
    for (auto name : split_commas(line)) ds.feature_names.emplace_back(name);
    if (ds.feature_names.size() < 2 || ds.feature_names.back() != "label") {
        throw ParseError("dataset header must end with 'label'", 1, 1);
    }
    ds.feature_names.pop_back();
    ds.n_features = ds.feature_names.size();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != ds.n_features + 1) {
            throw ParseError("expected " + std::to_string(ds.n_features + 1) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no, 1);
        }
        std::size_t column = 1;
        for (std::size_t j = 0; j < ds.n_features; ++j) {
            ds.x.push_back(parse_double(fields[j], line_no, column));
            column += fields[j].size() + 1;
        }
        int label = 0;
        const auto lf = fields.back();
        auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
        if (ec != std::errc() || ptr != lf.data() + lf.size() || label < -1 || label > 1) {
            throw ParseError("label must be -1, 0 or 1, got '" + std::string(lf) + "'", line_no, column);
        }
        ds.y.push_back(static_cast<Label>(label));
        ++ds.n_rows;
    }
    return ds;
}

}  // namespace lobpred
