#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lobpred/bench.hpp"
#include "lobpred/book.hpp"
#include "lobpred/features.hpp"
#include "lobpred/forest.hpp"
#include "lobpred/gbm_sim.hpp"
#include "lobpred/labeling.hpp"
#include "lobpred/lobster_io.hpp"
#include "lobpred/rng.hpp"

namespace lobpred::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GlobalOptions {
    std::uint64_t seed = 42;
    std::size_t levels = 10;
    std::size_t workers = std::max(1U, std::thread::hardware_concurrency());
    std::string out;
    std::string format = "csv";
};

// Rows of string cells written either as CSV or as one JSON object per line.
class TableWriter {
public:
    TableWriter(std::ostream& os, std::string format, std::vector<std::string> columns, std::vector<bool> numeric)
        : os_(os), jsonl_(format == "jsonl"), columns_(std::move(columns)), numeric_(std::move(numeric)) {
        if (!jsonl_) {
            for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
            os_ << '\n';
        }
    }

    void row(const std::vector<std::string>& cells) {
        if (jsonl_) {
            os_ << '{';
            for (std::size_t i = 0; i < cells.size(); ++i) {
                os_ << (i ? "," : "") << nlohmann::json(columns_[i]).dump() << ':'
                    << (numeric_[i] ? cells[i] : nlohmann::json(cells[i]).dump());
            }
            os_ << "}\n";
        } else {
            for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
            os_ << '\n';
        }
    }

    // `# key=value` in CSV, {"key":value} in JSONL.
    void meta(const std::string& key, const std::string& value, bool numeric) {
        if (jsonl_) {
            os_ << '{' << nlohmann::json(key).dump() << ':' << (numeric ? value : nlohmann::json(value).dump())
                << "}\n";
        } else {
            os_ << "# " << key << '=' << value << '\n';
        }
    }

private:
    std::ostream& os_;
    bool jsonl_;
    std::vector<std::string> columns_;
    std::vector<bool> numeric_;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

// Writes to --out when given, otherwise to the command's stdout.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) file_ = std::make_unique<std::ofstream>(open_output(path));
        os_ = file_ ? file_.get() : &fallback;
    }
    std::ostream& stream() { return *os_; }
    bool is_file() const { return file_ != nullptr; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

std::vector<RawBookRow> load_orderbook(const std::string& path, std::size_t levels) {
    auto in = open_input(path);
    return parse_orderbook_file(in, levels);
}

std::vector<Timestamp> load_times(const std::string& messages_path, std::ostream& err) {
    if (messages_path.empty()) return {};
    auto in = open_input(messages_path);
    MessageFile mf = parse_message_file(in);
    for (const auto& w : mf.warnings) err << "warning: " << messages_path << ":" << w.line << ": " << w.message << '\n';
    std::vector<Timestamp> times;
    times.reserve(mf.events.size());
    for (const auto& ev : mf.events) times.push_back(ev.time);
    return times;
}

Dataset load_dataset(const std::string& path) {
    auto in = open_input(path);
    return read_dataset_csv(in);
}

FeatureConfig make_feature_config(bool no_raw, const std::string& derived, std::size_t lag) {
    FeatureConfig cfg;
    cfg.raw_levels = !no_raw;
    cfg.lag_window = lag;
    if (derived == "none") {
        cfg.derived.clear();
    } else if (derived != "all") {
        cfg.derived.clear();
        std::stringstream ss(derived);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cfg.derived.insert(parse_derived_feature(item));
        }
    }
    cfg.validate();
    return cfg;
}

struct ForestFlags {
    std::size_t trees = 100;
    std::size_t max_depth = 0;
    std::size_t min_leaf = 1;
    std::size_t mtry = 0;
    std::size_t bootstrap_size = 0;

    void add(CLI::App* app, std::size_t default_trees) {
        trees = default_trees;
        app->add_option("--trees", trees, "Number of trees")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--max-depth", max_depth, "Maximum tree depth (0 = unlimited)")->capture_default_str();
        app->add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--mtry", mtry, "Features tried per split (0 = floor(sqrt(d)))")->capture_default_str();
        app->add_option("--bootstrap-size", bootstrap_size, "Bootstrap sample size (0 = n)")->capture_default_str();
    }

    ForestParams params(std::uint64_t seed) const {
        ForestParams p;
        p.n_trees = trees;
        if (max_depth) p.max_depth = max_depth;
        p.min_samples_leaf = min_leaf;
        if (mtry) p.mtry = mtry;
        if (bootstrap_size) p.bootstrap_size = bootstrap_size;
        p.master_seed = seed;
        return p;
    }
};

struct SimFlags {
    std::size_t rows = 10'000;
    double p0 = 100.0;
    double sigma = 0.30;
    double dt = 1e-5;
    double drift = 0.0;
    std::int64_t tick = 100;
    std::int64_t spread_ticks = 1;
    std::int64_t vol_min = 1;
    std::int64_t vol_max = 100;
    double signal = 0.0;

    void add(CLI::App* app) {
        app->add_option("--rows", rows, "Number of book rows")->capture_default_str()->check(CLI::Range(2, 100'000'000));
        app->add_option("--p0", p0, "Initial price (USD)")->capture_default_str();
        app->add_option("--sigma", sigma, "Annualized volatility")->capture_default_str();
        app->add_option("--dt", dt, "Years per book event")->capture_default_str();
        app->add_option("--drift", drift, "Annual drift")->capture_default_str();
        app->add_option("--tick", tick, "Price grid in 1e-4 USD")->capture_default_str();
        app->add_option("--spread-ticks", spread_ticks, "Spread in grid ticks")->capture_default_str();
        app->add_option("--vol-min", vol_min, "Minimum level volume")->capture_default_str();
        app->add_option("--vol-max", vol_max, "Maximum level volume")->capture_default_str();
        app->add_option("--signal", signal, "Imbalance-to-direction coupling in [0,1]")->capture_default_str();
    }

    SynthLobConfig config(std::uint64_t seed, std::size_t levels) const {
        SynthLobConfig cfg;
        cfg.gbm.p0 = p0;
        cfg.gbm.sigma = sigma;
        cfg.gbm.dt = dt;
        cfg.gbm.drift = drift;
        cfg.gbm.n_steps = rows - 1;
        cfg.gbm.seed = derive_seed(seed, 0);
        cfg.levels = levels;
        cfg.tick = tick;
        cfg.base_spread_ticks = spread_ticks;
        cfg.volume_min = vol_min;
        cfg.volume_max = vol_max;
        cfg.signal_strength = signal;
        cfg.seed = derive_seed(seed, 1);
        return cfg;
    }
};

Dataset synthetic_dataset(const SimFlags& sim, std::uint64_t seed, std::size_t levels) {
    const SynthLobSeries series = synth_lob_series(sim.config(seed, levels));
    const auto snaps = snapshots_from_rows(series.rows, series.times, levels);
    FeatureConfig cfg;
    cfg.derived.clear();
    return build_dataset(snaps, 1, cfg);
}

void write_svg(const std::string& path, const DepthProfile& profile) {
    auto out = open_output(path);
    const double width = 640, height = 320, margin = 40;
    double lo = profile.points.empty() ? 0 : profile.points.front().price.dollars();
    double hi = profile.points.empty() ? 1 : profile.points.back().price.dollars();
    if (!(hi > lo)) hi = lo + 1;
    std::int64_t vmax = 1;
    for (const auto& p : profile.points) vmax = std::max(vmax, p.volume);
    auto sx = [&](double price) { return margin + (price - lo) / (hi - lo) * (width - 2 * margin); };
    auto sy = [&](double v) { return height - margin - v / static_cast<double>(vmax) * (height - 2 * margin); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<text x=\"" << margin << "\" y=\"20\" font-size=\"12\">tm " << to_string(profile.time) << "  mid "
        << format_dollars(profile.mid) << "</text>\n";
    for (Side side : {Side::Bid, Side::Ask}) {
        out << "<polyline fill=\"none\" stroke=\"" << (side == Side::Bid ? "green" : "blue") << "\" points=\"";
        for (const auto& p : profile.points) {
            if (p.side == side) out << sx(p.price.dollars()) << ',' << sy(static_cast<double>(p.volume)) << ' ';
        }
        out << "\"/>\n";
    }
    const double mx = sx(profile.mid.dollars());
    out << "<line x1=\"" << mx << "\" y1=\"" << margin << "\" x2=\"" << mx << "\" y2=\"" << height - margin
        << "\" stroke=\"red\"/>\n</svg>\n";
}

// ---------------------------------------------------------------------------

int cmd_snapshot(const GlobalOptions& g, const std::string& orderbook, std::optional<std::size_t> index,
                 const std::string& time_text, const std::string& messages, const std::string& svg, std::ostream& out,
                 std::ostream& err) {
    const auto rows = load_orderbook(orderbook, g.levels);
    std::size_t i = 0;
    Timestamp t{};
    if (!time_text.empty()) {
        if (messages.empty()) throw UsageError("--time requires --messages");
        const auto times = load_times(messages, err);
        if (times.size() != rows.size()) {
            throw std::runtime_error("message/orderbook length mismatch: " + std::to_string(times.size()) + " vs " +
                                     std::to_string(rows.size()));
        }
        const Timestamp target = parse_timestamp(time_text);
        // Book state as of `target`: last row with time <= target.
        const auto it = std::upper_bound(times.begin(), times.end(), target);
        if (it == times.begin()) throw std::runtime_error("time " + time_text + " precedes the first message");
        i = static_cast<std::size_t>(it - times.begin()) - 1;
        t = times[i];
    } else {
        if (!index) throw UsageError("one of --index or --time is required");
        i = *index;
        if (i >= rows.size()) {
            throw std::runtime_error("index " + std::to_string(i) + " out of range (file has " +
                                     std::to_string(rows.size()) + " rows)");
        }
        if (!messages.empty()) {
            const auto times = load_times(messages, err);
            if (i < times.size()) t = times[i];
        }
    }

    const BookSnapshot snap = snapshot_from_row(rows[i], t, g.levels);
    const DepthProfile profile = depth_profile(snap);

    Sink sink(g.out, out);
    std::ostream& os = sink.stream();
    if (g.format == "jsonl") {
        os << "{\"mid\":" << format_dollars(profile.mid) << ",\"index\":" << i << ",\"time\":\""
           << to_string(profile.time) << "\"}\n";
    } else {
        os << "# mid=" << format_dollars(profile.mid) << '\n';
        os << "# index=" << i << '\n';
        os << "# time=" << to_string(profile.time) << '\n';
    }
    TableWriter table(os, g.format, {"price", "volume", "side"}, {true, true, false});
    for (const auto& p : profile.points) {
        table.row({format_dollars(p.price), std::to_string(p.volume), p.side == Side::Bid ? "bid" : "ask"});
    }
    if (!svg.empty()) write_svg(svg, profile);
    return 0;
}

int cmd_label(const GlobalOptions& g, const std::string& orderbook, std::size_t horizon, std::int64_t start,
              std::ostream& out) {
    const auto rows = load_orderbook(orderbook, g.levels);
    const auto snaps = snapshots_from_rows(rows, {}, g.levels);
    std::vector<MidQuoteX2> mids;
    mids.reserve(snaps.size());
    for (const auto& s : snaps) mids.push_back(mid_quote(s));
    const LabeledSeries series = label_series(std::move(mids), horizon);
    const auto cumulative = cumulative_signal(series.labels, start);

    Sink sink(g.out, out);
    TableWriter table(sink.stream(), g.format, {"index", "mid_usd", "label", "cumulative"}, {true, true, true, true});
    for (std::size_t i = 0; i < series.labels.size(); ++i) {
        // The accumulated signal leads the mid series by one step.
        table.row({std::to_string(i), format_dollars(series.mids[i]), std::to_string(to_int(series.labels[i])),
                   std::to_string(cumulative[i + 1])});
    }
    return 0;
}

int cmd_simulate(const GlobalOptions& g, const SimFlags& sim, std::ostream& out) {
    if (g.out.empty()) throw UsageError("simulate requires --out <prefix>");
    const SynthLobConfig cfg = sim.config(g.seed, g.levels);
    const SynthLobSeries series = synth_lob_series(cfg);
    const std::string suffix = "_" + std::to_string(g.levels) + ".csv";
    const std::string book_path = g.out + "_orderbook" + suffix;
    const std::string msg_path = g.out + "_message" + suffix;
    const std::string labels_path = g.out + "_labels.csv";

    {
        auto os = open_output(book_path);
        write_orderbook(os, series.rows, g.levels);
    }
    {
        auto os = open_output(msg_path);
        write_messages(os, synth_messages(series));
    }
    {
        auto os = open_output(labels_path);
        TableWriter table(os, "csv", {"index", "mid_x2", "imbalance_sign", "next_label"}, {true, true, true, true});
        for (std::size_t i = 0; i + 1 < series.mids.size(); ++i) {
            table.row({std::to_string(i), std::to_string(series.mids[i].value),
                       std::to_string(series.imbalance_sign[i]),
                       std::to_string(to_int(direction_label(series.mids[i], series.mids[i + 1])))});
        }
    }
    out << "wrote " << book_path << ", " << msg_path << ", " << labels_path << " (" << series.rows.size()
        << " rows, " << series.clamp_count << " clamps)\n";
    return 0;
}

int cmd_features(const GlobalOptions& g, const std::string& orderbook, const std::string& messages,
                 std::size_t horizon, const FeatureConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto rows = load_orderbook(orderbook, g.levels);
    const auto times = load_times(messages, err);
    const auto snaps = snapshots_from_rows(rows, times, g.levels);
    const Dataset ds = build_dataset(snaps, horizon, cfg);
    Sink sink(g.out, out);
    if (g.format == "jsonl") {
        std::vector<std::string> cols = ds.feature_names;
        cols.push_back("label");
        TableWriter table(sink.stream(), "jsonl", cols, std::vector<bool>(cols.size(), true));
        for (std::size_t r = 0; r < ds.n_rows; ++r) {
            std::vector<std::string> cells;
            for (double v : ds.row(r)) cells.push_back(format_double(v));
            cells.push_back(std::to_string(to_int(ds.y[r])));
            table.row(cells);
        }
    } else {
        write_dataset_csv(sink.stream(), ds);
    }
    return 0;
}

// Rows used for training: the chronological train part, or everything when
// the fraction is 1.
Dataset training_part(const Dataset& ds, double fraction) {
    if (fraction == 1.0) return ds;
    return chrono_split(ds, fraction).first;
}

Dataset evaluation_part(const Dataset& ds, double fraction) {
    if (fraction == 0.0) return ds;
    return chrono_split(ds, fraction).second;
}

int cmd_train(const GlobalOptions& g, const std::string& data, double fraction, const ForestFlags& flags,
              const std::string& model, std::ostream& out) {
    const Dataset train = training_part(load_dataset(data), fraction);
    const Forest forest = train_forest(train, flags.params(g.seed), g.workers);
    auto os = open_output(model);
    save_forest(os, forest);
    out << "trained " << forest.trees.size() << " trees on " << train.n_rows << " rows x " << train.n_features
        << " features -> " << model << '\n';
    return 0;
}

int cmd_predict(const GlobalOptions& g, const std::string& model, const std::string& data, std::ostream& out) {
    auto in = open_input(model);
    const Forest forest = load_forest(in);
    const Dataset ds = load_dataset(data);
    const auto predictions = predict_batch(forest, MatrixView(ds));
    Sink sink(g.out, out);
    TableWriter table(sink.stream(), g.format, {"index", "predicted"}, {true, true});
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        table.row({std::to_string(i), std::to_string(to_int(predictions[i]))});
    }
    return 0;
}

int cmd_eval(const GlobalOptions& g, const std::string& model, const std::string& data, double fraction,
             std::ostream& out) {
    auto in = open_input(model);
    const Forest forest = load_forest(in);
    const Dataset test = evaluation_part(load_dataset(data), fraction);
    const Evaluation e = evaluate(forest, test);

    Sink sink(g.out, out);
    std::ostream& os = sink.stream();
    if (g.format == "jsonl") {
        nlohmann::json j = {{"n", e.n}, {"accuracy", e.accuracy}, {"confusion", e.confusion}};
        os << j.dump() << '\n';
    } else {
        os << "n=" << e.n << '\n';
        os << "accuracy=" << format_double(e.accuracy) << '\n';
        os << "confusion (rows=true, cols=predicted; order -1,0,+1)\n";
        os << "true\\pred,-1,0,1\n";
        for (std::size_t t = 0; t < 3; ++t) {
            os << to_int(label_from_index(t));
            for (std::size_t p = 0; p < 3; ++p) os << ',' << e.confusion[t][p];
            os << '\n';
        }
    }
    return 0;
}

void emit_records(const GlobalOptions& g, std::span<const BenchRecord> records, std::ostream& os) {
    if (g.format == "jsonl") {
        for (const auto& r : records) {
            nlohmann::json j = {{"label", r.label},         {"workers", r.workers},   {"wall_seconds", r.wall_seconds},
                                {"n_rows", r.n_rows},       {"n_features", r.n_features}, {"n_trees", r.n_trees},
                                {"seed", r.seed},           {"host_info", r.host_info}};
            os << j.dump() << '\n';
        }
    } else {
        write_bench_csv(os, records);
    }
}

int cmd_bench(const GlobalOptions& g, const std::string& data, const SimFlags& sim, const ForestFlags& flags,
              std::ostream& out, std::ostream& err) {
    const Dataset ds = data.empty() ? synthetic_dataset(sim, g.seed, g.levels) : load_dataset(data);
    const ForestParams params = flags.params(g.seed);
    auto serial = time_training(ds, params, 1, "serial");
    auto parallel = time_training(ds, params, g.workers, "parallel");
    const SpeedupReport report = speedup_report(serial.record, parallel.record);
    const bool identical = serial.forest == parallel.forest;

    const std::vector<BenchRecord> records{serial.record, parallel.record};
    Sink sink(g.out, out);
    std::ostream& os = sink.stream();
    emit_records(g, records, os);
    if (g.format != "jsonl") {
        os << "# speedup=" << format_double(report.speedup) << '\n';
        os << "# identical_forests=" << (identical ? "true" : "false") << '\n';
    } else {
        os << "{\"speedup\":" << format_double(report.speedup) << ",\"identical_forests\":"
           << (identical ? "true" : "false") << "}\n";
    }
    std::ostream& human = sink.is_file() ? out : err;
    write_bench_table(human, records);
    human << report.summary << '\n';
    return identical ? 0 : 1;
}

int cmd_pool(const GlobalOptions& g, std::size_t securities, const SimFlags& sim, const ForestFlags& flags,
             std::ostream& out, std::ostream& err) {
    if (securities == 0) throw UsageError("--securities must be positive");
    std::vector<TrainingJob> jobs;
    jobs.reserve(securities);
    for (std::size_t i = 0; i < securities; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "SEC%03zu", i);
        const std::uint64_t sec_seed = derive_seed(g.seed, 1000 + i);
        jobs.push_back({id, synthetic_dataset(sim, sec_seed, g.levels), flags.params(sec_seed)});
    }
    const auto results = train_pool(jobs, g.workers);
    std::vector<BenchRecord> records;
    for (const auto& [id, r] : results) records.push_back(r.record);

    Sink sink(g.out, out);
    emit_records(g, records, sink.stream());
    std::ostream& human = sink.is_file() ? out : err;
    write_bench_table(human, records);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Limit order book direction labeling, random forest training and benchmarking", "lobpred"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--levels", g.levels, "Book levels L")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--workers", g.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output path (or prefix for simulate)");
    app.add_option("--format", g.format, "Output format")->capture_default_str()->check(CLI::IsMember({"csv", "jsonl"}));

    std::string orderbook, messages, data, model, svg, time_text;
    std::size_t horizon = 1;
    std::int64_t start = 0;
    std::size_t lag = 0;
    bool no_raw = false;
    std::string derived = "all";
    double fraction = 0.7;
    std::optional<std::size_t> index;
    std::size_t securities = 16;
    SimFlags sim, bench_sim, pool_sim;
    ForestFlags train_flags, bench_flags, pool_flags;

    auto* snapshot = app.add_subcommand("snapshot", "Depth profile of one book row");
    snapshot->add_option("--orderbook", orderbook, "LOBSTER orderbook file")->required();
    snapshot->add_option("--index", index, "Row index");
    snapshot->add_option("--time", time_text, "Seconds after midnight (needs --messages)");
    snapshot->add_option("--messages", messages, "LOBSTER message file");
    snapshot->add_option("--svg", svg, "Also write an SVG depth plot");

    auto* label = app.add_subcommand("label", "Mid-quote direction labels and cumulative signal");
    label->add_option("--orderbook", orderbook, "LOBSTER orderbook file")->required();
    label->add_option("--horizon", horizon, "Label horizon in events")->capture_default_str()->check(CLI::PositiveNumber);
    label->add_option("--start", start, "Starting value of the cumulative signal")->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Write a synthetic LOBSTER file set");
    sim.add(simulate);

    auto* features = app.add_subcommand("features", "Build a labeled feature dataset");
    features->add_option("--orderbook", orderbook, "LOBSTER orderbook file")->required();
    features->add_option("--messages", messages, "LOBSTER message file (timestamps)");
    features->add_option("--horizon", horizon, "Label horizon in events")->capture_default_str()->check(CLI::PositiveNumber);
    features->add_option("--lag", lag, "Number of past snapshots appended")->capture_default_str();
    features->add_flag("--no-raw", no_raw, "Drop the 4L raw level columns");
    features->add_option("--derived", derived, "Comma list of derived features, 'all' or 'none'")->capture_default_str();

    auto* train = app.add_subcommand("train", "Train a random forest on a dataset CSV");
    train->add_option("--data", data, "Dataset CSV from `features`")->required();
    train->add_option("--train-fraction", fraction, "Leading fraction used for training (1 = all)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    train->add_option("--model", model, "Forest output file")->required();
    train_flags.add(train, 100);

    auto* predict_cmd = app.add_subcommand("predict", "Predict labels for a dataset CSV");
    predict_cmd->add_option("--model", model, "Forest file")->required();
    predict_cmd->add_option("--data", data, "Dataset CSV")->required();

    auto* eval = app.add_subcommand("eval", "Accuracy and confusion matrix on the test part");
    eval->add_option("--model", model, "Forest file")->required();
    eval->add_option("--data", data, "Dataset CSV")->required();
    eval->add_option("--train-fraction", fraction, "Rows before this fraction are skipped (0 = evaluate all)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    auto* bench = app.add_subcommand("bench", "Serial vs parallel training time");
    bench->add_option("--data", data, "Dataset CSV (default: synthetic)");
    bench_sim.rows = 20'000;
    bench_sim.add(bench);
    bench_flags.add(bench, 200);

    auto* pool = app.add_subcommand("pool", "Train one forest per synthetic security on a worker pool");
    pool->add_option("--securities", securities, "Number of securities")->capture_default_str();
    pool_sim.rows = 5'000;
    pool_sim.add(pool);
    pool_flags.add(pool, 50);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        if (*snapshot) return cmd_snapshot(g, orderbook, index, time_text, messages, svg, out, err);
        if (*label) return cmd_label(g, orderbook, horizon, start, out);
        if (*simulate) return cmd_simulate(g, sim, out);
        if (*features) return cmd_features(g, orderbook, messages, horizon, make_feature_config(no_raw, derived, lag), out, err);
        if (*train) return cmd_train(g, data, fraction, train_flags, model, out);
        if (*predict_cmd) return cmd_predict(g, model, data, out);
        if (*eval) return cmd_eval(g, model, data, fraction, out);
        if (*bench) return cmd_bench(g, data, bench_sim, bench_flags, out, err);
        if (*pool) return cmd_pool(g, securities, pool_sim, pool_flags, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace lobpred::cli
