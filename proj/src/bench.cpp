#include "lobpred/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lobpred {

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Splits one CSV record, honoring double-quoted fields.
std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back().push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back().push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back().push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no, line.size());
    return fields;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no, std::size_t column) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError("invalid number '" + s + "'", line_no, column);
    }
    return v;
}

}  // namespace

void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records) {
    out << kBenchCsvHeader << '\n';
    for (const auto& r : records) {
        out << csv_quote(r.label) << ',' << r.workers << ',' << format_double(r.wall_seconds) << ',' << r.n_rows << ','
            << r.n_features << ',' << r.n_trees << ',' << r.seed << ',' << csv_quote(r.host_info) << '\n';
    }
}

std::vector<BenchRecord> read_bench_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kBenchCsvHeader) {
        throw ParseError(std::string("expected header '") + kBenchCsvHeader + "'", 1, 1);
    }
    std::vector<BenchRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto f = csv_split(line, line_no);
        if (f.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(f.size()), line_no, 1);
        BenchRecord r;
        r.label = f[0];
        r.workers = parse_number<std::size_t>(f[1], line_no, 2);
        r.wall_seconds = parse_number<double>(f[2], line_no, 3);
        r.n_rows = parse_number<std::size_t>(f[3], line_no, 4);
        r.n_features = parse_number<std::size_t>(f[4], line_no, 5);
        r.n_trees = parse_number<std::size_t>(f[5], line_no, 6);
        r.seed = parse_number<std::uint64_t>(f[6], line_no, 7);
        r.host_info = f[7];
        out.push_back(std::move(r));
    }
    return out;
}

void write_bench_table(std::ostream& out, std::span<const BenchRecord> records) {
    out << std::left << std::setw(24) << "label" << std::right << std::setw(8) << "workers" << std::setw(14)
        << "wall_s" << std::setw(10) << "rows" << std::setw(10) << "features" << std::setw(8) << "trees" << '\n';
    for (const auto& r : records) {
        out << std::left << std::setw(24) << r.label << std::right << std::setw(8) << r.workers << std::setw(14)
            << std::fixed << std::setprecision(4) << r.wall_seconds << std::setw(10) << r.n_rows << std::setw(10)
            << r.n_features << std::setw(8) << r.n_trees << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

std::size_t physical_core_count() {
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::set<std::pair<std::string, std::string>> cores;
    std::string line, physical_id = "0";
    while (std::getline(cpuinfo, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = colon + 2 <= line.size() ? line.substr(colon + 2) : "";
        if (key == "physical id") physical_id = value;
        if (key == "core id") cores.emplace(physical_id, value);
    }
    if (!cores.empty()) return cores.size();
    return std::max(1U, std::thread::hardware_concurrency());
}

std::string host_info() {
    std::ostringstream os;
    os << "physical_cores=" << physical_core_count() << ";logical_cpus=" << std::max(1U, std::thread::hardware_concurrency());
#if defined(__clang__)
    os << ";compiler=Clang " << __clang_major__ << '.' << __clang_minor__ << '.' << __clang_patchlevel__;
#elif defined(__GNUC__)
    os << ";compiler=GCC " << __GNUC__ << '.' << __GNUC_MINOR__ << '.' << __GNUC_PATCHLEVEL__;
#endif
    return os.str();
}

TimedTraining time_training(const Dataset& ds, const ForestParams& params, std::size_t workers, std::string label) {
    const auto start = std::chrono::steady_clock::now();
    Forest forest = train_forest(ds, params, workers);
    const auto stop = std::chrono::steady_clock::now();

    BenchRecord rec;
    rec.label = std::move(label);
    rec.workers = workers;
    // steady_clock can report 0 for trivial runs on coarse clocks.
    rec.wall_seconds = std::max(std::chrono::duration<double>(stop - start).count(), 1e-9);
    rec.n_rows = ds.n_rows;
    rec.n_features = ds.n_features;
    rec.n_trees = params.n_trees;
    rec.seed = params.master_seed;
    rec.host_info = host_info();
    return {std::move(forest), std::move(rec)};
}

SpeedupReport speedup_report(const BenchRecord& baseline, const BenchRecord& contender) {
    if (baseline.n_rows != contender.n_rows || baseline.n_features != contender.n_features ||
        baseline.n_trees != contender.n_trees) {
        throw std::invalid_argument("records not comparable: " + std::to_string(baseline.n_rows) + "x" +
                                    std::to_string(baseline.n_features) + "/" + std::to_string(baseline.n_trees) +
                                    " trees vs " + std::to_string(contender.n_rows) + "x" +
                                    std::to_string(contender.n_features) + "/" + std::to_string(contender.n_trees) +
                                    " trees");
    }
    if (!(baseline.wall_seconds > 0.0) || !(contender.wall_seconds > 0.0)) {
        throw std::invalid_argument("wall_seconds must be positive");
    }
    SpeedupReport rep;
    rep.speedup = baseline.wall_seconds / contender.wall_seconds;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s (workers=%zu) %.2f s -> %s (workers=%zu) %.2f s: speedup %.2fx",
                  baseline.label.c_str(), baseline.workers, baseline.wall_seconds, contender.label.c_str(),
                  contender.workers, contender.wall_seconds, rep.speedup);
    rep.summary = buf;
    return rep;
}

std::map<std::string, PoolResult> train_pool(std::span<const TrainingJob> jobs, std::size_t workers,
                                             PoolStats* stats) {
    if (workers == 0) throw std::invalid_argument("workers must be positive");
    std::set<std::string> ids;
    for (const auto& job : jobs) {
        if (job.security_id.empty()) throw std::invalid_argument("empty security id");
        if (!ids.insert(job.security_id).second) {
            throw std::invalid_argument("duplicate security id '" + job.security_id + "'");
        }
    }

    std::vector<PoolResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> in_flight{0};
    std::atomic<std::size_t> peak{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const std::size_t now = in_flight.fetch_add(1) + 1;
            std::size_t seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            try {
                auto timed = time_training(jobs[i].dataset, jobs[i].params, 1, jobs[i].security_id);
                results[i] = PoolResult{std::move(timed.forest), std::move(timed.record)};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(jobs.size());
            }
            in_flight.fetch_sub(1);
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, jobs.size()));
    if (n_threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    if (stats) stats->max_in_flight = peak.load();

    std::map<std::string, PoolResult> out;
    for (std::size_t i = 0; i < jobs.size(); ++i) out.emplace(jobs[i].security_id, std::move(results[i]));
    return out;
}

}  // namespace lobpred
