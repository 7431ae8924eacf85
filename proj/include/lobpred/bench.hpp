#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lobpred/features.hpp"
#include "lobpred/forest.hpp"

namespace lobpred {

struct BenchRecord {
    std::string label;
    std::size_t workers = 1;
    double wall_seconds = 0.0;
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    std::size_t n_trees = 0;
    std::uint64_t seed = 0;
    std::string host_info;

    friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

inline constexpr const char* kBenchCsvHeader = "label,workers,wall_seconds,n_rows,n_features,n_trees,seed,host_info";

/// Header line plus one line per record. Text fields are quoted when needed.
void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records);
std::vector<BenchRecord> read_bench_csv(std::istream& in);

/// Fixed-width table for terminals.
void write_bench_table(std::ostream& out, std::span<const BenchRecord> records);

/// Physical core count from /proc/cpuinfo, falling back to the logical count.
std::size_t physical_core_count();
/// e.g. "physical_cores=8;logical_cpus=16;compiler=GCC 11.4.0"
std::string host_info();

struct TimedTraining {
    Forest forest;
    BenchRecord record;
};

/// Times train_forest alone with a monotonic clock.
TimedTraining time_training(const Dataset& ds, const ForestParams& params, std::size_t workers,
                            std::string label = "train");

struct SpeedupReport {
    double speedup = 0.0;
    std::string summary;
};

/// baseline.wall_seconds / contender.wall_seconds; both runs must share
/// dataset shape and tree count.
SpeedupReport speedup_report(const BenchRecord& baseline, const BenchRecord& contender);

struct TrainingJob {
    std::string security_id;
    Dataset dataset;
    ForestParams params;
};

struct PoolResult {
    Forest forest;
    BenchRecord record;
};

struct PoolStats {
    std::size_t max_in_flight = 0;
};

/// Trains each job's forest single-threaded on one of `workers` pool
/// threads. Threads take the next unclaimed job as soon as they finish one.
/// Results are keyed and ordered by security id.
std::map<std::string, PoolResult> train_pool(std::span<const TrainingJob> jobs, std::size_t workers,
                                             PoolStats* stats = nullptr);

}  // namespace lobpred
