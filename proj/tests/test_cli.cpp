#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "lobpred/forest.hpp"
#include "lobpred/labeling.hpp"
#include "lobpred/lobster_io.hpp"

namespace fs = std::filesystem;
using namespace lobpred;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("lobpred_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write_book(const std::string& name, const std::vector<RawBookRow>& rows, std::size_t levels) {
        std::ofstream out(path(name), std::ios::binary);
        write_orderbook(out, rows, levels);
    }

    fs::path dir_;
};

RawBookRow l1_row(std::int64_t bid, std::int64_t ask) { return {ask, 10, bid, 10}; }

}  // namespace

TEST_F(CliTest, SimulateWritesLobsterFileSet) {
    const auto r = run({"--seed", "7", "--levels", "3", "--out", path("sim"), "simulate", "--rows", "50"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream book(path("sim_orderbook_3.csv"));
    EXPECT_EQ(parse_orderbook_file(book, 3).size(), 50u);
    std::ifstream msgs(path("sim_message_3.csv"));
    EXPECT_EQ(parse_message_file(msgs).events.size(), 50u);
    const auto labels = csv_rows(slurp(path("sim_labels.csv")));
    ASSERT_EQ(labels.size(), 50u);  // header + 49 transitions
    EXPECT_EQ(labels[0], (std::vector<std::string>{"index", "mid_x2", "imbalance_sign", "next_label"}));

    // Same seed, same files.
    const auto again = run({"--seed", "7", "--levels", "3", "--out", path("sim2"), "simulate", "--rows", "50"});
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(slurp(path("sim_orderbook_3.csv")), slurp(path("sim2_orderbook_3.csv")));
}

TEST_F(CliTest, SimulateRequiresOutput) {
    const auto r = run({"simulate"});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("--out"), std::string::npos);
}

TEST_F(CliTest, LabelConstantBookIsFlat) {
    write_book("const.csv", std::vector<RawBookRow>(20, l1_row(1'000'000, 1'000'100)), 1);
    const auto r = run({"--levels", "1", "label", "--orderbook", path("const.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 20u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"index", "mid_usd", "label", "cumulative"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][1], "100.005");
        EXPECT_EQ(rows[i][2], "0");
        EXPECT_EQ(rows[i][3], "0");
    }
}

TEST_F(CliTest, LabelMonotoneBookAccumulates) {
    std::vector<RawBookRow> rows;
    for (int i = 0; i < 30; ++i) rows.push_back(l1_row(1'000'000 + 100 * i, 1'000'200 + 100 * i));
    write_book("up.csv", rows, 1);
    const auto r = run({"--levels", "1", "label", "--orderbook", path("up.csv"), "--start", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = csv_rows(r.out);
    ASSERT_EQ(table.size(), 30u);
    long prev = 5;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const long cum = std::stol(table[i][3]);
        EXPECT_GT(cum, prev);
        EXPECT_EQ(cum - prev, std::stol(table[i][2]));
        prev = cum;
    }
}

TEST_F(CliTest, LabelCumulativeDiffReproducesLabels) {
    ASSERT_EQ(run({"--seed", "3", "--levels", "2", "--out", path("s"), "simulate", "--rows", "300"}).code, 0);
    const auto r = run({"--levels", "2", "label", "--orderbook", path("s_orderbook_2.csv"), "--horizon", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = csv_rows(r.out);
    ASSERT_EQ(table.size(), 298u);
    long prev = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const long cum = std::stol(table[i][3]);
        EXPECT_EQ(cum - prev, std::stol(table[i][2]));
        prev = cum;
    }
}

TEST_F(CliTest, LabelRejectsShortFile) {
    write_book("one.csv", {l1_row(1'000'000, 1'000'100)}, 1);
    const auto r = run({"--levels", "1", "label", "--orderbook", path("one.csv")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("shorter than horizon"), std::string::npos);
}

TEST_F(CliTest, SnapshotByIndexAndTime) {
    // Two levels per side; the Figure-1 style quote 577.38 mid.
    write_book("b.csv", {{5'774'000, 5, 5'773'600, 7, 5'774'100, 2, 5'773'500, 3},
                         {5'784'000, 5, 5'782'800, 7, 5'784'100, 2, 5'782'700, 3}},
               2);
    {
        std::ofstream msgs(path("m.csv"));
        msgs << "34200.5,1,1,10,5773600,1\n34201.25,1,2,10,5782800,1\n";
    }
    auto r = run({"--levels", "2", "snapshot", "--orderbook", path("b.csv"), "--index", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# mid=577.38\n"), std::string::npos);
    const auto table = csv_rows(r.out);
    ASSERT_EQ(table.size(), 5u);
    EXPECT_EQ(table[1], (std::vector<std::string>{"577.3500", "3", "bid"}));
    EXPECT_EQ(table[4], (std::vector<std::string>{"577.4100", "2", "ask"}));

    r = run({"--levels", "2", "snapshot", "--orderbook", path("b.csv"), "--messages", path("m.csv"), "--time",
             "34201.3", "--svg", path("d.svg")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# mid=578.34\n"), std::string::npos);
    EXPECT_NE(r.out.find("# time=34201.250000000\n"), std::string::npos);
    EXPECT_NE(slurp(path("d.svg")).find("<svg"), std::string::npos);

    r = run({"--levels", "2", "snapshot", "--orderbook", path("b.csv"), "--messages", path("m.csv"), "--time", "1"});
    EXPECT_NE(r.code, 0);
}

TEST_F(CliTest, SnapshotErrors) {
    write_book("b.csv", {l1_row(1'000'000, 1'000'100)}, 1);
    auto r = run({"--levels", "1", "snapshot", "--orderbook", path("b.csv"), "--index", "5"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("out of range"), std::string::npos);
    r = run({"--levels", "1", "snapshot", "--orderbook", path("missing.csv"), "--index", "0"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);
    r = run({"--levels", "1", "snapshot", "--orderbook", path("b.csv")});
    EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, SimulateTrainEvalRecoversStrongSignal) {
    ASSERT_EQ(run({"--seed", "11", "--levels", "5", "--out", path("s"), "simulate", "--rows", "4000", "--signal", "1"})
                  .code,
              0);
    auto r = run({"--levels", "5", "--out", path("data.csv"), "features", "--orderbook", path("s_orderbook_5.csv"),
                  "--messages", path("s_message_5.csv"), "--derived", "imbalance_1,spread"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto header = slurp(path("data.csv")).substr(0, slurp(path("data.csv")).find('\n'));
    EXPECT_NE(header.find("imbalance_1"), std::string::npos);
    EXPECT_EQ(header.substr(header.size() - 5), "label");

    for (const char* model : {"m1.json", "m2.json"}) {
        r = run({"--seed", "5", "--workers", "2", "train", "--data", path("data.csv"), "--train-fraction", "0.7",
                 "--trees", "30", "--model", path(model)});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(slurp(path("m1.json")), slurp(path("m2.json")));

    r = run({"eval", "--model", path("m1.json"), "--data", path("data.csv"), "--train-fraction", "0.7"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pos = r.out.find("accuracy=");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_GE(std::stod(r.out.substr(pos + 9)), 0.9);
    EXPECT_NE(r.out.find("n=1200\n"), std::string::npos);

    r = run({"--format", "jsonl", "eval", "--model", path("m1.json"), "--data", path("data.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("{\"accuracy\":", 0), 0u);

    r = run({"predict", "--model", path("m1.json"), "--data", path("data.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(csv_rows(r.out).size(), 4000u);  // header + 3999 rows
}

TEST_F(CliTest, FeaturesLagAndJsonl) {
    ASSERT_EQ(run({"--levels", "2", "--out", path("s"), "simulate", "--rows", "20"}).code, 0);
    auto r = run({"--levels", "2", "features", "--orderbook", path("s_orderbook_2.csv"), "--lag", "1", "--derived",
                  "none"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto table = csv_rows(r.out);
    ASSERT_EQ(table.size(), 19u);  // header + 20 - 1 - 1
    EXPECT_EQ(table[0].size(), 17u);
    EXPECT_EQ(table[0][8], "ask_price_1_lag1");

    r = run({"--levels", "2", "--format", "jsonl", "features", "--orderbook", path("s_orderbook_2.csv"), "--no-raw",
             "--derived", "mid"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("{\"mid\":", 0), 0u);

    r = run({"--levels", "2", "features", "--orderbook", path("s_orderbook_2.csv"), "--derived", "bogus"});
    EXPECT_NE(r.code, 0);
}

TEST_F(CliTest, BenchEmitsTwoRecordsAndSpeedup) {
    const auto r = run({"--workers", "2", "--levels", "3", "bench", "--rows", "400", "--trees", "6"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = csv_rows(r.out);
    ASSERT_EQ(table.size(), 3u);
    EXPECT_EQ(table[1][0], "serial");
    EXPECT_EQ(table[1][1], "1");
    EXPECT_EQ(table[2][0], "parallel");
    EXPECT_EQ(table[2][1], "2");
    EXPECT_EQ(table[2][5], "6");
    EXPECT_NE(r.out.find("# speedup="), std::string::npos);
    EXPECT_NE(r.out.find("# identical_forests=true"), std::string::npos);
}

TEST_F(CliTest, PoolTrainsEverySecurity) {
    const auto r = run({"--workers", "3", "--levels", "2", "--format", "jsonl", "pool", "--securities", "5", "--rows",
                        "200", "--trees", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        EXPECT_NE(line.find("\"label\":\"SEC00" + std::to_string(n) + "\""), std::string::npos) << line;
        ++n;
    }
    EXPECT_EQ(n, 5);
}

TEST_F(CliTest, BadFlagsExitNonzeroWithUsage) {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {},
             {"nonsense"},
             {"--format", "xml", "simulate", "--out", "x"},
             {"label"},
             {"train", "--data", "x.csv"},
             {"bench", "--trees", "0"},
             {"--workers", "0", "pool"}}) {
        const auto r = run(args);
        EXPECT_NE(r.code, 0);
        EXPECT_FALSE(r.err.empty());
    }
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("simulate"), std::string::npos);
}
