#include "lobpred/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "lobpred/rng.hpp"

namespace lobpred {

namespace {

// Per-feature sorted distinct values and each row's rank among them. Split
// search works on ranks, so each feature is sorted once per training call.
struct FeatureIndex {
    std::vector<std::vector<double>> values;  // [feature] ascending distinct values
    std::vector<std::uint32_t> ranks;         // [feature * n_rows + row]
    std::size_t n_rows = 0;

    explicit FeatureIndex(MatrixView x) : values(x.n_features), ranks(x.n_rows * x.n_features), n_rows(x.n_rows) {
        std::vector<std::pair<double, std::uint32_t>> col(x.n_rows);
        for (std::size_t f = 0; f < x.n_features; ++f) {
            for (std::size_t r = 0; r < x.n_rows; ++r) col[r] = {x.at(r, f), static_cast<std::uint32_t>(r)};
            std::sort(col.begin(), col.end());
            auto& vals = values[f];
            std::uint32_t* rank = ranks.data() + f * n_rows;
            for (const auto& [v, r] : col) {
                if (vals.empty() || vals.back() < v) vals.push_back(v);
                rank[r] = static_cast<std::uint32_t>(vals.size() - 1);
            }
        }
    }

    std::uint32_t rank(std::size_t row, std::size_t f) const { return ranks[f * n_rows + row]; }
};

struct RankClass {
    std::uint32_t rank;
    std::uint8_t cls;
};

// Exact comparison of split scores SL/nL + SR/nR held as num/den.
struct Score {
    __int128 num = 0;
    __int128 den = 1;

    bool greater_than(const Score& o) const { return num * o.den > o.num * den; }
};

std::uint64_t sum_squares(const ClassCounts& c) {
    std::uint64_t s = 0;
    for (auto v : c) s += static_cast<std::uint64_t>(v) * v;
    return s;
}

std::size_t argmax_class(const ClassCounts& c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
        if (c[k] > c[best]) best = k;
    }
    return best;
}

// Scratch-reusing split search shared by best_split and the tree builder.
class SplitFinder {
public:
    explicit SplitFinder(const FeatureIndex& index) : index_(index) {}

    std::optional<Split> find(std::span<const std::uint8_t> cls, std::span<const std::uint32_t> rows,
                              std::span<const std::size_t> features, std::size_t min_leaf) {
        const std::size_t n = rows.size();
        if (n < 2 || n < 2 * min_leaf) return std::nullopt;

        ClassCounts total{};
        for (auto r : rows) ++total[cls[r]];
        parent_sq_ = sum_squares(total);
        total_ = total;
        n_ = n;
        min_leaf_ = min_leaf;
        best_.reset();
        best_score_ = Score{static_cast<__int128>(parent_sq_), static_cast<__int128>(n)};

        for (std::size_t f : features) {
            const auto& vals = index_.values[f];
            const std::size_t k = vals.size();
            if (k < 2) continue;
            if (k <= 2 * n) {
                // Class histogram over ranks; no sort needed.
                hist_.assign(3 * k, 0);
                for (auto r : rows) ++hist_[3 * index_.rank(r, f) + cls[r]];
                scan_histogram(f, k);
            } else {
                buf_.resize(n);
                for (std::size_t i = 0; i < n; ++i) buf_[i] = {index_.rank(rows[i], f), cls[rows[i]]};
                std::sort(buf_.begin(), buf_.end(),
                          [](const RankClass& a, const RankClass& b) { return a.rank < b.rank; });
                scan_sorted(f);
            }
        }
        return best_;
    }

private:
    // Left side accumulates; a boundary sits between rank `lo` and the next occupied rank `hi`.
    struct Sweep {
        ClassCounts left{};
        ClassCounts right{};
        std::uint64_t left_sq = 0;
        std::uint64_t right_sq = 0;
        std::size_t n_left = 0;

        void move_left(std::uint8_t c, std::uint32_t count) {
            // (a + m)^2 - a^2 = 2am + m^2
            const std::uint64_t m = count;
            left_sq += 2ULL * left[c] * m + m * m;
            right_sq -= 2ULL * right[c] * m - m * m;
            left[c] += count;
            right[c] -= count;
            n_left += count;
        }
    };

    void consider(const Sweep& s, std::size_t f, std::uint32_t lo, std::uint32_t hi) {
        const std::size_t n_left = s.n_left;
        const std::size_t n_right = n_ - n_left;
        if (n_left < min_leaf_ || n_right < min_leaf_) return;
        const Score score{static_cast<__int128>(s.left_sq) * n_right + static_cast<__int128>(s.right_sq) * n_left,
                          static_cast<__int128>(n_left) * n_right};
        if (!score.greater_than(best_score_)) return;
        best_score_ = score;
        const double lo_v = index_.values[f][lo];
        const double hi_v = index_.values[f][hi];
        double threshold = std::midpoint(lo_v, hi_v);
        if (!(threshold < hi_v)) threshold = lo_v;
        const double ratio = static_cast<double>(score.num) / static_cast<double>(score.den);
        const double gain = (ratio - static_cast<double>(parent_sq_) / static_cast<double>(n_)) / static_cast<double>(n_);
        best_ = Split{f, threshold, gain};
    }

    void scan_histogram(std::size_t f, std::size_t k) {
        Sweep s;
        s.right = total_;
        s.right_sq = parent_sq_;
        std::optional<std::uint32_t> prev;
        for (std::uint32_t r = 0; r < k; ++r) {
            const std::uint32_t* h = hist_.data() + 3 * r;
            if (h[0] + h[1] + h[2] == 0) continue;
            if (prev) consider(s, f, *prev, r);
            for (std::uint8_t c = 0; c < 3; ++c) {
                if (h[c]) s.move_left(c, h[c]);
            }
            prev = r;
        }
    }

    void scan_sorted(std::size_t f) {
        Sweep s;
        s.right = total_;
        s.right_sq = parent_sq_;
        for (std::size_t i = 0; i < buf_.size(); ++i) {
            if (i > 0 && buf_[i - 1].rank < buf_[i].rank) consider(s, f, buf_[i - 1].rank, buf_[i].rank);
            s.move_left(buf_[i].cls, 1);
        }
    }

    const FeatureIndex& index_;
    std::vector<RankClass> buf_;
    std::vector<std::uint32_t> hist_;
    ClassCounts total_{};
    std::uint64_t parent_sq_ = 0;
    std::size_t n_ = 0;
    std::size_t min_leaf_ = 1;
    std::optional<Split> best_;
    Score best_score_;
};

std::vector<std::uint8_t> class_indices(std::span<const Label> y) {
    std::vector<std::uint8_t> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<std::uint8_t>(class_index(y[i]));
    return out;
}

void check_training_inputs(MatrixView x, std::span<const Label> y) {
    if (x.n_rows == 0) throw std::invalid_argument("training set has no rows");
    if (x.n_features == 0) throw std::invalid_argument("training set has no features");
    if (y.size() != x.n_rows) {
        throw std::invalid_argument("label count " + std::to_string(y.size()) + " != row count " +
                                    std::to_string(x.n_rows));
    }
}

Tree build_tree(MatrixView x, const FeatureIndex& index, std::span<const std::uint8_t> cls,
                const ForestParams& params, std::uint64_t tree_seed) {
    Rng rng(tree_seed);
    const std::size_t n = x.n_rows;
    const std::size_t d = x.n_features;
    const std::size_t mtry = params.resolved_mtry(d);
    const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);

    std::vector<std::uint32_t> sample;
    if (params.bootstrap) {
        const std::size_t m = params.resolved_bootstrap_size(n);
        sample.resize(m);
        for (auto& s : sample) s = static_cast<std::uint32_t>(rng.below(n));
    } else {
        sample.resize(n);
        std::iota(sample.begin(), sample.end(), 0U);
    }

    Tree tree;
    tree.seed = tree_seed;
    SplitFinder finder(index);
    std::vector<std::size_t> feature_pool(d);
    std::vector<std::size_t> candidates(mtry);

    struct Pending {
        std::uint32_t node;
        std::uint32_t begin;
        std::uint32_t end;
        std::size_t depth;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, static_cast<std::uint32_t>(sample.size()), 0});

    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();
        const std::span<std::uint32_t> rows(sample.data() + p.begin, p.end - p.begin);

        ClassCounts counts{};
        for (auto r : rows) ++counts[cls[r]];
        tree.nodes[p.node].counts = counts;

        const bool pure = std::count(counts.begin(), counts.end(), 0U) >= 2;
        const bool depth_capped = params.max_depth && p.depth >= *params.max_depth;
        if (pure || depth_capped || rows.size() < 2 * min_leaf) continue;

        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < mtry; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
            std::swap(feature_pool[i], feature_pool[j]);
        }
        std::copy_n(feature_pool.begin(), mtry, candidates.begin());
        std::sort(candidates.begin(), candidates.end());

        const auto split = finder.find(cls, rows, candidates, min_leaf);
        if (!split) continue;

        const auto mid = std::partition(rows.begin(), rows.end(), [&](std::uint32_t r) {
            return x.at(r, split->feature) <= split->threshold;
        });
        const auto n_left = static_cast<std::uint32_t>(mid - rows.begin());

        const auto left = static_cast<std::uint32_t>(tree.nodes.size());
        const auto right = left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[p.node];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.left = left;
        node.right = right;
        // Left subtree is processed first.
        stack.push_back({right, p.begin + n_left, p.end, p.depth + 1});
        stack.push_back({left, p.begin, p.begin + n_left, p.depth + 1});
    }
    return tree;
}

}  // namespace

double gini(const ClassCounts& counts) {
    const std::uint64_t total = static_cast<std::uint64_t>(counts[0]) + counts[1] + counts[2];
    if (total == 0) throw std::invalid_argument("gini of empty node");
    double g = 1.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
    const std::size_t m = mtry ? *mtry
                               : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                              std::floor(std::sqrt(static_cast<double>(n_features)))));
    if (m == 0 || m > n_features) {
        throw std::invalid_argument("mtry must be in [1, " + std::to_string(n_features) + "], got " +
                                    std::to_string(m));
    }
    return m;
}

std::size_t ForestParams::resolved_bootstrap_size(std::size_t n_rows) const {
    const std::size_t m = bootstrap_size ? *bootstrap_size : n_rows;
    if (m == 0) throw std::invalid_argument("bootstrap_size must be positive");
    return m;
}

Label Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& n = nodes[i];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return label_from_index(argmax_class(nodes[i].counts));
}

std::size_t Tree::depth() const {
    std::size_t max_depth = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        max_depth = std::max(max_depth, d);
        if (!nodes[i].is_leaf()) {
            stack.push_back({nodes[i].left, d + 1});
            stack.push_back({nodes[i].right, d + 1});
        }
    }
    return max_depth;
}

std::optional<Split> best_split(MatrixView x, std::span<const Label> y, std::span<const std::uint32_t> rows,
                                std::span<const std::size_t> features, std::size_t min_samples_leaf) {
    for (std::size_t f : features) {
        if (f >= x.n_features) throw std::out_of_range("feature index " + std::to_string(f) + " out of range");
    }
    for (auto r : rows) {
        if (r >= x.n_rows) throw std::out_of_range("row index " + std::to_string(r) + " out of range");
    }
    const auto cls = class_indices(y);
    const FeatureIndex index(x);
    SplitFinder finder(index);
    return finder.find(cls, rows, features, std::max<std::size_t>(1, min_samples_leaf));
}

Tree train_tree(MatrixView x, std::span<const Label> y, const ForestParams& params, std::uint64_t tree_seed) {
    check_training_inputs(x, y);
    const auto cls = class_indices(y);
    const FeatureIndex index(x);
    return build_tree(x, index, cls, params, tree_seed);
}

Forest train_forest(MatrixView x, std::span<const Label> y, const ForestParams& params, std::size_t workers,
                    std::vector<std::string> feature_names) {
    check_training_inputs(x, y);
    if (params.n_trees == 0) throw std::invalid_argument("n_trees must be positive");
    if (workers == 0) throw std::invalid_argument("workers must be positive");
    if (!feature_names.empty() && feature_names.size() != x.n_features) {
        throw std::invalid_argument("feature name count does not match feature count");
    }
    params.resolved_mtry(x.n_features);
    params.resolved_bootstrap_size(x.n_rows);

    Forest forest;
    forest.params = params;
    forest.n_features = x.n_features;
    forest.feature_names = std::move(feature_names);
    forest.trees.resize(params.n_trees);

    const auto cls = class_indices(y);
    const FeatureIndex index(x);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= params.n_trees) return;
            try {
                forest.trees[i] = build_tree(x, index, cls, params, derive_seed(params.master_seed, i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(params.n_trees);
            }
        }
    };

    const std::size_t n_threads = std::min(workers, params.n_trees);
    if (n_threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return forest;
}

Forest train_forest(const Dataset& ds, const ForestParams& params, std::size_t workers) {
    return train_forest(MatrixView(ds), ds.y, params, workers, ds.feature_names);
}

Label predict(const Forest& f, std::span<const double> x) {
    if (x.size() != f.n_features) {
        throw std::invalid_argument("feature vector has " + std::to_string(x.size()) + " entries, forest expects " +
                                    std::to_string(f.n_features));
    }
    ClassCounts votes{};
    for (const auto& t : f.trees) ++votes[class_index(t.predict(x))];
    return label_from_index(argmax_class(votes));
}

std::vector<Label> predict_batch(const Forest& f, MatrixView x) {
    if (x.n_rows > 0 && x.n_features != f.n_features) {
        throw std::invalid_argument("matrix has " + std::to_string(x.n_features) + " features, forest expects " +
                                    std::to_string(f.n_features));
    }
    std::vector<Label> out(x.n_rows);
    for (std::size_t r = 0; r < x.n_rows; ++r) out[r] = predict(f, x.row(r));
    return out;
}

Evaluation evaluate_predictions(std::span<const Label> predicted, std::span<const Label> truth) {
    if (truth.empty()) throw std::invalid_argument("empty test set");
    if (predicted.size() != truth.size()) throw std::invalid_argument("prediction/label count mismatch");
    Evaluation e;
    e.n = truth.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++e.confusion[class_index(truth[i])][class_index(predicted[i])];
        if (truth[i] == predicted[i]) ++correct;
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(e.n);
    return e;
}

Evaluation evaluate(const Forest& f, MatrixView x, std::span<const Label> y) {
    if (y.empty() || x.n_rows == 0) throw std::invalid_argument("empty test set");
    if (y.size() != x.n_rows) throw std::invalid_argument("label count does not match row count");
    return evaluate_predictions(predict_batch(f, x), y);
}

Evaluation evaluate(const Forest& f, const Dataset& test) { return evaluate(f, MatrixView(test), test.y); }

double ensemble_variance(double rho, double sigma_sq, std::size_t n_trees) {
    if (n_trees < 1) throw std::invalid_argument("B must be >= 1");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must be in [0, 1]");
    if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be non-negative");
    return rho * sigma_sq + (1.0 - rho) / static_cast<double>(n_trees) * sigma_sq;
}

void save_forest(std::ostream& out, const Forest& f) {
    using nlohmann::json;
    json params = {
        {"n_trees", f.params.n_trees},
        {"max_depth", f.params.max_depth ? json(*f.params.max_depth) : json(nullptr)},
        {"min_samples_leaf", f.params.min_samples_leaf},
        {"mtry", f.params.mtry ? json(*f.params.mtry) : json(nullptr)},
        {"bootstrap_size", f.params.bootstrap_size ? json(*f.params.bootstrap_size) : json(nullptr)},
        {"bootstrap", f.params.bootstrap},
        {"master_seed", f.params.master_seed},
    };
    json trees = json::array();
    for (const auto& t : f.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1], n.counts[2]}));
        }
        trees.push_back({{"seed", t.seed}, {"nodes", std::move(nodes)}});
    }
    json doc = {
        {"format", "lobpred-forest"},
        {"version", 1},
        {"node_layout", {"feature", "threshold", "left", "right", "count_down", "count_flat", "count_up"}},
        {"n_features", f.n_features},
        {"feature_names", f.feature_names},
        {"params", std::move(params)},
        {"trees", std::move(trees)},
    };
    out << doc.dump() << '\n';
}

Forest load_forest(std::istream& in) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("forest file is not valid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "lobpred-forest") throw std::runtime_error("not a lobpred forest file");
    if (doc.value("version", 0) != 1) {
        throw std::runtime_error("unsupported forest file version " + doc.value("version", json(0)).dump());
    }
    try {
        Forest f;
        const json& p = doc.at("params");
        f.params.n_trees = p.at("n_trees").get<std::size_t>();
        if (!p.at("max_depth").is_null()) f.params.max_depth = p.at("max_depth").get<std::size_t>();
        f.params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
        if (!p.at("mtry").is_null()) f.params.mtry = p.at("mtry").get<std::size_t>();
        if (!p.at("bootstrap_size").is_null()) f.params.bootstrap_size = p.at("bootstrap_size").get<std::size_t>();
        f.params.bootstrap = p.at("bootstrap").get<bool>();
        f.params.master_seed = p.at("master_seed").get<std::uint64_t>();
        f.n_features = doc.at("n_features").get<std::size_t>();
        f.feature_names = doc.at("feature_names").get<std::vector<std::string>>();

        for (const json& jt : doc.at("trees")) {
            Tree t;
            t.seed = jt.at("seed").get<std::uint64_t>();
            for (const json& jn : jt.at("nodes")) {
                TreeNode n;
                n.feature = jn.at(0).get<std::int32_t>();
                n.threshold = jn.at(1).get<double>();
                n.left = jn.at(2).get<std::uint32_t>();
                n.right = jn.at(3).get<std::uint32_t>();
                n.counts = {jn.at(4).get<std::uint32_t>(), jn.at(5).get<std::uint32_t>(), jn.at(6).get<std::uint32_t>()};
                t.nodes.push_back(n);
            }
            const auto size = t.nodes.size();
            if (size == 0) throw std::runtime_error("tree without nodes");
            for (std::size_t i = 0; i < size; ++i) {
                const TreeNode& n = t.nodes[i];
                // Children always follow their parent in the arena.
                if (!n.is_leaf() && (n.left <= i || n.right <= i || n.left >= size || n.right >= size ||
                                     static_cast<std::size_t>(n.feature) >= f.n_features)) {
                    throw std::runtime_error("tree node references out of range");
                }
            }
            f.trees.push_back(std::move(t));
        }
        if (f.trees.size() != f.params.n_trees) throw std::runtime_error("tree count does not match n_trees");
        return f;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed forest file: ") + e.what());
    }
}

}  // namespace lobpred
