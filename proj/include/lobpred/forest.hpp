#pragma once

// Bagged CART random forest for three-class direction labels.
//
// Trees split on Gini impurity decrease at midpoints between consecutive
// distinct feature values. Split candidates are compared with exact integer
// arithmetic, ties go to the lowest feature index and then the lowest
// threshold, and tree i draws all its randomness from
// derive_seed(master_seed, i). Training output therefore does not depend on
// the number of worker threads.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lobpred/features.hpp"
#include "lobpred/labeling.hpp"

namespace lobpred {

/// Non-owning row-major matrix.
struct MatrixView {
    const double* data = nullptr;
    std::size_t n_rows = 0;
    std::size_t n_features = 0;

    MatrixView() = default;
    MatrixView(const double* d, std::size_t rows, std::size_t cols) : data(d), n_rows(rows), n_features(cols) {}
    explicit MatrixView(const Dataset& ds) : data(ds.x.data()), n_rows(ds.n_rows), n_features(ds.n_features) {}

    double at(std::size_t r, std::size_t c) const { return data[r * n_features + c]; }
    std::span<const double> row(std::size_t r) const { return {data + r * n_features, n_features}; }
};

using ClassCounts = std::array<std::uint32_t, 3>;  // indexed by class_index(Label)

/// 1 - sum_j (c_j / sum c)^2.
double gini(const ClassCounts& counts);

struct ForestParams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth;       // unlimited when empty
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> mtry;            // floor(sqrt(d)) when empty
    std::optional<std::size_t> bootstrap_size;  // n when empty
    bool bootstrap = true;                      // false: every tree sees rows 0..n-1 once
    std::uint64_t master_seed = 0;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;

    std::size_t resolved_mtry(std::size_t n_features) const;
    std::size_t resolved_bootstrap_size(std::size_t n_rows) const;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // rows with x[feature] <= threshold go left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    ClassCounts counts{};

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::uint64_t seed = 0;
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    /// Majority class of the reached leaf; ties go to the smaller label.
    Label predict(std::span<const double> x) const;
    std::size_t depth() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

struct Forest {
    ForestParams params;
    std::size_t n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;

    friend bool operator==(const Forest&, const Forest&) = default;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;  // weighted Gini decrease, > 0
};

/// Best split of `rows` over `features` (scanned in the given order; pass
/// them ascending for the documented tie-break). Children must each keep at
/// least `min_samples_leaf` rows. Empty when no split has positive gain.
std::optional<Split> best_split(MatrixView x, std::span<const Label> y, std::span<const std::uint32_t> rows,
                                std::span<const std::size_t> features, std::size_t min_samples_leaf = 1);

Tree train_tree(MatrixView x, std::span<const Label> y, const ForestParams& params, std::uint64_t tree_seed);

/// Trains params.n_trees trees with up to `workers` threads.
Forest train_forest(MatrixView x, std::span<const Label> y, const ForestParams& params, std::size_t workers,
                    std::vector<std::string> feature_names = {});
Forest train_forest(const Dataset& ds, const ForestParams& params, std::size_t workers);

/// Majority vote; ties go to the smaller label.
Label predict(const Forest& f, std::span<const double> x);
std::vector<Label> predict_batch(const Forest& f, MatrixView x);

struct Evaluation {
    double accuracy = 0.0;
    std::array<std::array<std::size_t, 3>, 3> confusion{};  // [true][predicted], class_index order
    std::size_t n = 0;
};

Evaluation evaluate(const Forest& f, MatrixView x, std::span<const Label> y);
Evaluation evaluate(const Forest& f, const Dataset& test);
Evaluation evaluate_predictions(std::span<const Label> predicted, std::span<const Label> truth);

/// rho * sigma_sq + (1 - rho) / B * sigma_sq: variance of the mean of B
/// identically distributed variables with pairwise correlation rho.
double ensemble_variance(double rho, double sigma_sq, std::size_t n_trees);

/// JSON document {"format":"lobpred-forest","version":1,...}; thresholds are
/// written in shortest round-trip form so a loaded forest predicts identically.
void save_forest(std::ostream& out, const Forest& f);
Forest load_forest(std::istream& in);

}  // namespace lobpred
