#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "plrt/dataset.hpp"
#include "plrt/regress.hpp"
#include "plrt/splitsearch.hpp"

namespace plrt {

enum class Criterion { Plrt, Cart, M5 };
enum class LeafPenalty { Ridge, Lasso };

std::string_view criterion_name(Criterion c) noexcept;
Criterion parse_criterion(std::string_view name);

struct TrainConfig {
    std::size_t max_depth = 10;
    std::size_t min_leaf_size = 1;
    double min_loss_decrease = 0.0;
    double gamma = 1.0;
    LeafPenalty leaf_penalty = LeafPenalty::Ridge;
    double lasso_lambda = 0.0;
    /// Strategy, wave width and threads; its min_leaf_size is overridden by
    /// the effective leaf size of the tree.
    SplitConfig split = {};
    std::optional<std::size_t> root_feature_selection = std::nullopt;
    bool bias = true;

    void validate(std::size_t d) const;
    bool operator==(const TrainConfig&) const = default;
};

/// With gamma = 0 a leaf needs at least as many samples as regression
/// coordinates for its least-squares fit to be unique.
std::size_t effective_min_leaf(const TrainConfig& config, std::size_t dim) noexcept;

struct InteriorNode {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t ge = 0;
    std::size_t lt = 0;
    bool operator==(const InteriorNode&) const = default;
};

struct LeafNode {
    /// d entries, plus a trailing bias weight when the model has one. Empty
    /// for CART leaves.
    std::vector<double> w;
    /// CART prediction.
    double value = 0.0;
    double loss = 0.0;
    std::size_t n = 0;
    bool operator==(const LeafNode&) const = default;
};

using TreeNode = std::variant<InteriorNode, LeafNode>;

/// Binary tree stored flat; nodes[0] is the root and children always follow
/// their parent.
struct TreeModel {
    Criterion criterion = Criterion::Plrt;
    std::size_t d = 0;
    std::size_t D = 0;
    bool bias = true;
    TrainConfig config;
    ModelSchema schema;
    std::vector<std::size_t> selected_features;
    std::vector<TreeNode> nodes;

    std::size_t leaf_index(std::span<const double> psi) const;
    double predict(std::span<const double> x, std::span<const double> psi) const;
    std::vector<double> predict(const Dataset& data) const;

    std::size_t leaf_count() const noexcept;
    std::size_t depth() const;

    /// Throws SchemaViolation when the node graph is not a binary tree of the
    /// declared dimensions.
    void validate() const;

    bool operator==(const TreeModel&) const = default;
};

using PlrtModel = TreeModel;
using ConstantTreeModel = TreeModel;

struct NodeStats {
    std::size_t depth = 0;
    std::size_t n = 0;
    std::size_t scanned = 0;
    std::size_t pruned = 0;
};

struct TrainStats {
    /// depth_mse[t]: training MSE of the tree cut at depth t, nodes at the cut
    /// acting as leaves. t = 0..max_depth.
    std::vector<double> depth_mse;
    /// Preorder, one entry per node of the model.
    std::vector<NodeStats> nodes;
    std::size_t scanned = 0;
    std::size_t pruned = 0;
};

PlrtModel train_plrt(const Dataset& data, const TrainConfig& config, TrainStats* stats = nullptr);

/// Regression coordinates with the largest |corr(x_j, y)|, ties by index,
/// returned in increasing index order. Zero-variance coordinates have
/// correlation 0.
std::vector<std::size_t> select_root_features(const Dataset& data, std::size_t s);

double pearson_correlation(std::span<const double> a, std::span<const double> b) noexcept;

/// Regression design: the chosen columns of X (all when `columns` is empty)
/// followed by a column of ones when `bias` is set.
Matrix design_matrix(const Matrix& X, std::span<const std::size_t> columns, bool bias);

} // namespace plrt
