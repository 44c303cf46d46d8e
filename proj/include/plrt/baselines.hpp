#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "plrt/dataset.hpp"
#include "plrt/splitsearch.hpp"
#include "plrt/tree.hpp"

namespace plrt {

/// Best split of `indices` by the sum of within-side squared deviations of
/// y. The returned fits carry the side mean as their single weight and the
/// side SSE as their loss.
std::optional<SplitDecision> variance_best_split(std::span<const std::size_t> indices,
                                                 const Matrix& psi, std::span<const double> y,
                                                 std::size_t min_leaf_size);

/// Leaf size floor shared by CART and M5 so both build the same structure.
std::size_t constant_tree_min_leaf(const TrainConfig& config, std::size_t d);

ConstantTreeModel train_cart(const Dataset& data, const TrainConfig& config,
                             TrainStats* stats = nullptr);

/// CART structure with a ridge fit (anchor 0, all regression variables) in
/// every leaf.
ConstantTreeModel train_m5(const Dataset& data, const TrainConfig& config,
                           TrainStats* stats = nullptr);

} // namespace plrt
