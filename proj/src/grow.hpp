#pragma once

// Greedy top-down growth shared by the PLRT and constant-criterion trees.

#include <cstddef>
#include <exception>
#include <memory>
#include <utility>
#include <vector>

#include <omp.h>

#include "plrt/tree.hpp"

namespace plrt::detail {

template <class State>
struct Expansion {
    LeafNode leaf;
    double leaf_sse = 0.0; // squared error of `leaf` on the node's samples
    NodeStats stats;
    bool split = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::vector<std::size_t> ge, lt;
    State ge_state{}, lt_state{};
};

struct GrownNode {
    LeafNode leaf;
    double leaf_sse = 0.0;
    NodeStats stats;
    bool split = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<GrownNode> ge, lt;
};

// Subtrees smaller than this are grown inline rather than as tasks.
inline constexpr std::size_t kTaskCutoff = 256;

template <class State, class Expand>
std::unique_ptr<GrownNode> grow(std::vector<std::size_t> indices, std::size_t depth, State state,
                                const Expand& expand) {
    auto e = expand(indices, depth, std::move(state));
    auto node = std::make_unique<GrownNode>();
    node->leaf = std::move(e.leaf);
    node->leaf_sse = e.leaf_sse;
    node->stats = e.stats;
    node->stats.depth = depth;
    node->stats.n = indices.size();
    node->split = e.split;
    if (!e.split) return node;
    node->feature = e.feature;
    node->threshold = e.threshold;
    indices = {};

    if (omp_in_parallel() && e.ge.size() + e.lt.size() >= kTaskCutoff) {
        std::exception_ptr ge_error, lt_error;
        GrownNode* raw = node.get();
#pragma omp task default(shared)
        {
            try {
                raw->ge = grow(std::move(e.ge), depth + 1, std::move(e.ge_state), expand);
            } catch (...) {
                ge_error = std::current_exception();
            }
        }
        try {
            raw->lt = grow(std::move(e.lt), depth + 1, std::move(e.lt_state), expand);
        } catch (...) {
            lt_error = std::current_exception();
        }
#pragma omp taskwait
        if (ge_error) std::rethrow_exception(ge_error);
        if (lt_error) std::rethrow_exception(lt_error);
    } else {
        node->ge = grow(std::move(e.ge), depth + 1, std::move(e.ge_state), expand);
        node->lt = grow(std::move(e.lt), depth + 1, std::move(e.lt_state), expand);
    }
    return node;
}

template <class State, class Expand>
std::unique_ptr<GrownNode> grow_root(std::size_t n, State state, int threads, const Expand& expand) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const int team = threads > 0 ? threads : omp_get_max_threads();
    if (team <= 1) return grow(std::move(all), 0, std::move(state), expand);

    std::unique_ptr<GrownNode> root;
    std::exception_ptr error;
#pragma omp parallel num_threads(team)
#pragma omp single
    {
        try {
            root = grow(std::move(all), 0, std::move(state), expand);
        } catch (...) {
            error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return root;
}

// Preorder flattening plus per-depth error accounting.
inline void flatten(GrownNode& g, TreeModel& model, TrainStats& stats, std::vector<double>& depth_sse) {
    const std::size_t self = model.nodes.size();
    const std::size_t depth = g.stats.depth;
    stats.nodes.push_back(g.stats);
    stats.scanned += g.stats.scanned;
    stats.pruned += g.stats.pruned;
    if (depth < depth_sse.size()) depth_sse[depth] += g.leaf_sse;

    if (!g.split) {
        for (std::size_t t = depth + 1; t < depth_sse.size(); ++t) depth_sse[t] += g.leaf_sse;
        model.nodes.emplace_back(std::move(g.leaf));
        return;
    }
    model.nodes.emplace_back(InteriorNode{g.feature, g.threshold, 0, 0});
    const std::size_t ge = model.nodes.size();
    flatten(*g.ge, model, stats, depth_sse);
    const std::size_t lt = model.nodes.size();
    flatten(*g.lt, model, stats, depth_sse);
    auto& node = std::get<InteriorNode>(model.nodes[self]);
    node.ge = ge;
    node.lt = lt;
}

inline void finish(GrownNode& root, TreeModel& model, std::size_t n, std::size_t max_depth,
                   TrainStats* out) {
    TrainStats stats;
    std::vector<double> depth_sse(max_depth + 1, 0.0);
    flatten(root, model, stats, depth_sse);
    stats.depth_mse.resize(depth_sse.size());
    for (std::size_t t = 0; t < depth_sse.size(); ++t) stats.depth_mse[t] = depth_sse[t] / double(n);
    if (out) *out = std::move(stats);
}

} // namespace plrt::detail
