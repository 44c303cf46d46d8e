#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plrt/bounds.hpp"
#include "plrt/dataset.hpp"
#include "plrt/splitsearch.hpp"
#include "plrt/tree.hpp"

namespace plrt {

inline constexpr std::size_t kOracleMaxSamples = 200;

/// Every feature and admissible threshold, both ridge problems solved from
/// scratch and scored by direct residual sums. Sides without a unique fit
/// are skipped. Throws InstanceTooLarge above kOracleMaxSamples node samples.
std::optional<SplitDecision> brute_force_split_oracle(const NodeContext& ctx, const SplitData& data);

struct StabilityReport {
    std::size_t d = 0;
    std::size_t N = 0;
    double rel_frobenius_error = 0.0;
    double angle_degrees = 0.0;
    double condition_number = 1.0;
};

/// (X^T X + I)^{-1} for standard-normal X (N x d) built by N rank-one updates
/// and by a Cholesky factorization, compared with each other.
StabilityReport stability_report(std::size_t d, std::size_t N, std::uint64_t seed);

struct BenchEntry {
    Strategy strategy = Strategy::NoSpeedup;
    std::vector<double> seconds; ///< one per repeat
    std::size_t scanned = 0;
    std::size_t pruned = 0;
    std::vector<std::size_t> node_scanned; ///< preorder
    std::size_t leaves = 0;
    std::optional<std::size_t> root_feature;
    std::optional<double> root_threshold;
    std::optional<double> test_mse;
    std::string model_json;
    /// Against the NoSpeedup entry, when one was run.
    bool same_model_as_none = false;
    std::optional<double> test_mse_delta;

    double median_seconds() const;
};

struct BenchReport {
    std::vector<BenchEntry> entries;
    /// Exact and NoSpeedup produced byte-identical models (when both were run).
    std::optional<bool> exact_matches_none;
};

/// Trains one PLRT per strategy (`repeats` times each, the model of the last
/// run kept) and compares work counters and results.
BenchReport speedup_benchmark(const Dataset& train, const Dataset* test, const TrainConfig& config,
                              const std::vector<Strategy>& strategies, std::size_t repeats = 1);

std::string to_json(const StabilityReport& r);
std::string to_json(const BenchReport& r);
std::string to_json(const EmpiricalStats& st, const BoundInputs& in, const BoundReport& r);

/// Aligned plain-text table: one row per strategy.
std::string to_table(const BenchReport& r);

} // namespace plrt
