#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "plrt/linalg.hpp"
#include "plrt/regress.hpp"

namespace plrt {

enum class Strategy { NoSpeedup, Exact, ApproxMin, ApproxMax };

std::string_view strategy_name(Strategy s) noexcept;
Strategy parse_strategy(std::string_view name);

struct SplitConfig {
    Strategy strategy = Strategy::Exact;
    /// Approx strategies only: extrapolate with per-sample data-fit terms.
    bool per_sample_normalization = true;
    std::size_t min_leaf_size = 1;
    /// Features scanned concurrently share the best loss known when their
    /// wave started. A fixed width makes pruning, every counter and the
    /// rounding of near-tied losses independent of the thread count; 0 means
    /// one feature per thread.
    std::size_t feature_wave = 4;
    /// 0 = OpenMP default.
    int threads = 0;
    bool operator==(const SplitConfig&) const = default;
};

/// Read-only view of the training data seen by the split search.
struct SplitData {
    const Matrix& design; ///< n x dim regression rows (bias column included if used)
    const Matrix& psi;    ///< n x D split features
    std::span<const double> y;
    std::span<const double> sample_weights = {};
    std::span<const double> coord_weights = {};
};

struct NodeContext {
    std::span<const std::size_t> indices;
    /// Anchor of both children (the splitting node's own fitted weights).
    std::span<const double> w0;
    double lambda = 0.0;
    SplitConfig config = {};
    /// Initial best_so_far. Defaults to ||X w0 - y||_P^2 over the node, the
    /// loss of the split whose two sides both keep w0, which upper-bounds the
    /// optimal split loss.
    std::optional<double> incumbent_loss = std::nullopt;
};

struct SplitDecision {
    std::size_t feature = 0;
    double threshold = 0.0;
    /// Number of samples on the ge side; the tie-break key after the feature.
    std::size_t rank = 0;
    double total_loss = 0.0;
    /// Loss as evaluated by the incremental scan the decision was made on.
    double scan_loss = 0.0;
    FitResult left_fit;  ///< ge side: psi^feature >= threshold
    FitResult right_fit; ///< lt side
    std::size_t scanned_count = 0;
    std::size_t pruned_count = 0;
};

struct SplitCandidate {
    std::size_t rank = 0;
    double threshold = 0.0;
    double loss = 0.0;
};

struct ScanOptions {
    /// Evaluate and record every prefix and suffix loss (disables pruning).
    bool trace = false;
};

struct FeatureScanResult {
    std::optional<SplitCandidate> best;
    std::size_t scanned = 0;
    std::size_t pruned = 0;
    std::size_t loss_evals = 0;
    std::size_t rank_one_updates = 0;
    /// prefix_loss[k]: loss of the k samples with largest psi; suffix_loss[k]:
    /// loss of the k smallest. Index 0..N, NaN where not evaluated.
    std::vector<double> prefix_loss;
    std::vector<double> suffix_loss;
};

/// Node indices ordered by psi^feature descending, ties by sample index.
std::vector<std::size_t> sorted_by_feature(std::span<const std::size_t> indices, const Matrix& psi,
                                           std::size_t feature);

/// Threshold separating two adjacent distinct sorted values hi > lo, such
/// that hi >= t > lo.
double split_threshold(double hi, double lo) noexcept;

FeatureScanResult feature_scan(const NodeContext& ctx, std::size_t feature, const SplitData& data,
                               double best_so_far, const ScanOptions& opts = {});

/// Lower bound (Exact) or extrapolation (Approx*) of the loss of every split
/// with rank in [k, N-k], from the endpoint losses of the top-k and bottom-k
/// samples. NoSpeedup yields -inf.
double pruning_bound(double l_k, double r_k, double penalty_l, double penalty_r, std::size_t N,
                     std::size_t k, Strategy strategy, bool per_sample_normalization) noexcept;

/// OpenMP kernel: features are processed in waves of config.feature_wave.
std::optional<SplitDecision> find_best_split(const NodeContext& ctx, const SplitData& data);

/// Serial reference: features in order, best_so_far updated after each one.
std::optional<SplitDecision> find_best_split_serial(const NodeContext& ctx, const SplitData& data);

/// (ge, lt) partition of indices by psi^feature >= threshold, order preserved.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
partition_indices(std::span<const std::size_t> indices, const Matrix& psi, std::size_t feature,
                  double threshold);

} // namespace plrt
