#include "plrt/baselines.hpp"

#include <cmath>

#include "grow.hpp"
#include "plrt/error.hpp"

namespace plrt {

namespace {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double delta = v - mean;
        mean += delta / double(n);
        m2 += delta * (v - mean);
    }
};

struct MeanSse {
    double mean = 0.0;
    double sse = 0.0;
};

MeanSse two_pass(std::span<const double> y, std::span<const std::size_t> rows) {
    MeanSse out;
    if (rows.empty()) return out;
    double s = 0.0;
    for (std::size_t i : rows) s += y[i];
    out.mean = s / double(rows.size());
    for (std::size_t i : rows) {
        const double e = y[i] - out.mean;
        out.sse += e * e;
    }
    return out;
}

} // namespace

std::optional<SplitDecision> variance_best_split(std::span<const std::size_t> indices,
                                                 const Matrix& psi, std::span<const double> y,
                                                 std::size_t min_leaf_size) {
    if (min_leaf_size == 0) throw Error(Errc::InvalidConfig, "min_leaf_size must be >= 1");
    if (psi.rows() != y.size()) throw Error(Errc::DimensionMismatch, "psi rows != y length");
    const std::size_t N = indices.size();
    if (N < 2 * min_leaf_size) return std::nullopt;

    std::optional<SplitDecision> best;
    std::size_t scanned = 0;
    std::vector<double> suffix_m2(N + 1), suffix_mean(N + 1);
    std::vector<double> vals(N);
    for (std::size_t f = 0; f < psi.cols(); ++f) {
        const auto order = sorted_by_feature(indices, psi, f);
        for (std::size_t p = 0; p < N; ++p) vals[p] = psi(order[p], f);

        // suffix_*[k]: moments of the k smallest values.
        Moments lo;
        for (std::size_t k = 1; k <= N; ++k) {
            lo.add(y[order[N - k]]);
            suffix_m2[k] = lo.m2;
            suffix_mean[k] = lo.mean;
        }
        Moments hi;
        std::optional<std::size_t> best_rank;
        double best_loss = 0.0;
        for (std::size_t m = 1; m < N; ++m) {
            hi.add(y[order[m - 1]]);
            if (m < min_leaf_size || N - m < min_leaf_size || !(vals[m - 1] > vals[m])) continue;
            ++scanned;
            const double loss = hi.m2 + suffix_m2[N - m];
            if (!best_rank || loss < best_loss) {
                best_rank = m;
                best_loss = loss;
            }
        }
        if (!best_rank || (best && !(best_loss < best->total_loss))) continue;

        SplitDecision d;
        d.feature = f;
        d.rank = *best_rank;
        d.threshold = split_threshold(vals[d.rank - 1], vals[d.rank]);
        d.scan_loss = best_loss;
        d.total_loss = best_loss;
        best = std::move(d);
    }
    if (!best) return std::nullopt;

    auto [ge, lt] = partition_indices(indices, psi, best->feature, best->threshold);
    const auto l = two_pass(y, ge);
    const auto r = two_pass(y, lt);
    best->left_fit = FitResult{{l.mean}, l.sse};
    best->right_fit = FitResult{{r.mean}, r.sse};
    best->total_loss = l.sse + r.sse;
    best->scanned_count = scanned;
    return best;
}

std::size_t constant_tree_min_leaf(const TrainConfig& config, std::size_t d) {
    return effective_min_leaf(config, d + (config.bias ? 1 : 0));
}

namespace {

struct NoState {};

ConstantTreeModel train_constant(const Dataset& data, const TrainConfig& config, Criterion criterion,
                                 TrainStats* stats) {
    data.validate();
    config.validate(data.d());

    ConstantTreeModel model;
    model.criterion = criterion;
    model.d = data.d();
    model.D = data.D();
    model.bias = config.bias;
    model.config = config;
    model.schema = data.schema;

    const std::size_t min_leaf = constant_tree_min_leaf(config, data.d());
    const Matrix Z = criterion == Criterion::M5 ? design_matrix(data.X, {}, config.bias) : Matrix();

    auto expand = [&](const std::vector<std::size_t>& rows, std::size_t depth, NoState) {
        detail::Expansion<NoState> e;
        const auto ms = two_pass(data.y, rows);
        e.leaf.n = rows.size();
        if (criterion == Criterion::M5) {
            const Matrix Zr = gather_rows(Z, rows);
            const auto yr = gather(data.y, rows);
            auto fit = ridge_fit({.X = Zr, .y = yr, .lambda = config.gamma});
            double s = 0.0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double r = dot(Zr.row(i), fit.w) - yr[i];
                s += r * r;
            }
            e.leaf.w = std::move(fit.w);
            e.leaf.loss = fit.loss;
            e.leaf_sse = s;
        } else {
            e.leaf.value = ms.mean;
            e.leaf.loss = ms.sse;
            e.leaf_sse = ms.sse;
        }

        if (depth >= config.max_depth || rows.size() < 2 * min_leaf) return e;
        const auto dec = variance_best_split(rows, data.psi, data.y, min_leaf);
        if (!dec) return e;
        e.stats.scanned = dec->scanned_count;
        if (!(dec->total_loss < ms.sse) || ms.sse - dec->total_loss < config.min_loss_decrease)
            return e;
        e.split = true;
        e.feature = dec->feature;
        e.threshold = dec->threshold;
        std::tie(e.ge, e.lt) = partition_indices(rows, data.psi, dec->feature, dec->threshold);
        return e;
    };

    auto root = detail::grow_root(data.n(), NoState{}, config.split.threads, expand);
    detail::finish(*root, model, data.n(), config.max_depth, stats);
    return model;
}

} // namespace

ConstantTreeModel train_cart(const Dataset& data, const TrainConfig& config, TrainStats* stats) {
    return train_constant(data, config, Criterion::Cart, stats);
}

ConstantTreeModel train_m5(const Dataset& data, const TrainConfig& config, TrainStats* stats) {
    return train_constant(data, config, Criterion::M5, stats);
}

} // namespace plrt
