#include "plrt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "grow.hpp"
#include "plrt/error.hpp"

namespace plrt {

std::string_view criterion_name(Criterion c) noexcept {
    switch (c) {
    case Criterion::Plrt: return "plrt";
    case Criterion::Cart: return "cart";
    case Criterion::M5: return "m5";
    }
    return "plrt";
}

Criterion parse_criterion(std::string_view name) {
    if (name == "plrt") return Criterion::Plrt;
    if (name == "cart") return Criterion::Cart;
    if (name == "m5") return Criterion::M5;
    throw Error(Errc::InvalidArgument, "unknown criterion '" + std::string(name) + "'");
}

void TrainConfig::validate(std::size_t d) const {
    if (min_leaf_size == 0) throw Error(Errc::InvalidConfig, "min_leaf_size must be >= 1");
    if (!(min_loss_decrease >= 0.0)) throw Error(Errc::InvalidConfig, "min_loss_decrease must be >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(Errc::InvalidConfig, "gamma must be >= 0");
    if (!(lasso_lambda >= 0.0) || !std::isfinite(lasso_lambda))
        throw Error(Errc::InvalidConfig, "lasso lambda must be >= 0");
    if (root_feature_selection && (*root_feature_selection == 0 || *root_feature_selection > d))
        throw Error(Errc::InvalidConfig, "root feature selection s must satisfy 1 <= s <= d");
}

std::size_t effective_min_leaf(const TrainConfig& config, std::size_t dim) noexcept {
    return config.gamma == 0.0 ? std::max(config.min_leaf_size, dim) : config.min_leaf_size;
}

std::size_t TreeModel::leaf_index(std::span<const double> psi) const {
    if (psi.size() != D) throw Error(Errc::DimensionMismatch, "split feature vector length != D");
    std::size_t at = 0;
    while (const auto* in = std::get_if<InteriorNode>(&nodes[at]))
        at = psi[in->feature] >= in->threshold ? in->ge : in->lt;
    return at;
}

double TreeModel::predict(std::span<const double> x, std::span<const double> psi) const {
    if (x.size() != d) throw Error(Errc::DimensionMismatch, "regression vector length != d");
    const auto& leaf = std::get<LeafNode>(nodes[leaf_index(psi)]);
    if (criterion == Criterion::Cart) return leaf.value;
    double s = dot(x, std::span<const double>(leaf.w).first(d));
    if (bias) s += leaf.w[d];
    return s;
}

std::vector<double> TreeModel::predict(const Dataset& data) const {
    if (data.d() != d || data.D() != D)
        throw Error(Errc::DimensionMismatch, "dataset dimensions differ from the model");
    std::vector<double> out(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) out[i] = predict(data.X.row(i), data.psi.row(i));
    return out;
}

std::size_t TreeModel::leaf_count() const noexcept {
    return std::count_if(nodes.begin(), nodes.end(),
                         [](const TreeNode& n) { return std::holds_alternative<LeafNode>(n); });
}

std::size_t TreeModel::depth() const {
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (const auto* in = std::get_if<InteriorNode>(&nodes[i])) {
            level[in->ge] = level[i] + 1;
            level[in->lt] = level[i] + 1;
        }
    }
    return deepest;
}

void TreeModel::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::SchemaViolation, what); };
    if (nodes.empty()) fail("model has no nodes");
    if (d == 0 || D == 0) fail("model dimensions must be positive");
    const std::size_t wlen = d + (bias ? 1 : 0);
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (const auto* in = std::get_if<InteriorNode>(&nodes[i])) {
            if (in->feature >= D) fail("split feature out of range at node " + std::to_string(i));
            if (!std::isfinite(in->threshold)) fail("non-finite threshold at node " + std::to_string(i));
            for (std::size_t c : {in->ge, in->lt}) {
                if (c <= i || c >= nodes.size()) fail("bad child index at node " + std::to_string(i));
                ++parents[c];
            }
            if (in->ge == in->lt) fail("children coincide at node " + std::to_string(i));
        } else {
            const auto& leaf = std::get<LeafNode>(nodes[i]);
            if (criterion == Criterion::Cart) {
                if (!leaf.w.empty()) fail("constant leaf carries weights at node " + std::to_string(i));
            } else if (leaf.w.size() != wlen) {
                fail("leaf weight length mismatch at node " + std::to_string(i));
            }
        }
    }
    if (parents[0] != 0) fail("root has a parent");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (parents[i] != 1) fail("node " + std::to_string(i) + " does not have exactly one parent");
    for (std::size_t f : selected_features)
        if (f >= d) fail("selected feature out of range");
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) noexcept {
    const std::size_t n = a.size();
    if (n == 0) return 0.0;
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / double(n);
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / double(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<std::size_t> select_root_features(const Dataset& data, std::size_t s) {
    const std::size_t d = data.d();
    if (s == 0 || s > d) throw Error(Errc::InvalidArgument, "selection size must satisfy 1 <= s <= d");
    std::vector<double> score(d);
    std::vector<double> col(data.n());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < data.n(); ++i) col[i] = data.X(i, j);
        score[j] = std::abs(pearson_correlation(col, data.y));
    }
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    order.resize(s);
    std::sort(order.begin(), order.end());
    return order;
}

Matrix design_matrix(const Matrix& X, std::span<const std::size_t> columns, bool bias) {
    const std::size_t k = columns.empty() ? X.cols() : columns.size();
    Matrix Z(X.rows(), k + (bias ? 1 : 0));
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto z = Z.row(i);
        for (std::size_t j = 0; j < k; ++j) z[j] = X(i, columns.empty() ? j : columns[j]);
        if (bias) z[k] = 1.0;
    }
    return Z;
}

namespace {

struct PlrtState {
    std::vector<double> anchor;
    std::optional<FitResult> fit; // precomputed by the parent's split search
};

double sse(const Matrix& Z, std::span<const double> y, std::span<const std::size_t> rows,
           std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i : rows) {
        const double e = dot(Z.row(i), w) - y[i];
        s += e * e;
    }
    return s;
}

} // namespace

PlrtModel train_plrt(const Dataset& data, const TrainConfig& config, TrainStats* stats) {
    data.validate();
    config.validate(data.d());

    PlrtModel model;
    model.criterion = Criterion::Plrt;
    model.d = data.d();
    model.D = data.D();
    model.bias = config.bias;
    model.config = config;
    model.schema = data.schema;
    if (config.root_feature_selection)
        model.selected_features = select_root_features(data, *config.root_feature_selection);

    const Matrix Z = design_matrix(data.X, model.selected_features, config.bias);
    const std::size_t dim = Z.cols();
    const std::size_t k = dim - (config.bias ? 1 : 0);
    const std::size_t min_leaf = effective_min_leaf(config, dim);

    SplitConfig split = config.split;
    split.min_leaf_size = min_leaf;
    const SplitData sd{.design = Z, .psi = data.psi, .y = data.y};

    auto padded = [&](std::span<const double> w) {
        std::vector<double> out(model.d + (config.bias ? 1 : 0), 0.0);
        for (std::size_t j = 0; j < k; ++j)
            out[model.selected_features.empty() ? j : model.selected_features[j]] = w[j];
        if (config.bias) out[model.d] = w[k];
        return out;
    };

    auto expand = [&](const std::vector<std::size_t>& rows, std::size_t depth, PlrtState st) {
        detail::Expansion<PlrtState> e;
        if (!st.fit) {
            const Matrix Zr = gather_rows(Z, rows);
            const auto yr = gather(data.y, rows);
            st.fit = ridge_fit({.X = Zr, .y = yr, .lambda = config.gamma, .w0 = st.anchor});
        }
        const FitResult& fit = *st.fit;

        if (config.leaf_penalty == LeafPenalty::Lasso) {
            const Matrix Zr = gather_rows(Z, rows);
            const auto yr = gather(data.y, rows);
            LassoOptions lo;
            if (config.bias) lo.unpenalized = {k};
            lo.warm_start = fit.w;
            const FitResult lf = lasso_fit(Zr, yr, config.lasso_lambda, lo);
            e.leaf.w = padded(lf.w);
            e.leaf.loss = lf.loss;
            e.leaf_sse = sse(Z, data.y, rows, lf.w);
        } else {
            e.leaf.w = padded(fit.w);
            e.leaf.loss = fit.loss;
            e.leaf_sse = sse(Z, data.y, rows, fit.w);
        }
        e.leaf.n = rows.size();

        if (depth >= config.max_depth || rows.size() < 2 * min_leaf) return e;
        const NodeContext ctx{.indices = rows, .w0 = fit.w, .lambda = config.gamma, .config = split,
                              .incumbent_loss = fit.loss};
        const auto dec = find_best_split(ctx, sd);
        if (!dec) return e;
        e.stats.scanned = dec->scanned_count;
        e.stats.pruned = dec->pruned_count;
        if (!(dec->total_loss < fit.loss) || fit.loss - dec->total_loss < config.min_loss_decrease)
            return e;

        e.split = true;
        e.feature = dec->feature;
        e.threshold = dec->threshold;
        std::tie(e.ge, e.lt) = partition_indices(rows, data.psi, dec->feature, dec->threshold);
        e.ge_state = PlrtState{fit.w, dec->left_fit};
        e.lt_state = PlrtState{fit.w, dec->right_fit};
        return e;
    };

    auto root = detail::grow_root(data.n(), PlrtState{std::vector<double>(dim, 0.0), std::nullopt},
                                  config.split.threads, expand);
    detail::finish(*root, model, data.n(), config.max_depth, stats);
    return model;
}

} // namespace plrt
