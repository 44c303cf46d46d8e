#include "plrt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include <json.hpp>

#include "plrt/dataio.hpp"
#include "plrt/error.hpp"

namespace plrt {

using nlohmann::json;

namespace {

double weight_at(std::span<const double> w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

struct SideFit {
    std::vector<double> w;
    double loss = 0.0;
};

std::optional<SideFit> solve_side(const NodeContext& ctx, const SplitData& data,
                                  const std::vector<std::size_t>& rows) {
    const std::size_t dim = data.design.cols();
    Matrix A(dim, dim);
    std::vector<double> rhs(dim, 0.0);
    for (std::size_t r : rows) {
        const auto x = data.design.row(r);
        const double p = weight_at(data.sample_weights, r);
        for (std::size_t i = 0; i < dim; ++i) {
            rhs[i] += p * x[i] * data.y[r];
            for (std::size_t j = 0; j < dim; ++j) A(i, j) += p * x[i] * x[j];
        }
    }
    for (std::size_t i = 0; i < dim; ++i) {
        const double lq = ctx.lambda * weight_at(data.coord_weights, i);
        A(i, i) += lq;
        rhs[i] += lq * (ctx.w0.empty() ? 0.0 : ctx.w0[i]);
    }
    SideFit fit;
    try {
        fit.w = spd_solve(SpdMatrix(std::move(A)), rhs);
    } catch (const Error& e) {
        if (e.code() == Errc::NotPositiveDefinite) return std::nullopt;
        throw;
    }
    for (std::size_t r : rows) {
        const double e = dot(data.design.row(r), fit.w) - data.y[r];
        fit.loss += weight_at(data.sample_weights, r) * e * e;
    }
    for (std::size_t i = 0; i < dim; ++i) {
        const double e = fit.w[i] - (ctx.w0.empty() ? 0.0 : ctx.w0[i]);
        fit.loss += ctx.lambda * weight_at(data.coord_weights, i) * e * e;
    }
    return fit;
}

} // namespace

std::optional<SplitDecision> brute_force_split_oracle(const NodeContext& ctx, const SplitData& data) {
    const std::size_t N = ctx.indices.size();
    if (N > kOracleMaxSamples)
        throw Error(Errc::InstanceTooLarge, "oracle limited to " + std::to_string(kOracleMaxSamples) + " samples");
    const std::size_t min_leaf = ctx.config.min_leaf_size;
    std::optional<SplitDecision> best;
    std::size_t scanned = 0;
    for (std::size_t f = 0; f < data.psi.cols(); ++f) {
        const auto order = sorted_by_feature(ctx.indices, data.psi, f);
        for (std::size_t m = std::max<std::size_t>(min_leaf, 1); m + min_leaf <= N; ++m) {
            const double hi = data.psi(order[m - 1], f);
            const double lo = data.psi(order[m], f);
            if (!(hi > lo)) continue;
            std::vector<std::size_t> ge(order.begin(), order.begin() + std::ptrdiff_t(m));
            std::vector<std::size_t> lt(order.begin() + std::ptrdiff_t(m), order.end());
            const auto l = solve_side(ctx, data, ge);
            const auto r = solve_side(ctx, data, lt);
            if (!l || !r) continue;
            ++scanned;
            const double loss = l->loss + r->loss;
            if (best && !(loss < best->total_loss)) continue;
            SplitDecision d;
            d.feature = f;
            d.rank = m;
            d.threshold = split_threshold(hi, lo);
            d.total_loss = loss;
            d.scan_loss = loss;
            d.left_fit = FitResult{l->w, l->loss};
            d.right_fit = FitResult{r->w, r->loss};
            best = std::move(d);
        }
    }
    if (best) best->scanned_count = scanned;
    return best;
}

StabilityReport stability_report(std::size_t d, std::size_t N, std::uint64_t seed) {
    if (d == 0) throw Error(Errc::InvalidArgument, "stability experiment needs d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix X(N, d);
    for (double& v : X.data()) v = normal(rng);
    std::vector<double> y(N);
    for (double& v : y) v = normal(rng);

    InverseState r1(Matrix::identity(d));
    std::vector<double> scratch(d);
    for (std::size_t i = 0; i < N; ++i) r1.update(X.row(i), 1.0, scratch);

    Matrix gram = Matrix::identity(d);
    std::vector<double> xty(d, 0.0);
    for (std::size_t r = 0; r < N; ++r) {
        const auto x = X.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            xty[i] += x[i] * y[r];
            for (std::size_t j = i; j < d; ++j) gram(i, j) += x[i] * x[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) gram(i, j) = gram(j, i);
    const Matrix ch = Cholesky(gram).inverse();

    StabilityReport rep;
    rep.d = d;
    rep.N = N;
    Matrix diff = ch;
    for (std::size_t k = 0; k < diff.data().size(); ++k) diff.data()[k] -= r1.inverse().data()[k];
    rep.rel_frobenius_error = frobenius_norm(diff) / frobenius_norm(ch);

    const auto w_ch = matvec(ch, xty);
    const auto w_r1 = matvec(r1.inverse(), xty);
    const double na = std::sqrt(dot(w_ch, w_ch));
    const double nb = std::sqrt(dot(w_r1, w_r1));
    if (na > 0.0 && nb > 0.0) {
        // acos loses everything below ~1e-8 rad; the half-angle form does not.
        double minus = 0.0, plus = 0.0;
        for (std::size_t i = 0; i < w_ch.size(); ++i) {
            const double a = w_ch[i] / na, b = w_r1[i] / nb;
            minus += (a - b) * (a - b);
            plus += (a + b) * (a + b);
        }
        rep.angle_degrees = 2.0 * std::atan2(std::sqrt(minus), std::sqrt(plus)) * 180.0 / std::numbers::pi;
    }
    rep.condition_number = operator_norm(SpdMatrix(gram)).value * operator_norm(SpdMatrix(ch)).value;
    return rep;
}

double BenchEntry::median_seconds() const {
    if (seconds.empty()) return 0.0;
    auto s = seconds;
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size() / 2;
    return s.size() % 2 ? s[m] : 0.5 * (s[m - 1] + s[m]);
}

BenchReport speedup_benchmark(const Dataset& train, const Dataset* test, const TrainConfig& config,
                              const std::vector<Strategy>& strategies, std::size_t repeats) {
    if (repeats == 0) throw Error(Errc::InvalidArgument, "repeats must be >= 1");
    BenchReport rep;
    for (Strategy s : strategies) {
        TrainConfig cfg = config;
        cfg.split.strategy = s;
        BenchEntry e;
        e.strategy = s;
        PlrtModel model;
        TrainStats stats;
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            model = train_plrt(train, cfg, &stats);
            const auto t1 = std::chrono::steady_clock::now();
            e.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        e.scanned = stats.scanned;
        e.pruned = stats.pruned;
        for (const auto& n : stats.nodes) e.node_scanned.push_back(n.scanned);
        e.leaves = model.leaf_count();
        if (const auto* root = std::get_if<InteriorNode>(&model.nodes[0])) {
            e.root_feature = root->feature;
            e.root_threshold = root->threshold;
        }
        if (test) e.test_mse = mse(model.predict(*test), test->y);
        e.model_json = model_to_json(model);
        rep.entries.push_back(std::move(e));
    }

    const auto none = std::find_if(rep.entries.begin(), rep.entries.end(),
                                   [](const BenchEntry& e) { return e.strategy == Strategy::NoSpeedup; });
    if (none != rep.entries.end()) {
        for (auto& e : rep.entries) {
            e.same_model_as_none = e.model_json == none->model_json;
            if (e.test_mse && none->test_mse) e.test_mse_delta = *e.test_mse - *none->test_mse;
            if (e.strategy == Strategy::Exact) rep.exact_matches_none = e.same_model_as_none;
        }
    }
    return rep;
}

namespace {

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

std::string to_json(const StabilityReport& r) {
    json j = {{"d", r.d},
              {"N", r.N},
              {"rel_frobenius_error", r.rel_frobenius_error},
              {"angle_degrees", r.angle_degrees},
              {"condition_number", r.condition_number}};
    return j.dump(2) + "\n";
}

std::string to_json(const BenchReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"strategy", std::string(strategy_name(e.strategy))},
                           {"seconds", e.seconds},
                           {"median_seconds", e.median_seconds()},
                           {"scanned_count", e.scanned},
                           {"pruned_count", e.pruned},
                           {"node_scanned", e.node_scanned},
                           {"leaves", e.leaves},
                           {"root_feature", opt(e.root_feature)},
                           {"root_threshold", opt(e.root_threshold)},
                           {"test_mse", opt(e.test_mse)},
                           {"test_mse_delta", opt(e.test_mse_delta)},
                           {"same_model_as_none", e.same_model_as_none}});
    }
    json j = {{"entries", entries}, {"exact_matches_none", opt(r.exact_matches_none)}};
    return j.dump(2) + "\n";
}

std::string to_json(const EmpiricalStats& st, const BoundInputs& in, const BoundReport& r) {
    json j = {{"n", st.n},
              {"d", st.d},
              {"D", st.D},
              {"trace_cov", st.trace_cov},
              {"opnorm_cov", st.opnorm_cov},
              {"mean_maxnorm_sq", st.mean_maxnorm_sq},
              {"K_hat", st.K_hat},
              {"R_hat", st.R_hat},
              {"W", in.W},
              {"ell", in.ell},
              {"delta", in.delta},
              {"norm", in.s ? "varsel" : (in.norm == NormType::L1 ? "l1" : "l2")},
              {"s", opt(in.s)},
              {"F", r.F},
              {"R", r.R},
              {"rademacher_bound", r.rademacher_bound},
              {"trace_term", r.trace_term},
              {"opnorm_term", r.opnorm_term},
              {"selection_term", r.selection_term},
              {"union_term", r.union_term},
              {"confidence_term", r.confidence_term},
              {"gap_bound", r.gap_bound},
              {"ratio_r_hat", opt(r.ratio_r_hat)},
              {"l1_bound_smaller", r.l1_smaller}};
    return j.dump(2) + "\n";
}

std::string to_table(const BenchReport& r) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %12s %12s %12s %8s %10s %14s %12s\n", "strategy", "time_s",
                  "scanned", "pruned", "leaves", "root_feat", "root_thresh", "test_mse");
    out += line;
    for (const auto& e : r.entries) {
        const std::string feat = e.root_feature ? std::to_string(*e.root_feature) : "-";
        char thr[32] = "-";
        if (e.root_threshold) std::snprintf(thr, sizeof thr, "%.6g", *e.root_threshold);
        char tm[32] = "-";
        if (e.test_mse) std::snprintf(tm, sizeof tm, "%.6g", *e.test_mse);
        std::snprintf(line, sizeof line, "%-12s %12.4f %12zu %12zu %8zu %10s %14s %12s\n",
                      std::string(strategy_name(e.strategy)).c_str(), e.median_seconds(), e.scanned,
                      e.pruned, e.leaves, feat.c_str(), thr, tm);
        out += line;
    }
    return out;
}

} // namespace plrt
