#include "plrt/splitsearch.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

#include <omp.h>

#include "plrt/error.hpp"

namespace plrt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weight_at(std::span<const double> w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

void validate(const NodeContext& ctx, const SplitData& data) {
    const std::size_t n = data.design.rows();
    if (data.psi.rows() != n || data.y.size() != n)
        throw Error(Errc::DimensionMismatch, "split data: row counts differ");
    if (data.psi.cols() == 0) throw Error(Errc::InvalidArgument, "split data: no split features");
    if (!ctx.w0.empty() && ctx.w0.size() != data.design.cols())
        throw Error(Errc::DimensionMismatch, "node anchor length != regression dimension");
    if (ctx.config.min_leaf_size == 0) throw Error(Errc::InvalidConfig, "min_leaf_size must be >= 1");
    for (std::size_t i : ctx.indices)
        if (i >= n) throw Error(Errc::InvalidArgument, "node index out of range");
}

double default_incumbent(const NodeContext& ctx, const SplitData& data) {
    double s = 0.0;
    for (std::size_t i : ctx.indices) {
        const double pred = ctx.w0.empty() ? 0.0 : dot(data.design.row(i), ctx.w0);
        const double e = pred - data.y[i];
        s += weight_at(data.sample_weights, i) * e * e;
    }
    return s;
}

// One side of the two-ended scan. `from_top` sides consume order[0], order[1],
// ...; the other side consumes order[N-1], order[N-2], ...
class ScanSide {
public:
    ScanSide(const NodeContext& ctx, const SplitData& data, const std::vector<std::size_t>& order,
             bool from_top, std::vector<double>& store, FeatureScanResult& res)
        : acc_(data.design.cols(), ctx.lambda, ctx.w0, data.coord_weights), data_(data),
          order_(order), from_top_(from_top), store_(store), res_(res) {}

    std::size_t count() const noexcept { return acc_.count(); }
    const RidgeAccumulator& acc() const noexcept { return acc_; }

    void step() {
        const std::size_t i = sample_at(acc_.count());
        acc_.add(data_.design.row(i), data_.y[i], weight_at(data_.sample_weights, i));
        ++res_.rank_one_updates;
    }

    bool evaluate() {
        if (!acc_.evaluate()) return false;
        store_[acc_.count()] = acc_.loss();
        ++res_.loss_evals;
        return true;
    }

    // Advance to every count k in `targets` (ascending, all > count()) and
    // evaluate there. Long gaps are crossed by rebuilding the statistics from
    // scratch when that is cheaper than per-sample rank-one updates.
    void visit(const std::vector<std::size_t>& targets) {
        const double dim = double(acc_.dim());
        for (std::size_t k : targets) {
            const double gap = double(k - acc_.count());
            const double rebuild_cost = double(k) * dim * dim * 0.5 + 1.5 * dim * dim * dim;
            const double update_cost = gap * 2.0 * dim * dim;
            if (gap > 1 && rebuild_cost < update_cost) {
                std::vector<std::size_t> rows(k);
                for (std::size_t p = 0; p < k; ++p) rows[p] = sample_at(p);
                acc_.assign(data_.design, data_.y, data_.sample_weights, rows);
            } else {
                while (acc_.count() < k) step();
            }
            evaluate();
        }
    }

private:
    std::size_t sample_at(std::size_t pos) const {
        return from_top_ ? order_[pos] : order_[order_.size() - 1 - pos];
    }

    RidgeAccumulator acc_;
    const SplitData& data_;
    const std::vector<std::size_t>& order_;
    bool from_top_;
    std::vector<double>& store_;
    FeatureScanResult& res_;
};

struct Incumbent {
    std::optional<SplitCandidate> cand;
    std::size_t feature = 0;

    // Strict improvement only; equal losses keep the earlier (feature, rank).
    void offer(std::size_t f, const SplitCandidate& c) {
        if (!cand || c.loss < cand->loss) {
            cand = c;
            feature = f;
        }
    }
};

SplitDecision finalize(const NodeContext& ctx, const SplitData& data, const Incumbent& inc,
                       std::size_t scanned, std::size_t pruned) {
    const auto& c = *inc.cand;
    auto [ge, lt] = partition_indices(ctx.indices, data.psi, inc.feature, c.threshold);
    if (ge.size() != c.rank)
        throw Error(Errc::InvalidArgument, "split partition does not match scanned rank");

    auto fit_side = [&](const std::vector<std::size_t>& rows) {
        const Matrix X = gather_rows(data.design, rows);
        const auto y = gather(data.y, rows);
        const auto pw = data.sample_weights.empty() ? std::vector<double>{}
                                                    : gather(data.sample_weights, rows);
        return ridge_fit({.X = X, .y = y, .lambda = ctx.lambda, .w0 = ctx.w0,
                          .sample_weights = pw, .coord_weights = data.coord_weights});
    };

    SplitDecision d;
    d.feature = inc.feature;
    d.threshold = c.threshold;
    d.rank = c.rank;
    d.scan_loss = c.loss;
    d.left_fit = fit_side(ge);
    d.right_fit = fit_side(lt);
    d.total_loss = d.left_fit.loss + d.right_fit.loss;
    d.scanned_count = scanned;
    d.pruned_count = pruned;
    return d;
}

} // namespace

std::string_view strategy_name(Strategy s) noexcept {
    switch (s) {
    case Strategy::NoSpeedup: return "none";
    case Strategy::Exact: return "exact";
    case Strategy::ApproxMin: return "approx-min";
    case Strategy::ApproxMax: return "approx-max";
    }
    return "none";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "none") return Strategy::NoSpeedup;
    if (name == "exact") return Strategy::Exact;
    if (name == "approx-min") return Strategy::ApproxMin;
    if (name == "approx-max") return Strategy::ApproxMax;
    throw Error(Errc::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

std::vector<std::size_t> sorted_by_feature(std::span<const std::size_t> indices, const Matrix& psi,
                                           std::size_t feature) {
    std::vector<std::size_t> order(indices.begin(), indices.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = psi(a, feature);
        const double vb = psi(b, feature);
        return va > vb || (va == vb && a < b);
    });
    return order;
}

double split_threshold(double hi, double lo) noexcept {
    const double t = std::midpoint(lo, hi);
    // Adjacent doubles: the midpoint rounds onto one of them.
    return t > lo ? t : hi;
}

double pruning_bound(double l_k, double r_k, double penalty_l, double penalty_r, std::size_t N,
                     std::size_t k, Strategy strategy, bool per_sample_normalization) noexcept {
    switch (strategy) {
    case Strategy::NoSpeedup: return -std::numeric_limits<double>::infinity();
    case Strategy::Exact: return l_k + r_k;
    case Strategy::ApproxMin:
    case Strategy::ApproxMax: {
        double fit_l = l_k - penalty_l;
        double fit_r = r_k - penalty_r;
        if (per_sample_normalization && k > 0) {
            // Both endpoint sets hold k samples.
            fit_l /= double(k);
            fit_r /= double(k);
        }
        const double middle = double(N) - 2.0 * double(k);
        const double term = strategy == Strategy::ApproxMin ? std::min(fit_l, fit_r)
                                                            : std::max(fit_l, fit_r);
        return l_k + r_k + middle * term;
    }
    }
    return l_k + r_k;
}

FeatureScanResult feature_scan(const NodeContext& ctx, std::size_t feature, const SplitData& data,
                               double best_so_far, const ScanOptions& opts) {
    if (feature >= data.psi.cols()) throw Error(Errc::InvalidArgument, "feature index out of range");
    const std::size_t N = ctx.indices.size();
    FeatureScanResult res;
    res.prefix_loss.assign(N + 1, kNaN);
    res.suffix_loss.assign(N + 1, kNaN);
    if (N < 2) return res;

    const auto order = sorted_by_feature(ctx.indices, data.psi, feature);
    std::vector<double> vals(N);
    for (std::size_t p = 0; p < N; ++p) vals[p] = data.psi(order[p], feature);

    const std::size_t min_leaf = ctx.config.min_leaf_size;
    auto admissible = [&](std::size_t m) {
        return m >= min_leaf && N - m >= min_leaf && vals[m - 1] > vals[m];
    };

    ScanSide top(ctx, data, order, true, res.prefix_loss, res);
    ScanSide bottom(ctx, data, order, false, res.suffix_loss, res);

    std::optional<std::size_t> pruned_at;
    if (opts.trace) {
        for (std::size_t k = 1; k < N; ++k) {
            top.step();
            top.evaluate();
            bottom.step();
            bottom.evaluate();
        }
    } else if (ctx.config.strategy != Strategy::NoSpeedup) {
        // Grow both ends in lockstep; at step k every rank in [k, N-k] has a
        // larger ge side than k and a larger lt side than k.
        for (std::size_t k = 1; k <= N / 2; ++k) {
            top.step();
            bottom.step();
            const bool ok_top = top.evaluate();
            const bool ok_bottom = bottom.evaluate();
            if (!ok_top || !ok_bottom) continue;
            const double bound = pruning_bound(res.prefix_loss[k], res.suffix_loss[k],
                                               top.acc().penalty(), bottom.acc().penalty(), N, k,
                                               ctx.config.strategy,
                                               ctx.config.per_sample_normalization);
            if (bound >= best_so_far) {
                pruned_at = k;
                break;
            }
        }
    }

    auto in_pruned = [&](std::size_t m) { return pruned_at && m >= *pruned_at && m <= N - *pruned_at; };

    std::vector<std::size_t> candidates;
    std::vector<char> need_top(N + 1, 0), need_bottom(N + 1, 0);
    for (std::size_t m = 1; m < N; ++m) {
        if (!admissible(m)) continue;
        if (in_pruned(m)) {
            ++res.pruned;
            continue;
        }
        candidates.push_back(m);
        need_top[m] = 1;
        need_bottom[N - m] = 1;
    }

    auto targets_for = [&](const ScanSide& side, const std::vector<char>& need,
                           const std::vector<double>& store) {
        std::vector<std::size_t> t;
        for (std::size_t k = side.count() + 1; k < N; ++k)
            if (need[k] && std::isnan(store[k])) t.push_back(k);
        return t;
    };
    if (!opts.trace) {
        top.visit(targets_for(top, need_top, res.prefix_loss));
        bottom.visit(targets_for(bottom, need_bottom, res.suffix_loss));
    }

    for (std::size_t m : candidates) {
        const double l = res.prefix_loss[m];
        const double r = res.suffix_loss[N - m];
        // A side that is still rank-deficient at lambda = 0 has no unique fit.
        if (std::isnan(l) || std::isnan(r)) continue;
        ++res.scanned;
        const double loss = l + r;
        if (!res.best || loss < res.best->loss)
            res.best = SplitCandidate{m, split_threshold(vals[m - 1], vals[m]), loss};
    }
    return res;
}

namespace {

struct ScanTotals {
    std::size_t scanned = 0;
    std::size_t pruned = 0;
};

template <class ScanAll>
std::optional<SplitDecision> run_search(const NodeContext& ctx, const SplitData& data,
                                        ScanAll&& scan_all) {
    validate(ctx, data);
    if (ctx.indices.size() < 2 * ctx.config.min_leaf_size) return std::nullopt;
    Incumbent inc;
    ScanTotals totals;
    double best = ctx.incumbent_loss ? *ctx.incumbent_loss : default_incumbent(ctx, data);
    scan_all(inc, totals, best);
    if (!inc.cand) return std::nullopt;
    return finalize(ctx, data, inc, totals.scanned, totals.pruned);
}

void absorb(std::size_t f, const FeatureScanResult& r, Incumbent& inc, ScanTotals& totals,
            double& best) {
    totals.scanned += r.scanned;
    totals.pruned += r.pruned;
    if (r.best) {
        inc.offer(f, *r.best);
        best = std::min(best, r.best->loss);
    }
}

} // namespace

std::optional<SplitDecision> find_best_split_serial(const NodeContext& ctx, const SplitData& data) {
    return run_search(ctx, data, [&](Incumbent& inc, ScanTotals& totals, double& best) {
        for (std::size_t f = 0; f < data.psi.cols(); ++f)
            absorb(f, feature_scan(ctx, f, data, best), inc, totals, best);
    });
}

std::optional<SplitDecision> find_best_split(const NodeContext& ctx, const SplitData& data) {
    return run_search(ctx, data, [&](Incumbent& inc, ScanTotals& totals, double& best) {
        const std::size_t D = data.psi.cols();
        const int threads = ctx.config.threads > 0 ? ctx.config.threads : omp_get_max_threads();
        std::vector<FeatureScanResult> results(D);
        std::vector<std::exception_ptr> errors(D);

        auto run_waves = [&](int team) {
            const std::size_t wave =
                ctx.config.feature_wave > 0 ? ctx.config.feature_wave : std::size_t(std::max(team, 1));
            for (std::size_t start = 0; start < D; start += wave) {
                const std::size_t end = std::min(D, start + wave);
                const double snapshot = best;
#pragma omp taskloop grainsize(1) default(shared)
                for (std::size_t f = start; f < end; ++f) {
                    try {
                        results[f] = feature_scan(ctx, f, data, snapshot);
                    } catch (...) {
                        errors[f] = std::current_exception();
                    }
                }
                for (std::size_t f = start; f < end; ++f) {
                    if (errors[f]) std::rethrow_exception(errors[f]);
                    absorb(f, results[f], inc, totals, best);
                    results[f] = {};
                }
            }
        };

        if (omp_in_parallel()) {
            run_waves(omp_get_num_threads());
            return;
        }
        if (threads <= 1) {
            run_waves(1);
            return;
        }
        std::exception_ptr outer;
#pragma omp parallel num_threads(threads)
#pragma omp single
        {
            try {
                run_waves(omp_get_num_threads());
            } catch (...) {
                outer = std::current_exception();
            }
        }
        if (outer) std::rethrow_exception(outer);
    });
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
partition_indices(std::span<const std::size_t> indices, const Matrix& psi, std::size_t feature,
                  double threshold) {
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i : indices) (psi(i, feature) >= threshold ? out.first : out.second).push_back(i);
    return out;
}

} // namespace plrt
