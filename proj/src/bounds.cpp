#include "plrt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "plrt/error.hpp"

namespace plrt {

EmpiricalStats empirical_stats(const Matrix& X, std::span<const double> y, std::size_t D) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n == 0) throw Error(Errc::EmptyDataset, "statistics need at least one sample");
    if (y.size() != n) throw Error(Errc::DimensionMismatch, "y length != rows of X");
    if (d > kMaxCovarianceDim)
        throw Error(Errc::DimensionOverflow,
                    "d = " + std::to_string(d) + " exceeds " + std::to_string(kMaxCovarianceDim));

    EmpiricalStats st;
    st.n = n;
    st.d = d;
    st.D = D;
    Matrix cov(d, d);
    double sq_sum = 0.0;
    double maxnorm_sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = X.row(r);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) cov(i, j) += x[i] * x[j];
        const double nrm2 = dot(x, x);
        sq_sum += nrm2;
        const double inf = max_abs(x);
        maxnorm_sum += inf * inf;
        st.K_hat = std::max(st.K_hat, std::sqrt(nrm2));
        st.R_hat = std::max(st.R_hat, std::abs(y[r]));
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= double(n);
            cov(j, i) = cov(i, j);
        }
    st.trace_cov = sq_sum / double(n);
    st.mean_maxnorm_sq = maxnorm_sum / double(n);
    st.opnorm_cov = operator_norm(SpdMatrix(std::move(cov))).value;
    return st;
}

EmpiricalStats empirical_stats(const Dataset& data) { return empirical_stats(data.X, data.y, data.D()); }

namespace {

void check(const EmpiricalStats& st, const BoundInputs& in) {
    if (st.n == 0) throw Error(Errc::InvalidArgument, "bounds need n >= 1");
    if (st.D == 0) throw Error(Errc::InvalidArgument, "bounds need D >= 1");
    if (!(in.W >= 0.0)) throw Error(Errc::InvalidArgument, "W must be >= 0");
    if (in.ell == 0) throw Error(Errc::InvalidArgument, "leaf count must be >= 1");
}

double log_enD(const EmpiricalStats& st) { return std::log(std::numbers::e * double(st.n) * double(st.D)); }

struct Terms {
    double data_term = 0.0;
    double opnorm_term = 0.0;
    double selection_term = 0.0;
    double total() const { return data_term + opnorm_term + selection_term; }
};

Terms opnorm_part(const EmpiricalStats& st, const BoundInputs& in, Terms t) {
    const double scale = in.W * std::sqrt(double(in.ell) / double(st.n));
    t.opnorm_term = scale * 4.0 * std::sqrt(st.opnorm_cov) * std::sqrt(log_enD(st));
    return t;
}

Terms l2_terms(const EmpiricalStats& st, const BoundInputs& in) {
    check(st, in);
    Terms t;
    t.data_term = in.W * std::sqrt(double(in.ell) / double(st.n)) * std::sqrt(2.0 * st.trace_cov);
    return opnorm_part(st, in, t);
}

Terms l1_terms(const EmpiricalStats& st, const BoundInputs& in, std::size_t log_arg) {
    check(st, in);
    Terms t;
    const double scale = in.W * std::sqrt(double(in.ell)) / std::sqrt(double(st.n));
    t.data_term = scale * std::sqrt(2.0 * st.mean_maxnorm_sq) *
                  (1.0 + 4.0 * std::sqrt(std::log(double(log_arg))));
    return opnorm_part(st, in, t);
}

Terms varsel_terms(const EmpiricalStats& st, const BoundInputs& in) {
    if (!in.s) throw Error(Errc::InvalidArgument, "variable-selection bound needs s");
    const std::size_t s = *in.s;
    if (s == 0 || s > st.d) throw Error(Errc::InvalidArgument, "s must satisfy 1 <= s <= d");
    Terms t = l1_terms(st, in, s);
    t.selection_term = 16.0 * std::sqrt(double(s)) * in.W / std::sqrt(double(st.n)) *
                       std::sqrt(st.opnorm_cov) *
                       std::sqrt(std::log(double(st.d) * std::numbers::e / double(s)));
    return t;
}

Terms terms_for(const EmpiricalStats& st, const BoundInputs& in) {
    if (in.s) return varsel_terms(st, in);
    return in.norm == NormType::L1 ? l1_terms(st, in, st.d) : l2_terms(st, in);
}

} // namespace

double rademacher_bound_l2(const EmpiricalStats& st, const BoundInputs& in) { return l2_terms(st, in).total(); }

double rademacher_bound_l1(const EmpiricalStats& st, const BoundInputs& in) {
    return l1_terms(st, in, st.d).total();
}

double rademacher_bound_varsel(const EmpiricalStats& st, const BoundInputs& in) {
    return varsel_terms(st, in).total();
}

std::optional<double> ratio_r_hat(const EmpiricalStats& st) noexcept {
    if (!(st.mean_maxnorm_sq > 0.0)) return std::nullopt;
    return st.trace_cov / st.mean_maxnorm_sq;
}

bool l1_bound_smaller(const EmpiricalStats& st) noexcept {
    const double l1 = std::sqrt(2.0 * st.mean_maxnorm_sq) *
                      (1.0 + 4.0 * std::sqrt(std::log(double(std::max<std::size_t>(st.d, 1)))));
    return l1 <= std::sqrt(2.0 * st.trace_cov);
}

namespace {

struct GapParts {
    double F = 0.0;
    double R = 0.0;
    double union_term = 0.0;
    double confidence_term = 0.0;
    double gap = 0.0;
};

GapParts gap_parts(const EmpiricalStats& st, const BoundInputs& in, double rad) {
    check(st, in);
    if (!(in.delta > 0.0 && in.delta < 1.0))
        throw Error(Errc::InvalidDelta, "delta must lie in (0, 1)");
    GapParts g;
    g.F = in.F ? *in.F : in.W * st.K_hat;
    g.R = in.R ? *in.R : st.R_hat;
    if (!(g.F >= 0.0) || !(g.R >= 0.0)) throw Error(Errc::InvalidArgument, "F and R must be >= 0");
    const double n = double(st.n);
    if (in.include_union_term) {
        const double M = in.W * std::sqrt(st.opnorm_cov);
        g.union_term = 4.0 * M * std::sqrt(double(in.ell) * log_enD(st) / n);
    }
    g.confidence_term = (g.R + 2.0 * g.F) * std::sqrt(std::log(2.0 / in.delta) / (2.0 * n));
    g.gap = 4.0 * (g.R + g.F) * (rad + g.union_term + g.confidence_term);
    return g;
}

} // namespace

double generalization_gap_bound(const EmpiricalStats& st, const BoundInputs& in, double rademacher_value) {
    return gap_parts(st, in, rademacher_value).gap;
}

BoundReport bound_report(const EmpiricalStats& st, const BoundInputs& in) {
    const Terms t = terms_for(st, in);
    BoundReport rep;
    rep.rademacher_bound = t.total();
    rep.trace_term = t.data_term;
    rep.opnorm_term = t.opnorm_term;
    rep.selection_term = t.selection_term;
    const GapParts g = gap_parts(st, in, rep.rademacher_bound);
    rep.gap_bound = g.gap;
    rep.union_term = g.union_term;
    rep.confidence_term = g.confidence_term;
    rep.F = g.F;
    rep.R = g.R;
    rep.ratio_r_hat = ratio_r_hat(st);
    rep.l1_smaller = l1_bound_smaller(st);
    return rep;
}

} // namespace plrt
