#include "plrt/regress.hpp"

#include <algorithm>
#include <cmath>

#include "plrt/error.hpp"

namespace plrt {

namespace {

double weight_at(std::span<const double> w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }
double anchor_at(std::span<const double> w0, std::size_t i) { return w0.empty() ? 0.0 : w0[i]; }

void check_problem(const RidgeProblem& p) {
    const std::size_t n = p.X.rows();
    const std::size_t d = p.X.cols();
    if (p.y.size() != n) throw Error(Errc::DimensionMismatch, "ridge: y length != rows of X");
    if (!p.w0.empty() && p.w0.size() != d) throw Error(Errc::DimensionMismatch, "ridge: w0 length");
    if (!p.sample_weights.empty() && p.sample_weights.size() != n)
        throw Error(Errc::DimensionMismatch, "ridge: sample weight length");
    if (!p.coord_weights.empty() && p.coord_weights.size() != d)
        throw Error(Errc::DimensionMismatch, "ridge: coordinate weight length");
    if (!(p.lambda >= 0.0)) throw Error(Errc::InvalidArgument, "ridge: lambda must be >= 0");
}

} // namespace

FitResult ridge_fit(const RidgeProblem& p) {
    check_problem(p);
    const std::size_t n = p.X.rows();
    const std::size_t d = p.X.cols();

    Matrix gram(d, d);
    std::vector<double> b(d, 0.0);
    double c = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = p.X.row(r);
        const double pw = weight_at(p.sample_weights, r);
        if (pw == 0.0) continue;
        const double py = pw * p.y[r];
        for (std::size_t i = 0; i < d; ++i) {
            const double pxi = pw * x[i];
            b[i] += x[i] * py;
            for (std::size_t j = i; j < d; ++j) gram(i, j) += pxi * x[j];
        }
        c += py * p.y[r];
    }
    std::vector<double> rhs = b;
    double anchor_const = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double lq = p.lambda * weight_at(p.coord_weights, i);
        const double a = anchor_at(p.w0, i);
        gram(i, i) += lq;
        rhs[i] += lq * a;
        anchor_const += lq * a * a;
        for (std::size_t j = 0; j < i; ++j) gram(i, j) = gram(j, i);
    }

    FitResult out;
    out.w = Cholesky(gram).solve(rhs);
    out.loss = std::max(0.0, c + anchor_const - dot(rhs, out.w));
    return out;
}

double ridge_objective(const RidgeProblem& p, std::span<const double> w) {
    check_problem(p);
    double fit = 0.0;
    for (std::size_t r = 0; r < p.X.rows(); ++r) {
        const double e = dot(p.X.row(r), w) - p.y[r];
        fit += weight_at(p.sample_weights, r) * e * e;
    }
    double pen = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double e = w[i] - anchor_at(p.w0, i);
        pen += weight_at(p.coord_weights, i) * e * e;
    }
    return fit + p.lambda * pen;
}

RidgeAccumulator::RidgeAccumulator(std::size_t dim, double lambda, std::span<const double> w0,
                                   std::span<const double> coord_weights)
    : dim_(dim), lambda_(lambda), q_(dim, 1.0), w0_(dim, 0.0), anchor_rhs_(dim, 0.0),
      b_(dim, 0.0), rhs_(dim, 0.0), w_(dim, 0.0), scratch_(dim, 0.0) {
    if (!(lambda >= 0.0)) throw Error(Errc::InvalidArgument, "accumulator: lambda must be >= 0");
    if (!w0.empty()) {
        if (w0.size() != dim) throw Error(Errc::DimensionMismatch, "accumulator: w0 length");
        std::copy(w0.begin(), w0.end(), w0_.begin());
    }
    if (!coord_weights.empty()) {
        if (coord_weights.size() != dim)
            throw Error(Errc::DimensionMismatch, "accumulator: coordinate weight length");
        std::copy(coord_weights.begin(), coord_weights.end(), q_.begin());
    }
    for (std::size_t i = 0; i < dim; ++i) {
        const double lq = lambda_ * q_[i];
        anchor_rhs_[i] = lq * w0_[i];
        anchor_const_ += lq * w0_[i] * w0_[i];
        if (!(lq > 0.0)) ++unpenalized_;
    }
    if (unpenalized_ == 0) {
        Matrix inv(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) inv(i, i) = 1.0 / (lambda_ * q_[i]);
        inv_ = InverseState(std::move(inv));
        ready_ = true;
    } else {
        pending_gram_ = Matrix(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) pending_gram_(i, i) = lambda_ * q_[i];
    }
}

void RidgeAccumulator::try_factor() {
    try {
        inv_ = InverseState::from_spd(pending_gram_);
        ready_ = true;
        pending_gram_ = Matrix();
    } catch (const Error& e) {
        if (e.code() != Errc::NotPositiveDefinite) throw;
    }
}

void RidgeAccumulator::add(std::span<const double> x, double y, double weight) {
    if (x.size() != dim_) throw Error(Errc::DimensionMismatch, "accumulator: sample length");
    ++count_;
    if (weight == 0.0) return;
    const double py = weight * y;
    for (std::size_t i = 0; i < dim_; ++i) b_[i] += x[i] * py;
    c_ += py * y;

    if (ready_) {
        inv_.update(x, weight, scratch_);
        return;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        const double pxi = weight * x[i];
        for (std::size_t j = 0; j < dim_; ++j) pending_gram_(i, j) += pxi * x[j];
    }
    // Rank grows by at most one per sample.
    if (count_ >= unpenalized_) try_factor();
}

void RidgeAccumulator::assign(const Matrix& X, std::span<const double> y,
                              std::span<const double> weights, std::span<const std::size_t> rows) {
    std::fill(b_.begin(), b_.end(), 0.0);
    c_ = 0.0;
    count_ = rows.size();
    Matrix gram(dim_, dim_);
    for (std::size_t r : rows) {
        const auto x = X.row(r);
        const double pw = weight_at(weights, r);
        if (pw == 0.0) continue;
        const double py = pw * y[r];
        for (std::size_t i = 0; i < dim_; ++i) {
            const double pxi = pw * x[i];
            b_[i] += x[i] * py;
            for (std::size_t j = i; j < dim_; ++j) gram(i, j) += pxi * x[j];
        }
        c_ += py * y[r];
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        gram(i, i) += lambda_ * q_[i];
        for (std::size_t j = 0; j < i; ++j) gram(i, j) = gram(j, i);
    }
    pending_gram_ = std::move(gram);
    ready_ = false;
    try_factor();
}

bool RidgeAccumulator::evaluate() {
    if (!ready_) return false;
    for (std::size_t i = 0; i < dim_; ++i) rhs_[i] = b_[i] + anchor_rhs_[i];
    inv_.apply(rhs_, w_);
    loss_ = std::max(0.0, c_ + anchor_const_ - dot(rhs_, w_));
    return true;
}

double RidgeAccumulator::penalty() const noexcept {
    double pen = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double e = w_[i] - w0_[i];
        pen += q_[i] * e * e;
    }
    return lambda_ * pen;
}

FitResult lasso_fit(const Matrix& X, std::span<const double> y, double lambda,
                    const LassoOptions& opts) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (y.size() != n) throw Error(Errc::DimensionMismatch, "lasso: y length != rows of X");
    if (!(lambda >= 0.0)) throw Error(Errc::InvalidArgument, "lasso: lambda must be >= 0");

    std::vector<char> penalized(d, 1);
    for (std::size_t j : opts.unpenalized) {
        if (j >= d) throw Error(Errc::InvalidArgument, "lasso: unpenalized index out of range");
        penalized[j] = 0;
    }

    // Column-major copy so each coordinate update streams one column.
    const Matrix cols = transpose(X);
    std::vector<double> sq(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) sq[j] = dot(cols.row(j), cols.row(j));

    FitResult out;
    out.w.assign(d, 0.0);
    if (!opts.warm_start.empty()) {
        if (opts.warm_start.size() != d) throw Error(Errc::DimensionMismatch, "lasso: warm start");
        out.w = opts.warm_start;
    }
    for (std::size_t j = 0; j < d; ++j)
        if (sq[j] == 0.0) out.w[j] = 0.0;

    std::vector<double> resid(y.begin(), y.end());
    for (std::size_t r = 0; r < n; ++r) resid[r] -= dot(X.row(r), out.w);

    const double half = 0.5 * lambda;
    out.converged = false;
    for (std::size_t sweep = 1; sweep <= opts.max_iter; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (sq[j] == 0.0) continue;
            const auto col = cols.row(j);
            const double rho = dot(col, resid) + sq[j] * out.w[j];
            double next;
            if (!penalized[j]) {
                next = rho / sq[j];
            } else if (rho > half) {
                next = (rho - half) / sq[j];
            } else if (rho < -half) {
                next = (rho + half) / sq[j];
            } else {
                next = 0.0;
            }
            const double delta = next - out.w[j];
            if (delta != 0.0) {
                for (std::size_t r = 0; r < n; ++r) resid[r] -= delta * col[r];
                out.w[j] = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        out.iterations = sweep;
        if (max_delta <= opts.tol) {
            out.converged = true;
            break;
        }
    }

    double l1 = 0.0;
    for (std::size_t j = 0; j < d; ++j)
        if (penalized[j]) l1 += std::abs(out.w[j]);
    // Recompute the residual from scratch so the reported objective does not
    // carry the incremental drift.
    double fit = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double e = y[r] - dot(X.row(r), out.w);
        fit += e * e;
    }
    out.loss = fit + lambda * l1;
    return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::vector<double> gather(std::span<const double> v, std::span<const std::size_t> idx) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

} // namespace plrt
