#include "plrt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plrt/error.hpp"

namespace plrt {

namespace {

// Pivots below this fraction of the largest diagonal entry are treated as
// zero: the matrix is numerically rank-deficient.
constexpr double kRelativePivotFloor = 1e-13;

} // namespace

Matrix Matrix::identity(std::size_t n, double scale) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw Error(Errc::DimensionMismatch, "ragged rows in Matrix::from_rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.cols()) throw Error(Errc::DimensionMismatch, "matvec");
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), x);
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error(Errc::DimensionMismatch, "matmul");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

double frobenius_norm(const Matrix& m) noexcept {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw Error(Errc::DimensionMismatch, "SpdMatrix must be square");
    for (std::size_t i = 0; i < m_.rows(); ++i) {
        if (!(m_(i, i) >= 0.0))
            throw Error(Errc::InvalidArgument, "SpdMatrix has a negative diagonal entry");
        for (std::size_t j = i + 1; j < m_.cols(); ++j)
            if (std::abs(m_(i, j) - m_(j, i)) > 1e-12)
                throw Error(Errc::InvalidArgument, "SpdMatrix is not symmetric");
    }
}

Cholesky::Cholesky(const Matrix& m) : l_(m.rows(), m.rows()) {
    if (m.rows() != m.cols()) throw Error(Errc::DimensionMismatch, "Cholesky of non-square matrix");
    const std::size_t n = m.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, m(i, i));
    const double floor = kRelativePivotFloor * max_diag;

    for (std::size_t j = 0; j < n; ++j) {
        double pivot = m(j, j);
        for (std::size_t k = 0; k < j; ++k) pivot -= l_(j, k) * l_(j, k);
        if (!(pivot > floor) || !(pivot > 0.0))
            throw Error(Errc::NotPositiveDefinite,
                        "non-positive pivot at column " + std::to_string(j));
        const double ljj = std::sqrt(pivot);
        l_(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
            l_(i, j) = s / ljj;
        }
    }
}

std::vector<double> Cholesky::solve(std::span<const double> rhs) const {
    const std::size_t n = dim();
    if (rhs.size() != n) throw Error(Errc::DimensionMismatch, "Cholesky::solve");
    std::vector<double> z(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = z[i];
        for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * z[k];
        z[i] = s / l_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * z[k];
        z[ii] = s / l_(ii, ii);
    }
    return z;
}

Matrix Cholesky::inverse() const {
    const std::size_t n = dim();
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const auto col = solve(e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    // Solves are exact only to round-off; store the symmetric part.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = s;
            inv(j, i) = s;
        }
    return inv;
}

std::vector<double> spd_solve(const SpdMatrix& m, std::span<const double> rhs) {
    return Cholesky(m.matrix()).solve(rhs);
}

InverseState InverseState::from_spd(const Matrix& m) { return InverseState(Cholesky(m).inverse()); }

void InverseState::apply(std::span<const double> v, std::span<double> out) const noexcept {
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) out[i] = dot(inv_.row(i), v);
}

void InverseState::update(std::span<const double> x, double beta, std::span<double> u) {
    const std::size_t n = dim();
    if (x.size() != n || u.size() != n) throw Error(Errc::DimensionMismatch, "rank-one update");
    if (beta == 0.0) return;

    apply(x, u);
    const double denom = 1.0 + beta * dot(x, u);
    if (!(denom > 1e-14))
        throw Error(Errc::DenominatorUnderflow, "Sherman-Morrison denominator " + std::to_string(denom));

    const double c = beta / denom;
    for (std::size_t i = 0; i < n; ++i) {
        const double cu = c * u[i];
        if (cu == 0.0) continue;
        auto r = inv_.row(i);
        for (std::size_t j = 0; j < n; ++j) r[j] -= cu * u[j];
    }

    if (++updates_ % kSymmetrizeEvery == 0) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double s = 0.5 * (inv_(i, j) + inv_(j, i));
                inv_(i, j) = s;
                inv_(j, i) = s;
            }
    }
}

void InverseState::update(std::span<const double> x, double beta) {
    std::vector<double> scratch(dim());
    update(x, beta, scratch);
}

InverseState rank_one_update(InverseState state, std::span<const double> x, double beta) {
    if (beta < 0.0) throw Error(Errc::InvalidArgument, "rank_one_update requires beta >= 0");
    state.update(x, beta);
    return state;
}

namespace {

PowerIterationResult power_iterate(const Matrix& m, std::vector<double> v, double tol,
                                   std::size_t max_iter) {
    const std::size_t n = m.rows();
    std::vector<double> mv(n);
    PowerIterationResult best{0.0, 0, false};
    for (std::size_t it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) mv[i] = dot(m.row(i), v);
        const double lambda = dot(v, mv);
        double res2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = mv[i] - lambda * v[i];
            res2 += r * r;
        }
        best = {std::max(lambda, 0.0), it, false};
        if (std::sqrt(res2) <= tol * std::abs(lambda)) {
            best.converged = true;
            return best;
        }
        const double norm = std::sqrt(dot(mv, mv));
        if (norm == 0.0) {
            // v lies in the null space.
            best.converged = true;
            return best;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = mv[i] / norm;
    }
    return best;
}

} // namespace

PowerIterationResult operator_norm(const SpdMatrix& spd, double tol, std::size_t max_iter) {
    const Matrix& m = spd.matrix();
    const std::size_t n = m.rows();
    if (n == 0) return {};

    double max_diag = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (m(i, i) > max_diag) {
            max_diag = m(i, i);
            argmax = i;
        }
    if (max_diag == 0.0) return {0.0, 0, true}; // PSD with zero diagonal is zero

    auto result = power_iterate(m, std::vector<double>(n, 1.0 / std::sqrt(double(n))), tol, max_iter);

    // A start vector orthogonal to the top eigenspace converges to a smaller
    // eigenvalue; every diagonal entry is a Rayleigh quotient and so a lower
    // bound on lambda_max.
    if (result.value < max_diag * (1.0 - tol)) {
        std::vector<double> e(n, 0.0);
        e[argmax] = 1.0;
        auto retry = power_iterate(m, std::move(e), tol, max_iter);
        retry.iterations += result.iterations;
        if (retry.value > result.value) result = retry;
    }
    return result;
}

} // namespace plrt
