#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace plrt {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n, double scale = 1.0);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
std::vector<double> matvec(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
double frobenius_norm(const Matrix& m) noexcept;
double max_abs(std::span<const double> v) noexcept;

/// Symmetric matrix with nonnegative diagonal. Construction validates the
/// invariants (|a_ij - a_ji| <= 1e-12, a_ii >= 0); positive definiteness is
/// only checked by the factorization.
class SpdMatrix {
public:
    explicit SpdMatrix(Matrix m);

    std::size_t dim() const noexcept { return m_.rows(); }
    const Matrix& matrix() const noexcept { return m_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

private:
    Matrix m_;
};

/// Lower-triangular Cholesky factor L with M = L L^T.
class Cholesky {
public:
    /// Throws Errc::NotPositiveDefinite when a pivot is not strictly positive
    /// relative to the largest diagonal entry.
    explicit Cholesky(const Matrix& m);

    std::size_t dim() const noexcept { return l_.rows(); }
    std::vector<double> solve(std::span<const double> rhs) const;
    Matrix inverse() const;
    const Matrix& factor() const noexcept { return l_; }

private:
    Matrix l_;
};

std::vector<double> spd_solve(const SpdMatrix& m, std::span<const double> rhs);

/// Explicit inverse of an accumulated SPD matrix, maintained under rank-one
/// additions with Sherman-Morrison. The inverse is re-symmetrized every
/// `kSymmetrizeEvery` updates.
class InverseState {
public:
    static constexpr std::size_t kSymmetrizeEvery = 256;

    InverseState() = default;
    explicit InverseState(Matrix inv) : inv_(std::move(inv)) {}

    static InverseState from_spd(const Matrix& m);

    std::size_t dim() const noexcept { return inv_.rows(); }
    const Matrix& inverse() const noexcept { return inv_; }
    std::size_t updates_applied() const noexcept { return updates_; }

    /// inv <- (M + beta x x^T)^{-1}. O(d^2). `scratch` must have size d.
    /// Throws Errc::DenominatorUnderflow if 1 + beta x^T inv x <= 1e-14.
    void update(std::span<const double> x, double beta, std::span<double> scratch);
    void update(std::span<const double> x, double beta);

    /// out = inv * v
    void apply(std::span<const double> v, std::span<double> out) const noexcept;

private:
    Matrix inv_;
    std::size_t updates_ = 0;
};

InverseState rank_one_update(InverseState state, std::span<const double> x, double beta);

struct PowerIterationResult {
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration, stopping
/// when the residual ||Mv - lambda v|| drops below tol * lambda.
PowerIterationResult operator_norm(const SpdMatrix& m, double tol = 1e-9,
                                   std::size_t max_iter = 10000);

} // namespace plrt
