#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "plrt/linalg.hpp"

namespace plrt {

/// min_w ||X w - y||_P^2 + lambda ||w - w0||_Q^2 with diagonal P (per-sample
/// weights) and Q (per-coordinate weights). Empty spans mean "zero anchor" and
/// "all ones" respectively.
struct RidgeProblem {
    const Matrix& X;
    std::span<const double> y;
    double lambda = 0.0;
    std::span<const double> w0 = {};
    std::span<const double> sample_weights = {};
    std::span<const double> coord_weights = {};
};

struct FitResult {
    std::vector<double> w;
    double loss = 0.0;
    bool converged = true;
    std::size_t iterations = 0;
};

FitResult ridge_fit(const RidgeProblem& p);

/// ||X w - y||_P^2 + lambda ||w - w0||_Q^2 summed term by term.
double ridge_objective(const RidgeProblem& p, std::span<const double> w);

/// Running sufficient statistics (b = X^T P y, c = y^T P y, count) for one
/// side of a candidate split, together with the inverse of X^T P X + lambda Q
/// kept current by rank-one updates.
///
/// When lambda Q is singular (lambda = 0, or some q_i = 0) the Gram matrix is
/// accumulated explicitly until it can be factored; from then on only the
/// inverse is maintained.
class RidgeAccumulator {
public:
    RidgeAccumulator(std::size_t dim, double lambda, std::span<const double> w0 = {},
                     std::span<const double> coord_weights = {});

    void add(std::span<const double> x, double y, double weight = 1.0);

    /// Replaces the accumulated samples with `rows` of (X, y), forming the Gram
    /// matrix directly and factoring it once. Empty `weights` means all ones.
    void assign(const Matrix& X, std::span<const double> y, std::span<const double> weights,
                std::span<const std::size_t> rows);

    std::size_t count() const noexcept { return count_; }
    std::size_t dim() const noexcept { return dim_; }
    bool solvable() const noexcept { return ready_; }

    /// Solves for the current weights and loss. Returns false while the
    /// accumulated system is still singular.
    bool evaluate();

    /// Valid after a successful evaluate().
    double loss() const noexcept { return loss_; }
    std::span<const double> weights() const noexcept { return w_; }
    double penalty() const noexcept;

    const InverseState& inverse() const noexcept { return inv_; }

private:
    void try_factor();

    std::size_t dim_;
    double lambda_;
    std::vector<double> q_;
    std::vector<double> w0_;
    std::vector<double> anchor_rhs_; // lambda Q w0
    double anchor_const_ = 0.0;      // lambda w0^T Q w0
    std::size_t unpenalized_ = 0;

    std::vector<double> b_;
    double c_ = 0.0;
    std::size_t count_ = 0;

    bool ready_ = false;
    InverseState inv_;
    Matrix pending_gram_;

    std::vector<double> rhs_;
    std::vector<double> w_;
    std::vector<double> scratch_;
    double loss_ = 0.0;
};

struct LassoOptions {
    double tol = 1e-8;
    std::size_t max_iter = 10000;
    /// Coordinates excluded from the l1 penalty (e.g. the bias column).
    std::vector<std::size_t> unpenalized = {};
    /// Starting point; empty means zero.
    std::vector<double> warm_start = {};
};

/// min_w ||X w - y||^2 + lambda sum_{j penalized} |w_j| by cyclic coordinate
/// descent. Stops when the largest coordinate change in a sweep is <= tol;
/// `converged` is false if max_iter sweeps run out first.
FitResult lasso_fit(const Matrix& X, std::span<const double> y, double lambda,
                    const LassoOptions& opts = {});

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
std::vector<double> gather(std::span<const double> v, std::span<const std::size_t> idx);

} // namespace plrt
