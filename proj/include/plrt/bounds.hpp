#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "plrt/dataset.hpp"
#include "plrt/linalg.hpp"

namespace plrt {

struct EmpiricalStats {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t D = 0;
    double trace_cov = 0.0;       ///< Tr of (1/n) sum x x^T
    double opnorm_cov = 0.0;      ///< its spectral norm
    double mean_maxnorm_sq = 0.0; ///< (1/n) sum ||x||_inf^2
    double K_hat = 0.0;           ///< max ||x||_2
    double R_hat = 0.0;           ///< max |y|
};

/// Largest d for which the covariance is formed explicitly.
inline constexpr std::size_t kMaxCovarianceDim = 4096;

EmpiricalStats empirical_stats(const Matrix& X, std::span<const double> y, std::size_t D);
EmpiricalStats empirical_stats(const Dataset& data);

enum class NormType { L2, L1 };

struct BoundInputs {
    double W = 1.0;
    std::size_t ell = 1;
    double delta = 0.05;
    NormType norm = NormType::L2;
    std::optional<std::size_t> s = std::nullopt;
    /// Sup bound on |f|; defaults to W * K_hat.
    std::optional<double> F = std::nullopt;
    /// Sup bound on |y|; defaults to R_hat.
    std::optional<double> R = std::nullopt;
    /// Add the separate 4 M sqrt(ell log(enD) / n) term, M = W sqrt(opnorm).
    /// Off by default: every Rademacher bound here already contains it.
    bool include_union_term = false;
};

double rademacher_bound_l2(const EmpiricalStats& st, const BoundInputs& in);
double rademacher_bound_l1(const EmpiricalStats& st, const BoundInputs& in);
double rademacher_bound_varsel(const EmpiricalStats& st, const BoundInputs& in);

/// Tr / mean_maxnorm_sq; empty when the max-norm statistic is zero.
std::optional<double> ratio_r_hat(const EmpiricalStats& st) noexcept;

/// True when the l1 complexity term is no larger than the l2 one, i.e.
/// sqrt(2 mms) (1 + 4 sqrt(log d)) <= sqrt(2 Tr).
bool l1_bound_smaller(const EmpiricalStats& st) noexcept;

double generalization_gap_bound(const EmpiricalStats& st, const BoundInputs& in, double rademacher_value);

struct BoundReport {
    double rademacher_bound = 0.0;
    double gap_bound = 0.0;
    std::optional<double> ratio_r_hat;
    bool l1_smaller = false;
    double trace_term = 0.0;     ///< sqrt(2 Tr) part (l2) or max-norm part (l1, varsel)
    double opnorm_term = 0.0;    ///< 4 sqrt(op) sqrt(log(enD)) part
    double selection_term = 0.0; ///< variable-selection part (varsel only)
    double union_term = 0.0;
    double confidence_term = 0.0; ///< (R + 2F) sqrt(log(2/delta) / 2n)
    double F = 0.0;
    double R = 0.0;
};

/// Rademacher bound for in.norm (varsel when in.s is set) and the gap bound.
BoundReport bound_report(const EmpiricalStats& st, const BoundInputs& in);

} // namespace plrt
