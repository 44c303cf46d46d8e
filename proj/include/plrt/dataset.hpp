#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "plrt/linalg.hpp"

namespace plrt {

/// Per-column affine map x -> (x - mean) / scale.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;

    /// Column means and population standard deviations; constant columns get
    /// scale 1 so they map to zero.
    static Standardization fit(const Matrix& m);
    void apply(Matrix& m) const;
    bool operator==(const Standardization&) const = default;
};

/// Where the columns of a dataset came from, and how they were transformed.
/// Stored with a trained model so test data is prepared identically.
struct ModelSchema {
    std::string target;
    std::vector<std::string> regression;
    std::vector<std::string> split;
    std::optional<Standardization> x_standardization;
    std::optional<Standardization> psi_standardization;
    bool operator==(const ModelSchema&) const = default;
};

struct Dataset {
    Matrix X;   ///< n x d regression features
    Matrix psi; ///< n x D split features
    std::vector<double> y;
    ModelSchema schema;

    std::size_t n() const noexcept { return y.size(); }
    std::size_t d() const noexcept { return X.cols(); }
    std::size_t D() const noexcept { return psi.cols(); }

    /// Checks shapes and finiteness; throws EmptyDataset, DimensionMismatch or
    /// InvalidArgument.
    void validate() const;
};

/// The split space equal to the regression space. Columns are named x0.., and
/// psi0.. for a separate split space.
Dataset make_dataset(Matrix X, std::vector<double> y);
Dataset make_dataset(Matrix X, Matrix psi, std::vector<double> y);

/// Rows of `data` selected by `rows`, schema copied.
Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);

} // namespace plrt
