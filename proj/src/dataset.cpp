#include "plrt/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "plrt/error.hpp"

namespace plrt {

Standardization Standardization::fit(const Matrix& m) {
    Standardization s;
    const std::size_t n = m.rows();
    s.mean.assign(m.cols(), 0.0);
    s.scale.assign(m.cols(), 1.0);
    if (n == 0) return s;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += m(i, j);
        mean /= double(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = m(i, j) - mean;
            var += e * e;
        }
        var /= double(n);
        s.mean[j] = mean;
        s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

void Standardization::apply(Matrix& m) const {
    if (m.cols() != mean.size())
        throw Error(Errc::DimensionMismatch, "standardization column count differs from data");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = (m(i, j) - mean[j]) / scale[j];
}

void Dataset::validate() const {
    if (n() == 0) throw Error(Errc::EmptyDataset, "dataset has no rows");
    if (X.rows() != n() || psi.rows() != n())
        throw Error(Errc::DimensionMismatch, "X, psi and y row counts differ");
    if (d() == 0 || D() == 0) throw Error(Errc::InvalidArgument, "dataset needs d >= 1 and D >= 1");
    auto finite = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(X.data()) || !finite(psi.data()) || !finite(y))
        throw Error(Errc::InvalidArgument, "dataset contains non-finite values");
}

Dataset make_dataset(Matrix X, std::vector<double> y) {
    Matrix psi = X;
    Dataset ds = make_dataset(std::move(X), std::move(psi), std::move(y));
    ds.schema.split = ds.schema.regression;
    return ds;
}

Dataset make_dataset(Matrix X, Matrix psi, std::vector<double> y) {
    Dataset ds;
    ds.X = std::move(X);
    ds.psi = std::move(psi);
    ds.y = std::move(y);
    ds.schema.target = "y";
    for (std::size_t j = 0; j < ds.d(); ++j) ds.schema.regression.push_back("x" + std::to_string(j));
    for (std::size_t j = 0; j < ds.D(); ++j) ds.schema.split.push_back("psi" + std::to_string(j));
    return ds;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.X = Matrix(rows.size(), data.d());
    out.psi = Matrix(rows.size(), data.D());
    out.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        std::copy_n(data.X.row(r).begin(), data.d(), out.X.row(i).begin());
        std::copy_n(data.psi.row(r).begin(), data.D(), out.psi.row(i).begin());
        out.y[i] = data.y[r];
    }
    out.schema = data.schema;
    return out;
}

} // namespace plrt
