#include "phevdemand/error.hpp"
#include "phevdemand/svr.hpp"

#include <cmath>
#include <string>

namespace phevdemand::svr {

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    DenseMatrix m;
    for (const auto& r : rows) {
        m.append_row(r);
    }
    return m;
}

void DenseMatrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    } else if (values.size() != cols_) {
        throw ShapeError("row of width " + std::to_string(values.size()) + " appended to matrix of width " +
                         std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

KernelSpec KernelSpec::rbf(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("rbf kernel needs gamma > 0");
    }
    return KernelSpec(RbfKernel{gamma});
}

KernelSpec KernelSpec::polynomial(int degree, double gamma, double coef0) {
    if (degree < 1) {
        throw DomainError("polynomial kernel needs degree >= 1");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma) || !std::isfinite(coef0)) {
        throw DomainError("polynomial kernel needs gamma > 0 and finite coef0");
    }
    return KernelSpec(PolynomialKernel{degree, gamma, coef0});
}

KernelSpec KernelSpec::linear() {
    return KernelSpec(LinearKernel{});
}

std::string KernelSpec::name() const {
    if (std::holds_alternative<RbfKernel>(kernel_)) {
        return "rbf";
    }
    if (std::holds_alternative<PolynomialKernel>(kernel_)) {
        return "polynomial";
    }
    return "linear";
}

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        s += x[k] * y[k];
    }
    return s;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        s += d * d;
    }
    return s;
}

}  // namespace

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
    if (x.size() != y.size()) {
        throw ShapeError("kernel arguments have dimensions " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
    }
    if (const auto* rbf = std::get_if<RbfKernel>(&kernel_)) {
        return std::exp(-rbf->gamma * squared_distance(x, y));
    }
    if (const auto* poly = std::get_if<PolynomialKernel>(&kernel_)) {
        return std::pow(poly->gamma * dot(x, y) + poly->coef0, poly->degree);
    }
    return dot(x, y);
}

double kernel_eval(const KernelSpec& kernel, std::span<const double> x, std::span<const double> y) {
    return kernel(x, y);
}

DenseMatrix gram_matrix(const KernelSpec& kernel, const DenseMatrix& inputs) {
    const std::size_t n = inputs.rows();
    DenseMatrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = kernel(inputs.row(i), inputs.row(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace phevdemand::svr
