#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace phevdemand::svr {

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    /// Throws ShapeError on ragged input.
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const std::vector<double>& data() const noexcept { return data_; }

    void append_row(std::span<const double> values);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct RbfKernel {
    double gamma;
};
struct PolynomialKernel {
    int degree;
    double gamma;
    double coef0;
};
struct LinearKernel {};

/// Rbf: exp(-gamma |x - y|^2); Polynomial: (gamma <x, y> + coef0)^degree; Linear: <x, y>.
class KernelSpec {
public:
    using Variant = std::variant<RbfKernel, PolynomialKernel, LinearKernel>;

    static KernelSpec rbf(double gamma);
    static KernelSpec polynomial(int degree, double gamma, double coef0 = 0.0);
    static KernelSpec linear();

    const Variant& variant() const noexcept { return kernel_; }
    std::string name() const;

    /// Throws ShapeError if the dimensions differ.
    double operator()(std::span<const double> x, std::span<const double> y) const;

private:
    explicit KernelSpec(Variant k) : kernel_(k) {}
    Variant kernel_;
};

double kernel_eval(const KernelSpec& kernel, std::span<const double> x, std::span<const double> y);

/// Symmetric Gram matrix K(x_i, x_j) of the rows of `inputs`.
DenseMatrix gram_matrix(const KernelSpec& kernel, const DenseMatrix& inputs);

struct TrainingSet {
    DenseMatrix inputs;
    std::vector<double> targets;

    std::size_t size() const noexcept { return targets.size(); }
    /// N >= 2, matching shapes, all entries finite.
    void validate() const;
};

enum class WorkingSetRule {
    MaximalViolatingPair,  // first-order pair within one group
    SecondOrder,           // first index by violation, second by predicted decrease
};

struct NuSvrParams {
    double c = 1000.0;
    double nu = 0.5;
    double kkt_tolerance = 1e-6;
    std::size_t max_iterations = 10'000'000;
    WorkingSetRule working_set = WorkingSetRule::SecondOrder;

    void validate() const;
};

/// Multipliers of the dual QP:
///   minimise 1/2 (a - a*)^T K (a - a*) - t^T (a - a*)
///   s.t. e^T (a - a*) = 0, e^T (a + a*) <= C nu, 0 <= a, a* <= C / N.
/// The estimate is f(x) = sum_i (a_i - a*_i) K(x_i, x) + b.
struct DualSolution {
    std::vector<double> alpha;
    std::vector<double> alpha_star;
    double objective = 0.0;

    std::vector<double> coefficients() const;
};

struct SvrModel {
    KernelSpec kernel = KernelSpec::linear();
    DenseMatrix support_inputs;
    std::vector<double> dual_coefs;  // a_i - a*_i of each support vector
    double bias = 0.0;
    double epsilon = 0.0;

    std::size_t dimension() const noexcept { return support_inputs.cols(); }
    /// Copy with every exactly-zero coefficient (and its support vector) dropped.
    SvrModel without_zero_coefficients() const;
};

/// f(x) = sum_i beta_i K(s_i, x) + b. Throws ShapeError on dimension mismatch.
double predict(const SvrModel& model, std::span<const double> x);
std::vector<double> predict_all(const SvrModel& model, const DenseMatrix& inputs);

struct TrainingResult {
    SvrModel model;
    DualSolution duals;
    std::size_t iterations = 0;
    double final_violation = 0.0;
};

/// Called after each working-set step with the current dual objective.
using IterationObserver = std::function<void(std::size_t iteration, double objective)>;

/// Sequential minimal optimisation on the 2N multipliers. Each step moves two
/// multipliers of the same group (a or a*), which preserves both equality
/// constraints. Bias and tube width come from the gradients of the free
/// multipliers. Throws ConvergenceError when max_iterations is exhausted.
TrainingResult train_nu_svr(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel,
                            const IterationObserver& observer = {});

double dual_objective(const TrainingSet& data, const KernelSpec& kernel, const DualSolution& duals);

/// Largest violation of the optimality conditions of the dual QP, measured on
/// gradient gaps between the multipliers that may move up and those that may
/// move down. Zero at an exact optimum.
double kkt_violation(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel,
                     const DualSolution& duals);

}  // namespace phevdemand::svr
