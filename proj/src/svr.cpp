#include "phevdemand/error.hpp"
#include "phevdemand/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <sstream>
#include <unordered_map>

namespace phevdemand::svr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;
constexpr std::size_t kFullGramLimit = 4096;
constexpr std::size_t kRowCacheBytes = std::size_t{256} << 20;

// Rows of the N x N kernel matrix. Small problems keep the whole matrix;
// larger ones recompute rows on demand behind an LRU cache.
class KernelRows {
public:
    KernelRows(const KernelSpec& kernel, const DenseMatrix& inputs) : kernel_(kernel), inputs_(inputs) {
        const std::size_t n = inputs.rows();
        if (n <= kFullGramLimit) {
            full_ = gram_matrix(kernel, inputs);
        } else {
            capacity_ = std::max<std::size_t>(2, kRowCacheBytes / (n * sizeof(double)));
        }
        diagonal_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            diagonal_[i] = kernel(inputs.row(i), inputs.row(i));
        }
    }

    std::span<const double> row(std::size_t i) {
        if (full_.rows() != 0) {
            return full_.row(i);
        }
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        std::vector<double> values(inputs_.rows());
        for (std::size_t j = 0; j < values.size(); ++j) {
            values[j] = kernel_(inputs_.row(i), inputs_.row(j));
        }
        lru_.emplace_front(i, std::move(values));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

    double diagonal(std::size_t i) const { return diagonal_[i]; }

private:
    const KernelSpec& kernel_;
    const DenseMatrix& inputs_;
    DenseMatrix full_;
    std::vector<double> diagonal_;
    std::size_t capacity_ = 0;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

// Interval of admissible group multipliers, see kkt_violation.
struct GroupBounds {
    double lower = -kInf;  // max over members that may increase of -G
    double upper = kInf;   // min over members that may decrease of -G
};

// The 2N multipliers a = (alpha, alpha*) with labels y = (+1, -1) and
// objective 1/2 a^T Q a + p^T a, Q_kl = y_k y_l K(k mod N, l mod N), p = (-t, t).
class NuSolver {
public:
    NuSolver(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel)
        : n_(data.size()), bound_(params.c / static_cast<double>(data.size())), params_(params),
          rows_(kernel, data.inputs) {
        const std::size_t l = 2 * n_;
        a_.assign(l, 0.0);
        p_.resize(l);
        grad_.resize(l);
        for (std::size_t i = 0; i < n_; ++i) {
            p_[i] = -data.targets[i];
            p_[i + n_] = data.targets[i];
        }
        // Spread C nu / 2 over each group, filling from the front.
        double remaining = params.c * params.nu / 2.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double v = std::min(remaining, bound_);
            a_[i] = v;
            a_[i + n_] = v;
            remaining -= v;
        }
        // beta = alpha - alpha* starts at zero, so the gradient is p.
        grad_ = p_;
    }

    std::size_t solve(const IterationObserver& observer) {
        std::size_t iter = 0;
        std::vector<double> qi(2 * n_);
        std::vector<double> qj(2 * n_);
        for (;;) {
            std::size_t i = 0;
            std::size_t j = 0;
            const double violation = select(i, j);
            last_violation_ = violation;
            if (violation < params_.kkt_tolerance) {
                return iter;
            }
            if (iter >= params_.max_iterations) {
                std::ostringstream msg;
                msg << "nu-SVR solver hit max_iterations=" << params_.max_iterations
                    << " with KKT violation " << violation;
                throw ConvergenceError(msg.str(), violation);
            }
            ++iter;
            step(i, j, qi, qj);
            if (observer) {
                observer(iter, objective());
            }
        }
    }

    double objective() const {
        double s = 0.0;
        for (std::size_t k = 0; k < a_.size(); ++k) {
            s += a_[k] * (grad_[k] + p_[k]);
        }
        return 0.5 * s;
    }

    double last_violation() const { return last_violation_; }
    const std::vector<double>& multipliers() const { return a_; }

    // Bias and tube width from the group multipliers; averaged over free
    // multipliers, else the midpoint of the admissible interval.
    std::pair<double, double> bias_and_epsilon() const {
        double r[2];
        for (int g = 0; g < 2; ++g) {
            double lb = -kInf;
            double ub = kInf;
            double sum_free = 0.0;
            std::size_t n_free = 0;
            for (std::size_t k = g * n_; k < (g + 1) * n_; ++k) {
                if (at_upper(k)) {
                    lb = std::max(lb, grad_[k]);
                } else if (at_lower(k)) {
                    ub = std::min(ub, grad_[k]);
                } else {
                    ++n_free;
                    sum_free += grad_[k];
                }
            }
            if (n_free > 0) {
                r[g] = sum_free / static_cast<double>(n_free);
            } else if (std::isfinite(lb) && std::isfinite(ub)) {
                r[g] = 0.5 * (lb + ub);
            } else {
                r[g] = std::isfinite(lb) ? lb : ub;
            }
        }
        // Free alpha_i: G = -(eps + b); free alpha*_i: G = b - eps.
        const double bias = -(r[0] - r[1]) / 2.0;
        const double epsilon = -(r[0] + r[1]) / 2.0;
        return {bias, std::max(0.0, epsilon)};
    }

private:
    bool at_upper(std::size_t k) const { return a_[k] >= bound_; }
    bool at_lower(std::size_t k) const { return a_[k] <= 0.0; }
    double sign(std::size_t k) const { return k < n_ ? 1.0 : -1.0; }

    void q_row(std::size_t k, std::vector<double>& out) {
        const auto krow = rows_.row(k % n_);
        const double yk = sign(k);
        for (std::size_t l = 0; l < n_; ++l) {
            out[l] = yk * krow[l];
            out[l + n_] = -yk * krow[l];
        }
    }

    double qd(std::size_t k) const { return rows_.diagonal(k % n_); }

    // Returns the maximal group violation and fills the working pair.
    // Lowest index wins ties.
    double select(std::size_t& out_i, std::size_t& out_j) {
        double best_violation = -kInf;
        std::size_t up_idx[2] = {npos, npos};
        double up_val[2] = {-kInf, -kInf};
        double low_val[2] = {-kInf, -kInf};
        std::size_t low_idx[2] = {npos, npos};
        for (int g = 0; g < 2; ++g) {
            for (std::size_t k = g * n_; k < (g + 1) * n_; ++k) {
                if (!at_upper(k) && -grad_[k] > up_val[g]) {
                    up_val[g] = -grad_[k];
                    up_idx[g] = k;
                }
                if (!at_lower(k) && grad_[k] > low_val[g]) {
                    low_val[g] = grad_[k];
                    low_idx[g] = k;
                }
            }
            best_violation = std::max(best_violation, up_val[g] + low_val[g]);
        }
        if (!(best_violation >= params_.kkt_tolerance)) {
            return std::isfinite(best_violation) ? best_violation : 0.0;
        }

        if (params_.working_set == WorkingSetRule::MaximalViolatingPair) {
            const int g = (up_val[0] + low_val[0] >= up_val[1] + low_val[1]) ? 0 : 1;
            out_i = up_idx[g];
            out_j = low_idx[g];
            return best_violation;
        }

        // Second-order choice of j given i = up_idx[g] in each group.
        double best_gain = kInf;
        std::size_t best_j = npos;
        int best_group = 0;
        for (int g = 0; g < 2; ++g) {
            const std::size_t i = up_idx[g];
            if (i == npos) {
                continue;
            }
            const auto krow = rows_.row(i % n_);
            for (std::size_t k = g * n_; k < (g + 1) * n_; ++k) {
                if (at_lower(k)) {
                    continue;
                }
                const double grad_diff = up_val[g] + grad_[k];
                if (grad_diff <= 0.0) {
                    continue;
                }
                double quad = qd(i) + qd(k) - 2.0 * krow[k % n_];
                if (quad <= 0.0) {
                    quad = kTau;
                }
                const double gain = -(grad_diff * grad_diff) / quad;
                if (gain < best_gain) {
                    best_gain = gain;
                    best_j = k;
                    best_group = g;
                }
            }
        }
        if (best_j == npos) {
            return 0.0;
        }
        out_i = up_idx[best_group];
        out_j = best_j;
        return best_violation;
    }

    void step(std::size_t i, std::size_t j, std::vector<double>& qi, std::vector<double>& qj) {
        q_row(i, qi);
        q_row(j, qj);
        const double old_i = a_[i];
        const double old_j = a_[j];
        double quad = qd(i) + qd(j) - 2.0 * qi[j];
        if (quad <= 0.0) {
            quad = kTau;
        }
        // i may increase, j may decrease; both share the same label.
        const double delta = (-grad_[i] + grad_[j]) / quad;
        const double sum = a_[i] + a_[j];
        double ai = a_[i] + delta;
        double aj = a_[j] - delta;
        if (ai > bound_) {
            ai = bound_;
            aj = sum - bound_;
        }
        if (aj < 0.0) {
            aj = 0.0;
            ai = sum;
        }
        ai = std::clamp(ai, 0.0, bound_);
        aj = std::clamp(aj, 0.0, bound_);
        a_[i] = ai;
        a_[j] = aj;
        const double di = ai - old_i;
        const double dj = aj - old_j;
        for (std::size_t k = 0; k < grad_.size(); ++k) {
            grad_[k] += qi[k] * di + qj[k] * dj;
        }
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t n_;
    double bound_;
    const NuSvrParams& params_;
    KernelRows rows_;
    std::vector<double> a_;
    std::vector<double> p_;
    std::vector<double> grad_;
    double last_violation_ = 0.0;
};

std::vector<double> gradient(const TrainingSet& data, const KernelSpec& kernel, const DualSolution& duals) {
    const std::size_t n = data.size();
    const auto beta = duals.coefficients();
    std::vector<double> g(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        double kb = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (beta[j] != 0.0) {
                kb += kernel(data.inputs.row(i), data.inputs.row(j)) * beta[j];
            }
        }
        g[i] = kb - data.targets[i];
        g[i + n] = -kb + data.targets[i];
    }
    return g;
}

}  // namespace

void TrainingSet::validate() const {
    if (targets.size() < 2) {
        throw DomainError("training set needs at least 2 points");
    }
    if (inputs.rows() != targets.size()) {
        throw ShapeError("training set has " + std::to_string(inputs.rows()) + " inputs and " +
                         std::to_string(targets.size()) + " targets");
    }
    if (inputs.cols() == 0) {
        throw ShapeError("training inputs have zero dimension");
    }
    for (double v : inputs.data()) {
        if (!std::isfinite(v)) {
            throw DomainError("training inputs contain a non-finite value");
        }
    }
    for (double v : targets) {
        if (!std::isfinite(v)) {
            throw DomainError("training targets contain a non-finite value");
        }
    }
}

void NuSvrParams::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw DomainError("nu-SVR needs C > 0");
    }
    if (!(nu > 0.0 && nu <= 1.0)) {
        throw DomainError("nu-SVR needs 0 < nu <= 1");
    }
    if (!(kkt_tolerance > 0.0)) {
        throw DomainError("nu-SVR needs kkt_tolerance > 0");
    }
}

std::vector<double> DualSolution::coefficients() const {
    std::vector<double> beta(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        beta[i] = alpha[i] - alpha_star[i];
    }
    return beta;
}

SvrModel SvrModel::without_zero_coefficients() const {
    SvrModel out;
    out.kernel = kernel;
    out.bias = bias;
    out.epsilon = epsilon;
    out.support_inputs = DenseMatrix(0, support_inputs.cols());
    for (std::size_t i = 0; i < dual_coefs.size(); ++i) {
        if (dual_coefs[i] != 0.0) {
            out.support_inputs.append_row(support_inputs.row(i));
            out.dual_coefs.push_back(dual_coefs[i]);
        }
    }
    return out;
}

double predict(const SvrModel& model, std::span<const double> x) {
    if (x.size() != model.dimension() && model.support_inputs.rows() > 0) {
        throw ShapeError("predict: input has dimension " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(model.dimension()));
    }
    double f = 0.0;
    for (std::size_t i = 0; i < model.dual_coefs.size(); ++i) {
        f += model.dual_coefs[i] * model.kernel(model.support_inputs.row(i), x);
    }
    return f + model.bias;
}

std::vector<double> predict_all(const SvrModel& model, const DenseMatrix& inputs) {
    std::vector<double> out(inputs.rows());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        out[r] = predict(model, inputs.row(r));
    }
    return out;
}

TrainingResult train_nu_svr(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel,
                            const IterationObserver& observer) {
    data.validate();
    params.validate();
    NuSolver solver(data, params, kernel);
    TrainingResult result;
    result.iterations = solver.solve(observer);
    result.final_violation = solver.last_violation();

    const std::size_t n = data.size();
    const auto& a = solver.multipliers();
    result.duals.alpha.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
    result.duals.alpha_star.assign(a.begin() + static_cast<std::ptrdiff_t>(n), a.end());
    result.duals.objective = solver.objective();

    const auto [bias, epsilon] = solver.bias_and_epsilon();
    SvrModel& model = result.model;
    model.kernel = kernel;
    model.bias = bias;
    model.epsilon = epsilon;
    model.support_inputs = DenseMatrix(0, data.inputs.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = result.duals.alpha[i] - result.duals.alpha_star[i];
        if (beta != 0.0) {
            model.support_inputs.append_row(data.inputs.row(i));
            model.dual_coefs.push_back(beta);
        }
    }
    return result;
}

double dual_objective(const TrainingSet& data, const KernelSpec& kernel, const DualSolution& duals) {
    const std::size_t n = data.size();
    if (duals.alpha.size() != n || duals.alpha_star.size() != n) {
        throw ShapeError("dual_objective: multiplier count does not match the training set");
    }
    const auto beta = duals.coefficients();
    double quad = 0.0;
    double linear = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (beta[i] == 0.0) {
            continue;
        }
        linear += data.targets[i] * beta[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (beta[j] != 0.0) {
                quad += beta[i] * beta[j] * kernel(data.inputs.row(i), data.inputs.row(j));
            }
        }
    }
    return 0.5 * quad - linear;
}

double kkt_violation(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel,
                     const DualSolution& duals) {
    const std::size_t n = data.size();
    if (duals.alpha.size() != n || duals.alpha_star.size() != n) {
        throw ShapeError("kkt_violation: multiplier count does not match the training set");
    }
    const double bound = params.c / static_cast<double>(n);
    const auto g = gradient(data, kernel, duals);

    // Group multiplier lambda_g must satisfy G_k + lambda_g >= 0 where a_k may
    // increase and <= 0 where a_k may decrease.
    GroupBounds groups[2];
    double total = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const double ak = k < n ? duals.alpha[k] : duals.alpha_star[k - n];
        total += ak;
        auto& grp = groups[k < n ? 0 : 1];
        if (ak < bound) {
            grp.lower = std::max(grp.lower, -g[k]);
        }
        if (ak > 0.0) {
            grp.upper = std::min(grp.upper, -g[k]);
        }
    }
    // lambda_alpha = b + mu, lambda_alpha* = -b + mu with mu >= 0 the multiplier
    // of e^T(a + a*) <= C nu; mu = 0 unless that constraint is active.
    const auto& gp = groups[0];
    const auto& gn = groups[1];
    double violation = std::max({0.0, gp.lower - gp.upper, gn.lower - gn.upper});
    violation = std::max(violation, -(gp.upper + gn.upper));
    const double budget = params.c * params.nu;
    if (total < budget * (1.0 - 1e-12)) {
        violation = std::max(violation, gp.lower + gn.lower);
    }
    return std::isfinite(violation) ? violation : 0.0;
}

}  // namespace phevdemand::svr
