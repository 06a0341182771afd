#include "phevdemand/qp_oracle.hpp"

#include "phevdemand/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace phevdemand::svr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::size_t kMaxSweeps = 400;
constexpr std::size_t kItersPerSweep = 500;

struct Problem {
    std::size_t n;
    double cap;
    double group_total;
    MatrixXd q;  // 2N x 2N
    VectorXd p;

    double objective(const VectorXd& a) const { return 0.5 * a.dot(q * a) + p.dot(a); }
};

VectorXd project(const Problem& pr, const VectorXd& v) {
    VectorXd out(2 * pr.n);
    for (int g = 0; g < 2; ++g) {
        std::vector<double> part(v.data() + g * pr.n, v.data() + (g + 1) * pr.n);
        const auto proj = project_capped_simplex(part, pr.cap, pr.group_total);
        for (std::size_t k = 0; k < pr.n; ++k) {
            out(static_cast<Eigen::Index>(g * pr.n + k)) = proj[k];
        }
    }
    return out;
}

// Solves the KKT system with the current bound pattern held fixed.
// Returns true and overwrites `a` when the result is feasible and optimal.
bool polish(const Problem& pr, VectorXd& a) {
    const auto l = static_cast<Eigen::Index>(2 * pr.n);
    const double tol = 1e-9 * pr.cap;
    std::vector<Eigen::Index> free;
    VectorXd fixed = VectorXd::Zero(l);
    for (Eigen::Index k = 0; k < l; ++k) {
        if (a(k) <= tol) {
            fixed(k) = 0.0;
        } else if (a(k) >= pr.cap - tol) {
            fixed(k) = pr.cap;
        } else {
            free.push_back(k);
        }
    }
    VectorXd candidate = fixed;
    const auto nf = static_cast<Eigen::Index>(free.size());
    if (nf > 0) {
        MatrixXd kkt = MatrixXd::Zero(nf + 2, nf + 2);
        VectorXd rhs = VectorXd::Zero(nf + 2);
        const VectorXd qfixed = pr.q * fixed;
        double group_fixed[2] = {0.0, 0.0};
        for (Eigen::Index k = 0; k < l; ++k) {
            group_fixed[k < static_cast<Eigen::Index>(pr.n) ? 0 : 1] += fixed(k);
        }
        for (Eigen::Index r = 0; r < nf; ++r) {
            for (Eigen::Index c = 0; c < nf; ++c) {
                kkt(r, c) = pr.q(free[r], free[c]);
            }
            const int g = free[r] < static_cast<Eigen::Index>(pr.n) ? 0 : 1;
            kkt(r, nf + g) = 1.0;
            kkt(nf + g, r) = 1.0;
            rhs(r) = -pr.p(free[r]) - qfixed(free[r]);
        }
        rhs(nf) = pr.group_total - group_fixed[0];
        rhs(nf + 1) = pr.group_total - group_fixed[1];
        const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        for (Eigen::Index r = 0; r < nf; ++r) {
            candidate(free[r]) = sol(r);
        }
    }
    // Feasibility of the polished point.
    const double slack = 1e-10 * std::max(1.0, pr.cap);
    double sums[2] = {0.0, 0.0};
    for (Eigen::Index k = 0; k < l; ++k) {
        if (candidate(k) < -slack || candidate(k) > pr.cap + slack) {
            return false;
        }
        candidate(k) = std::clamp(candidate(k), 0.0, pr.cap);
        sums[k < static_cast<Eigen::Index>(pr.n) ? 0 : 1] += candidate(k);
    }
    for (double s : sums) {
        if (std::fabs(s - pr.group_total) > 1e-9 * std::max(1.0, pr.group_total)) {
            return false;
        }
    }
    // Optimality: per group, some multiplier lambda has G_k + lambda >= 0 where
    // a_k may rise and <= 0 where it may fall.
    const VectorXd grad = pr.q * candidate + pr.p;
    const double gtol = 1e-9 * std::max(1.0, grad.cwiseAbs().maxCoeff());
    for (int g = 0; g < 2; ++g) {
        double lower = -HUGE_VAL;
        double upper = HUGE_VAL;
        for (std::size_t k = g * pr.n; k < (g + 1) * pr.n; ++k) {
            const auto idx = static_cast<Eigen::Index>(k);
            if (candidate(idx) < pr.cap) {
                lower = std::max(lower, -grad(idx));
            }
            if (candidate(idx) > 0.0) {
                upper = std::min(upper, -grad(idx));
            }
        }
        if (lower > upper + gtol) {
            return false;
        }
    }
    a = candidate;
    return true;
}

VectorXd solve_from(const Problem& pr, VectorXd start, double lipschitz) {
    VectorXd x = project(pr, start);
    VectorXd y = x;
    double t = 1.0;
    const double step = 1.0 / lipschitz;
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (std::size_t it = 0; it < kItersPerSweep; ++it) {
            const VectorXd grad = pr.q * y + pr.p;
            const VectorXd next = project(pr, y - step * grad);
            // Gradient-based restart keeps the accelerated scheme monotone enough.
            if ((y - next).dot(next - x) > 0.0) {
                t = 1.0;
                y = x;
                continue;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = next + ((t - 1.0) / t_next) * (next - x);
            x = next;
            t = t_next;
        }
        VectorXd polished = x;
        if (polish(pr, polished) && pr.objective(polished) <= pr.objective(x) + 1e-12 * std::max(1.0, std::fabs(pr.objective(x)))) {
            return polished;
        }
    }
    return x;
}

}  // namespace

std::vector<double> project_capped_simplex(const std::vector<double>& v, double cap, double total) {
    const auto clipped_sum = [&](double shift) {
        double s = 0.0;
        for (double x : v) {
            s += std::clamp(x - shift, 0.0, cap);
        }
        return s;
    };
    double lo = *std::min_element(v.begin(), v.end()) - cap;
    double hi = *std::max_element(v.begin(), v.end());
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        if (clipped_sum(mid) > total) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double shift = 0.5 * (lo + hi);
    // Exact shift for the identified free set.
    for (int refine = 0; refine < 3; ++refine) {
        double free_sum = 0.0;
        double fixed_sum = 0.0;
        std::size_t n_free = 0;
        for (double x : v) {
            const double y = x - shift;
            if (y <= 0.0) {
                continue;
            }
            if (y >= cap) {
                fixed_sum += cap;
            } else {
                free_sum += x;
                ++n_free;
            }
        }
        if (n_free == 0) {
            break;
        }
        shift = (free_sum - (total - fixed_sum)) / static_cast<double>(n_free);
    }
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        out[k] = std::clamp(v[k] - shift, 0.0, cap);
    }
    return out;
}

OracleResult brute_force_qp_oracle(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel) {
    data.validate();
    params.validate();
    const std::size_t n = data.size();
    if (n > kOracleMaxPoints) {
        throw DomainError("brute-force QP oracle refuses N = " + std::to_string(n) + " > " +
                          std::to_string(kOracleMaxPoints));
    }
    Problem pr;
    pr.n = n;
    pr.cap = params.c / static_cast<double>(n);
    pr.group_total = params.c * params.nu / 2.0;
    const auto l = static_cast<Eigen::Index>(2 * n);
    pr.q = MatrixXd::Zero(l, l);
    pr.p = VectorXd::Zero(l);
    const DenseMatrix gram = gram_matrix(kernel, data.inputs);
    for (std::size_t i = 0; i < n; ++i) {
        pr.p(static_cast<Eigen::Index>(i)) = -data.targets[i];
        pr.p(static_cast<Eigen::Index>(i + n)) = data.targets[i];
        for (std::size_t j = 0; j < n; ++j) {
            const double k = gram(i, j);
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            const auto nn = static_cast<Eigen::Index>(n);
            pr.q(ii, jj) = k;
            pr.q(ii + nn, jj + nn) = k;
            pr.q(ii, jj + nn) = -k;
            pr.q(ii + nn, jj) = -k;
        }
    }
    const double lipschitz = std::max(1e-12, Eigen::SelfAdjointEigenSolver<MatrixXd>(pr.q).eigenvalues().maxCoeff());

    std::mt19937_64 rng(20160521);
    std::uniform_real_distribution<double> unit(0.0, pr.cap);
    VectorXd best;
    double objectives[2] = {0.0, 0.0};
    for (int restart = 0; restart < 2; ++restart) {
        VectorXd start(l);
        for (Eigen::Index k = 0; k < l; ++k) {
            start(k) = unit(rng);
        }
        const VectorXd sol = solve_from(pr, start, lipschitz);
        objectives[restart] = pr.objective(sol);
        if (restart == 0 || objectives[restart] < objectives[0]) {
            best = sol;
        }
    }

    OracleResult result;
    result.duals.alpha.resize(n);
    result.duals.alpha_star.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.duals.alpha[i] = best(static_cast<Eigen::Index>(i));
        result.duals.alpha_star[i] = best(static_cast<Eigen::Index>(i + n));
    }
    result.objective = pr.objective(best);
    result.duals.objective = result.objective;
    result.restart_gap = std::fabs(objectives[0] - objectives[1]);
    return result;
}

}  // namespace phevdemand::svr
