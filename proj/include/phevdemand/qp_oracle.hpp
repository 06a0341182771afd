#pragma once

#include "phevdemand/svr.hpp"

#include <cstddef>

namespace phevdemand::svr {

inline constexpr std::size_t kOracleMaxPoints = 30;

struct OracleResult {
    DualSolution duals;
    double objective = 0.0;
    /// |objective(restart 1) - objective(restart 2)|.
    double restart_gap = 0.0;
};

/// Reference solver for the nu-SVR dual on small problems (N <= 30).
///
/// Works on the 2N multipliers with both group sums pinned at C nu / 2, a
/// product of two capped simplices with an exact projection. Accelerated
/// projected gradient identifies the active set, which is then polished by
/// solving the equality-constrained KKT system on the free multipliers.
/// Runs from two random feasible starts and keeps the better optimum.
/// Throws DomainError when N exceeds kOracleMaxPoints.
OracleResult brute_force_qp_oracle(const TrainingSet& data, const NuSvrParams& params, const KernelSpec& kernel);

/// Euclidean projection onto {0 <= x <= cap, sum x = total}.
std::vector<double> project_capped_simplex(const std::vector<double>& v, double cap, double total);

}  // namespace phevdemand::svr
