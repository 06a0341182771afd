#pragma once

#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace phevdemand::demand {

/// Longest admissible charging duration; every family is restricted to
/// (0, 24) h so a charging window wraps past midnight at most once.
inline constexpr double kMaxChargingHours = 24.0;

enum class ChargingFamily { Uniform, TruncatedGaussian, Rician, EmpiricalPmf };

std::string_view to_string(ChargingFamily family);
ChargingFamily parse_charging_family(std::string_view name);

struct UniformParams {
    double a;
    double b;
};

/// Gaussian(mu, sigma) restricted to (0, 24) and renormalized.
struct TruncatedGaussianParams {
    double mu;
    double sigma;
};

/// Rice(nu, sigma) restricted to [0, 24) and renormalized.
struct RicianParams {
    double nu;
    double sigma;
};

/// Piecewise-uniform PMF: masses[k] spread evenly over [bin_edges[k], bin_edges[k+1]].
/// A zero-width bin is a point mass.
struct EmpiricalPmfParams {
    std::vector<double> bin_edges;
    std::vector<double> masses;
};

/// Required charging duration T_c in hours.
///
/// Besides the survival function the distribution exposes
/// expected_min(x) = E[min(T_c, x)] = integral of P(T_c > u) over [0, x],
/// which is what the expected-demand convolution consumes.
class ChargingTimeDist {
public:
    /// Constructors validate and throw DomainError on bad parameters.
    static ChargingTimeDist uniform(double a, double b);
    static ChargingTimeDist truncated_gaussian(double mu, double sigma);
    static ChargingTimeDist rician(double nu, double sigma);
    static ChargingTimeDist empirical(std::vector<double> bin_edges, std::vector<double> masses);
    /// Deterministic duration, i.e. a single zero-width bin.
    static ChargingTimeDist point_mass(double hours);

    ChargingFamily family() const noexcept;
    const UniformParams* as_uniform() const noexcept { return std::get_if<UniformParams>(&params_); }
    const TruncatedGaussianParams* as_truncated_gaussian() const noexcept {
        return std::get_if<TruncatedGaussianParams>(&params_);
    }
    const RicianParams* as_rician() const noexcept { return std::get_if<RicianParams>(&params_); }
    const EmpiricalPmfParams* as_empirical() const noexcept { return std::get_if<EmpiricalPmfParams>(&params_); }

    /// P(T_c > u); 1 for u < 0.
    double survival(double u) const;
    /// E[min(T_c, x)], clamped at x = 24.
    double expected_min(double x) const;
    /// Density on the continuous part (point masses excluded).
    double pdf(double x) const;

    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }
    /// Smallest value with survival == 0.
    double upper_bound() const noexcept { return upper_; }

    double sample(std::mt19937_64& rng) const;

private:
    struct RicianTable;
    using Params = std::variant<UniformParams, TruncatedGaussianParams, RicianParams, EmpiricalPmfParams>;

    explicit ChargingTimeDist(Params params);
    void finish_construction();

    Params params_;
    std::shared_ptr<const RicianTable> rician_;
    double norm_ = 1.0;  // truncation normaliser for the continuous families
    double mean_ = 0.0;
    double variance_ = 0.0;
    double upper_ = kMaxChargingHours;
};

/// Mean and variance of `dist` by composite Gauss-Legendre integration of its
/// density (continuous families) or by summation over bins (EmpiricalPmf).
struct Moments {
    double mean;
    double variance;
};
Moments integrate_moments(const ChargingTimeDist& dist);

/// Picks the parameters of `family` whose mean and variance hit the targets.
/// Uniform is closed form; TruncatedGaussian and Rician use a damped
/// two-dimensional Newton iteration on the relative moment residuals.
/// Throws InfeasibleTargetError when no member of the family matches.
ChargingTimeDist moment_match(ChargingFamily family, double target_mean, double target_var);

/// Stand-in for a survey-derived charging-time PMF: ten one-hour bins on
/// [1, 11] h, a short-commute mode near 1-2 h and a second mode at 7-8 h.
/// Mean 6 h and variance 25/3 h^2 exactly, the moments of Uniform(1, 11).
ChargingTimeDist default_nonuniform_pmf();

/// Reads {"bin_edges_hours": [...], "masses": [...]}; throws ParseError or DomainError.
ChargingTimeDist load_empirical_pmf(const std::string& path);
ChargingTimeDist parse_empirical_pmf(std::string_view json_text);

}  // namespace phevdemand::demand
