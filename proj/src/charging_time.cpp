#include "phevdemand/charging_time.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace phevdemand::demand {

using numerics::normal_cdf;
using numerics::normal_pdf;

namespace {

constexpr std::size_t kRicianCells = 1024;
constexpr std::size_t kCellOrder = 8;
constexpr std::size_t kMomentPanels = 512;
constexpr double kMinTruncatedMass = 1e-6;

// Upper-tail probability Q(z) = P(Z > z).
double upper_tail(double z) {
    return normal_cdf(-z);
}

double rician_raw_pdf(double x, double nu, double sigma) {
    if (x <= 0.0) {
        return 0.0;
    }
    const double s2 = sigma * sigma;
    const double d = x - nu;
    return x / s2 * std::exp(-0.5 * d * d / s2) * numerics::bessel_i0e(x * nu / s2);
}

double truncated_gaussian_norm(double mu, double sigma) {
    return upper_tail(-mu / sigma) - upper_tail((kMaxChargingHours - mu) / sigma);
}

// Composite Gauss-Legendre moments of an (unnormalised) density on [0, 24).
Moments density_moments(const std::function<double(double)>& density) {
    const double mass = numerics::integrate(density, 0.0, kMaxChargingHours, kMomentPanels);
    const double m1 =
        numerics::integrate([&](double x) { return x * density(x); }, 0.0, kMaxChargingHours, kMomentPanels) /
        mass;
    const double c2 = numerics::integrate([&](double x) { return (x - m1) * (x - m1) * density(x); }, 0.0,
                                          kMaxChargingHours, kMomentPanels) /
                      mass;
    return {m1, c2};
}

// E[min(U, x)] for U ~ Uniform[a, b]; a point mass when a == b.
double uniform_expected_min(double a, double b, double x) {
    if (x <= a) {
        return x;
    }
    if (x >= b) {
        return 0.5 * (a + b);
    }
    const double over = x - a;
    return a + over - over * over / (2.0 * (b - a));
}

double uniform_survival(double a, double b, double u) {
    if (u < a) {
        return 1.0;
    }
    if (u >= b) {
        return 0.0;
    }
    return (b - u) / (b - a);
}

}  // namespace

struct ChargingTimeDist::RicianTable {
    double nu;
    double sigma;
    double cell;
    std::vector<double> cum_mass;  // unnormalised, at cell boundaries
    std::vector<double> cum_first;

    RicianTable(double nu_, double sigma_) : nu(nu_), sigma(sigma_), cell(kMaxChargingHours / kRicianCells) {
        cum_mass.assign(kRicianCells + 1, 0.0);
        cum_first.assign(kRicianCells + 1, 0.0);
        for (std::size_t c = 0; c < kRicianCells; ++c) {
            const double lo = cell * static_cast<double>(c);
            const auto [m0, m1] = partial(lo, lo + cell);
            cum_mass[c + 1] = cum_mass[c] + m0;
            cum_first[c + 1] = cum_first[c] + m1;
        }
    }

    std::array<double, 2> partial(double lo, double hi) const {
        if (hi <= lo) {
            return {0.0, 0.0};
        }
        const auto& rule = numerics::gauss_legendre(kCellOrder);
        const double half = 0.5 * (hi - lo);
        const double mid = lo + half;
        double m0 = 0.0;
        double m1 = 0.0;
        for (std::size_t k = 0; k < kCellOrder; ++k) {
            const double x = mid + half * rule.nodes[k];
            const double f = rule.weights[k] * rician_raw_pdf(x, nu, sigma);
            m0 += f;
            m1 += f * x;
        }
        return {m0 * half, m1 * half};
    }

    // Unnormalised integrals of f and x f over [0, x].
    std::array<double, 2> cumulative(double x) const {
        x = std::clamp(x, 0.0, kMaxChargingHours);
        auto c = static_cast<std::size_t>(x / cell);
        if (c >= kRicianCells) {
            return {cum_mass.back(), cum_first.back()};
        }
        const auto [m0, m1] = partial(cell * static_cast<double>(c), x);
        return {cum_mass[c] + m0, cum_first[c] + m1};
    }
};

std::string_view to_string(ChargingFamily family) {
    switch (family) {
    case ChargingFamily::Uniform:
        return "uniform";
    case ChargingFamily::TruncatedGaussian:
        return "trunc-gaussian";
    case ChargingFamily::Rician:
        return "rician";
    case ChargingFamily::EmpiricalPmf:
        return "non-uniform";
    }
    return "unknown";
}

ChargingFamily parse_charging_family(std::string_view name) {
    if (name == "uniform") {
        return ChargingFamily::Uniform;
    }
    if (name == "trunc-gaussian" || name == "truncated-gaussian") {
        return ChargingFamily::TruncatedGaussian;
    }
    if (name == "rician") {
        return ChargingFamily::Rician;
    }
    if (name == "non-uniform" || name == "empirical") {
        return ChargingFamily::EmpiricalPmf;
    }
    throw DomainError("unknown charging-time family '" + std::string(name) + "'");
}

ChargingTimeDist::ChargingTimeDist(Params params) : params_(std::move(params)) {}

ChargingTimeDist ChargingTimeDist::uniform(double a, double b) {
    if (!(a > 0.0) || !(b > a) || !(b <= kMaxChargingHours)) {
        throw DomainError("uniform charging time needs 0 < a < b <= 24");
    }
    ChargingTimeDist d(UniformParams{a, b});
    d.finish_construction();
    return d;
}

ChargingTimeDist ChargingTimeDist::truncated_gaussian(double mu, double sigma) {
    if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("truncated gaussian needs finite mu and sigma > 0");
    }
    if (truncated_gaussian_norm(mu, sigma) < kMinTruncatedMass) {
        throw DomainError("truncated gaussian keeps almost no mass inside (0, 24)");
    }
    ChargingTimeDist d(TruncatedGaussianParams{mu, sigma});
    d.finish_construction();
    return d;
}

ChargingTimeDist ChargingTimeDist::rician(double nu, double sigma) {
    if (!(nu >= 0.0) || !std::isfinite(nu) || !(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("rician needs nu >= 0 and sigma > 0");
    }
    ChargingTimeDist d(RicianParams{nu, sigma});
    d.rician_ = std::make_shared<const RicianTable>(nu, sigma);
    if (d.rician_->cum_mass.back() < kMinTruncatedMass) {
        throw DomainError("rician keeps almost no mass inside [0, 24)");
    }
    d.finish_construction();
    return d;
}

ChargingTimeDist ChargingTimeDist::empirical(std::vector<double> bin_edges, std::vector<double> masses) {
    if (masses.empty() || bin_edges.size() != masses.size() + 1) {
        throw DomainError("empirical pmf needs masses.size() + 1 bin edges");
    }
    for (std::size_t k = 0; k < bin_edges.size(); ++k) {
        if (!std::isfinite(bin_edges[k]) || bin_edges[k] < 0.0 || bin_edges[k] > kMaxChargingHours) {
            throw DomainError("empirical pmf bin edge " + std::to_string(k) + " outside [0, 24]");
        }
        if (k > 0 && bin_edges[k] < bin_edges[k - 1]) {
            throw DomainError("empirical pmf bin edges must be non-decreasing");
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < masses.size(); ++k) {
        if (!std::isfinite(masses[k]) || masses[k] < 0.0) {
            throw DomainError("empirical pmf mass " + std::to_string(k) + " is negative");
        }
        const bool atom = bin_edges[k] == bin_edges[k + 1];
        if (atom && masses[k] > 0.0 && (bin_edges[k] <= 0.0 || bin_edges[k] >= kMaxChargingHours)) {
            throw DomainError("empirical pmf point mass must lie strictly inside (0, 24)");
        }
        total += masses[k];
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw DomainError("empirical pmf masses must sum to 1 (got " + std::to_string(total) + ")");
    }
    for (double& m : masses) {
        m /= total;
    }
    ChargingTimeDist d(EmpiricalPmfParams{std::move(bin_edges), std::move(masses)});
    d.finish_construction();
    return d;
}

ChargingTimeDist ChargingTimeDist::point_mass(double hours) {
    return empirical({hours, hours}, {1.0});
}

void ChargingTimeDist::finish_construction() {
    if (const auto* u = as_uniform()) {
        mean_ = 0.5 * (u->a + u->b);
        variance_ = (u->b - u->a) * (u->b - u->a) / 12.0;
        upper_ = u->b;
    } else if (const auto* g = as_truncated_gaussian()) {
        norm_ = truncated_gaussian_norm(g->mu, g->sigma);
        const auto m = integrate_moments(*this);
        mean_ = m.mean;
        variance_ = m.variance;
    } else if (as_rician() != nullptr) {
        norm_ = rician_->cum_mass.back();
        const auto m = integrate_moments(*this);
        mean_ = m.mean;
        variance_ = m.variance;
    } else {
        const auto& e = *as_empirical();
        double m1 = 0.0;
        double m2 = 0.0;
        upper_ = 0.0;
        for (std::size_t k = 0; k < e.masses.size(); ++k) {
            const double a = e.bin_edges[k];
            const double b = e.bin_edges[k + 1];
            m1 += e.masses[k] * 0.5 * (a + b);
            m2 += e.masses[k] * (a * a + a * b + b * b) / 3.0;
            if (e.masses[k] > 0.0) {
                upper_ = std::max(upper_, b);
            }
        }
        mean_ = m1;
        variance_ = m2 - m1 * m1;
    }
}

ChargingFamily ChargingTimeDist::family() const noexcept {
    switch (params_.index()) {
    case 0:
        return ChargingFamily::Uniform;
    case 1:
        return ChargingFamily::TruncatedGaussian;
    case 2:
        return ChargingFamily::Rician;
    default:
        return ChargingFamily::EmpiricalPmf;
    }
}

double ChargingTimeDist::survival(double u) const {
    if (u < 0.0) {
        return 1.0;
    }
    if (u >= upper_) {
        return 0.0;
    }
    if (const auto* un = as_uniform()) {
        return uniform_survival(un->a, un->b, u);
    }
    if (const auto* g = as_truncated_gaussian()) {
        const double beta = (kMaxChargingHours - g->mu) / g->sigma;
        const double z = (u - g->mu) / g->sigma;
        return std::clamp((upper_tail(z) - upper_tail(beta)) / norm_, 0.0, 1.0);
    }
    if (rician_) {
        return std::clamp(1.0 - rician_->cumulative(u)[0] / norm_, 0.0, 1.0);
    }
    const auto& e = *as_empirical();
    double s = 0.0;
    for (std::size_t k = 0; k < e.masses.size(); ++k) {
        s += e.masses[k] * uniform_survival(e.bin_edges[k], e.bin_edges[k + 1], u);
    }
    return std::clamp(s, 0.0, 1.0);
}

double ChargingTimeDist::expected_min(double x) const {
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= upper_) {
        return mean_;
    }
    if (const auto* un = as_uniform()) {
        return uniform_expected_min(un->a, un->b, x);
    }
    if (const auto* g = as_truncated_gaussian()) {
        // Integral of (Q(z_u) - Q(beta)) / norm over u in [0, x]; Q has
        // antiderivative z Q(z) - phi(z).
        const double alpha = -g->mu / g->sigma;
        const double beta = (kMaxChargingHours - g->mu) / g->sigma;
        const double zx = (x - g->mu) / g->sigma;
        const auto anti = [](double z) { return z * upper_tail(z) - normal_pdf(z); };
        const double integral_q = g->sigma * (anti(zx) - anti(alpha));
        return (integral_q - x * upper_tail(beta)) / norm_;
    }
    if (rician_) {
        const auto [m0, m1] = rician_->cumulative(x);
        return m1 / norm_ + x * (1.0 - m0 / norm_);
    }
    const auto& e = *as_empirical();
    double total = 0.0;
    for (std::size_t k = 0; k < e.masses.size(); ++k) {
        total += e.masses[k] * uniform_expected_min(e.bin_edges[k], e.bin_edges[k + 1], x);
    }
    return total;
}

double ChargingTimeDist::pdf(double x) const {
    if (x < 0.0 || x >= kMaxChargingHours) {
        return 0.0;
    }
    if (const auto* un = as_uniform()) {
        return (x >= un->a && x < un->b) ? 1.0 / (un->b - un->a) : 0.0;
    }
    if (const auto* g = as_truncated_gaussian()) {
        return x > 0.0 ? normal_pdf((x - g->mu) / g->sigma) / (g->sigma * norm_) : 0.0;
    }
    if (const auto* r = as_rician()) {
        return rician_raw_pdf(x, r->nu, r->sigma) / norm_;
    }
    const auto& e = *as_empirical();
    for (std::size_t k = 0; k < e.masses.size(); ++k) {
        const double a = e.bin_edges[k];
        const double b = e.bin_edges[k + 1];
        if (b > a && x >= a && x < b) {
            return e.masses[k] / (b - a);
        }
    }
    return 0.0;
}

double ChargingTimeDist::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (const auto* un = as_uniform()) {
        return un->a + (un->b - un->a) * unit(rng);
    }
    if (const auto* g = as_truncated_gaussian()) {
        std::normal_distribution<double> normal(g->mu, g->sigma);
        for (;;) {
            const double x = normal(rng);
            if (x > 0.0 && x < kMaxChargingHours) {
                return x;
            }
        }
    }
    if (const auto* r = as_rician()) {
        std::normal_distribution<double> normal(0.0, r->sigma);
        for (;;) {
            const double x = std::hypot(r->nu + normal(rng), normal(rng));
            if (x < kMaxChargingHours) {
                return x;
            }
        }
    }
    const auto& e = *as_empirical();
    const double u = unit(rng);
    double cum = 0.0;
    std::size_t k = 0;
    for (; k + 1 < e.masses.size(); ++k) {
        cum += e.masses[k];
        if (u < cum) {
            break;
        }
    }
    while (e.masses[k] == 0.0 && k > 0) {
        --k;
    }
    const double a = e.bin_edges[k];
    const double b = e.bin_edges[k + 1];
    return a + (b - a) * unit(rng);
}

Moments integrate_moments(const ChargingTimeDist& dist) {
    if (const auto* e = dist.as_empirical()) {
        double m1 = 0.0;
        for (std::size_t k = 0; k < e->masses.size(); ++k) {
            m1 += e->masses[k] * 0.5 * (e->bin_edges[k] + e->bin_edges[k + 1]);
        }
        double c2 = 0.0;
        for (std::size_t k = 0; k < e->masses.size(); ++k) {
            const double a = e->bin_edges[k] - m1;
            const double b = e->bin_edges[k + 1] - m1;
            c2 += e->masses[k] * (a * a + a * b + b * b) / 3.0;
        }
        return {m1, c2};
    }
    if (const auto* u = dist.as_uniform()) {
        // Split at the support edges so every panel sees a smooth integrand.
        const double width = u->b - u->a;
        const double m1 = numerics::integrate([&](double x) { return x / width; }, u->a, u->b, 8);
        const double c2 =
            numerics::integrate([&](double x) { return (x - m1) * (x - m1) / width; }, u->a, u->b, 8);
        return {m1, c2};
    }
    return density_moments([&](double x) { return dist.pdf(x); });
}

namespace {

using Vec2 = std::array<double, 2>;

// Damped Newton on a 2-vector residual with central-difference Jacobian.
// Returns the parameters or throws InfeasibleTargetError.
Vec2 solve_two_by_two(const std::function<Vec2(const Vec2&)>& residual, Vec2 theta, const char* family) {
    constexpr int kMaxIterations = 80;
    constexpr double kTolerance = 1e-13;
    constexpr double kStep = 1e-6;
    const auto norm = [](const Vec2& r) { return std::max(std::fabs(r[0]), std::fabs(r[1])); };
    const auto safe_residual = [&](const Vec2& t) -> Vec2 {
        try {
            const Vec2 r = residual(t);
            if (std::isfinite(r[0]) && std::isfinite(r[1])) {
                return r;
            }
        } catch (const DomainError&) {
        }
        return {HUGE_VAL, HUGE_VAL};
    };
    Vec2 r = safe_residual(theta);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        if (norm(r) < kTolerance) {
            return theta;
        }
        std::array<Vec2, 2> jac{};
        for (int j = 0; j < 2; ++j) {
            Vec2 plus = theta;
            Vec2 minus = theta;
            plus[j] += kStep;
            minus[j] -= kStep;
            const Vec2 rp = safe_residual(plus);
            const Vec2 rm = safe_residual(minus);
            jac[0][j] = (rp[0] - rm[0]) / (2.0 * kStep);
            jac[1][j] = (rp[1] - rm[1]) / (2.0 * kStep);
        }
        const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if (!std::isfinite(det) || std::fabs(det) < 1e-300) {
            break;
        }
        const Vec2 delta{(jac[1][1] * r[0] - jac[0][1] * r[1]) / det, (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det};
        double scale = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Vec2 trial{theta[0] - scale * delta[0], theta[1] - scale * delta[1]};
            const Vec2 rt = safe_residual(trial);
            if (norm(rt) < norm(r)) {
                theta = trial;
                r = rt;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    if (norm(r) < 1e-9) {
        return theta;
    }
    std::ostringstream msg;
    msg << "moment matching for " << family << " did not converge (residual " << norm(r) << ")";
    throw InfeasibleTargetError(msg.str());
}

}  // namespace

ChargingTimeDist moment_match(ChargingFamily family, double target_mean, double target_var) {
    if (!(target_mean > 0.0) || !(target_var > 0.0)) {
        throw DomainError("moment_match needs target_mean > 0 and target_var > 0");
    }
    switch (family) {
    case ChargingFamily::Uniform: {
        const double half = std::sqrt(3.0 * target_var);
        const double a = target_mean - half;
        const double b = target_mean + half;
        if (!(a > 0.0) || !(b <= kMaxChargingHours)) {
            throw InfeasibleTargetError("uniform support for the requested moments leaves (0, 24]");
        }
        return ChargingTimeDist::uniform(a, b);
    }
    case ChargingFamily::TruncatedGaussian: {
        const auto residual = [&](const Vec2& t) -> Vec2 {
            const double mu = t[0];
            const double sigma = std::exp(t[1]);
            const double norm = truncated_gaussian_norm(mu, sigma);
            if (norm < kMinTruncatedMass) {
                throw DomainError("negligible mass");
            }
            const auto m = density_moments([&](double x) {
                return x > 0.0 ? normal_pdf((x - mu) / sigma) / (sigma * norm) : 0.0;
            });
            return {(m.mean - target_mean) / target_mean, (m.variance - target_var) / target_var};
        };
        const Vec2 theta =
            solve_two_by_two(residual, {target_mean, std::log(std::sqrt(target_var))}, "trunc-gaussian");
        return ChargingTimeDist::truncated_gaussian(theta[0], std::exp(theta[1]));
    }
    case ChargingFamily::Rician: {
        // Untruncated Rice has coefficient of variation^2 at most (4 - pi) / pi (Rayleigh).
        if (target_var / (target_mean * target_mean) >= (4.0 - numerics::kPi) / numerics::kPi) {
            throw InfeasibleTargetError("rician cannot reach a coefficient of variation this large");
        }
        const auto residual = [&](const Vec2& t) -> Vec2 {
            const double nu = std::exp(t[0]);
            const double sigma = std::exp(t[1]);
            const auto m = density_moments([&](double x) { return rician_raw_pdf(x, nu, sigma); });
            return {(m.mean - target_mean) / target_mean, (m.variance - target_var) / target_var};
        };
        // Start from E[R^2] = nu^2 + 2 sigma^2 with sigma^2 ~ var.
        const double second = target_var + target_mean * target_mean;
        const double nu0 = std::sqrt(std::max(second - 2.0 * target_var, 0.05 * second));
        const Vec2 theta = solve_two_by_two(residual, {std::log(nu0), std::log(std::sqrt(target_var))}, "rician");
        return ChargingTimeDist::rician(std::exp(theta[0]), std::exp(theta[1]));
    }
    case ChargingFamily::EmpiricalPmf:
        break;
    }
    throw DomainError("moment_match: the empirical PMF family is not parametric");
}

ChargingTimeDist default_nonuniform_pmf() {
    std::vector<double> edges(11);
    std::iota(edges.begin(), edges.end(), 1.0);
    return ChargingTimeDist::empirical(
        std::move(edges), {0.213, 0.051, 0.021, 0.029, 0.039, 0.107, 0.270, 0.186, 0.049, 0.035});
}

ChargingTimeDist parse_empirical_pmf(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("empirical pmf: ") + e.what(), 0);
    }
    if (!doc.is_object()) {
        throw ParseError("empirical pmf: top level must be an object", 0);
    }
    for (const auto& [key, value] : doc.items()) {
        if (key != "bin_edges_hours" && key != "masses") {
            throw ParseError("empirical pmf: unexpected key '" + key + "'", 0);
        }
    }
    const auto read_array = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_array()) {
            throw ParseError(std::string("empirical pmf: '") + key + "' must be an array of numbers", 0);
        }
        std::vector<double> out;
        for (const auto& v : doc[key]) {
            if (!v.is_number()) {
                throw ParseError(std::string("empirical pmf: '") + key + "' contains a non-number", 0);
            }
            out.push_back(v.get<double>());
        }
        return out;
    };
    auto edges = read_array("bin_edges_hours");
    auto masses = read_array("masses");
    return ChargingTimeDist::empirical(std::move(edges), std::move(masses));
}

ChargingTimeDist load_empirical_pmf(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open empirical pmf file " + path, 0);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_empirical_pmf(buffer.str());
}

}  // namespace phevdemand::demand
