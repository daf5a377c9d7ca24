#include "opengossip/open_analytics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "opengossip/errors.hpp"
#include "opengossip/events.hpp"
#include "opengossip/lp_simplex.hpp"
#include "opengossip/rk4.hpp"

namespace opengossip {

namespace {

constexpr double kFluxWarning = 1e-8;
constexpr double kCertificateTolerance = 1e-10;

double log_poisson(double n0, int j) { return j * std::log(n0) - n0 - std::lgamma(j + 1.0); }

double poisson(double n0, int j) { return std::exp(log_poisson(n0, j)); }

void require_n0(double n0) {
    if (!std::isfinite(n0) || !(n0 > 0.0))
        throw DomainError("no birth-death steady state: need 0 < n0 = lambda_a / lambda_d < inf");
}

// Certified bound on sum_{k > j} pi_k: explicit terms until the ratio
// n0 / (k + 1) is below 1/2 and the terms are negligible against the sum,
// then a geometric bound on the remainder. Tight to rounding.
double poisson_tail(double n0, int j) {
    double sum = 0.0;
    int k = j + 1;
    double term = poisson(n0, k);
    while (k + 1 <= 2.0 * n0 || (term > 1e-18 * sum && term > 0.0)) {
        sum += term;
        term = poisson(n0, ++k);
    }
    return sum + term / (1.0 - n0 / (k + 1.0));
}

void require_open_rates(const RatesConfig& rates) {
    if (rates.lambda_g < 0.0 || rates.lambda_a < 0.0 || rates.lambda_d < 0.0 || rates.sigma2 < 0.0)
        throw DomainError("open-system rates and sigma2 must be nonnegative");
    if (rates.lambda_r != 0.0) throw DomainError("open-system analytics do not model replacements (lambda_r != 0)");
}

void require_initial(const ConditionedMoments& init) {
    if (init.pi.empty() || init.w.size() != init.pi.size())
        throw DomainError("conditioned moments need matching pi and W vectors of size j_max + 1");
    if (init.w[0].x0 != 0.0 || init.w[0].x1 != 0.0) throw DomainError("W_0 must be zero");
}

double default_step(const RatesConfig& rates, int j_max, std::optional<double> max_step) {
    const double fastest = j_max * rates.lambda_g + rates.lambda_a + j_max * rates.lambda_d;
    double h = fastest > 0.0 ? 0.1 / fastest : std::numeric_limits<double>::infinity();
    if (max_step) {
        if (!(*max_step > 0.0)) throw DomainError("max_step must be positive");
        h = std::min(h, *max_step);
    }
    return h;
}

void require_grid(std::span<const double> grid) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0) || !std::isfinite(grid[k])) throw DomainError("grid times must be finite and >= 0");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw DomainError("grid must be strictly increasing");
    }
}

// Per-size coefficient blocks of the conditioned-moment ODE.
struct OpenBlocks {
    std::vector<Mat2> self;
    std::vector<Mat2> from_below;
    std::vector<Vec2> source_below;
    std::vector<Mat2> from_above;
};

OpenBlocks open_blocks(const RatesConfig& rates, int j_max) {
    OpenBlocks b;
    const auto size = static_cast<std::size_t>(j_max) + 1;
    b.self.resize(size);
    b.from_below.resize(size);
    b.source_below.resize(size);
    b.from_above.resize(size);
    const Mat2 eye = Mat2::identity();
    for (int j = 1; j <= j_max; ++j) {
        const double jd = j;
        const auto idx = static_cast<std::size_t>(j);
        const double leave = jd * rates.lambda_d + (j < j_max ? rates.lambda_a : 0.0);
        b.self[idx] = (jd * rates.lambda_g) * (moment_map(EventKind::gossip(), j, rates.sigma2).matrix - eye) -
                      leave * eye;
        const auto arrival = moment_map(EventKind::arrival(), j - 1, rates.sigma2);
        b.from_below[idx] = rates.lambda_a * arrival.matrix;
        b.source_below[idx] = rates.lambda_a * arrival.offset;
        if (j < j_max)
            b.from_above[idx] = ((jd + 1.0) * rates.lambda_d) * moment_map(EventKind::departure(), j + 1, 0.0).matrix;
    }
    return b;
}

// Size-chain derivative with the reflecting closure.
void size_chain_rhs(const RatesConfig& rates, int j_max, auto&& pi, auto&& dpi) {
    for (int j = 0; j <= j_max; ++j) {
        const double out = j * rates.lambda_d + (j < j_max ? rates.lambda_a : 0.0);
        double d = -out * pi(j);
        if (j > 0) d += rates.lambda_a * pi(j - 1);
        if (j < j_max) d += (j + 1.0) * rates.lambda_d * pi(j + 1);
        dpi(j) = d;
    }
}

}  // namespace

double open_n0(const RatesConfig& rates) {
    if (!(rates.lambda_d > 0.0)) throw DomainError("lambda_d must be > 0 for a steady state");
    return rates.lambda_a / rates.lambda_d;
}

double open_gamma(const RatesConfig& rates) {
    if (!(rates.lambda_d > 0.0)) throw DomainError("lambda_d must be > 0 for a steady state");
    return rates.lambda_g / rates.lambda_d;
}

SizeDistribution birth_death_steady_state(double n0, int j_max) {
    require_n0(n0);
    if (j_max < 0) throw DomainError("j_max must be >= 0");
    SizeDistribution d;
    d.j_max = j_max;
    d.pi.resize(static_cast<std::size_t>(j_max) + 1);
    for (int j = 0; j <= j_max; ++j) d.pi[static_cast<std::size_t>(j)] = poisson(n0, j);
    d.tail_mass = poisson_tail(n0, j_max);
    d.mean = n0;
    d.second_moment = n0 * n0 + n0;
    d.variance = n0;
    return d;
}

int default_j_max(double n0) {
    require_n0(n0);
    int j = 0;
    while (poisson_tail(n0, j) >= 1e-12) ++j;
    return j + 10;
}

Vec2 ConditionedMoments::expected() const {
    Vec2 s;
    for (const auto& v : w) s = s + v;
    return s;
}

double ConditionedMoments::expected_variance() const {
    double s = 0.0;
    for (const auto& v : w) s += v.spread();
    return s;
}

double ConditionedMoments::occupancy() const {
    double s = 0.0;
    for (std::size_t j = 1; j < pi.size(); ++j) s += pi[j];
    return s;
}

std::optional<Vec2> ConditionedMoments::conditioned(int j, double floor) const {
    const auto idx = static_cast<std::size_t>(j);
    if (j < 1 || idx >= pi.size() || !(pi[idx] > floor)) return std::nullopt;
    return (1.0 / pi[idx]) * w[idx];
}

ConditionedMoments iid_initial_condition(int n_init, double sigma2, int j_max) {
    if (n_init < 0 || n_init > j_max) throw DomainError("n_init must lie in 0..j_max");
    ConditionedMoments c;
    c.pi.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    c.w.assign(static_cast<std::size_t>(j_max) + 1, Vec2{});
    c.pi[static_cast<std::size_t>(n_init)] = 1.0;
    if (n_init > 0) c.w[static_cast<std::size_t>(n_init)] = {sigma2 / n_init, sigma2};
    return c;
}

ConditionedTrajectory conditioned_moment_ode(const RatesConfig& rates, const ConditionedMoments& initial,
                                             std::span<const double> grid, std::optional<double> max_step) {
    require_open_rates(rates);
    require_initial(initial);
    require_grid(grid);
    const int J = initial.j_max();
    const auto blocks = open_blocks(rates, J);

    // Layout: y[3j] = pi_j, y[3j+1], y[3j+2] = W_j.
    std::vector<double> y0(3 * (static_cast<std::size_t>(J) + 1));
    for (int j = 0; j <= J; ++j) {
        const auto i = static_cast<std::size_t>(j);
        y0[3 * i] = initial.pi[i];
        y0[3 * i + 1] = initial.w[i].x0;
        y0[3 * i + 2] = initial.w[i].x1;
    }

    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        size_chain_rhs(
            rates, J, [&](int j) { return y[3 * static_cast<std::size_t>(j)]; },
            [&](int j) -> double& { return dy[3 * static_cast<std::size_t>(j)]; });
        dy[1] = dy[2] = 0.0;
        for (int j = 1; j <= J; ++j) {
            const auto i = static_cast<std::size_t>(j);
            const Vec2 wj{y[3 * i + 1], y[3 * i + 2]};
            const Vec2 wl{y[3 * i - 2], y[3 * i - 1]};
            Vec2 d = blocks.self[i] * wj + blocks.from_below[i] * wl + y[3 * i - 3] * blocks.source_below[i];
            if (j < J) d = d + blocks.from_above[i] * Vec2{y[3 * i + 4], y[3 * i + 5]};
            dy[3 * i + 1] = d.x0;
            dy[3 * i + 2] = d.x1;
        }
    };

    ConditionedTrajectory out;
    out.step = default_step(rates, J, max_step);
    out.states.reserve(grid.size());
    out.max_boundary_flux = rates.lambda_a * initial.pi.back();
    integrate_rk4(rhs, std::move(y0), 0.0, grid, out.step, [&](std::size_t, const std::vector<double>& y) {
        ConditionedMoments c;
        c.pi.resize(static_cast<std::size_t>(J) + 1);
        c.w.resize(static_cast<std::size_t>(J) + 1);
        for (std::size_t i = 0; i <= static_cast<std::size_t>(J); ++i) {
            c.pi[i] = y[3 * i];
            if (i > 0) c.w[i] = {y[3 * i + 1], y[3 * i + 2]};
        }
        out.max_boundary_flux = std::max(out.max_boundary_flux, rates.lambda_a * c.pi.back());
        out.states.push_back(std::move(c));
    });
    out.truncation_warning = out.max_boundary_flux > kFluxWarning;
    return out;
}

std::vector<Vec2> stationary_conditioned_moments(const RatesConfig& rates, int j_max) {
    require_open_rates(rates);
    if (!(rates.lambda_a > 0.0)) throw DomainError("stationary moments need lambda_a > 0 (otherwise the system empties)");
    if (j_max < 1) throw DomainError("j_max must be >= 1");
    const double n0 = open_n0(rates);
    const double gamma = open_gamma(rates);
    const Mat2 eye = Mat2::identity();

    // Rows of the stationary recurrence in X_1..X_J, two unknowns each.
    const auto dim = static_cast<Eigen::Index>(2 * j_max);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    auto put = [&](int row_j, int col_j, const Mat2& m) {
        const auto r = static_cast<Eigen::Index>(2 * (row_j - 1));
        const auto c = static_cast<Eigen::Index>(2 * (col_j - 1));
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) a(r + p, c + q) += m(p, q);
    };
    for (int j = 1; j <= j_max; ++j) {
        const double jd = j;
        const double out = (j < j_max ? n0 : 0.0) + jd;
        const Mat2 gossip = moment_map(EventKind::gossip(), j, rates.sigma2).matrix;
        put(j, j, out * eye + (jd * gamma) * (eye - gossip));
        const auto arrival = moment_map(EventKind::arrival(), j - 1, rates.sigma2);
        if (j > 1) put(j, j - 1, -jd * arrival.matrix);
        if (j < j_max) put(j, j + 1, -n0 * moment_map(EventKind::departure(), j + 1, 0.0).matrix);
        rhs(2 * (j - 1)) = jd * arrival.offset.x0;
        rhs(2 * (j - 1) + 1) = jd * arrival.offset.x1;
    }
    const Eigen::VectorXd x = a.partialPivLu().solve(rhs);
    std::vector<Vec2> out(static_cast<std::size_t>(j_max) + 1);
    for (int j = 1; j <= j_max; ++j)
        out[static_cast<std::size_t>(j)] = {x(2 * (j - 1)), x(2 * (j - 1) + 1)};
    return out;
}

StationaryVariance stationary_expected_variance(const RatesConfig& rates, int j_max) {
    const auto x = stationary_conditioned_moments(rates, j_max);
    const double n0 = open_n0(rates);
    // The truncated chain's stationary law is Poisson(n0) renormalized on 0..J.
    double total = 0.0;
    for (int j = 0; j <= j_max; ++j) total += poisson(n0, j);
    StationaryVariance s;
    for (int j = 1; j <= j_max; ++j) {
        const double p = poisson(n0, j) / total;
        s.unconditional += p * x[static_cast<std::size_t>(j)].spread();
        s.occupancy += p;
    }
    s.conditioned = s.occupancy > 0.0 ? s.unconditional / s.occupancy : 0.0;
    return s;
}

std::vector<Vec2> steady_state_recurrence_check(const RatesConfig& rates, std::span<const Vec2> x_star) {
    require_open_rates(rates);
    if (x_star.size() < 2) throw DomainError("candidate needs entries for j = 0..j_max with j_max >= 1");
    const double n0 = open_n0(rates);
    const double gamma = open_gamma(rates);
    const int J = static_cast<int>(x_star.size()) - 1;
    const Mat2 eye = Mat2::identity();
    std::vector<Vec2> res(x_star.size());
    for (int j = 1; j <= J; ++j) {
        const double jd = j;
        const auto i = static_cast<std::size_t>(j);
        const double out = (j < J ? n0 : 0.0) + jd;
        const Mat2 gossip = moment_map(EventKind::gossip(), j, rates.sigma2).matrix;
        const auto arrival = moment_map(EventKind::arrival(), j - 1, rates.sigma2);
        Vec2 r = (out * eye + (jd * gamma) * (eye - gossip)) * x_star[i] - jd * (arrival.matrix * x_star[i - 1]) -
                 jd * arrival.offset;
        if (j < J) r = r - n0 * (moment_map(EventKind::departure(), j + 1, 0.0).matrix * x_star[i + 1]);
        res[i] = r;
    }
    return res;
}

VarianceFlow variance_flow_envelope(const RatesConfig& rates, const ConditionedMoments& initial,
                                    std::span<const double> grid, std::optional<double> max_step) {
    require_open_rates(rates);
    require_initial(initial);
    require_grid(grid);
    const int J = initial.j_max();
    const double s2 = rates.sigma2;

    // Layout: y[2j] = pi_j, y[2j+1] = U_j.
    std::vector<double> y0(2 * (static_cast<std::size_t>(J) + 1));
    for (int j = 0; j <= J; ++j) {
        const auto i = static_cast<std::size_t>(j);
        y0[2 * i] = initial.pi[i];
        y0[2 * i + 1] = j > 0 ? initial.w[i].spread() : 0.0;
    }

    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        size_chain_rhs(
            rates, J, [&](int j) { return y[2 * static_cast<std::size_t>(j)]; },
            [&](int j) -> double& { return dy[2 * static_cast<std::size_t>(j)]; });
        dy[1] = 0.0;
        for (int j = 1; j <= J; ++j) {
            const double jd = j;
            const auto i = static_cast<std::size_t>(j);
            const double out = rates.lambda_g + jd * rates.lambda_d + (j < J ? rates.lambda_a : 0.0);
            double d = rates.lambda_a * ((jd - 1.0) / jd * y[2 * i - 1] + s2 * y[2 * i - 2] / jd) - out * y[2 * i + 1];
            if (j < J) d += (jd + 1.0) * rates.lambda_d * (1.0 - 1.0 / (jd * jd)) * y[2 * i + 3];
            dy[2 * i + 1] = d;
        }
    };

    VarianceFlow flow;
    flow.max_boundary_flux = rates.lambda_a * initial.pi.back();
    integrate_rk4(rhs, std::move(y0), 0.0, grid, default_step(rates, J, max_step),
                  [&](std::size_t k, const std::vector<double>& y) {
                      std::vector<double> u(static_cast<std::size_t>(J) + 1), pi(u.size());
                      double agg = 0.0;
                      for (std::size_t i = 0; i < u.size(); ++i) {
                          pi[i] = y[2 * i];
                          u[i] = i > 0 ? y[2 * i + 1] : 0.0;
                          agg += u[i];
                      }
                      flow.max_boundary_flux = std::max(flow.max_boundary_flux, rates.lambda_a * pi.back());
                      flow.t.push_back(grid[k]);
                      flow.u.push_back(std::move(u));
                      flow.pi.push_back(std::move(pi));
                      flow.aggregate.push_back(agg);
                  });
    return flow;
}

StationaryEnvelope stationary_variance_envelope(const RatesConfig& rates, int j_max) {
    require_open_rates(rates);
    if (j_max < 1) throw DomainError("j_max must be >= 1");
    const double n0 = open_n0(rates);
    const double gamma = open_gamma(rates);
    require_n0(n0);

    const auto dim = static_cast<Eigen::Index>(j_max);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 1; j <= j_max; ++j) {
        const double jd = j;
        const Eigen::Index r = j - 1;
        a(r, r) = n0 + jd + gamma;
        if (j > 1) a(r, r - 1) = -(jd - 1.0);
        if (j < j_max) a(r, r + 1) = -(1.0 - 1.0 / (jd * jd)) * n0;
    }
    const Eigen::VectorXd v = a.partialPivLu().solve(Eigen::VectorXd::Constant(dim, rates.sigma2));

    StationaryEnvelope env;
    env.v.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    for (int j = 1; j <= j_max; ++j) env.v[static_cast<std::size_t>(j)] = v(j - 1);
    env.residuals.assign(env.v.size(), 0.0);
    for (int j = 1; j <= j_max; ++j) {
        const double jd = j;
        const auto i = static_cast<std::size_t>(j);
        const double above = j < j_max ? env.v[i + 1] : 0.0;
        env.residuals[i] = rates.sigma2 + (jd - 1.0) * env.v[i - 1] + (1.0 - 1.0 / (jd * jd)) * n0 * above -
                           (n0 + jd + gamma) * env.v[i];
        env.value += poisson(n0, j) * env.v[i];
    }
    return env;
}

void DualCertificate::require_feasible() const {
    if (!feasible)
        throw NumericalError("dual certificate infeasible at j = " + std::to_string(first_violation.value_or(-1)) +
                             " (residual " + std::to_string(min_residual) + ")");
}

DualCertificate verify_dual_certificate(std::span<const double> z, const RatesConfig& rates) {
    require_open_rates(rates);
    const double n0 = open_n0(rates);
    const double gamma = open_gamma(rates);
    require_n0(n0);
    if (z.size() < 2) throw DomainError("certificate needs entries for j = 0..j_max with j_max >= 1");
    if (z[0] != 0.0) throw DomainError("certificate must have z_0 = 0");
    for (double v : z)
        if (!(v >= 0.0)) throw DomainError("certificate entries must be nonnegative");

    const int J = static_cast<int>(z.size()) - 1;
    DualCertificate cert;
    cert.z.assign(z.begin(), z.end());
    cert.residuals.assign(z.size(), 0.0);
    cert.min_residual = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int j = 1; j <= J; ++j) {
        const double jd = j;
        const auto i = static_cast<std::size_t>(j);
        const double above = j < J ? z[i + 1] : 0.0;
        // At j = 1 the coefficient 1 - 1/(j-1)^2 is undefined; it multiplies z_0 = 0.
        const double below = j == 1 ? 0.0 : (1.0 - 1.0 / ((jd - 1.0) * (jd - 1.0))) * n0 * z[i - 1];
        const double r = (n0 + jd + gamma) * z[i] - jd * above - below - poisson(n0, j);
        cert.residuals[i] = r;
        cert.min_residual = std::min(cert.min_residual, r);
        if (r < -kCertificateTolerance && !cert.first_violation) cert.first_violation = j;
        sum += z[i];
    }
    cert.bound_value = sum * rates.sigma2;
    cert.feasible = !cert.first_violation.has_value();
    return cert;
}

ExplicitBound explicit_bound(const RatesConfig& rates, std::optional<int> j_max) {
    const double n0 = open_n0(rates);
    const double gamma = open_gamma(rates);
    require_n0(n0);
    const int J = j_max.value_or(default_j_max(n0));
    std::vector<double> z(static_cast<std::size_t>(J) + 1, 0.0);
    for (int j = 1; j <= J; ++j) z[static_cast<std::size_t>(j)] = poisson(n0, j) / (1.0 + gamma);

    ExplicitBound b;
    b.value = -std::expm1(-n0) * rates.sigma2 / (1.0 + gamma);
    b.certificate = verify_dual_certificate(z, rates);
    return b;
}

BestBound best_dual_bound(const RatesConfig& rates, std::optional<int> j_max) {
    const double n0 = open_n0(rates);
    const double gamma = open_gamma(rates);
    require_n0(n0);
    const int J = j_max.value_or(default_j_max(n0));
    if (J < 1) throw DomainError("j_max must be >= 1");

    // Primal: max pi^T x subject to A x <= 1, x >= 0, whose dual is the
    // certificate problem min 1^T z subject to A^T z >= pi, z >= 0.
    LinearProgram lp;
    lp.rows = lp.cols = static_cast<std::size_t>(J);
    lp.a.assign(lp.rows * lp.cols, 0.0);
    lp.b.assign(lp.rows, 1.0);
    lp.c.resize(lp.cols);
    for (int j = 1; j <= J; ++j) {
        const double jd = j;
        const auto r = static_cast<std::size_t>(j - 1);
        lp.at(r, r) = n0 + jd + gamma;
        if (j > 1) lp.at(r, r - 1) = -(jd - 1.0);
        if (j < J) lp.at(r, r + 1) = -(1.0 - 1.0 / (jd * jd)) * n0;
        lp.c[r] = poisson(n0, j);
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) throw NumericalError("bound LP did not reach optimality: " + to_string(sol.status));

    std::vector<double> z(static_cast<std::size_t>(J) + 1, 0.0);
    std::copy(sol.dual.begin(), sol.dual.end(), z.begin() + 1);

    BestBound best;
    best.certificate = verify_dual_certificate(z, rates);
    best.value = best.certificate.bound_value;
    best.primal_value = sol.objective * rates.sigma2;
    best.duality_gap = best.value - best.primal_value;
    best.iterations = sol.iterations;
    best.j_max = J;
    best.note = "bound on the stationary expected variance up to the duality gap; index set truncated at j_max";
    return best;
}

}  // namespace opengossip
