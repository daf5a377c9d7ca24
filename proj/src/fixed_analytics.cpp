#include "opengossip/fixed_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opengossip/events.hpp"
#include "opengossip/rk4.hpp"

namespace opengossip {

namespace {

void require_n(int n) {
    if (n < 2) throw DomainError("fixed-size analytics need n >= 2 (replacement departs from n >= 2)");
}

}  // namespace

AffineSystem2 build_fixed_size_ode(int n, const RatesConfig& rates) {
    require_n(n);
    const double nd = n;
    const double lg = rates.lambda_g;
    const double lr = rates.lambda_r;
    return {Mat2::of(-2.0 * lr, lr / nd, lg, -(lg + lr)), {lr * rates.sigma2 / nd, lr * rates.sigma2}};
}

AffineSystem2 assemble_fixed_size_ode(int n, const RatesConfig& rates) {
    require_n(n);
    const double nd = n;
    const auto gossip = moment_map(EventKind::gossip(), n, rates.sigma2);
    const auto repl = moment_map(EventKind::replacement(), n, rates.sigma2);
    const Mat2 eye = Mat2::identity();

    // Both events leave the size at n, so the flow equation collapses to
    // d/dt X = sum_e rate_e ((A_e - I) X + b_e).
    AffineSystem2 sys;
    sys.m = (nd * rates.lambda_g) * (gossip.matrix - eye) + (nd * rates.lambda_r) * (repl.matrix - eye);
    sys.c = (nd * rates.lambda_g) * gossip.offset + (nd * rates.lambda_r) * repl.offset;
    return sys;
}

Mat2 expm(const Mat2& m, double t) {
    const double s = m.trace() / 2.0;
    const double half_diff = (m(0, 0) - m(1, 1)) / 2.0;
    const double q2 = half_diff * half_diff + m(0, 1) * m(1, 0);
    const Mat2 shifted = m - s * Mat2::identity();

    // e^{mt} = c(t) I + g(t) (m - s I) with c, g built from the eigenvalues
    // s +/- q, written to avoid overflow and cancellation.
    double c = 0.0;
    double g = 0.0;
    if (q2 > 0.0) {
        const double q = std::sqrt(q2);
        const double e_hi = std::exp((s + q) * t);
        const double e_lo = std::exp((s - q) * t);
        c = (e_hi + e_lo) / 2.0;
        g = -e_hi * std::expm1(-2.0 * q * t) / (2.0 * q);
    } else if (q2 < 0.0) {
        const double w = std::sqrt(-q2);
        const double e = std::exp(s * t);
        c = e * std::cos(w * t);
        g = e * std::sin(w * t) / w;
    } else {
        const double e = std::exp(s * t);
        c = e;
        g = e * t;
    }
    return c * Mat2::identity() + g * shifted;
}

std::vector<Vec2> solve_ode(const AffineSystem2& system, const Vec2& x0, std::span<const double> grid) {
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw DomainError("solve_ode needs an increasing grid");
    if (!grid.empty() && grid.front() < 0.0) throw DomainError("solve_ode grid starts before t = 0");

    std::vector<Vec2> out;
    out.reserve(grid.size());

    const double scale = std::max({std::abs(system.m(0, 0)), std::abs(system.m(0, 1)), std::abs(system.m(1, 0)),
                                   std::abs(system.m(1, 1))});
    const bool singular = scale == 0.0 || std::abs(system.m.det()) <= 1e-14 * scale * scale;

    if (!singular) {
        const Vec2 star = solve(system.m, -1.0 * system.c);
        for (double t : grid) out.push_back(star + expm(system.m, t) * (x0 - star));
        return out;
    }

    // Singular generator (closed system): fixed-step RK4, halving the step
    // until the whole trajectory is stable to 1e-12 relative.
    auto run = [&](double h) {
        std::vector<Vec2> res;
        res.reserve(grid.size());
        integrate_rk4(
            [&](const std::vector<double>& y, std::vector<double>& dy) {
                const Vec2 d = system.rhs({y[0], y[1]});
                dy[0] = d.x0;
                dy[1] = d.x1;
            },
            std::vector<double>{x0.x0, x0.x1}, 0.0, grid, h,
            [&](std::size_t, const std::vector<double>& y) { res.push_back({y[0], y[1]}); });
        return res;
    };
    double h = scale > 0.0 ? 0.05 / scale : std::numeric_limits<double>::infinity();
    if (!std::isfinite(h)) h = grid.empty() ? 1.0 : std::max(grid.back(), 1.0);
    auto coarse = run(h);
    for (int iter = 0; iter < 20; ++iter) {
        auto fine = run(h / 2.0);
        double worst = 0.0;
        for (std::size_t k = 0; k < fine.size(); ++k) {
            const double ref = std::max(fine[k].max_abs(), 1e-300);
            worst = std::max(worst, (fine[k] - coarse[k]).max_abs() / ref);
        }
        coarse = std::move(fine);
        h /= 2.0;
        if (worst < 1e-12) break;
    }
    return coarse;
}

FixedPoint fixed_point(int n, const RatesConfig& rates) {
    require_n(n);
    if (!(rates.lambda_r > 0.0))
        throw DomainError("closed system (lambda_r = 0): the squared mean is conserved and there is no unique fixed point");
    const double nd = n;
    const double rho = rates.lambda_g / rates.lambda_r;
    const double s2 = rates.sigma2;
    const double denom = 2.0 * nd * (1.0 + rho) - rho;

    FixedPoint fp;
    fp.squared_mean = (2.0 + rho) * s2 / denom;
    fp.mean_of_squares = (2.0 * nd + rho) * s2 / denom;
    fp.variance = (1.0 - 1.0 / nd) * s2 / (1.0 + rho * (1.0 - 1.0 / (2.0 * nd)));

    const auto sys = build_fixed_size_ode(n, rates);
    const Vec2 residual = sys.rhs(fp.moments());
    const double scale = std::max(sys.c.max_abs(), 1e-300);
    if (residual.max_abs() > 1e-10 * scale)
        throw NumericalError("fixed point does not cancel the dynamics (residual " +
                             std::to_string(residual.max_abs()) + ")");
    return fp;
}

namespace {

Vec2 eigenvector_for(const Mat2& m, double r) {
    if (m(1, 0) != 0.0) return {(r - m(1, 1)) / m(1, 0), 1.0};
    if (r != m(0, 0)) return {m(0, 1) / (r - m(0, 0)), 1.0};
    return {1.0, 0.0};
}

}  // namespace

SpectralReport spectrum(int n, const RatesConfig& rates) {
    require_n(n);
    const double nd = n;
    const double lg = rates.lambda_g;
    const double lr = rates.lambda_r;
    const auto sys = build_fixed_size_ode(n, rates);

    SpectralReport rep;
    rep.discriminant = (lg - lr) * (lg - lr) + 4.0 * lg * lr / nd;
    const double root = std::sqrt(rep.discriminant);
    const double trace = -lg - 3.0 * lr;
    const double det = lr * (2.0 * (lg + lr) - lg / nd);

    // The '-' root has no cancellation since trace <= 0; the '+' root comes
    // from the product of the eigenvalues, which keeps det = 0 => r = 0 exact.
    rep.lower = (trace - root) / 2.0;
    rep.upper = rep.lower != 0.0 ? det / rep.lower : (trace + root) / 2.0;
    rep.degenerate = rep.discriminant == 0.0;

    if (lg >= lr) {
        rep.r2 = rep.upper;
        rep.r1 = rep.lower;
    } else {
        rep.r1 = rep.upper;
        rep.r2 = rep.lower;
    }
    rep.v1 = eigenvector_for(sys.m, rep.r1);
    rep.v2 = eigenvector_for(sys.m, rep.r2);
    rep.r1_asymptote = -(lg + lr);
    rep.r2_asymptote = -2.0 * lr;
    return rep;
}

namespace {

VarianceEnvelope scalar_envelope(double decay, double source, double v0, std::span<const double> grid) {
    VarianceEnvelope env;
    env.decay = decay;
    env.source = source;
    if (decay > 0.0) env.stationary = source / decay;
    env.values.reserve(grid.size());
    for (double t : grid) {
        if (decay > 0.0)
            env.values.push_back(v0 * std::exp(-decay * t) - source * std::expm1(-decay * t) / decay);
        else
            env.values.push_back(v0 + source * t);
    }
    return env;
}

}  // namespace

VarianceEnvelope variance_bound_ode_random(int n, const RatesConfig& rates, double v0, std::span<const double> grid) {
    require_n(n);
    const double nd = n;
    const double decay = rates.lambda_g + rates.lambda_r + rates.lambda_r / nd;
    const double source = (nd * nd - 1.0) / (nd * nd) * rates.lambda_r * rates.sigma2;
    return scalar_envelope(decay, source, v0, grid);
}

VarianceEnvelope variance_bound_adversarial(const RatesConfig& rates, double v0, std::span<const double> grid) {
    return scalar_envelope(rates.lambda_g, rates.lambda_r * rates.sigma2, v0, grid);
}

}  // namespace opengossip
