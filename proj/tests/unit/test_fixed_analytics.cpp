// Oracles: Eigen's general eigensolver and its matrix exponential (applied
// to the augmented 3x3 generator of the affine system) are independent of
// the closed forms under test.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "opengossip/engine.hpp"
#include "opengossip/errors.hpp"
#include "opengossip/fixed_analytics.hpp"
#include "opengossip/random.hpp"

using namespace opengossip;

namespace {

RatesConfig fixed_rates(double lg, double lr, double sigma2 = 1.0) {
    RatesConfig r;
    r.lambda_g = lg;
    r.lambda_r = lr;
    r.sigma2 = sigma2;
    return r;
}

Eigen::Matrix2d to_eigen(const Mat2& m) {
    Eigen::Matrix2d e;
    e << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
    return e;
}

// X(t) from exp of [[M, c], [0, 0]] applied to (x0, 1).
Vec2 affine_oracle(const AffineSystem2& sys, const Vec2& x0, double t) {
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    g.topLeftCorner<2, 2>() = to_eigen(sys.m);
    g(0, 2) = sys.c.x0;
    g(1, 2) = sys.c.x1;
    const Eigen::Matrix3d e = (g * t).exp();
    const Eigen::Vector3d y = e * Eigen::Vector3d(x0.x0, x0.x1, 1.0);
    return {y(0), y(1)};
}

}  // namespace

TEST_CASE("closed form matches the generator assembled from moment maps") {
    for (int n : {2, 3, 4, 10, 50, 1000})
        for (double lg : {0.0, 0.5, 9.0})
            for (double lr : {0.0, 1.0, 3.0}) {
                const auto r = fixed_rates(lg, lr, 1.7);
                const auto a = build_fixed_size_ode(n, r);
                const auto b = assemble_fixed_size_ode(n, r);
                CHECK(max_abs_diff(a.m, b.m) < 1e-12);
                CHECK((a.c - b.c).max_abs() < 1e-12);
            }
    CHECK_THROWS_AS(build_fixed_size_ode(1, fixed_rates(1, 1)), DomainError);
}

TEST_CASE("expm agrees with Eigen for real, complex and repeated spectra") {
    RandomSource rng(21, 0);
    std::vector<Mat2> cases{Mat2::of(-1, 2, -3, -1), Mat2::of(-2, 1, 0, -2), Mat2::of(0, 0, 0, 0),
                            Mat2::of(-50, 1, 3, -0.01), Mat2::of(0, 1, -1, 0)};
    for (int k = 0; k < 30; ++k)
        cases.push_back(Mat2::of(rng.standard_normal(), rng.standard_normal(), rng.standard_normal(),
                                 rng.standard_normal()));
    for (const auto& m : cases)
        for (double t : {0.0, 0.1, 1.0, 3.0}) {
            const Eigen::Matrix2d ref = (to_eigen(m) * t).exp();
            const Mat2 got = expm(m, t);
            const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) CHECK(std::abs(got(i, j) - ref(i, j)) < 1e-12 * scale);
        }
}

TEST_CASE("ODE solution matches the augmented-exponential oracle") {
    const std::vector<double> grid{0.0, 0.05, 0.3, 1.0, 2.5, 10.0};
    for (int n : {2, 4, 50})
        for (double lg : {0.0, 1.0, 19.0})
            for (double lr : {0.0, 1.0, 4.0}) {
                const auto sys = build_fixed_size_ode(n, fixed_rates(lg, lr));
                const Vec2 x0{0.3, 1.1};
                const auto xs = solve_ode(sys, x0, grid);
                for (std::size_t k = 0; k < grid.size(); ++k) {
                    const Vec2 ref = affine_oracle(sys, x0, grid[k]);
                    CHECK((xs[k] - ref).max_abs() <= 1e-9 * std::max(1.0, ref.max_abs()));
                }
            }
}

TEST_CASE("closed system keeps the squared mean and relaxes the mean of squares") {
    const double lg = 3.0;
    const auto sys = build_fixed_size_ode(6, fixed_rates(lg, 0.0));
    const Vec2 x0{0.2, 1.0};
    const std::vector<double> grid{0.0, 0.5, 1.0, 4.0};
    const auto xs = solve_ode(sys, x0, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(xs[k].x0 == doctest::Approx(0.2).epsilon(1e-12));
        const double want = 0.2 + 0.8 * std::exp(-lg * grid[k]);
        CHECK(std::abs(xs[k].x1 - want) <= 1e-9 * want);
    }
}

TEST_CASE("fixed point at n = 50, rho = 19") {
    const auto fp = fixed_point(50, fixed_rates(19.0, 1.0));
    CHECK(fp.squared_mean == doctest::Approx(21.0 / 1981.0).epsilon(1e-14));
    CHECK(fp.mean_of_squares == doctest::Approx(119.0 / 1981.0).epsilon(1e-14));
    CHECK(fp.variance == doctest::Approx(98.0 / 1981.0).epsilon(1e-14));
    CHECK(std::abs(fp.squared_mean - 0.010601) < 5e-7);
    CHECK(std::abs(fp.mean_of_squares - 0.060070) < 1e-6);
    CHECK(std::abs(fp.variance - 0.049470) < 5e-7);
}

TEST_CASE("fixed point is the long-time limit and scales with sigma2") {
    for (int n : {2, 5, 30})
        for (double rho : {0.1, 1.0, 19.0}) {
            const auto r = fixed_rates(rho, 1.0, 2.5);
            const auto fp = fixed_point(n, r);
            CHECK(fp.variance == doctest::Approx(fp.mean_of_squares - fp.squared_mean).epsilon(1e-12));
            const std::vector<double> far{200.0};
            const auto x = solve_ode(build_fixed_size_ode(n, r), {2.5 / n, 2.5}, far)[0];
            CHECK((x - fp.moments()).max_abs() < 1e-10);
            const auto unit = fixed_point(n, fixed_rates(rho, 1.0, 1.0));
            CHECK(fp.variance == doctest::Approx(2.5 * unit.variance).epsilon(1e-12));
        }
    // Large n: the variance tends to sigma2 / (1 + rho).
    CHECK(fixed_point(1000000, fixed_rates(4.0, 1.0)).variance == doctest::Approx(0.2).epsilon(1e-5));
    CHECK_THROWS_AS(fixed_point(10, fixed_rates(1.0, 0.0)), DomainError);
}

TEST_CASE("spectrum agrees with a numerical eigensolver on a parameter grid") {
    int points = 0;
    for (int n : {2, 3, 10, 50, 400})
        for (auto [lg, lr] : std::vector<std::pair<double, double>>{{19, 1}, {1, 19}, {2, 2}, {0.5, 0}}) {
            ++points;
            const auto r = fixed_rates(lg, lr);
            const auto sp = spectrum(n, r);
            const auto m = build_fixed_size_ode(n, r).m;
            Eigen::EigenSolver<Eigen::Matrix2d> es(to_eigen(m));
            std::vector<double> ev{es.eigenvalues()(0).real(), es.eigenvalues()(1).real()};
            std::sort(ev.begin(), ev.end());
            CHECK(std::abs(es.eigenvalues()(0).imag()) < 1e-12);
            CHECK(std::abs(sp.lower - ev[0]) < 1e-10);
            CHECK(std::abs(sp.upper - ev[1]) < 1e-10);
            // Eigenvectors satisfy M v = r v.
            CHECK((m * sp.v1 - sp.r1 * sp.v1).max_abs() < 1e-10 * std::max(1.0, sp.v1.max_abs()));
            CHECK((m * sp.v2 - sp.r2 * sp.v2).max_abs() < 1e-10 * std::max(1.0, sp.v2.max_abs()));
        }
    CHECK(points == 20);
}

TEST_CASE("spectrum labels and asymptotics") {
    const auto sp = spectrum(50, fixed_rates(19.0, 1.0));
    CHECK(sp.r1 == doctest::Approx(-20.0).epsilon(0.01));
    CHECK(sp.r2 == doctest::Approx(-2.0).epsilon(0.02));
    CHECK(sp.r1_asymptote == -20.0);
    CHECK(sp.r2_asymptote == -2.0);
    // Eigenvector first components in the rho form.
    const double rho = 19.0, n = 50.0;
    const double root = std::sqrt((rho - 1) * (rho - 1) + 4 * rho / n);
    CHECK(sp.v2.x0 == doctest::Approx((rho - 1 + root) / (2 * rho)).epsilon(1e-12));
    CHECK(sp.v1.x0 == doctest::Approx((rho - 1 - root) / (2 * rho)).epsilon(1e-9));

    // The labels follow the asymptotes as n grows, on both sides of rho = 1.
    for (auto [lg, lr] : std::vector<std::pair<double, double>>{{5, 1}, {1, 5}}) {
        const auto big = spectrum(100000, fixed_rates(lg, lr));
        CHECK(big.r1 == doctest::Approx(big.r1_asymptote).epsilon(1e-3));
        CHECK(big.r2 == doctest::Approx(big.r2_asymptote).epsilon(1e-3));
    }
}

TEST_CASE("no replacements gives a zero eigenvalue exactly") {
    for (int n : {2, 7, 50}) {
        const auto sp = spectrum(n, fixed_rates(3.0, 0.0));
        CHECK(sp.r2 == 0.0);
        CHECK(sp.r1 == doctest::Approx(-3.0));
    }
}

TEST_CASE("envelope ordering: exact variance <= random envelope <= adversarial envelope") {
    const auto grid = make_grid(5.0, 101);
    for (int n : {2, 4, 10, 50})
        for (double lg : {0.5, 9.0, 19.0})
            for (double lr : {0.2, 1.0}) {
                const auto r = fixed_rates(lg, lr);
                const double v0 = 1.0 - 1.0 / n;
                const auto x = solve_ode(build_fixed_size_ode(n, r), {1.0 / n, 1.0}, grid);
                const auto e18 = variance_bound_ode_random(n, r, v0, grid);
                const auto adv = variance_bound_adversarial(r, v0, grid);
                for (std::size_t k = 0; k < grid.size(); ++k) {
                    CHECK(x[k].spread() <= e18.values[k] + 1e-12);
                    CHECK(e18.values[k] <= adv.values[k] + 1e-12);
                }
            }
}

TEST_CASE("envelope closed forms") {
    const auto r = fixed_rates(9.0, 1.0);
    const std::vector<double> grid{0.0, 1.0, 100.0};
    const auto e = variance_bound_ode_random(4, r, 0.75, grid);
    CHECK(e.decay == 10.25);
    CHECK(e.source == doctest::Approx(15.0 / 16.0));
    CHECK(e.stationary.value() == doctest::Approx(0.0914634146).epsilon(1e-9));
    CHECK(e.values[0] == 0.75);
    CHECK(e.values[2] == doctest::Approx(*e.stationary).epsilon(1e-12));
    const auto a = variance_bound_adversarial(r, 0.75, grid);
    CHECK(a.stationary.value() == doctest::Approx(1.0 / 9.0));

    // No gossip: the adversarial envelope grows linearly without bound.
    const auto lin = variance_bound_adversarial(fixed_rates(0.0, 2.0), 0.5, grid);
    CHECK_FALSE(lin.stationary.has_value());
    CHECK(lin.values[1] == doctest::Approx(2.5));
}
