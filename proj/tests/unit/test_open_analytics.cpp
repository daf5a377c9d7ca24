#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "opengossip/engine.hpp"
#include "opengossip/errors.hpp"
#include "opengossip/fixed_analytics.hpp"
#include "opengossip/open_analytics.hpp"

using namespace opengossip;

namespace {

RatesConfig open_rates(double lg, double la, double ld, double sigma2 = 1.0) {
    RatesConfig r;
    r.lambda_g = lg;
    r.lambda_a = la;
    r.lambda_d = ld;
    r.sigma2 = sigma2;
    return r;
}

double poisson_pmf(double n0, int j) {
    double p = std::exp(-n0);
    for (int k = 1; k <= j; ++k) p *= n0 / k;
    return p;
}

}  // namespace

TEST_CASE("Poisson steady state") {
    const auto d = birth_death_steady_state(5.0, 60);
    CHECK(d.pi[5] == doctest::Approx(std::pow(5.0, 5) * std::exp(-5.0) / 120.0).epsilon(1e-13));
    CHECK(std::abs(d.pi[5] - 0.175467) < 1e-6);
    CHECK(d.mean == 5.0);
    CHECK(d.variance == 5.0);
    CHECK(d.second_moment == 30.0);
    CHECK(d.tail_mass < 1e-12);
    // Moments of the truncated pmf agree with the reported ones.
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j <= 60; ++j) {
        m1 += j * d.pi[j];
        m2 += j * j * d.pi[j];
    }
    CHECK(m1 == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m2 - m1 * m1 == doctest::Approx(5.0).epsilon(1e-11));
}

TEST_CASE("probabilities plus certified tail sum to one") {
    for (double n0 : {0.01, 0.5, 1.0, 5.0, 20.0, 80.0})
        for (int J : {0, 1, 3, 10, 40, 150}) {
            const auto d = birth_death_steady_state(n0, J);
            double s = 0.0;
            for (double p : d.pi) {
                CHECK(p >= 0.0);
                s += p;
            }
            CHECK(s + d.tail_mass >= 1.0 - 1e-12);
            CHECK(s + d.tail_mass <= 1.0 + 1e-12);
        }
}

TEST_CASE("default truncation is the first tail below 1e-12 plus ten") {
    for (double n0 : {0.1, 1.0, 5.0, 30.0}) {
        const int J = default_j_max(n0);
        CHECK(birth_death_steady_state(n0, J - 10).tail_mass < 1e-12);
        if (J - 11 >= 0) {
            // The exact tail one step earlier is not below the threshold.
            double exact = 0.0;
            for (int j = J - 10; j < J + 200; ++j) exact += poisson_pmf(n0, j);
            CHECK(exact >= 1e-12 * (1.0 - 1e-6));
        }
    }
    CHECK_THROWS_AS(birth_death_steady_state(0.0, 10), DomainError);
    CHECK_THROWS_AS(birth_death_steady_state(std::nan(""), 10), DomainError);
    CHECK_THROWS_AS(open_n0(open_rates(1, 1, 0)), DomainError);
}

TEST_CASE("no events leaves the conditioned moments constant") {
    const auto init = iid_initial_condition(4, 1.0, 12);
    const std::vector<double> grid{0.0, 1.0, 10.0};
    const auto out = conditioned_moment_ode(open_rates(0, 0, 0), init, grid);
    for (const auto& s : out.states) {
        for (std::size_t j = 0; j < s.pi.size(); ++j) {
            CHECK(s.pi[j] == init.pi[j]);
            CHECK(s.w[j].x0 == init.w[j].x0);
            CHECK(s.w[j].x1 == init.w[j].x1);
        }
    }
}

TEST_CASE("closed limit reduces to fixed-size gossip dynamics") {
    const int n = 6;
    const double lg = 2.5;
    const auto init = iid_initial_condition(n, 1.0, 10);
    const auto grid = make_grid(4.0, 41);
    const auto open = conditioned_moment_ode(open_rates(lg, 0, 0), init, grid);
    RatesConfig fr;
    fr.lambda_g = lg;
    const auto fixed = solve_ode(build_fixed_size_ode(n, fr), {1.0 / n, 1.0}, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec2 x = open.states[k].expected();
        CHECK((x - fixed[k]).max_abs() < 1e-9);
    }
    // Consensus: the variance vanishes and mos approaches the squared mean.
    CHECK(open.states.back().expected_variance() < 1e-4);
}

TEST_CASE("size chain conserves probability and relaxes to Poisson") {
    const auto r = open_rates(3.0, 5.0, 1.0);
    const int J = default_j_max(5.0);
    const auto init = iid_initial_condition(5, 1.0, J);
    const std::vector<double> grid{0.0, 1.0, 5.0, 30.0};
    const auto out = conditioned_moment_ode(r, init, grid);
    for (const auto& s : out.states) {
        const double total = std::accumulate(s.pi.begin(), s.pi.end(), 0.0);
        CHECK(total >= 1.0 - 1e-10);
        CHECK(total <= 1.0 + 1e-12);
        for (double p : s.pi) CHECK(p >= -1e-15);
    }
    const auto star = birth_death_steady_state(5.0, J);
    double l1 = 0.0;
    for (int j = 0; j <= J; ++j) l1 += std::abs(out.states.back().pi[j] - star.pi[j]);
    CHECK(l1 < 1e-6);
    CHECK_FALSE(out.truncation_warning);
}

TEST_CASE("tight truncation triggers the boundary-flux warning") {
    const auto init = iid_initial_condition(5, 1.0, 8);
    const std::vector<double> grid{0.0, 10.0};
    const auto out = conditioned_moment_ode(open_rates(1.0, 5.0, 1.0), init, grid);
    CHECK(out.truncation_warning);
    // The reflecting closure still conserves mass.
    const auto& pi = out.states.back().pi;
    CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("halving the step changes the trajectory by less than 1e-8") {
    const auto r = open_rates(10.0, 5.0, 1.0);
    const int J = default_j_max(5.0);
    const auto init = iid_initial_condition(5, 1.0, J);
    const auto grid = make_grid(5.0, 11);
    const auto a = conditioned_moment_ode(r, init, grid);
    const auto b = conditioned_moment_ode(r, init, grid, a.step / 2.0);
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (int j = 0; j <= J; ++j) {
            CHECK(std::abs(a.states[k].pi[j] - b.states[k].pi[j]) < 1e-8);
            CHECK((a.states[k].w[j] - b.states[k].w[j]).max_abs() < 1e-8);
        }
}

TEST_CASE("stationary recurrence: direct solve and long-time integration agree") {
    for (double gamma : {1.0, 10.0}) {
        const auto r = open_rates(gamma, 5.0, 1.0);
        const int J = default_j_max(5.0);
        const auto xs = stationary_conditioned_moments(r, J);
        for (const auto& res : steady_state_recurrence_check(r, xs)) CHECK(res.max_abs() < 1e-10);

        const auto init = iid_initial_condition(5, 1.0, J);
        const std::vector<double> grid{60.0};
        const auto out = conditioned_moment_ode(r, init, grid);
        const auto& s = out.states.back();
        std::vector<Vec2> cand(J + 1);
        for (int j = 1; j <= J; ++j)
            if (s.pi[j] > 1e-8) cand[j] = *s.conditioned(j);
        const auto res = steady_state_recurrence_check(r, cand);
        // Rows whose neighbours are all well resolved.
        for (int j = 1; j < J; ++j)
            if (s.pi[j + 1] > 1e-8) {
                CHECK(res[j].max_abs() < 1e-6);
                CHECK((cand[j] - xs[j]).max_abs() < 1e-6);
            }
        // Per-size bounds from the i.i.d. comparison.
        for (int j = 1; j <= J; ++j) {
            CHECK(xs[j].x1 <= 1.0 + 1e-12);
            CHECK(xs[j].x0 <= 1.0 / j + 1e-12);
            CHECK(xs[j].x0 >= 0.0);
            CHECK(xs[j].x0 <= xs[j].x1 + 1e-15);
        }
    }
}

TEST_CASE("recurrence residual is affine in the candidate") {
    const auto r0 = open_rates(2.0, 3.0, 1.0, 0.0);
    std::vector<Vec2> zero(15);
    for (const auto& res : steady_state_recurrence_check(r0, zero)) CHECK(res.max_abs() == 0.0);

    const auto r = open_rates(2.0, 3.0, 1.0);
    const auto xs = stationary_conditioned_moments(r, 14);
    std::vector<Vec2> d(15), p1(15), p2(15);
    for (int j = 1; j <= 14; ++j) {
        d[j] = {1e-3 * j, -2e-3};
        p1[j] = xs[j] + d[j];
        p2[j] = xs[j] + 2.0 * d[j];
    }
    const auto a = steady_state_recurrence_check(r, p1);
    const auto b = steady_state_recurrence_check(r, p2);
    for (int j = 1; j <= 14; ++j) CHECK((b[j] - 2.0 * a[j]).max_abs() < 1e-10);
}

TEST_CASE("variance-flow envelope dominates the exact expected variance") {
    for (double gamma : {1.0, 10.0}) {
        const auto r = open_rates(gamma, 5.0, 1.0);
        const int J = default_j_max(5.0);
        const auto init = iid_initial_condition(5, 1.0, J);
        const auto grid = make_grid(30.0, 61);
        const auto exact = conditioned_moment_ode(r, init, grid);
        const auto env = variance_flow_envelope(r, init, grid);
        for (std::size_t k = 0; k < grid.size(); ++k)
            CHECK(exact.states[k].expected_variance() <= env.aggregate[k] + 1e-12);

        const auto st = stationary_variance_envelope(r, J);
        CHECK(env.aggregate.back() == doctest::Approx(st.value).epsilon(1e-6));
        for (int j = 1; j <= J; ++j) CHECK(st.residuals[j] >= -1e-8);
        CHECK(stationary_expected_variance(r, J).unconditional <= st.value);
    }
}

TEST_CASE("without arrivals the envelope decays to zero") {
    const auto r = open_rates(2.0, 0.0, 1.0);
    const auto init = iid_initial_condition(6, 1.0, 6);
    const std::vector<double> grid{0.0, 5.0, 40.0};
    const auto env = variance_flow_envelope(r, init, grid);
    CHECK(env.aggregate[0] == doctest::Approx(5.0 / 6.0));
    CHECK(env.aggregate[1] < env.aggregate[0]);
    CHECK(env.aggregate[2] < 1e-12);
}

TEST_CASE("explicit bound values") {
    CHECK(explicit_bound(open_rates(0.0, 1.0, 1.0)).value == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK(std::abs(explicit_bound(open_rates(0.0, 1.0, 1.0)).value - 0.632121) < 1e-6);
    CHECK(std::abs(explicit_bound(open_rates(10.0, 5.0, 1.0)).value - 0.090296) < 1e-6);
    CHECK(explicit_bound(open_rates(1e9, 5.0, 1.0)).value < 1e-8);
    CHECK(explicit_bound(open_rates(10.0, 5.0, 1.0, 3.0)).value ==
          doctest::Approx(3.0 * explicit_bound(open_rates(10.0, 5.0, 1.0)).value));
}

TEST_CASE("explicit sequence residuals follow their closed form") {
    // With z_j = pi_j / (1 + gamma) the residual at 1 < j < J is
    // pi_j / (1 + gamma) * (n0 / (j + 1) + j / (j - 1)^2 - 1).
    for (double n0 : {0.5, 2.0, 5.0})
        for (double gamma : {0.0, 3.0, 10.0}) {
            const auto r = open_rates(gamma, n0, 1.0);
            const int J = default_j_max(n0);
            const auto c = explicit_bound(r, J).certificate;
            CHECK(c.residuals[1] == doctest::Approx(poisson_pmf(n0, 1) / (1 + gamma) * n0 / 2.0).epsilon(1e-10));
            for (int j = 2; j < J; ++j) {
                const double want =
                    poisson_pmf(n0, j) / (1 + gamma) * (n0 / (j + 1.0) + j / ((j - 1.0) * (j - 1.0)) - 1.0);
                CHECK(std::abs(c.residuals[j] - want) < 1e-12 * std::max(1.0, poisson_pmf(n0, j)));
            }
            // The bracket turns negative once j exceeds roughly n0 + 2,
            // so this sequence never certifies the full inequality system.
            CHECK_FALSE(c.feasible);
        }
}

TEST_CASE("certificate checks") {
    const auto r = open_rates(10.0, 5.0, 1.0);
    const int J = default_j_max(5.0);
    const std::vector<double> zero(J + 1, 0.0);
    const auto c0 = verify_dual_certificate(zero, r);
    CHECK_FALSE(c0.feasible);
    CHECK(c0.first_violation.value() == 1);
    CHECK_THROWS_AS(c0.require_feasible(), NumericalError);

    auto bad = zero;
    bad[0] = 1.0;
    CHECK_THROWS_AS(verify_dual_certificate(bad, r), DomainError);
    bad[0] = 0.0;
    bad[3] = -1.0;
    CHECK_THROWS_AS(verify_dual_certificate(bad, r), DomainError);

    const auto best = best_dual_bound(r, J);
    CHECK(best.certificate.feasible);
    CHECK(best.certificate.min_residual >= -1e-10);
    std::vector<double> doubled = best.certificate.z;
    for (auto& z : doubled) z *= 2.0;
    const auto c2 = verify_dual_certificate(doubled, r);
    CHECK(c2.feasible);
    CHECK(c2.bound_value == doctest::Approx(2.0 * best.value).epsilon(1e-14));
}

TEST_CASE("LP bound: feasible, tight against the stationary envelope, below the explicit bound") {
    for (double n0 : {0.5, 1.0, 5.0, 10.0})
        for (double gamma : {0.0, 1.0, 5.0, 10.0, 20.0}) {
            const auto r = open_rates(gamma, n0, 1.0);
            const auto best = best_dual_bound(r);
            CHECK(best.certificate.feasible);
            CHECK(std::abs(best.duality_gap) < 1e-10);
            CHECK(best.value <= explicit_bound(r).value + 1e-12);
            // The stationary envelope solves A V = sigma2 1, so it is primal
            // feasible and (by weak duality) below the LP value.
            const auto env = stationary_variance_envelope(r, best.j_max);
            CHECK(env.value <= best.value + 1e-10);
            CHECK(stationary_expected_variance(r, best.j_max).unconditional <= env.value + 1e-12);
        }
}

TEST_CASE("LP bound vanishes with the occupancy") {
    const auto tiny = best_dual_bound(open_rates(0.0, 1e-4, 1.0));
    CHECK(tiny.value < 2e-4);
    CHECK(tiny.certificate.feasible);
}

TEST_CASE("stationary expected variance agrees with simulation") {
    // n0 = 5, gamma = 10, compared given a non-empty system.
    const auto r = open_rates(10.0, 5.0, 1.0);
    const auto exact = stationary_expected_variance(r, default_j_max(5.0));
    SimulationSpec spec;
    spec.mode = Open{5};
    spec.rates = r;
    const auto est = estimate_asymptotic_variance(spec, 20.0, 220.0, 64, 12, {.threads = 1});
    CHECK(std::abs(est.estimate - exact.conditioned) < 4.0 * est.std_error);
    CHECK(std::abs(est.unconditional - exact.unconditional) < 4.0 * est.unconditional_std_error);
    CHECK(std::abs(est.occupancy - exact.occupancy) < 0.01);
}
