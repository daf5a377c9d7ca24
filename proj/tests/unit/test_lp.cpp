#include <cmath>
#include <vector>

#include "doctest.h"
#include "opengossip/errors.hpp"
#include "opengossip/lp_simplex.hpp"
#include "opengossip/random.hpp"

using namespace opengossip;

namespace {

LinearProgram make_lp(std::size_t rows, std::size_t cols, std::vector<double> a, std::vector<double> b,
                      std::vector<double> c) {
    LinearProgram lp;
    lp.rows = rows;
    lp.cols = cols;
    lp.a = std::move(a);
    lp.b = std::move(b);
    lp.c = std::move(c);
    return lp;
}

// Optimality certificate: primal and dual feasibility plus equal objectives.
void check_optimal(const LinearProgram& lp, const LpSolution& s, double tol) {
    REQUIRE(s.status == LpStatus::Optimal);
    for (std::size_t i = 0; i < lp.rows; ++i) {
        double ax = 0.0;
        for (std::size_t j = 0; j < lp.cols; ++j) ax += lp.at(i, j) * s.x[j];
        CHECK(ax <= lp.b[i] + tol);
        CHECK(s.dual[i] >= 0.0);
    }
    for (std::size_t j = 0; j < lp.cols; ++j) {
        CHECK(s.x[j] >= 0.0);
        double aty = 0.0;
        for (std::size_t i = 0; i < lp.rows; ++i) aty += lp.at(i, j) * s.dual[i];
        CHECK(aty >= lp.c[j] - tol);
    }
    CHECK(std::abs(s.objective - s.dual_objective) <= tol * std::max(1.0, std::abs(s.objective)));
}

}  // namespace

TEST_CASE("textbook production problem") {
    const auto lp = make_lp(3, 2, {1, 0, 0, 2, 3, 2}, {4, 12, 18}, {3, 5});
    const auto s = solve_lp(lp);
    check_optimal(lp, s, 1e-12);
    CHECK(s.objective == doctest::Approx(36.0));
    CHECK(s.x[0] == doctest::Approx(2.0));
    CHECK(s.x[1] == doctest::Approx(6.0));
    CHECK(s.dual[0] == doctest::Approx(0.0));
    CHECK(s.dual[1] == doctest::Approx(1.5));
    CHECK(s.dual[2] == doctest::Approx(1.0));
}

TEST_CASE("Beale's cycling example terminates under Bland's rule") {
    const auto lp = make_lp(3, 4, {0.25, -8, -1, 9, 0.5, -12, -0.5, 3, 0, 0, 1, 0}, {0, 0, 1}, {0.75, -20, 0.5, -6});
    const auto s = solve_lp(lp);
    check_optimal(lp, s, 1e-12);
    CHECK(s.objective == doctest::Approx(1.25));
}

TEST_CASE("unbounded and malformed problems") {
    CHECK(solve_lp(make_lp(1, 1, {-1}, {1}, {1})).status == LpStatus::Unbounded);
    CHECK_THROWS_AS(solve_lp(make_lp(1, 1, {1}, {-1}, {1})), DomainError);
    CHECK_THROWS_AS(solve_lp(make_lp(2, 1, {1}, {1, 1}, {1})), DomainError);
}

TEST_CASE("zero objective is optimal at the origin") {
    const auto lp = make_lp(2, 2, {1, 1, 1, -1}, {1, 1}, {0, 0});
    const auto s = solve_lp(lp);
    check_optimal(lp, s, 1e-12);
    CHECK(s.iterations == 0);
    CHECK(s.objective == 0.0);
}

TEST_CASE("random bounded problems satisfy the duality certificate") {
    RandomSource rng(31, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 2 + rng.uniform_index(12);
        const std::size_t n = 2 + rng.uniform_index(12);
        LinearProgram lp;
        lp.rows = m;
        lp.cols = n;
        lp.a.resize(m * n);
        // Mixed signs, with one all-positive row keeping the problem bounded.
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                lp.at(i, j) = i == 0 ? 0.1 + rng.uniform01() : rng.standard_normal();
        lp.b.resize(m);
        for (auto& b : lp.b) b = rng.uniform01() * 5.0;
        lp.c.resize(n);
        for (auto& c : lp.c) c = rng.standard_normal();
        check_optimal(lp, solve_lp(lp), 1e-9);
    }
}
