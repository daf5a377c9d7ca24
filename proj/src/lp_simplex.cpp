#include "opengossip/lp_simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "opengossip/errors.hpp"

namespace opengossip {

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

LpSolution solve_lp(const LinearProgram& lp, std::size_t max_iterations) {
    const std::size_t m = lp.rows;
    const std::size_t n = lp.cols;
    if (lp.a.size() != m * n || lp.b.size() != m || lp.c.size() != n)
        throw DomainError("linear program dimensions are inconsistent");
    for (double bi : lp.b)
        if (!(bi >= 0.0)) throw DomainError("linear program needs b >= 0 for the slack start");

    // Tableau: m constraint rows over [A | I | b], then the objective row
    // holding reduced costs (negated c at the start).
    const std::size_t width = n + m + 1;
    std::vector<double> t((m + 1) * width, 0.0);
    auto cell = [&](std::size_t i, std::size_t j) -> double& { return t[i * width + j]; };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) cell(i, j) = lp.at(i, j);
        cell(i, n + i) = 1.0;
        cell(i, width - 1) = lp.b[i];
    }
    for (std::size_t j = 0; j < n; ++j) cell(m, j) = -lp.c[j];

    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

    double scale = 1.0;
    for (double v : lp.a) scale = std::max(scale, std::abs(v));
    for (double v : lp.c) scale = std::max(scale, std::abs(v));
    const double eps = 1e-12 * scale;

    LpSolution sol;
    sol.status = LpStatus::IterationLimit;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        // Bland: lowest-index improving column, lowest-index tied row.
        std::size_t enter = width;
        for (std::size_t j = 0; j + 1 < width; ++j)
            if (cell(m, j) < -eps) {
                enter = j;
                break;
            }
        if (enter == width) {
            sol.status = LpStatus::Optimal;
            sol.iterations = it;
            break;
        }
        std::size_t leave = m;
        double best = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double p = cell(i, enter);
            if (p <= eps) continue;
            const double ratio = cell(i, width - 1) / p;
            if (leave == m || ratio < best - 1e-15 * std::max(1.0, best) ||
                (std::abs(ratio - best) <= 1e-15 * std::max(1.0, best) && basis[i] < basis[leave])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave == m) {
            sol.status = LpStatus::Unbounded;
            sol.iterations = it;
            return sol;
        }
        const double piv = cell(leave, enter);
        for (std::size_t j = 0; j < width; ++j) cell(leave, j) /= piv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = cell(i, enter);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) cell(i, j) -= f * cell(leave, j);
        }
        basis[leave] = enter;
    }
    if (sol.status != LpStatus::Optimal) return sol;

    // Re-solve the optimal basis directly: B x_B = b and B^T y = c_B.
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd cb(static_cast<Eigen::Index>(m));
    Eigen::VectorXd bvec(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t col = basis[k];
        const auto kk = static_cast<Eigen::Index>(k);
        for (std::size_t i = 0; i < m; ++i)
            bmat(static_cast<Eigen::Index>(i), kk) = col < n ? lp.at(i, col) : (col - n == i ? 1.0 : 0.0);
        cb(kk) = col < n ? lp.c[col] : 0.0;
        bvec(static_cast<Eigen::Index>(k)) = lp.b[k];
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    const Eigen::VectorXd xb = lu.solve(bvec);
    const Eigen::VectorXd y = lu.transpose().solve(cb);

    sol.x.assign(n, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        if (basis[k] < n) sol.x[basis[k]] = std::max(0.0, xb(static_cast<Eigen::Index>(k)));
    sol.dual.resize(m);
    for (std::size_t i = 0; i < m; ++i) sol.dual[i] = std::max(0.0, y(static_cast<Eigen::Index>(i)));

    sol.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective += lp.c[j] * sol.x[j];
    sol.dual_objective = 0.0;
    for (std::size_t i = 0; i < m; ++i) sol.dual_objective += lp.b[i] * sol.dual[i];
    sol.basis = std::move(basis);
    return sol;
}

}  // namespace opengossip
