#pragma once

// Dense primal simplex for small problems in the canonical form
//
//   maximize c^T x  subject to  A x <= b,  x >= 0,  with b >= 0,
//
// so the all-slack basis is feasible and no phase one is needed. Bland's
// rule guarantees termination. After the pivoting stops the final basis is
// re-solved with an LU factorization for both x and the dual y.

#include <cstddef>
#include <string>
#include <vector>

namespace opengossip {

struct LinearProgram {
    std::size_t rows = 0;
    std::size_t cols = 0;
    /// Row-major, rows x cols.
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;

    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

enum class LpStatus { Optimal, Unbounded, IterationLimit };

std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    std::vector<double> x;
    /// Optimal multipliers of A x <= b (y >= 0, A^T y >= c at optimum).
    std::vector<double> dual;
    double objective = 0.0;
    /// b^T y; equals `objective` up to rounding at an optimum.
    double dual_objective = 0.0;
    std::size_t iterations = 0;
    /// Basic column per row; columns >= cols are slacks.
    std::vector<std::size_t> basis;
};

/// Throws DomainError on malformed input (sizes, negative b).
LpSolution solve_lp(const LinearProgram& lp, std::size_t max_iterations = 100000);

}  // namespace opengossip
