#pragma once

// Exact expected-descriptor dynamics of fixed-size systems subject to random
// gossips (rate lambda_g per agent) and replacements (rate lambda_r per
// agent), plus the variance envelopes for random and adversarial
// replacements.

#include <optional>
#include <span>
#include <vector>

#include "opengossip/core.hpp"
#include "opengossip/linalg2.hpp"

namespace opengossip {

/// d/dt X = m X + c.
struct AffineSystem2 {
    Mat2 m;
    Vec2 c;

    Vec2 rhs(const Vec2& x) const { return m * x + c; }
};

/// The closed-form system
///   m = [[-2 lr, lr / n], [lg, -(lg + lr)]],  c = lr (sigma2 / n, sigma2).
/// Throws DomainError for n < 2.
AffineSystem2 build_fixed_size_ode(int n, const RatesConfig& rates);

/// The same system assembled from the generator of the flow equation,
///   m = n lg (A_G - I) + n lr (A_R - I),  c = n lr b_R,
/// using the per-event moment maps.
AffineSystem2 assemble_fixed_size_ode(int n, const RatesConfig& rates);

/// Evaluates X(t) on the grid from X(0) = x0.
///
/// Uses X(t) = X* + e^{m t}(x0 - X*) with X* = -m^{-1} c when m is
/// invertible; otherwise integrates with fixed-step RK4 (step refined until
/// halving changes the result by less than 1e-12 relative).
std::vector<Vec2> solve_ode(const AffineSystem2& system, const Vec2& x0, std::span<const double> grid);

/// e^{m t} for a 2x2 matrix, in closed form.
Mat2 expm(const Mat2& m, double t);

struct FixedPoint {
    double squared_mean = 0.0;
    double mean_of_squares = 0.0;
    double variance = 0.0;

    Vec2 moments() const { return {squared_mean, mean_of_squares}; }
};

/// Equilibrium of the fixed-size dynamics. DomainError when lambda_r = 0
/// (closed system: the squared mean is conserved, no unique fixed point) or
/// n < 2. Throws NumericalError if m X* + c deviates from 0 by more than
/// 1e-10 relative.
FixedPoint fixed_point(int n, const RatesConfig& rates);

struct SpectralReport {
    /// Eigenvalues with the + and - sign of the square root.
    double upper = 0.0;
    double lower = 0.0;
    /// Eigenvalue tracking -(lg + lr) for large n, and the one tracking -2 lr.
    double r1 = 0.0;
    double r2 = 0.0;
    /// Eigenvectors matching r1 and r2; second component normalized to 1
    /// whenever that is possible (otherwise (1, 0)).
    Vec2 v1;
    Vec2 v2;
    double discriminant = 0.0;
    /// Large-n limits of r1 and r2.
    double r1_asymptote = 0.0;
    double r2_asymptote = 0.0;
    /// True when the eigenvalues coincide (discriminant == 0).
    bool degenerate = false;
};

/// Eigen-analysis of the fixed-size matrix m. Requires n >= 2.
SpectralReport spectrum(int n, const RatesConfig& rates);

/// Solution of a scalar affine upper-envelope ODE dV/dt = -decay V + source.
struct VarianceEnvelope {
    std::vector<double> values;
    double decay = 0.0;
    double source = 0.0;
    /// source / decay; nullopt when decay == 0 and the envelope is unbounded.
    std::optional<double> stationary;
};

/// Random-replacement envelope
///   dV/dt = -(lg + lr + lr / n) V + (n^2 - 1) / n^2 lr sigma2.
VarianceEnvelope variance_bound_ode_random(int n, const RatesConfig& rates, double v0, std::span<const double> grid);

/// Adversarial-replacement envelope dV/dt = -lg V + lr sigma2.
VarianceEnvelope variance_bound_adversarial(const RatesConfig& rates, double v0, std::span<const double> grid);

}  // namespace opengossip
