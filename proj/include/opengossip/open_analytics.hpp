#pragma once

// Analytics for fully open systems: agents arrive at total rate lambda_a,
// each agent leaves at rate lambda_d and gossips at rate lambda_g.
//
// Size-indexed quantities live on j = 0..j_max. The infinite chain is
// closed by a reflecting boundary at j_max: arrivals out of j_max are
// dropped and their mass stays at j_max. The Poisson tail beyond j_max is
// reported so callers can certify that the closure is harmless.
//
// Shorthands: n0 = lambda_a / lambda_d, gamma = lambda_g / lambda_d,
// pi_j = n0^j e^{-n0} / j!.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opengossip/core.hpp"
#include "opengossip/linalg2.hpp"

namespace opengossip {

struct SizeDistribution {
    std::vector<double> pi;
    int j_max = 0;
    /// Certified upper bound on sum_{j > j_max} pi_j.
    double tail_mass = 0.0;
    double mean = 0.0;
    double second_moment = 0.0;
    double variance = 0.0;
};

/// Poisson(n0) on 0..j_max, evaluated in log space. DomainError unless n0
/// is finite and > 0 (lambda_d = 0 has no steady state).
SizeDistribution birth_death_steady_state(double n0, int j_max);

/// Smallest j whose Poisson(n0) tail is below 1e-12, plus 10.
int default_j_max(double n0);

/// n0 and gamma from open-mode rates; DomainError when lambda_d <= 0.
double open_n0(const RatesConfig& rates);
double open_gamma(const RatesConfig& rates);

/// W_j = X_j pi_j (weighted conditioned descriptors) and pi_j, j = 0..j_max.
/// W_0 is identically zero: an empty system contributes nothing.
struct ConditionedMoments {
    std::vector<Vec2> w;
    std::vector<double> pi;

    int j_max() const { return static_cast<int>(pi.size()) - 1; }
    /// E X = sum_j W_j (empty system counted as zero).
    Vec2 expected() const;
    /// E Var = sum_j (mos_j - sqmean_j) pi_j.
    double expected_variance() const;
    /// P(n >= 1).
    double occupancy() const;
    /// X_j = W_j / pi_j, or nullopt where pi_j <= floor.
    std::optional<Vec2> conditioned(int j, double floor = 0.0) const;
};

/// Deterministic start with n_init agents holding i.i.d. zero-mean values
/// of variance sigma2: X = (sigma2 / n_init, sigma2) at j = n_init.
ConditionedMoments iid_initial_condition(int n_init, double sigma2, int j_max);

struct ConditionedTrajectory {
    std::vector<ConditionedMoments> states;
    /// max_t lambda_a pi_{j_max}(t): probability flux hitting the closure.
    double max_boundary_flux = 0.0;
    /// Set when max_boundary_flux > 1e-8.
    bool truncation_warning = false;
    double step = 0.0;
};

/// Integrates the conditioned-moment ODE
///   dW_j = (j lg (A_G(j) - I) - j ld - la) W_j
///          + la (A_A(j-1) W_{j-1} + b_A(j-1) pi_{j-1})
///          + (j + 1) ld A_D(j+1) W_{j+1}
/// together with the size chain, by fixed-step RK4 with step
/// 0.1 / (j_max lg + la + j_max ld) (or max_step if smaller).
ConditionedTrajectory conditioned_moment_ode(const RatesConfig& rates, const ConditionedMoments& initial,
                                             std::span<const double> grid,
                                             std::optional<double> max_step = std::nullopt);

/// Stationary X_j* (j = 0..j_max, X_0* = 0) of the truncated chain, from a
/// direct linear solve. Requires lambda_d > 0 and lambda_a > 0.
std::vector<Vec2> stationary_conditioned_moments(const RatesConfig& rates, int j_max);

/// Stationary E Var = sum_j pi_j Var_j* of the truncated chain, returned
/// both unconditioned and given n >= 1.
struct StationaryVariance {
    double unconditional = 0.0;
    double conditioned = 0.0;
    double occupancy = 0.0;
};
StationaryVariance stationary_expected_variance(const RatesConfig& rates, int j_max);

/// Residual of the stationary recurrence at each j = 1..j_max,
///   (n0 + j + j gamma (I - A_G(j))) X_j - n0 A_D(j+1) X_{j+1}
///     - j A_A(j-1) X_{j-1} - j b_A(j-1),
/// as a 2-vector. Row j_max follows the reflecting closure (no n0 out-rate
/// and no inflow from j_max + 1). Index 0 is always zero.
std::vector<Vec2> steady_state_recurrence_check(const RatesConfig& rates, std::span<const Vec2> x_star);

struct VarianceFlow {
    std::vector<double> t;
    /// u[k][j] = V_j pi_j at grid index k.
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> pi;
    /// sum_j V_j pi_j: envelope for E Var (empty system counted as zero).
    std::vector<double> aggregate;
    double max_boundary_flux = 0.0;
};

/// Integrates the variance-flow system as an equality:
///   dU_j = la ((j - 1)/j U_{j-1} + sigma2 pi_{j-1} / j)
///          + (j + 1) ld (1 - 1/j^2) U_{j+1} - (lg + la + j ld) U_j,
/// with U_0 = 0 and the same reflecting closure.
/// `initial.w` supplies U_j(0) = mos_j - sqmean_j.
VarianceFlow variance_flow_envelope(const RatesConfig& rates, const ConditionedMoments& initial,
                                    std::span<const double> grid, std::optional<double> max_step = std::nullopt);

/// Stationary variance envelope: V* solving the tridiagonal system
///   (n0 + j + gamma) V_j - (j - 1) V_{j-1} - (1 - 1/j^2) n0 V_{j+1} = sigma2
/// for j = 1..j_max (V_{j_max+1} = 0), and sum_j pi_j V_j.
struct StationaryEnvelope {
    std::vector<double> v;
    double value = 0.0;
    /// Inequality residuals sigma2 + (j-1) V_{j-1} + (1-1/j^2) n0 V_{j+1}
    /// - (n0 + j + gamma) V_j; nonnegative when the envelope is admissible.
    std::vector<double> residuals;
};
StationaryEnvelope stationary_variance_envelope(const RatesConfig& rates, int j_max);

struct DualCertificate {
    std::vector<double> z;
    double bound_value = 0.0;
    /// residuals[j] for j = 1..j_max (index 0 unused, zero).
    std::vector<double> residuals;
    bool feasible = false;
    /// Smallest j with residual < -1e-10.
    std::optional<int> first_violation;
    double min_residual = 0.0;

    /// Throws NumericalError naming the first violated index.
    void require_feasible() const;
};

/// Checks (n0 + j + gamma) z_j >= j z_{j+1} + (1 - 1/(j-1)^2) n0 z_{j-1} + pi_j
/// for j = 1..j_max, with z_{j_max+1} = 0 and the j = 1 departure term an
/// explicit zero. z must have size j_max + 1, be nonnegative, and z_0 = 0
/// (DomainError otherwise).
DualCertificate verify_dual_certificate(std::span<const double> z, const RatesConfig& rates);

struct ExplicitBound {
    double value = 0.0;
    DualCertificate certificate;
};

/// (1 - e^{-n0}) sigma2 / (1 + gamma) with its certifying sequence
/// z_j = pi_j / (1 + gamma) checked on 0..j_max.
ExplicitBound explicit_bound(const RatesConfig& rates, std::optional<int> j_max = std::nullopt);

struct BestBound {
    double value = 0.0;
    DualCertificate certificate;
    /// Objective of the primal max pi^T x s.t. A x <= 1 (times sigma2).
    double primal_value = 0.0;
    double duality_gap = 0.0;
    std::size_t iterations = 0;
    int j_max = 0;
    std::string note;
};

/// min sigma2 sum z subject to the feasibility inequalities over 1..j_max.
/// Solved through its primal with the simplex method; the optimal dual
/// multipliers are the certificate z. NumericalError if the solver fails.
BestBound best_dual_bound(const RatesConfig& rates, std::optional<int> j_max = std::nullopt);

}  // namespace opengossip
