#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace opengossip {

/// Classical fixed-step Runge-Kutta 4 for autonomous systems y' = f(y).
///
/// `rhs(y, dy)` writes f(y) into dy. The state is advanced from t0 through
/// each grid time with steps no longer than max_step, landing exactly on
/// every grid point; `observe(k, y)` is called at grid index k.
template <typename Rhs, typename Observe>
void integrate_rk4(Rhs&& rhs, std::vector<double> y, double t0, std::span<const double> grid, double max_step,
                   Observe&& observe) {
    const std::size_t dim = y.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    auto step = [&](double h) {
        rhs(y, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    double t = t0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double span = grid[k] - t;
        if (span > 0.0) {
            const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / max_step - 1e-12)));
            const double h = span / static_cast<double>(steps);
            for (std::size_t s = 0; s < steps; ++s) step(h);
            t = grid[k];
        }
        observe(k, std::as_const(y));
    }
}

}  // namespace opengossip
