#pragma once

#include "rfilter/filter_model.hpp"
#include "rfilter/robust_filter.hpp"
#include "rfilter/rough_path.hpp"

#include <cstdint>
#include <functional>

namespace rfilter {

/**
 * @brief Closed-form filter of the scalar exponential model X = X0 exp(Y^1 + Y^2), X0 in {0, 1}.
 *
 * Returns f(e^{Y^1+Y^2}) / (1 + exp(E)) with
 *   E = -sum_k int h^k(X) o dY^k + 1/2 sum_k int (h^k)'(X) X dr + 1/2 int |h(X)|^2 dr,
 * evaluated at the final grid time by trapezoidal (Stratonovich) quadrature.
 * h maps R -> R^2; requires f(0) = h(0) = 0.
 */
double example_closed_form(const std::function<double(double)>& f, const Field& h, const EnhancedPath& path);

struct UncorrelatedWeight {
    double log_weight = 0.0;
    Vector x_final;
};

/**
 * @brief Log-weight h(X_t).y_t - int y dh(X) - 1/2 int |h(X)|^2 dr for a model with Z = 0.
 *
 * X follows the Euler scheme of the signal on the driver grid with the given
 * Brownian increments; int y dh(X) uses the Ito-Taylor increment of h(X).
 */
UncorrelatedWeight uncorrelated_robust_formula(const FilterModel& model, const EnhancedPath& driver,
                                               const RowMatrix& brownian, const Vector& x0);

struct ParticleOptions {
    std::size_t n_particles = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct ParticleEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double ess = 0.0;
    bool ess_warning = false;
    std::size_t n_particles = 0;
    std::uint64_t seed = 0;
};

/// Weighted particle estimate of the filter under the reference measure, no resampling.
ParticleEstimate particle_filter_estimate(const FilterModel& model, const EnhancedPath& observed,
                                          const TestFunction& f, const ParticleOptions& options);

struct ObservationRecord {
    EnhancedPath path;  // lifted observation on the fine grid
    Vector x_final;
};

/// Euler simulation of (X, Y) under P on a uniform grid of fine_steps steps.
ObservationRecord simulate_observation(const FilterModel& model, double horizon, std::size_t fine_steps,
                                       std::uint64_t seed, double alpha = default_alpha);

/// Smooth planar spiral y(t) = (t/T) (cos 2 pi t/T, sin 2 pi t/T) / 2, lifted on a uniform grid.
EnhancedPath spiral_driver(double horizon, std::size_t steps, double alpha = default_alpha);

}  // namespace rfilter
