#pragma once

#include "rfilter/field.hpp"
#include "rfilter/flow.hpp"
#include "rfilter/rough_path.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <vector>

namespace rfilter {

/// Bounded law of an initial value: a point, finitely many atoms, or a uniform box.
class InitialLaw {
public:
    enum class Kind { point, atoms, box };

    InitialLaw() = default;
    static InitialLaw point(Vector x);
    static InitialLaw atoms(std::vector<Vector> points, std::vector<double> weights);
    static InitialLaw box(Vector lo, Vector hi);

    Kind kind() const { return kind_; }
    std::size_t dim() const;
    bool is_atomic() const { return kind_ != Kind::box; }
    const std::vector<Vector>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }

    struct Draw {
        Vector x;
        std::size_t atom = 0;  // meaningful for atomic laws
    };
    /// Consumes one uniform for atomic laws, dim() uniforms for a box.
    Draw sample(std::mt19937_64& rng) const;
    /// Sup-norm bound of the support.
    double bound() const;
    /// Same law embedded in R^total with zero trailing coordinates.
    InitialLaw padded(std::size_t total) const;

private:
    Kind kind_ = Kind::point;
    std::vector<Vector> points_;
    std::vector<double> weights_;
    Vector lo_, hi_;
};

/// dS = a(S) dt + sum_j b_j(S) dB^j + sum_k c_k(S) drho^k.
struct RoughDriftSystem {
    std::size_t ds = 0;
    std::size_t db = 0;
    std::size_t dy = 0;
    Field drift;
    std::vector<Field> diffusion;
    std::vector<Field> rough;
    /// Optional fused evaluation of the rough columns; must agree with `rough`.
    FlowField::Combination rough_combined;
    InitialLaw initial;

    void validate() const;
};

struct SamplePath {
    std::vector<double> times;
    RowMatrix states;  // one row per grid point
};

/// s_i <- s_i + a_i dt + sum_j b_ij db_j, summed left to right.
void euler_maruyama_step(Vector& s, const Vector& a, const Matrix& b, double dt, const double* db);

/**
 * @brief Solver for one driver: S_t = phi(t, S~_t) with Euler-Maruyama for S~.
 *
 * The flow is recomputed from time 0 at every step, so a path costs O(N^2)
 * segment integrations. Immutable and safe to share between threads.
 */
class RoughSdeSolver {
public:
    RoughSdeSolver(const RoughDriftSystem& system, const EnhancedPath& driver, FlowOptions options = {});

    const FlowField& flow() const { return *flow_; }
    const TransformedCoefficients& coefficients() const { return *coefficients_; }
    std::size_t dim() const { return ds_; }
    double initial_bound() const { return bound_; }

    /// brownian: one row of d_B increments per driver segment.
    SamplePath solve(const RowMatrix& brownian, const Vector& s0) const;
    Vector solve_terminal(const RowMatrix& brownian, const Vector& s0, FlowWorkspace& ws) const;

private:
    Vector run(const RowMatrix& brownian, const Vector& s0, FlowWorkspace& ws, RowMatrix* states) const;

    std::size_t ds_ = 0;
    std::size_t db_ = 0;
    double bound_ = 0.0;
    std::shared_ptr<const FlowField> flow_;
    std::shared_ptr<const TransformedCoefficients> coefficients_;
};

SamplePath solve_rough_sde(const RoughDriftSystem& system, const EnhancedPath& driver, const RowMatrix& brownian,
                           const Vector& s0, FlowOptions options = {});

}  // namespace rfilter
