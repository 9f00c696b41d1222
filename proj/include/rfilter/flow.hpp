#pragma once

#include "rfilter/field.hpp"
#include "rfilter/geodesic.hpp"
#include "rfilter/rough_path.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace rfilter {

struct FlowOptions {
    /// Largest time per RK4 substep; infinity leaves substepping to max_increment.
    double step = std::numeric_limits<double>::infinity();
    /// Largest driver arc length per RK4 substep.
    double max_increment = 0.1;
    /// Largest turning angle (radians) per RK4 substep on circular geodesic pieces.
    double max_turn = 1.0;
    /// A geodesic piece needing more substeps than this is a step underflow.
    std::size_t max_substeps = std::size_t{1} << 20;
};

/// Scratch buffers for flow integration; one per thread.
struct FlowWorkspace {
    Vector vel, col, k1, k2, k3, k4, xs;
    Matrix m, t1, t2, t3, t4, ts;
    RowMatrix jac;

    void ensure(std::size_t d, std::size_t dy, std::size_t cols);
};

/**
 * @brief Flow of dx = sum_k c_k(x) drho^k along the geodesic interpolation of a driver.
 *
 * Each grid segment is replaced by its geodesic and the flow is integrated with
 * classical RK4 along its smooth pieces. Tangents (the variational equation) are
 * carried jointly with the state.
 */
class FlowField {
public:
    /// Full segments, then a fraction tau of the following one.
    struct Position {
        std::size_t segments = 0;
        double tau = 0.0;
    };

    /// sum_k v_k c_k(x) into value and, when jac is non-null, sum_k v_k Dc_k(x) (row-major) into jac.
    using Combination = std::function<void(const double* x, const double* v, double* value, double* jac)>;

    FlowField(std::vector<Field> columns, EnhancedPath driver, FlowOptions options = {},
              Combination combination = nullptr);

    std::size_t dim() const { return dim_; }
    std::size_t rough_dim() const { return columns_.size(); }
    const EnhancedPath& driver() const { return driver_; }
    const FlowOptions& options() const { return options_; }
    const std::vector<Field>& columns() const { return columns_; }

    Position locate(double t) const;

    Vector forward(double t, const Vector& x) const;
    Vector inverse(double t, const Vector& y) const;
    /// D phi(t, x).
    Matrix jacobian(double t, const Vector& x) const;
    /// D psi(t, y), from the time-reversed variational equation.
    Matrix inverse_jacobian(double t, const Vector& y) const;
    /// T[i](j, k) = d^2 psi_i / dy_j dy_k at y = phi(t, x), central differences of D psi.
    std::vector<Matrix> second_derivatives(double t, const Vector& x) const;

    /// x <- phi(pos, x), tangent <- D phi(pos, x) * tangent. tangent may have zero columns.
    void propagate(Position pos, Vector& x, Matrix& tangent, FlowWorkspace& ws) const;
    /// y <- psi(pos, y), tangent <- D psi(pos, y) * tangent.
    void propagate_back(Position pos, Vector& y, Matrix& tangent, FlowWorkspace& ws) const;

private:
    void segment_forward(std::size_t k, double tau_end, Vector& x, Matrix& t, FlowWorkspace& ws) const;
    void segment_backward(std::size_t k, double tau_start, Vector& x, Matrix& t, FlowWorkspace& ws) const;
    void rk4(const GeodesicPiece& piece, double s, double h, Vector& x, Matrix& t, FlowWorkspace& ws) const;
    void rhs(const Vector& x, const Matrix& t, const Vector& vel, Vector& dx, Matrix& dt, FlowWorkspace& ws) const;

    std::vector<Field> columns_;
    Combination combination_;
    EnhancedPath driver_;
    FlowOptions options_;
    std::size_t dim_ = 0;
    std::vector<SegmentGeodesic> geodesics_;
    std::vector<std::vector<std::size_t>> substeps_;
};

struct CoefficientValue {
    Vector phi;       // phi(t, x)
    Matrix jacobian;  // D phi(t, x)
    Vector a_tilde;
    Matrix b_tilde;   // d_S x d_B
};

struct CoefficientBounds {
    double a_sup = 0.0;
    double b_sup = 0.0;
    double a_lipschitz = 0.0;
    double b_lipschitz = 0.0;
};

/**
 * @brief Drift and diffusion of the SDE for x = psi(t, S).
 *
 * With J = D phi(t, x) and bt_l = J^{-1} b_l(phi):
 *   a~ = J^{-1} (a(phi) - 1/2 sum_l D^2 phi [bt_l, bt_l]),  b~ = J^{-1} b(phi).
 * This is the psi-derivative form rewritten through D^2 psi [J p, J q] = -J^{-1} D^2 phi [p, q].
 * The directional second derivatives come from forward differences of forward tangents.
 */
class TransformedCoefficients {
public:
    TransformedCoefficients(std::shared_ptr<const FlowField> flow, Field drift, std::vector<Field> diffusion);

    const FlowField& flow() const { return *flow_; }
    std::size_t noise_dim() const { return diffusion_.size(); }
    const Field& drift() const { return drift_; }
    const std::vector<Field>& diffusion() const { return diffusion_; }

    CoefficientValue evaluate(double t, const Vector& x) const;
    void evaluate(FlowField::Position pos, const Vector& x, CoefficientValue& out, FlowWorkspace& ws) const;

    /// a~ assembled from D psi and the full second-derivative tensor of psi.
    Vector a_tilde_explicit(double t, const Vector& x) const;

    /// Sup norms over all (time, point) pairs and difference quotients between points at equal times.
    CoefficientBounds observed_bounds(const std::vector<double>& times, const std::vector<Vector>& points) const;

private:
    std::shared_ptr<const FlowField> flow_;
    Field drift_;
    std::vector<Field> diffusion_;
};

}  // namespace rfilter
