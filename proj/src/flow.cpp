#include "rfilter/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rfilter {

void FlowWorkspace::ensure(std::size_t d, std::size_t dy, std::size_t cols) {
    const auto n = static_cast<Eigen::Index>(d);
    const auto c = static_cast<Eigen::Index>(cols);
    if (vel.size() != static_cast<Eigen::Index>(dy)) vel.resize(static_cast<Eigen::Index>(dy));
    if (col.size() != n) {
        col.resize(n);
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        xs.resize(n);
        m.resize(n, n);
        jac.resize(n, n);
    }
    if (t1.rows() != n || t1.cols() != c) {
        t1.resize(n, c);
        t2.resize(n, c);
        t3.resize(n, c);
        t4.resize(n, c);
        ts.resize(n, c);
    }
}

namespace {

// out = a * b for the tiny row-major by column-major products of the tangent equation.
void small_product(const RowMatrix& a, const Matrix& b, Matrix& out) {
    const Eigen::Index n = a.rows(), m = a.cols(), c = b.cols();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (Eigen::Index j = 0; j < c; ++j) {
        const double* bj = pb + j * m;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double* ai = pa + i * m;
            double acc = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) acc += ai[k] * bj[k];
            po[i + j * n] = acc;
        }
    }
}

}  // namespace

FlowField::FlowField(std::vector<Field> columns, EnhancedPath driver, FlowOptions options, Combination combination)
    : columns_(std::move(columns)), combination_(std::move(combination)), driver_(std::move(driver)), options_(options) {
    if (columns_.size() != driver_.dim())
        throw DimensionMismatch("flow needs one vector field per driver component");
    dim_ = columns_.front().in_dim();
    for (const auto& c : columns_)
        if (c.empty() || c.in_dim() != dim_ || c.out_dim() != dim_)
            throw DimensionMismatch("flow vector fields must map R^d to R^d");
    if (!(options_.max_increment > 0.0) || !(options_.step > 0.0) || !(options_.max_turn > 0.0))
        throw InvalidArgument("flow step, max_increment and max_turn must be positive");

    const auto& t = driver_.times();
    geodesics_.reserve(driver_.segments());
    substeps_.resize(driver_.segments());
    for (std::size_t k = 0; k < driver_.segments(); ++k) {
        geodesics_.push_back(segment_geodesic(driver_, k));
        const double dt = t[k + 1] - t[k];
        for (const auto& p : geodesics_.back().pieces()) {
            double n = std::ceil(p.length / options_.max_increment);
            if (p.kind == GeodesicPiece::Kind::arc) n = std::max(n, std::ceil(std::abs(p.sweep) / options_.max_turn));
            if (std::isfinite(options_.step)) n = std::max(n, std::ceil(dt * (p.tau_end - p.tau_begin) / options_.step));
            n = std::max(n, 1.0);
            if (!(n <= static_cast<double>(options_.max_substeps)))
                throw FlowError("step underflow on driver segment " + std::to_string(k) + ": " +
                                std::to_string(n) + " substeps needed");
            substeps_[k].push_back(static_cast<std::size_t>(n));
        }
    }
}

FlowField::Position FlowField::locate(double t) const {
    const auto& times = driver_.times();
    if (!(t >= 0.0 && t <= times.back())) throw InvalidArgument("flow time outside [0, horizon]");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
    if (times[k] == t) return {k, 0.0};
    return {k, (t - times[k]) / (times[k + 1] - times[k])};
}

void FlowField::rhs(const Vector& x, const Matrix& t, const Vector& vel, Vector& dx, Matrix& dt,
                    FlowWorkspace& ws) const {
    const bool tangent = t.cols() > 0;
    if (combination_) {
        combination_(x.data(), vel.data(), dx.data(), tangent ? ws.jac.data() : nullptr);
        if (tangent) small_product(ws.jac, t, dt);
        return;
    }
    dx.setZero();
    if (tangent) ws.m.setZero();
    for (std::size_t k = 0; k < columns_.size(); ++k) {
        const double v = vel[static_cast<Eigen::Index>(k)];
        if (v == 0.0) continue;
        columns_[k].eval({x.data(), dim_}, {ws.col.data(), dim_});
        dx += v * ws.col;
        if (tangent) {
            columns_[k].jacobian({x.data(), dim_}, {ws.jac.data(), dim_ * dim_});
            ws.m += v * ws.jac;
        }
    }
    if (tangent) dt.noalias() = ws.m * t;
}

void FlowField::rk4(const GeodesicPiece& piece, double s, double h, Vector& x, Matrix& t, FlowWorkspace& ws) const {
    const double half = 0.5 * h;
    const bool arc = piece.kind == GeodesicPiece::Kind::arc;
    // arc velocity r sweep (-sin a, cos a) in the (u, w) plane, advanced by rotations of sweep h / 2
    double cu = 0.0, cw = 0.0, cd = 1.0, sd = 0.0;
    auto arc_velocity = [&] {
        const auto d = piece.u.size();
        for (Eigen::Index i = 0; i < d; ++i) ws.vel[i] = cu * piece.u[i] + cw * piece.w[i];
    };
    auto rotate = [&] {
        const double nu = cu * cd - cw * sd;
        cw = cw * cd + cu * sd;
        cu = nu;
    };
    if (arc) {
        const double delta = half * piece.sweep;
        sd = std::sin(delta);
        cd = std::cos(delta);
        // scale so the Simpson weights of RK4 integrate the turning velocity exactly
        const double theta = std::abs(2.0 * delta);
        const double kappa = theta < 1e-3 ? 1.0 - theta * theta * theta * theta / 2880.0
                                          : 12.0 * std::abs(sd) / (theta * (4.0 + 2.0 * cd));
        const double a = piece.start_angle + s * piece.sweep;
        const double speed = kappa * piece.radius * piece.sweep;
        cu = -speed * std::sin(a);
        cw = speed * std::cos(a);
        arc_velocity();
    } else {
        piece.velocity(s, ws.vel.data());
    }
    rhs(x, t, ws.vel, ws.k1, ws.t1, ws);
    if (arc) {
        rotate();
        arc_velocity();
    }
    ws.xs = x + half * ws.k1;
    ws.ts = t + half * ws.t1;
    rhs(ws.xs, ws.ts, ws.vel, ws.k2, ws.t2, ws);
    ws.xs = x + half * ws.k2;
    ws.ts = t + half * ws.t2;
    rhs(ws.xs, ws.ts, ws.vel, ws.k3, ws.t3, ws);
    if (arc) {
        rotate();
        arc_velocity();
    }
    ws.xs = x + h * ws.k3;
    ws.ts = t + h * ws.t3;
    rhs(ws.xs, ws.ts, ws.vel, ws.k4, ws.t4, ws);
    x += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
    if (t.cols() > 0) t += (h / 6.0) * (ws.t1 + 2.0 * ws.t2 + 2.0 * ws.t3 + ws.t4);
}

void FlowField::segment_forward(std::size_t k, double tau_end, Vector& x, Matrix& t, FlowWorkspace& ws) const {
    const auto& pieces = geodesics_[k].pieces();
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        const auto& piece = pieces[p];
        if (tau_end <= piece.tau_begin) break;
        const double s_end =
            tau_end >= piece.tau_end ? 1.0 : (tau_end - piece.tau_begin) / (piece.tau_end - piece.tau_begin);
        const std::size_t n = substeps_[k][p];
        const std::size_t m =
            s_end == 1.0 ? n : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * s_end)));
        const double h = s_end / static_cast<double>(m);
        for (std::size_t j = 0; j < m; ++j) rk4(piece, static_cast<double>(j) * h, h, x, t, ws);
    }
    if (!x.allFinite()) throw FlowError("flow state became non-finite on segment " + std::to_string(k));
}

void FlowField::segment_backward(std::size_t k, double tau_start, Vector& x, Matrix& t, FlowWorkspace& ws) const {
    const auto& pieces = geodesics_[k].pieces();
    for (std::size_t p = pieces.size(); p-- > 0;) {
        const auto& piece = pieces[p];
        if (piece.tau_begin >= tau_start) continue;
        const double s_start =
            tau_start >= piece.tau_end ? 1.0 : (tau_start - piece.tau_begin) / (piece.tau_end - piece.tau_begin);
        const std::size_t n = substeps_[k][p];
        const std::size_t m =
            s_start == 1.0 ? n : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * s_start)));
        const double h = s_start / static_cast<double>(m);
        for (std::size_t j = 0; j < m; ++j) rk4(piece, s_start - static_cast<double>(j) * h, -h, x, t, ws);
    }
    if (!x.allFinite()) throw FlowError("inverse flow state became non-finite on segment " + std::to_string(k));
}

void FlowField::propagate(Position pos, Vector& x, Matrix& tangent, FlowWorkspace& ws) const {
    if (static_cast<std::size_t>(x.size()) != dim_ || static_cast<std::size_t>(tangent.rows()) != dim_)
        throw DimensionMismatch("flow state dimension");
    if (pos.segments > driver_.segments() || (pos.segments == driver_.segments() && pos.tau > 0.0))
        throw InvalidArgument("flow position beyond the driver horizon");
    ws.ensure(dim_, columns_.size(), static_cast<std::size_t>(tangent.cols()));
    for (std::size_t k = 0; k < pos.segments; ++k) segment_forward(k, 1.0, x, tangent, ws);
    if (pos.tau > 0.0) segment_forward(pos.segments, pos.tau, x, tangent, ws);
}

void FlowField::propagate_back(Position pos, Vector& y, Matrix& tangent, FlowWorkspace& ws) const {
    if (static_cast<std::size_t>(y.size()) != dim_ || static_cast<std::size_t>(tangent.rows()) != dim_)
        throw DimensionMismatch("flow state dimension");
    if (pos.segments > driver_.segments() || (pos.segments == driver_.segments() && pos.tau > 0.0))
        throw InvalidArgument("flow position beyond the driver horizon");
    ws.ensure(dim_, columns_.size(), static_cast<std::size_t>(tangent.cols()));
    if (pos.tau > 0.0) segment_backward(pos.segments, pos.tau, y, tangent, ws);
    for (std::size_t k = pos.segments; k-- > 0;) segment_backward(k, 1.0, y, tangent, ws);
}

Vector FlowField::forward(double t, const Vector& x) const {
    FlowWorkspace ws;
    Vector out = x;
    Matrix none(dim_, 0);
    propagate(locate(t), out, none, ws);
    return out;
}

Vector FlowField::inverse(double t, const Vector& y) const {
    FlowWorkspace ws;
    Vector out = y;
    Matrix none(dim_, 0);
    propagate_back(locate(t), out, none, ws);
    return out;
}

Matrix FlowField::jacobian(double t, const Vector& x) const {
    FlowWorkspace ws;
    Vector state = x;
    Matrix j = Matrix::Identity(dim_, dim_);
    propagate(locate(t), state, j, ws);
    return j;
}

Matrix FlowField::inverse_jacobian(double t, const Vector& y) const {
    FlowWorkspace ws;
    Vector state = y;
    Matrix j = Matrix::Identity(dim_, dim_);
    propagate_back(locate(t), state, j, ws);
    return j;
}

std::vector<Matrix> FlowField::second_derivatives(double t, const Vector& x) const {
    const Vector y = forward(t, x);
    const double h = 1e-4 * (1.0 + y.cwiseAbs().maxCoeff());
    std::vector<Matrix> out(dim_, Matrix::Zero(dim_, dim_));
    for (std::size_t k = 0; k < dim_; ++k) {
        Vector yp = y, ym = y;
        yp[static_cast<Eigen::Index>(k)] += h;
        ym[static_cast<Eigen::Index>(k)] -= h;
        const Matrix d = (inverse_jacobian(t, yp) - inverse_jacobian(t, ym)) / (2.0 * h);
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                out[i](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                    d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    return out;
}

TransformedCoefficients::TransformedCoefficients(std::shared_ptr<const FlowField> flow, Field drift,
                                                 std::vector<Field> diffusion)
    : flow_(std::move(flow)), drift_(std::move(drift)), diffusion_(std::move(diffusion)) {
    const std::size_t d = flow_->dim();
    if (drift_.in_dim() != d || drift_.out_dim() != d) throw DimensionMismatch("drift must map R^d to R^d");
    for (const auto& b : diffusion_)
        if (b.in_dim() != d || b.out_dim() != d) throw DimensionMismatch("diffusion columns must map R^d to R^d");
}

namespace {

bool exact_identity(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

}  // namespace

void TransformedCoefficients::evaluate(FlowField::Position pos, const Vector& x, CoefficientValue& out,
                                       FlowWorkspace& ws) const {
    const std::size_t d = flow_->dim();
    const auto n = static_cast<Eigen::Index>(d);
    const auto nb = static_cast<Eigen::Index>(diffusion_.size());
    out.phi = x;
    out.jacobian.setIdentity(n, n);
    flow_->propagate(pos, out.phi, out.jacobian, ws);

    Vector a(n);
    drift_.eval({out.phi.data(), d}, {a.data(), d});
    Matrix b(n, nb);
    for (Eigen::Index j = 0; j < nb; ++j) diffusion_[static_cast<std::size_t>(j)].eval({out.phi.data(), d}, {b.col(j).data(), d});

    // J = I exactly whenever the flow is trivial; keep that case free of round-off
    const bool identity = exact_identity(out.jacobian);
    Eigen::PartialPivLU<Matrix> lu;
    if (!identity) {
        lu.compute(out.jacobian);
        const double rc = lu.rcond();
        if (!(rc > 1e-14)) throw FlowError("flow Jacobian is numerically singular");
        out.b_tilde = lu.solve(b);
    } else {
        out.b_tilde = b;
    }

    // D^2 phi [u, u] as a forward difference of the tangent J u; J u itself comes from the main pass
    Vector corr = Vector::Zero(n);
    const double h = 1e-6 * (1.0 + x.cwiseAbs().maxCoeff());
    Vector xp(n);
    Matrix tp(n, 1);
    for (Eigen::Index l = 0; l < nb; ++l) {
        const double np = out.b_tilde.col(l).norm();
        if (np == 0.0) continue;
        const Vector u = out.b_tilde.col(l) / np;
        xp = x + h * u;
        tp.col(0) = u;
        flow_->propagate(pos, xp, tp, ws);
        corr += (np * np / h) * (tp.col(0) - out.jacobian * u);
    }
    const Vector r = a - 0.5 * corr;
    out.a_tilde = identity ? r : Vector(lu.solve(r));
}

CoefficientValue TransformedCoefficients::evaluate(double t, const Vector& x) const {
    FlowWorkspace ws;
    CoefficientValue out;
    evaluate(flow_->locate(t), x, out, ws);
    return out;
}

Vector TransformedCoefficients::a_tilde_explicit(double t, const Vector& x) const {
    const std::size_t d = flow_->dim();
    const Vector phi = flow_->forward(t, x);
    const Matrix dpsi = flow_->inverse_jacobian(t, phi);
    const auto tensor = flow_->second_derivatives(t, x);
    const Vector a = drift_(phi);
    Matrix b(d, diffusion_.size());
    for (std::size_t j = 0; j < diffusion_.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = diffusion_[j](phi);
    const Matrix bb = b * b.transpose();
    Vector out = dpsi * a;
    for (std::size_t i = 0; i < d; ++i) out[static_cast<Eigen::Index>(i)] += 0.5 * tensor[i].cwiseProduct(bb).sum();
    return out;
}

CoefficientBounds TransformedCoefficients::observed_bounds(const std::vector<double>& times,
                                                           const std::vector<Vector>& points) const {
    CoefficientBounds out;
    for (double t : times) {
        std::vector<CoefficientValue> vals;
        vals.reserve(points.size());
        for (const auto& x : points) {
            vals.push_back(evaluate(t, x));
            out.a_sup = std::max(out.a_sup, vals.back().a_tilde.norm());
            out.b_sup = std::max(out.b_sup, vals.back().b_tilde.norm());
        }
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j) {
                const double dx = (points[i] - points[j]).norm();
                if (dx == 0.0) continue;
                out.a_lipschitz = std::max(out.a_lipschitz, (vals[i].a_tilde - vals[j].a_tilde).norm() / dx);
                out.b_lipschitz = std::max(out.b_lipschitz, (vals[i].b_tilde - vals[j].b_tilde).norm() / dx);
            }
    }
    return out;
}

}  // namespace rfilter
