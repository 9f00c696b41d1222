#include "rfilter/rough_sde.hpp"
#include "rfilter/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfilter {

InitialLaw InitialLaw::point(Vector x) {
    if (x.size() == 0 || !x.allFinite()) throw InvalidArgument("initial point must be finite and nonempty");
    InitialLaw law;
    law.kind_ = Kind::point;
    law.points_ = {std::move(x)};
    law.weights_ = {1.0};
    return law;
}

InitialLaw InitialLaw::atoms(std::vector<Vector> points, std::vector<double> weights) {
    if (points.empty() || points.size() != weights.size()) throw InvalidArgument("atoms need matching weights");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != points[0].size() || !points[i].allFinite())
            throw InvalidArgument("atoms must be finite with equal dimension");
        if (!(weights[i] >= 0.0)) throw InvalidArgument("atom weights must be nonnegative");
        total += weights[i];
    }
    if (!(total > 0.0)) throw InvalidArgument("atom weights must not all vanish");
    for (double& w : weights) w /= total;
    InitialLaw law;
    law.kind_ = Kind::atoms;
    law.points_ = std::move(points);
    law.weights_ = std::move(weights);
    return law;
}

InitialLaw InitialLaw::box(Vector lo, Vector hi) {
    if (lo.size() == 0 || lo.size() != hi.size() || !lo.allFinite() || !hi.allFinite() || (hi.array() < lo.array()).any())
        throw InvalidArgument("box needs finite lo <= hi of equal dimension");
    InitialLaw law;
    law.kind_ = Kind::box;
    law.lo_ = std::move(lo);
    law.hi_ = std::move(hi);
    return law;
}

std::size_t InitialLaw::dim() const {
    return static_cast<std::size_t>(kind_ == Kind::box ? lo_.size() : (points_.empty() ? 0 : points_[0].size()));
}

InitialLaw::Draw InitialLaw::sample(std::mt19937_64& rng) const {
    Draw out;
    if (kind_ == Kind::box) {
        out.x.resize(lo_.size());
        for (Eigen::Index i = 0; i < lo_.size(); ++i) out.x[i] = lo_[i] + uniform01(rng) * (hi_[i] - lo_[i]);
        return out;
    }
    const double u = uniform01(rng);
    double acc = 0.0;
    out.atom = points_.size() - 1;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        acc += weights_[i];
        if (u < acc) {
            out.atom = i;
            break;
        }
    }
    out.x = points_[out.atom];
    return out;
}

double InitialLaw::bound() const {
    if (kind_ == Kind::box) return std::max(lo_.cwiseAbs().maxCoeff(), hi_.cwiseAbs().maxCoeff());
    double b = 0.0;
    for (const auto& p : points_) b = std::max(b, p.cwiseAbs().maxCoeff());
    return b;
}

InitialLaw InitialLaw::padded(std::size_t total) const {
    const std::size_t d = dim();
    if (total < d) throw DimensionMismatch("cannot pad an initial law to a smaller dimension");
    auto pad = [&](const Vector& v) {
        Vector out = Vector::Zero(static_cast<Eigen::Index>(total));
        out.head(static_cast<Eigen::Index>(d)) = v;
        return out;
    };
    InitialLaw law = *this;
    if (kind_ == Kind::box) {
        law.lo_ = pad(lo_);
        law.hi_ = pad(hi_);
    } else {
        for (auto& p : law.points_) p = pad(p);
    }
    return law;
}

void RoughDriftSystem::validate() const {
    auto square = [&](const Field& f, const char* what) {
        if (f.empty() || f.in_dim() != ds || f.out_dim() != ds)
            throw DimensionMismatch(std::string(what) + " must map R^ds to R^ds");
    };
    if (ds == 0) throw DimensionMismatch("system dimension must be positive");
    square(drift, "drift");
    if (diffusion.size() != db) throw DimensionMismatch("diffusion column count differs from d_B");
    for (const auto& b : diffusion) square(b, "diffusion column");
    if (rough.size() != dy || dy == 0) throw DimensionMismatch("rough column count differs from d_Y");
    for (const auto& c : rough) square(c, "rough column");
    if (initial.dim() != ds) throw DimensionMismatch("initial law dimension differs from d_S");
}

void euler_maruyama_step(Vector& s, const Vector& a, const Matrix& b, double dt, const double* db) {
    const Eigen::Index n = s.size();
    const Eigen::Index m = b.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = s[i] + a[i] * dt;
        for (Eigen::Index j = 0; j < m; ++j) v += b(i, j) * db[j];
        s[i] = v;
    }
}

RoughSdeSolver::RoughSdeSolver(const RoughDriftSystem& system, const EnhancedPath& driver, FlowOptions options) {
    system.validate();
    if (driver.dim() != system.dy) throw DimensionMismatch("driver dimension differs from d_Y");
    ds_ = system.ds;
    db_ = system.db;
    bound_ = system.initial.bound();
    flow_ = std::make_shared<FlowField>(system.rough, driver, options, system.rough_combined);
    coefficients_ = std::make_shared<TransformedCoefficients>(flow_, system.drift, system.diffusion);
}

Vector RoughSdeSolver::run(const RowMatrix& brownian, const Vector& s0, FlowWorkspace& ws, RowMatrix* states) const {
    const EnhancedPath& driver = flow_->driver();
    const std::size_t n = driver.segments();
    const bool rows_ok = static_cast<std::size_t>(brownian.rows()) == n || (db_ == 0 && brownian.rows() == 0);
    if (!rows_ok || static_cast<std::size_t>(brownian.cols()) != db_)
        throw DimensionMismatch("Brownian increments must have one row of d_B entries per driver segment");
    if (static_cast<std::size_t>(s0.size()) != ds_) throw DimensionMismatch("initial state dimension");
    if (!s0.allFinite() || s0.cwiseAbs().maxCoeff() > bound_ * (1.0 + 1e-12))
        throw InvalidArgument("initial state outside the declared bound");

    const auto& t = driver.times();
    Vector x = s0;
    CoefficientValue cv;
    for (std::size_t i = 0; i < n; ++i) {
        coefficients_->evaluate({i, 0.0}, x, cv, ws);
        if (states) states->row(static_cast<Eigen::Index>(i)) = cv.phi.transpose();
        euler_maruyama_step(x, cv.a_tilde, cv.b_tilde, t[i + 1] - t[i],
                            db_ > 0 ? brownian.row(static_cast<Eigen::Index>(i)).data() : nullptr);
        if (!x.allFinite()) throw NumericError("transformed state became non-finite");
    }
    Matrix none(static_cast<Eigen::Index>(ds_), 0);
    flow_->propagate({n, 0.0}, x, none, ws);
    if (states) states->row(static_cast<Eigen::Index>(n)) = x.transpose();
    return x;
}

SamplePath RoughSdeSolver::solve(const RowMatrix& brownian, const Vector& s0) const {
    FlowWorkspace ws;
    SamplePath out;
    out.times = flow_->driver().times();
    out.states.resize(static_cast<Eigen::Index>(out.times.size()), static_cast<Eigen::Index>(ds_));
    run(brownian, s0, ws, &out.states);
    return out;
}

Vector RoughSdeSolver::solve_terminal(const RowMatrix& brownian, const Vector& s0, FlowWorkspace& ws) const {
    return run(brownian, s0, ws, nullptr);
}

SamplePath solve_rough_sde(const RoughDriftSystem& system, const EnhancedPath& driver, const RowMatrix& brownian,
                           const Vector& s0, FlowOptions options) {
    return RoughSdeSolver(system, driver, options).solve(brownian, s0);
}

}  // namespace rfilter
