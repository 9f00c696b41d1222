#include "rfilter/oracles.hpp"
#include "rfilter/parallel.hpp"
#include "rfilter/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace rfilter {

double example_closed_form(const std::function<double(double)>& f, const Field& h, const EnhancedPath& path) {
    if (path.dim() != 2) throw DimensionMismatch("closed form needs a 2-dimensional path");
    if (h.in_dim() != 1 || h.out_dim() != 2) throw DimensionMismatch("closed form needs h: R -> R^2");
    const std::size_t n = path.size();
    const auto& y = path.values();
    const auto& t = path.times();
    std::vector<double> x(n), q(n), h1(n), h2(n);
    double hv[2], hd[2];
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(y(i, 0) + y(i, 1));
        h.eval({&x[i], 1}, hv);
        h.jacobian({&x[i], 1}, hd);
        h1[i] = hv[0];
        h2[i] = hv[1];
        q[i] = 0.5 * (hd[0] + hd[1]) * x[i] + 0.5 * (hv[0] * hv[0] + hv[1] * hv[1]);
    }
    double strat = 0.0, drift = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        strat += 0.5 * (h1[i] + h1[i + 1]) * (y(i + 1, 0) - y(i, 0));
        strat += 0.5 * (h2[i] + h2[i + 1]) * (y(i + 1, 1) - y(i, 1));
        drift += 0.5 * (q[i] + q[i + 1]) * (t[i + 1] - t[i]);
    }
    return f(x[n - 1]) / (1.0 + std::exp(drift - strat));
}

namespace {

Vector concat(const Vector& x, const Eigen::Ref<const Vector>& y) {
    Vector z(x.size() + y.size());
    z << x, y;
    return z;
}

void require_uncorrelated(const FilterModel& model, const Vector& x0) {
    const auto n = static_cast<Eigen::Index>(model.dx + model.dy);
    std::vector<Vector> probes;
    for (double s : {0.0, 1.0, -0.7}) {
        Vector z = Vector::Constant(n, s);
        z.head(x0.size()) += x0;
        probes.push_back(z);
    }
    for (const auto& zk : model.z)
        for (const auto& p : probes)
            if (zk(p).cwiseAbs().maxCoeff() != 0.0)
                throw InvalidArgument("uncorrelated robust formula requires Z = 0");
    const Vector h0 = model.h(probes[0]);
    for (std::size_t i = 1; i < probes.size(); ++i) {
        Vector z = probes[0];
        z.tail(static_cast<Eigen::Index>(model.dy)) = probes[i].tail(static_cast<Eigen::Index>(model.dy));
        if ((model.h(z) - h0).cwiseAbs().maxCoeff() != 0.0)
            throw InvalidArgument("uncorrelated robust formula requires h = h(x)");
    }
}

}  // namespace

UncorrelatedWeight uncorrelated_robust_formula(const FilterModel& model, const EnhancedPath& driver,
                                               const RowMatrix& brownian, const Vector& x0) {
    model.validate();
    if (driver.dim() != model.dy) throw DimensionMismatch("driver dimension differs from d_Y");
    if (static_cast<std::size_t>(brownian.rows()) != driver.segments() ||
        static_cast<std::size_t>(brownian.cols()) != model.db)
        throw DimensionMismatch("Brownian increments must have one row of d_B entries per segment");
    if (static_cast<std::size_t>(x0.size()) != model.dx) throw DimensionMismatch("initial signal dimension");
    require_uncorrelated(model, x0);

    const auto dx = static_cast<Eigen::Index>(model.dx);
    const auto dy = static_cast<Eigen::Index>(model.dy);
    const Field drift = model.ito_drift();
    const auto& t = driver.times();
    const auto& y = driver.values();

    Vector x = x0;
    double ydh = 0.0, penalty = 0.0;
    Matrix l(dx, static_cast<Eigen::Index>(model.db));
    for (std::size_t i = 0; i < driver.segments(); ++i) {
        const double dt = t[i + 1] - t[i];
        const Vector yi = y.row(static_cast<Eigen::Index>(i)).transpose();
        auto hx = [&](const Vector& xx) { return model.h(concat(xx, yi)); };
        const Vector z = concat(x, yi);
        const Vector hv = model.h(z);
        penalty += 0.5 * hv.squaredNorm() * dt;

        const double m = x.cwiseAbs().maxCoeff();
        const double e1 = 1e-5 * (1.0 + m), e2 = 1e-4 * (1.0 + m);
        Matrix grad(dy, dx);
        for (Eigen::Index p = 0; p < dx; ++p) {
            Vector xp = x, xm = x;
            xp[p] += e1;
            xm[p] -= e1;
            grad.col(p) = (hx(xp) - hx(xm)) / (2.0 * e1);
        }
        std::vector<Matrix> hess(static_cast<std::size_t>(dy), Matrix(dx, dx));
        for (Eigen::Index p = 0; p < dx; ++p)
            for (Eigen::Index q = 0; q < dx; ++q) {
                Vector a = x, b = x, c = x, d = x;
                a[p] += e2; a[q] += e2;
                b[p] += e2; b[q] -= e2;
                c[p] -= e2; c[q] += e2;
                d[p] -= e2; d[q] -= e2;
                const Vector v = (hx(a) - hx(b) - hx(c) + hx(d)) / (4.0 * e2 * e2);
                for (Eigen::Index k = 0; k < dy; ++k) hess[static_cast<std::size_t>(k)](p, q) = v[k];
            }

        Vector step = drift(z) * dt;
        for (std::size_t j = 0; j < model.db; ++j) {
            l.col(static_cast<Eigen::Index>(j)) = model.l[j](z);
            step += l.col(static_cast<Eigen::Index>(j)) * brownian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        const Matrix q = l * l.transpose();
        for (Eigen::Index k = 0; k < dy; ++k) {
            const double dh = grad.row(k).dot(step) + 0.5 * hess[static_cast<std::size_t>(k)].cwiseProduct(q).sum() * dt;
            ydh += yi[k] * dh;
        }
        x += step;
    }
    const Vector yn = y.row(y.rows() - 1).transpose();
    const Vector hn = model.h(concat(x, yn));
    UncorrelatedWeight out;
    out.log_weight = hn.dot(yn) - ydh - penalty;
    out.x_final = x;
    return out;
}

ParticleEstimate particle_filter_estimate(const FilterModel& model, const EnhancedPath& observed,
                                          const TestFunction& f, const ParticleOptions& options) {
    model.validate();
    if (observed.dim() != model.dy) throw DimensionMismatch("observation dimension differs from d_Y");
    if (options.n_particles < 2) throw InvalidArgument("particle filter needs at least two particles");
    const std::size_t dx = model.dx, dy = model.dy, db = model.db, nxy = dx + dy;
    const Field drift = model.ito_drift();
    const auto& t = observed.times();
    const auto& y = observed.values();
    const std::size_t steps = observed.segments();

    WeightedSamples samples;
    samples.log_weight.resize(options.n_particles);
    samples.value.resize(options.n_particles);
    parallel_for(options.n_particles, std::max<std::size_t>(1, options.workers), [&](std::size_t p, std::size_t) {
        auto rng = sample_stream(options.seed, p, StreamPurpose::particle);
        std::normal_distribution<double> normal;
        const Vector x0 = model.x0.sample(rng).x;
        std::vector<double> z(nxy), hv(dy), a(dx), col(dx), dxv(dx);
        std::copy(x0.data(), x0.data() + dx, z.begin());
        double logw = 0.0;
        for (std::size_t i = 0; i < steps; ++i) {
            const double dt = t[i + 1] - t[i];
            const double sq = std::sqrt(dt);
            for (std::size_t k = 0; k < dy; ++k) z[dx + k] = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            model.h.eval(z, hv);
            drift.eval(z, a);
            double h2 = 0.0;
            for (std::size_t j = 0; j < dx; ++j) dxv[j] = a[j] * dt;
            for (std::size_t k = 0; k < dy; ++k) {
                const double dyk = y(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(k)) -
                                   y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                logw += hv[k] * dyk;
                h2 += hv[k] * hv[k];
                if (!model.z.empty()) {
                    model.z[k].eval(z, col);
                    for (std::size_t j = 0; j < dx; ++j) dxv[j] += col[j] * dyk;
                }
            }
            logw -= 0.5 * h2 * dt;
            for (std::size_t b = 0; b < db; ++b) {
                model.l[b].eval(z, col);
                const double db_inc = sq * normal(rng);
                for (std::size_t j = 0; j < dx; ++j) dxv[j] += col[j] * db_inc;
            }
            for (std::size_t j = 0; j < dx; ++j) z[j] += dxv[j];
        }
        for (std::size_t k = 0; k < dy; ++k)
            z[dx + k] = y(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(k));
        const double v = f(z);
        if (!(std::abs(v) <= f.bound * (1.0 + 1e-12)))
            throw InvalidArgument("test function '" + f.name + "' exceeds its declared bound");
        if (!std::isfinite(logw)) throw NumericError("particle log-weight is not finite");
        samples.log_weight[p] = logw;
        samples.value[p] = v;
    });

    const double top = *std::max_element(samples.log_weight.begin(), samples.log_weight.end());
    const ThetaEstimate r = ratio_estimate(samples, -top);
    double sw = 0.0, sw2 = 0.0;
    for (double lw : samples.log_weight) {
        const double w = std::exp(lw - top);
        sw += w;
        sw2 += w * w;
    }
    ParticleEstimate out;
    out.estimate = r.theta;
    out.stderr_ = r.theta_stderr;
    out.ess = sw * sw / sw2;
    out.ess_warning = out.ess < 10.0;
    out.n_particles = options.n_particles;
    out.seed = options.seed;
    return out;
}

ObservationRecord simulate_observation(const FilterModel& model, double horizon, std::size_t fine_steps,
                                       std::uint64_t seed, double alpha) {
    model.validate();
    const std::vector<double> grid = uniform_grid(horizon, fine_steps);
    const std::size_t dx = model.dx, dy = model.dy, db = model.db;
    const Field drift = model.signal_drift();
    auto rng = sample_stream(seed, 0, StreamPurpose::simulate);
    std::normal_distribution<double> normal;
    const Vector x0 = model.x0.sample(rng).x;
    std::vector<double> z(dx + dy, 0.0), hv(dy), a(dx), col(dx), dw(dy), dxv(dx);
    std::copy(x0.data(), x0.data() + dx, z.begin());
    RowMatrix values = RowMatrix::Zero(static_cast<Eigen::Index>(fine_steps + 1), static_cast<Eigen::Index>(dy));
    for (std::size_t i = 0; i < fine_steps; ++i) {
        const double dt = grid[i + 1] - grid[i];
        const double sq = std::sqrt(dt);
        for (std::size_t k = 0; k < dy; ++k) dw[k] = sq * normal(rng);
        model.h.eval(z, hv);
        drift.eval(z, a);
        for (std::size_t j = 0; j < dx; ++j) dxv[j] = a[j] * dt;
        for (std::size_t k = 0; k < dy && !model.z.empty(); ++k) {
            model.z[k].eval(z, col);
            for (std::size_t j = 0; j < dx; ++j) dxv[j] += col[j] * dw[k];
        }
        for (std::size_t b = 0; b < db; ++b) {
            model.l[b].eval(z, col);
            const double inc = sq * normal(rng);
            for (std::size_t j = 0; j < dx; ++j) dxv[j] += col[j] * inc;
        }
        for (std::size_t j = 0; j < dx; ++j) z[j] += dxv[j];
        for (std::size_t k = 0; k < dy; ++k) {
            z[dx + k] += hv[k] * dt + dw[k];
            values(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(k)) = z[dx + k];
        }
    }
    ObservationRecord out;
    out.path = lift_piecewise_linear(grid, values, alpha);
    out.x_final = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(dx));
    return out;
}

EnhancedPath spiral_driver(double horizon, std::size_t steps, double alpha) {
    if (!(horizon > 0.0) || steps == 0) throw InvalidArgument("spiral needs a positive horizon and steps");
    std::vector<double> t = uniform_grid(horizon, steps);
    RowMatrix v(static_cast<Eigen::Index>(t.size()), 2);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double s = t[k] / horizon;
        v(static_cast<Eigen::Index>(k), 0) = 0.5 * s * std::cos(2.0 * std::numbers::pi * s);
        v(static_cast<Eigen::Index>(k), 1) = 0.5 * s * std::sin(2.0 * std::numbers::pi * s);
    }
    return lift_piecewise_linear(std::move(t), v, alpha);
}

}  // namespace rfilter
