#include "doctest.h"
#include "support.hpp"

#include "rfilter/catalog.hpp"
#include "rfilter/oracles.hpp"
#include "rfilter/robust_filter.hpp"

#include <cmath>

using namespace rfilter;
using namespace rftest;

namespace {

Field tanh_h() {
    return Field(1, 2, [](std::span<const double> x, std::span<double> o) { o[0] = o[1] = std::tanh(x[0]); });
}

RowMatrix gaussian_increments(std::mt19937_64& g, const EnhancedPath& p, std::size_t db) {
    RowMatrix b(static_cast<Eigen::Index>(p.segments()), static_cast<Eigen::Index>(db));
    for (std::size_t k = 0; k < p.segments(); ++k)
        for (std::size_t j = 0; j < db; ++j)
            b(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = std::sqrt(p.time(k + 1) - p.time(k)) * normal(g);
    return b;
}

}  // namespace

TEST_CASE("closed form with zero observation function is f / 2") {
    const Field zero(1, 2, [](std::span<const double>, std::span<double> o) { o[0] = o[1] = 0.0; });
    const EnhancedPath p = spiral_driver(1.0, 128);
    const double y = p.value(128).sum();
    CHECK(example_closed_form([](double x) { return std::tanh(x); }, zero, p) ==
          doctest::Approx(0.5 * std::tanh(std::exp(y))).epsilon(1e-14));
}

TEST_CASE("closed form vanishes when f vanishes at the end point") {
    RowMatrix v(4, 2);
    v << 0, 0, 0.4, 0.3, 1.0, -0.2, 0.5, -0.5;
    const EnhancedPath p = lift_piecewise_linear({0.0, 0.3, 0.6, 1.0}, v);
    CHECK(example_closed_form([](double x) { return std::tanh(x - 1.0); }, tanh_h(), p) == 0.0);
}

TEST_CASE("closed form quadrature converges on the spiral") {
    const auto f = [](double x) { return std::tanh(x); };
    const double a = example_closed_form(f, tanh_h(), spiral_driver(1.0, 1 << 10));
    const double b = example_closed_form(f, tanh_h(), spiral_driver(1.0, 1 << 14));
    CHECK(std::abs(a - b) < 1e-4);
    CHECK(b == doctest::Approx(0.346702106578).epsilon(1e-10));
}

TEST_CASE("closed form checks its inputs") {
    const Field bad(1, 1, [](std::span<const double>, std::span<double> o) { o[0] = 0.0; });
    CHECK_THROWS_AS(example_closed_form([](double x) { return x; }, bad, spiral_driver(1.0, 8)), DimensionMismatch);
}

TEST_CASE("uncorrelated formula with a silent driver is the pure penalty") {
    const FilterModel m = builtin_model("uncorrelated_1d");
    auto g = gen(5000);
    const auto t = uniform_grid(1.0, 64);
    const EnhancedPath p = lift_piecewise_linear(t, RowMatrix::Zero(65, 2));
    const RowMatrix b = gaussian_increments(g, p, 1);
    const Vector x0 = Vector::Constant(1, 0.3);
    const UncorrelatedWeight w = uncorrelated_robust_formula(m, p, b, x0);

    // independent Euler of the signal with the left-point penalty
    const Field drift = m.ito_drift();
    Vector x = x0;
    double pen = 0.0;
    for (std::size_t k = 0; k < 64; ++k) {
        Vector z(3);
        z << x[0], 0.0, 0.0;
        pen += 0.5 * m.h(z).squaredNorm() / 64.0;
        x += drift(z) / 64.0 + m.l[0](z) * b(static_cast<Eigen::Index>(k), 0);
    }
    CHECK(w.log_weight == doctest::Approx(-pen).epsilon(1e-13));
    CHECK(w.x_final[0] == doctest::Approx(x[0]).epsilon(1e-13));
}

TEST_CASE("uncorrelated formula with constant observation function") {
    const FilterModel m = model_from_json(
        R"j({"dx":1,"dy":2,"db":1,"h":["0.7","-0.3"],"drift":["-x"],"L":[["1"]],"x0":{"point":[0.2]}})j");
    for (std::uint64_t c = 0; c < 5; ++c) {
        auto g = gen(5100 + c);
        const EnhancedPath p = random_driver(g, 50, 2);
        const UncorrelatedWeight w = uncorrelated_robust_formula(m, p, gaussian_increments(g, p, 1), Vector::Constant(1, 0.2));
        const Vector y = p.value(50);
        CHECK(w.log_weight == doctest::Approx(0.7 * y[0] - 0.3 * y[1] - 0.5 * 0.58).epsilon(1e-12));
    }
}

TEST_CASE("uncorrelated formula rejects correlated models") {
    const FilterModel m = builtin_model("correlated_2obs");
    auto g = gen(5200);
    const EnhancedPath p = random_driver(g, 8, 2);
    CHECK_THROWS(uncorrelated_robust_formula(m, p, RowMatrix::Zero(8, m.db), Vector::Zero(1)));
}

TEST_CASE("pathwise agreement of the rough I coordinate with the robust formula") {
    const FilterModel m = builtin_model("uncorrelated_1d");
    const FilterSystem fs = build_filter_system(m);
    auto g = gen(5300);
    const std::size_t fine = 256;
    const EnhancedPath pf = random_driver(g, fine, 2, 1.0, 0.5);
    const RowMatrix bf = gaussian_increments(g, pf, 1);
    std::vector<double> diff;
    for (std::size_t n : {64, 256}) {
        const std::size_t stride = fine / n;
        const EnhancedPath p = subsample(pf, stride);
        RowMatrix b = RowMatrix::Zero(static_cast<Eigen::Index>(n), 1);
        for (std::size_t k = 0; k < fine; ++k) b(static_cast<Eigen::Index>(k / stride), 0) += bf(static_cast<Eigen::Index>(k), 0);
        Vector s0 = Vector::Zero(4);
        s0[0] = 0.25;
        const SamplePath sp = solve_rough_sde(fs.system, p, b, s0);
        const UncorrelatedWeight w = uncorrelated_robust_formula(m, p, b, Vector::Constant(1, 0.25));
        diff.push_back(std::abs(sp.states(static_cast<Eigen::Index>(n), 3) - w.log_weight));
    }
    CHECK(diff[1] < 5e-3);
    CHECK(diff[1] < diff[0]);
}

TEST_CASE("particle filter without observation function is plain Monte Carlo") {
    const FilterModel m = model_from_json(
        R"j({"dx":1,"dy":1,"db":1,"h":["0"],"Z":[["0.5"]],"drift":["-x"],"L":[["0.4"]],"x0":{"point":[0.3]}})j");
    auto g = gen(5400);
    const EnhancedPath p = random_driver(g, 32, 1);
    ParticleOptions o;
    o.n_particles = 300;
    o.seed = 5401;
    const ParticleEstimate e = particle_filter_estimate(m, p, builtin_test_function("tanh", 1, 1), o);
    CHECK(e.ess == doctest::Approx(300.0).epsilon(1e-12));
    CHECK_FALSE(e.ess_warning);
    CHECK(e.n_particles == 300);
    // equal weights: the delta-method stderr is the plain sample stderr, so it is positive and small
    CHECK(e.stderr_ > 0.0);
    CHECK(e.stderr_ < 0.1);
    const ParticleEstimate one = particle_filter_estimate(m, p, builtin_test_function("one", 1, 1), o);
    CHECK(one.estimate == 1.0);
}

TEST_CASE("property: particle weights stay finite and ESS lies in (0, n]") {
    for (const char* name : {"correlated_2obs", "correlated_linear", "uncorrelated_1d"}) {
        const FilterModel m = builtin_model(name);
        const ObservationRecord rec = simulate_observation(m, 1.0, 256, 5500);
        ParticleOptions o;
        o.n_particles = 200;
        o.seed = 5501;
        const ParticleEstimate e = particle_filter_estimate(m, rec.path, builtin_test_function("tanh", m.dx, m.dy), o);
        CHECK(std::isfinite(e.estimate));
        CHECK(e.ess > 0.0);
        CHECK(e.ess <= 200.0 * (1 + 1e-12));
        o.workers = 3;
        const ParticleEstimate e3 = particle_filter_estimate(m, rec.path, builtin_test_function("tanh", m.dx, m.dy), o);
        CHECK(e3.estimate == e.estimate);
    }
}

TEST_CASE("particle filter agrees with the robust filter on the linear correlated model") {
    const FilterModel m = builtin_model("correlated_linear");
    const TestFunction f = builtin_test_function("tanh", 1, 1);
    int agree = 0;
    for (std::uint64_t r = 0; r < 5; ++r) {
        const ObservationRecord rec = simulate_observation(m, 1.0, 1024, 5600 + r);
        ThetaOptions o;
        o.n_samples = 400;
        o.seed = 5700 + r;
        const ThetaEstimate th = evaluate_theta(m, subsample(rec.path, 16), f, o);
        ParticleOptions po;
        po.n_particles = 2000;
        po.seed = 5800 + r;
        const ParticleEstimate pf = particle_filter_estimate(m, rec.path, f, po);
        agree += std::abs(th.theta - pf.estimate) < 3.0 * std::hypot(th.theta_stderr, pf.stderr_);
    }
    CHECK(agree >= 4);
}

TEST_CASE("simulated records are reproducible and start at zero") {
    const FilterModel m = builtin_model("correlated_2obs");
    const ObservationRecord a = simulate_observation(m, 1.0, 128, 42);
    const ObservationRecord b = simulate_observation(m, 1.0, 128, 42);
    const ObservationRecord c = simulate_observation(m, 1.0, 128, 43);
    CHECK(a.path == b.path);
    CHECK(a.x_final == b.x_final);
    CHECK_FALSE(a.path == c.path);
    CHECK(a.path.value(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.path.size() == 129);
}

TEST_CASE("spiral driver shape") {
    const EnhancedPath p = spiral_driver(2.0, 64);
    CHECK(p.horizon() == 2.0);
    CHECK(p.value(64)[0] == doctest::Approx(0.5));
    CHECK(std::abs(p.value(64)[1]) < 1e-15);
    CHECK(p.value(32)[0] == doctest::Approx(-0.25));
    CHECK(p.area(64, 0, 1) > 0.0);
}
