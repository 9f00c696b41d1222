#include "doctest.h"
#include "support.hpp"

#include "rfilter/catalog.hpp"
#include "rfilter/filter_model.hpp"
#include "rfilter/oracles.hpp"
#include "rfilter/robust_filter.hpp"

#include <cmath>

using namespace rfilter;
using namespace rftest;

namespace {

const char* silent_model =
    R"j({"dx":1,"dy":2,"db":1,"h":["0","0"],"Z":[["0.5*x"],["cos(x)"]],"drift":["-x"],"L":[["0.4"]],"x0":{"box":{"lo":[-1],"hi":[1]}}})j";

// Infinite-sample value of the exponential example: two atoms, X0 = 0 contributes f = 0.
double two_atom_theta(const EnhancedPath& p) {
    const FilterModel m = builtin_model("example_s1");
    ThetaOptions o;
    o.n_samples = 32;
    const WeightedSamples s = theta_samples(m, p, builtin_test_function("tanh", 1, 2), o);
    double i0 = NAN, i1 = NAN, v1 = 0.0;
    for (std::size_t k = 0; k < s.value.size(); ++k) {
        if (s.value[k] == 0.0) {
            i0 = s.log_weight[k];
        } else {
            i1 = s.log_weight[k];
            v1 = s.value[k];
        }
    }
    REQUIRE(std::isfinite(i0));
    REQUIRE(std::isfinite(i1));
    return v1 / (1.0 + std::exp(i0 - i1));
}

}  // namespace

TEST_CASE("property: f = 1 gives theta = 1 exactly") {
    for (const char* name : {"correlated_2obs", "uncorrelated_1d", "example_s1", "correlated_linear"}) {
        const FilterModel m = builtin_model(name);
        auto g = gen(4000);
        const EnhancedPath p = random_driver(g, 16, m.dy);
        ThetaOptions o;
        o.n_samples = 20;
        o.seed = 4001;
        const ThetaEstimate e = evaluate_theta(m, p, builtin_test_function("one", m.dx, m.dy), o);
        CHECK(e.theta == 1.0);
        CHECK(e.theta_stderr == 0.0);
        CHECK(e.g1_mean > 0.0);
    }
}

TEST_CASE("silent observations: theta is the plain Monte Carlo mean") {
    const FilterModel m = model_from_json(silent_model);
    auto g = gen(4100);
    const EnhancedPath p = random_driver(g, 16, 2);
    ThetaOptions o;
    o.n_samples = 50;
    o.seed = 4101;
    const ThetaEstimate one = evaluate_theta(m, p, builtin_test_function("one", 1, 2), o);
    CHECK(one.theta == 1.0);
    CHECK(one.theta_stderr == 0.0);
    CHECK(one.g1_stderr == 0.0);

    const TestFunction f = builtin_test_function("tanh", 1, 2);
    const ThetaEstimate e = evaluate_theta(m, p, f, o);
    const FilterSystem fs = build_filter_system(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < o.n_samples; ++i) {
        const SampleDraw d = draw_sample(fs.system.initial, p.times(), m.db, 1, o.seed, i);
        const SamplePath sp = solve_rough_sde(fs.system, p, d.brownian, d.x0.x);
        const Eigen::Index last = sp.states.rows() - 1;
        sum += std::tanh(sp.states(last, 0));
    }
    CHECK(e.theta == doctest::Approx(sum / o.n_samples).epsilon(1e-13));
}

TEST_CASE("log-weight offset cancels in the ratio") {
    const FilterModel m = builtin_model("correlated_2obs");
    auto g = gen(4200);
    const EnhancedPath p = random_driver(g, 16, 2);
    const TestFunction f = builtin_test_function("tanh", 1, 2);
    ThetaOptions o;
    o.n_samples = 40;
    o.seed = 4201;
    const ThetaEstimate a = evaluate_theta(m, p, f, o);
    for (double off : {-7.5, 3.0, 40.0}) {
        o.log_weight_offset = off;
        const ThetaEstimate b = evaluate_theta(m, p, f, o);
        CHECK(b.theta == doctest::Approx(a.theta).epsilon(1e-13));
        CHECK(b.theta_stderr == doctest::Approx(a.theta_stderr).epsilon(1e-10));
        CHECK(b.g1_mean == doctest::Approx(a.g1_mean * std::exp(off)).epsilon(1e-13));
    }
}

TEST_CASE("overflowing weights are an error, not a clamp") {
    const FilterModel m = builtin_model("correlated_2obs");
    auto g = gen(4250);
    const EnhancedPath p = random_driver(g, 8, 2);
    ThetaOptions o;
    o.n_samples = 4;
    o.log_weight_offset = 800.0;
    CHECK_THROWS_AS(evaluate_theta(m, p, builtin_test_function("tanh", 1, 2), o), NumericError);
}

TEST_CASE("standard errors scale with the inverse square root of n") {
    const FilterModel m = builtin_model("uncorrelated_1d");
    auto g = gen(4300);
    const EnhancedPath p = random_driver(g, 16, 2);
    const TestFunction f = builtin_test_function("sin", 1, 2);
    ThetaOptions o;
    o.seed = 4301;
    o.n_samples = 500;
    const ThetaEstimate a = evaluate_theta(m, p, f, o);
    o.n_samples = 2000;
    const ThetaEstimate b = evaluate_theta(m, p, f, o);
    CHECK(b.theta_stderr / a.theta_stderr == doctest::Approx(0.5).epsilon(0.25));
    CHECK(b.g1_stderr / a.g1_stderr == doctest::Approx(0.5).epsilon(0.25));
    CHECK(std::abs(a.theta - b.theta) < 3.0 * std::hypot(a.theta_stderr, b.theta_stderr));
}

TEST_CASE("estimates do not depend on the worker count") {
    const FilterModel m = builtin_model("correlated_2obs");
    auto g = gen(4400);
    const EnhancedPath p = random_driver(g, 16, 2);
    const TestFunction f = builtin_test_function("tanh", 1, 2);
    ThetaOptions o;
    o.n_samples = 64;
    o.seed = 4401;
    const WeightedSamples a = theta_samples(m, p, f, o);
    o.workers = 4;
    const WeightedSamples b = theta_samples(m, p, f, o);
    CHECK(a.log_weight == b.log_weight);
    CHECK(a.value == b.value);
}

TEST_CASE("atom memoization is exact") {
    const FilterModel m = builtin_model("example_s1");
    const EnhancedPath p = spiral_driver(1.0, 32);
    const TestFunction f = builtin_test_function("tanh", 1, 2);
    ThetaOptions o;
    o.n_samples = 30;
    o.seed = 4501;
    const WeightedSamples a = theta_samples(m, p, f, o);
    o.memoize_atoms = false;
    const WeightedSamples b = theta_samples(m, p, f, o);
    CHECK(a.log_weight == b.log_weight);
    CHECK(a.value == b.value);
}

TEST_CASE("dyadic noise refinement shares draws across meshes") {
    const InitialLaw law = InitialLaw::point(Vector::Zero(1));
    const auto fine = uniform_grid(1.0, 16);
    const auto coarse = uniform_grid(1.0, 8);
    const SampleDraw a = draw_sample(law, fine, 2, 1, 9, 3);
    const SampleDraw b = draw_sample(law, coarse, 2, 2, 9, 3);
    for (Eigen::Index k = 0; k < 8; ++k)
        CHECK((b.brownian.row(k) - a.brownian.row(2 * k) - a.brownian.row(2 * k + 1)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("exponential example on the spiral: frozen values and mesh convergence") {
    // Closed form 0.3467021066 (quadrature at 2^14 steps).
    const double cf = 0.346702106578;
    const double t64 = two_atom_theta(spiral_driver(1.0, 64));
    const double t256 = two_atom_theta(spiral_driver(1.0, 256));
    const double t1024 = two_atom_theta(spiral_driver(1.0, 1024));
    CHECK(t64 == doctest::Approx(0.346855233565).epsilon(1e-9));
    CHECK(t256 == doctest::Approx(0.346740077949).epsilon(1e-9));
    CHECK(t1024 == doctest::Approx(0.346711579792).epsilon(1e-9));
    // first order in the mesh
    CHECK((t64 - cf) / (t256 - cf) == doctest::Approx(4.0).epsilon(0.05));
    CHECK((t256 - cf) / (t1024 - cf) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("exponential example Monte Carlo agrees with the closed form") {
    const FilterModel m = builtin_model("example_s1");
    const EnhancedPath p = spiral_driver(1.0, 256);
    ThetaOptions o;
    o.n_samples = 20000;
    o.seed = 4601;
    const ThetaEstimate e = evaluate_theta(m, p, builtin_test_function("tanh", 1, 2), o);
    CHECK(std::abs(e.theta - 0.346702106578) < 3.0 * e.theta_stderr);
    CHECK(e.theta_stderr / e.theta < 0.05);
}

TEST_CASE("continuity probe") {
    const FilterModel m = builtin_model("correlated_2obs");
    auto g = gen(4700);
    const EnhancedPath p = random_driver(g, 16, 2);
    const TestFunction f = builtin_test_function("tanh", 1, 2);
    ThetaOptions o;
    o.n_samples = 60;
    o.seed = 4701;
    const ContinuityTable t = continuity_probe(m, p, f, {dilate(p, 1.1), p, dilate(p, 1.01)}, o);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].distance == 0.0);
    CHECK(t.rows[0].delta_theta == 0.0);
    CHECK(t.rows[0].index == 1);
    CHECK(t.rows[1].index == 2);
    CHECK(t.rows[1].distance < t.rows[2].distance);
    CHECK(t.rows[1].delta_theta < t.rows[2].delta_theta);
    CHECK(t.rows[1].ratio == doctest::Approx(t.rows[1].delta_theta / t.rows[1].distance));
}

TEST_CASE("area perturbation moves the correlated filter only") {
    auto g = gen(4800);
    const EnhancedPath p = random_driver(g, 16, 2);
    const EnhancedPath q = shift_segment_area(p, 8, 0, 1, 0.5);
    const TestFunction f = builtin_test_function("tanh", 1, 2);
    ThetaOptions o;
    o.n_samples = 40;
    o.seed = 4801;
    const FilterModel corr = builtin_model("correlated_2obs");
    CHECK(evaluate_theta(corr, p, f, o).theta != evaluate_theta(corr, q, f, o).theta);
    const FilterModel unc = builtin_model("uncorrelated_1d");
    const ThetaEstimate u0 = evaluate_theta(unc, p, f, o), u1 = evaluate_theta(unc, q, f, o);
    CHECK(std::abs(u0.theta - u1.theta) < 1e-9);
}

TEST_CASE("test function bound is enforced") {
    const FilterModel m = builtin_model("correlated_2obs");
    auto g = gen(4900);
    const EnhancedPath p = random_driver(g, 8, 2);
    TestFunction f = builtin_test_function("tanh", 1, 2);
    f.bound = 1e-6;
    ThetaOptions o;
    o.n_samples = 8;
    CHECK_THROWS_AS(evaluate_theta(m, p, f, o), InvalidArgument);
}
