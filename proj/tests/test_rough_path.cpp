#include "doctest.h"
#include "support.hpp"

#include "rfilter/geodesic.hpp"
#include "rfilter/rough_path.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace rfilter;
using namespace rftest;

namespace {

RowMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
    RowMatrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

// Area increment of the piecewise-linear path by direct summation of segment cross terms.
Matrix direct_area(const RowMatrix& v, std::size_t s, std::size_t u) {
    const auto d = v.cols();
    Matrix a = Matrix::Zero(d, d);
    for (std::size_t k = s; k < u; ++k) {
        const Vector x = (v.row(static_cast<Eigen::Index>(k)) - v.row(static_cast<Eigen::Index>(s))).transpose();
        const Vector dv = (v.row(static_cast<Eigen::Index>(k + 1)) - v.row(static_cast<Eigen::Index>(k))).transpose();
        a += 0.5 * (x * dv.transpose() - dv * x.transpose());
    }
    return a;
}

}  // namespace

TEST_CASE("lift of the L-path has area one half") {
    const EnhancedPath p = lift_piecewise_linear({0.0, 0.5, 1.0}, rows({{0, 0}, {1, 0}, {1, 1}}));
    CHECK(p.area(2, 0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p.area(2, 1, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(p.area(1, 0, 1) == 0.0);
}

TEST_CASE("straight segment has zero area") {
    const EnhancedPath p = lift_piecewise_linear({0.0, 0.3, 1.0}, rows({{0, 0, 0}, {0.3, -0.6, 0.9}, {1, -2, 3}}));
    CHECK(p.areas().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lift rejects bad samples") {
    CHECK_THROWS_AS(lift_piecewise_linear({0.0, 1.0}, rows({{1, 0}, {1, 1}})), InvalidArgument);
    CHECK_THROWS_AS(lift_piecewise_linear({0.0, 0.5, 0.5}, rows({{0, 0}, {1, 0}, {1, 1}})), InvalidArgument);
    CHECK_THROWS_AS(lift_piecewise_linear({0.2, 1.0}, rows({{0, 0}, {1, 1}})), InvalidArgument);
    CHECK_THROWS(lift_piecewise_linear({0.0, 1.0, 2.0}, rows({{0, 0}, {1, 1}})));
}

TEST_CASE("property: Chen relation and antisymmetry for random lifts") {
    for (std::uint64_t c = 0; c < 30; ++c) {
        auto g = gen(c);
        const std::size_t d = 2 + c % 2;
        const std::size_t n = 4 + static_cast<std::size_t>(uniform(g, 0, 60));
        const auto t = random_times(g, n);
        const RowMatrix v = random_walk(g, t, d, 0.0);
        const EnhancedPath p = lift_piecewise_linear(t, v);
        for (int trial = 0; trial < 20; ++trial) {
            std::size_t s = static_cast<std::size_t>(uniform(g, 0, static_cast<double>(n)));
            std::size_t u = static_cast<std::size_t>(uniform(g, 0, static_cast<double>(n + 1)));
            std::size_t r = static_cast<std::size_t>(uniform(g, 0, static_cast<double>(n + 1)));
            if (s > u) std::swap(s, u);
            if (r < s) r = s;
            if (r > u) r = u;
            const Vector d1 = p.increment(s, r), d2 = p.increment(r, u);
            const Matrix chen = p.area_increment(s, r) + p.area_increment(r, u) + 0.5 * (d1 * d2.transpose() - d2 * d1.transpose());
            const Matrix direct = direct_area(v, s, u);
            const double scale = 1.0 + direct.cwiseAbs().maxCoeff();
            CHECK((p.area_increment(s, u) - chen).cwiseAbs().maxCoeff() <= 1e-12 * scale);
            CHECK((p.area_increment(s, u) - direct).cwiseAbs().maxCoeff() <= 1e-12 * scale);
            const Matrix a = p.area(u);
            CHECK((a + a.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("property: collinear refinement leaves the lift unchanged") {
    for (std::uint64_t c = 0; c < 20; ++c) {
        auto g = gen(100 + c);
        const std::size_t d = 2 + c % 2;
        const auto t = random_times(g, 12);
        const RowMatrix v = random_walk(g, t, d, 0.0);
        const EnhancedPath p = lift_piecewise_linear(t, v);

        std::vector<double> t2;
        std::vector<Vector> v2;
        std::vector<std::size_t> original;
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (k > 0) {
                const double w = uniform(g, 0.1, 0.9);
                t2.push_back(t[k - 1] + w * (t[k] - t[k - 1]));
                v2.push_back(((1.0 - w) * v.row(static_cast<Eigen::Index>(k - 1)) + w * v.row(static_cast<Eigen::Index>(k))).transpose());
            }
            original.push_back(t2.size());
            t2.push_back(t[k]);
            v2.push_back(v.row(static_cast<Eigen::Index>(k)).transpose());
        }
        RowMatrix vm(static_cast<Eigen::Index>(v2.size()), static_cast<Eigen::Index>(d));
        for (std::size_t k = 0; k < v2.size(); ++k) vm.row(static_cast<Eigen::Index>(k)) = v2[k].transpose();
        const EnhancedPath q = lift_piecewise_linear(t2, vm);
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double scale = 1.0 + p.area(k).cwiseAbs().maxCoeff();
            CHECK((q.area(original[k]) - p.area(k)).cwiseAbs().maxCoeff() <= 1e-12 * scale);
        }
    }
}

TEST_CASE("Brownian area converges under dyadic refinement") {
    // Reference: level-12 sampling; RMS error over 32 paths should halve every two levels.
    const std::size_t fine = std::size_t{1} << 12;
    const auto tf = uniform_grid(1.0, fine);
    std::vector<double> err(11, 0.0);
    for (std::uint64_t c = 0; c < 32; ++c) {
        auto g = gen(200 + c);
        const RowMatrix v = random_walk(g, tf, 2, 0.0);
        const double ref = lift_piecewise_linear(tf, v).area(fine, 0, 1);
        for (std::size_t k = 4; k <= 10; k += 2) {
            const std::size_t n = std::size_t{1} << k, stride = fine / n;
            RowMatrix vk(static_cast<Eigen::Index>(n + 1), 2);
            for (std::size_t i = 0; i <= n; ++i) vk.row(static_cast<Eigen::Index>(i)) = v.row(static_cast<Eigen::Index>(i * stride));
            const double a = lift_piecewise_linear(uniform_grid(1.0, n), vk).area(n, 0, 1);
            err[k] += (a - ref) * (a - ref) / 32.0;
        }
    }
    for (std::size_t k = 4; k <= 8; k += 2) {
        const double ratio = std::sqrt(err[k + 2] / err[k]);
        // Expected sqrt((2^-(k+2) - 2^-12) / (2^-k - 2^-12)).
        const double expect = std::sqrt((std::ldexp(1.0, -static_cast<int>(k) - 2) - std::ldexp(1.0, -12)) /
                                        (std::ldexp(1.0, -static_cast<int>(k)) - std::ldexp(1.0, -12)));
        CHECK(ratio == doctest::Approx(expect).epsilon(0.35));
    }
}

TEST_CASE("geodesic interpolation on the original grid is the identity") {
    auto g = gen(300);
    const EnhancedPath p = random_driver(g, 16, 3);
    CHECK(geodesic_interpolate(p, p.times()) == p);
}

TEST_CASE("property: geodesic interpolation keeps grid points and Chen consistency") {
    for (std::uint64_t c = 0; c < 10; ++c) {
        auto g = gen(310 + c);
        const std::size_t d = 2 + c % 2;
        EnhancedPath p = random_driver(g, 8, d);
        p = shift_segment_area(p, 3, 0, 1, uniform(g, -0.5, 0.5));
        std::vector<double> q;
        for (std::size_t k = 0; k < p.segments(); ++k)
            for (int m = 0; m < 4; ++m) q.push_back(p.time(k) + (p.time(k + 1) - p.time(k)) * m / 4.0);
        q.push_back(p.horizon());
        const EnhancedPath r = geodesic_interpolate(p, q);
        CHECK(r.size() == q.size());
        for (std::size_t k = 0; k < p.size(); ++k) {
            CHECK(r.value(4 * k) == p.value(k));
            CHECK((r.area(4 * k) - p.area(k)).cwiseAbs().maxCoeff() == 0.0);
        }
        // restricting back to the original grid recovers the path
        CHECK(subsample(r, 4) == p);
    }
}

TEST_CASE("geodesic of a zero-area segment is the chord") {
    const EnhancedPath p = lift_piecewise_linear({0.0, 1.0}, rows({{0, 0}, {2, -4}}));
    const EnhancedPath r = geodesic_interpolate(p, {0.0, 0.5, 1.0});
    CHECK(r.value(1)[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.value(1)[1] == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(std::abs(r.area(1, 0, 1)) <= 1e-15);
}

TEST_CASE("closed loop geodesic matches a re-lifted polygon") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = std::numbers::pi;
    a(1, 0) = -std::numbers::pi;
    const SegmentGeodesic geo(Vector::Zero(2), a);
    // Circle of area pi has radius 1; halfway the curve sits a diameter away and encloses pi / 2.
    CHECK(geo.value(0.5).norm() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(geo.area(0.5)(0, 1) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    CHECK(geo.value(1.0).norm() <= 1e-12);

    const std::size_t n = 1 << 14;
    std::vector<double> t(n + 1);
    RowMatrix v(static_cast<Eigen::Index>(n + 1), 2);
    for (std::size_t k = 0; k <= n; ++k) {
        t[k] = static_cast<double>(k) / n;
        v.row(static_cast<Eigen::Index>(k)) = geo.value(t[k]).transpose();
    }
    v.row(0).setZero();
    const EnhancedPath poly = lift_piecewise_linear(t, v);
    // Polygon area of a regular m-gon lags the circle by O(m^-2).
    CHECK(poly.area(n / 2, 0, 1) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-6));
    CHECK(poly.area(n, 0, 1) == doctest::Approx(std::numbers::pi).epsilon(1e-6));
    CHECK(arc_half_angle(0.0, 1.0) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("property: geodesic realizes increment and area") {
    for (std::uint64_t c = 0; c < 40; ++c) {
        auto g = gen(400 + c);
        const std::size_t d = 2 + c % 3;
        Vector inc(static_cast<Eigen::Index>(d));
        for (auto& x : inc) x = normal(g);
        Matrix a = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) {
                a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = normal(g);
                a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = -a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        const SegmentGeodesic geo(inc, a);
        CHECK((geo.value(1.0) - inc).cwiseAbs().maxCoeff() <= 1e-11);
        CHECK((geo.area(1.0) - a).cwiseAbs().maxCoeff() <= 1e-11);
        // pieces chain to the endpoint and run at constant speed
        double len = 0.0;
        for (const auto& piece : geo.pieces()) len += piece.length;
        CHECK(len == doctest::Approx(geo.length()).epsilon(1e-12));
    }
}

TEST_CASE("seminorms of simple paths") {
    const EnhancedPath zero = lift_piecewise_linear({0.0, 0.5, 1.0}, RowMatrix::Zero(3, 2));
    const HolderSeminorms z = holder_seminorms(zero);
    CHECK(z.level1 == 0.0);
    CHECK(z.level2 == 0.0);

    const EnhancedPath line = lift_piecewise_linear({0.0, 0.25, 0.5, 1.0}, rows({{0, 0}, {0.75, 1}, {1.5, 2}, {3, 4}}));
    const HolderSeminorms s = holder_seminorms(line);
    CHECK(s.level1 == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(s.level2 == 0.0);
    CHECK(s.homogeneous() == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("full and dyadic seminorms agree on a Brownian sample") {
    auto g = gen(500);
    const EnhancedPath p = random_driver(g, 512, 2);
    const HolderSeminorms full = holder_seminorms(p);
    const HolderSeminorms dy = holder_seminorms(p, PairMode::dyadic);
    CHECK(dy.level1 <= full.level1);
    CHECK(dy.level2 <= full.level2);
    CHECK(dy.level1 >= 0.9 * full.level1);
    CHECK(dy.level2 >= 0.9 * full.level2);
}

TEST_CASE("distance under value scaling") {
    auto g = gen(600);
    const EnhancedPath p = random_driver(g, 64, 2);
    const HolderSeminorms s = holder_seminorms(p);
    for (double delta : {1e-1, 1e-2, 1e-3}) {
        const EnhancedPath q = dilate(p, 1.0 + delta);
        const double expect = std::max(delta * s.level1, (2.0 * delta + delta * delta) * s.level2);
        CHECK(holder_distance(p, q) == doctest::Approx(expect).epsilon(1e-10));
    }

    // one dimension: no area term
    const auto t = uniform_grid(1.0, 32);
    RowMatrix v = random_walk(g, t, 1, 0.0);
    const EnhancedPath p1 = lift_piecewise_linear(t, v);
    CHECK(holder_distance(p1, dilate(p1, 1.01)) == doctest::Approx(0.01 * holder_seminorms(p1).level1).epsilon(1e-10));
}

TEST_CASE("property: distance is a metric on a common grid") {
    for (std::uint64_t c = 0; c < 20; ++c) {
        auto g = gen(700 + c);
        const EnhancedPath a = random_driver(g, 24, 2), b = random_driver(g, 24, 2), e = random_driver(g, 24, 2);
        CHECK(holder_distance(a, a) == 0.0);
        CHECK(holder_distance(a, b) == holder_distance(b, a));
        CHECK(holder_distance(a, e) <= holder_distance(a, b) + holder_distance(b, e) + 1e-12);
        CHECK(holder_distance(a, b) > 0.0);
    }
}

TEST_CASE("distance zero only for equal paths") {
    auto g = gen(800);
    const EnhancedPath p = random_driver(g, 16, 2);
    const EnhancedPath q = shift_segment_area(p, 5, 0, 1, 1e-9);
    CHECK(q.values() == p.values());
    CHECK(holder_distance(p, q) > 0.0);
    CHECK_THROWS(holder_distance(p, random_driver(g, 8, 2)));
}

TEST_CASE("subsample is exact and shift changes a single segment") {
    auto g = gen(900);
    const EnhancedPath p = random_driver(g, 32, 3);
    const EnhancedPath s = subsample(p, 4);
    CHECK(s.size() == 9);
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(s.value(k) == p.value(4 * k));
        CHECK((s.area(k) - p.area(4 * k)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_THROWS(subsample(p, 5));

    const EnhancedPath q = shift_segment_area(p, 10, 1, 2, 0.25);
    const Matrix d10 = q.area_increment(10, 11) - p.area_increment(10, 11);
    CHECK(d10(1, 2) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(d10(0, 1)) <= 1e-14);
    CHECK((q.area_increment(3, 9) - p.area_increment(3, 9)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("CSV round trip is bit exact") {
    for (std::uint64_t c = 0; c < 5; ++c) {
        auto g = gen(1000 + c);
        const EnhancedPath p = random_driver(g, 40, 2 + c % 2);
        std::stringstream ss;
        write_path_csv(ss, p);
        const EnhancedPath q = read_path_csv(ss);
        CHECK(q == p);
    }
}

TEST_CASE("CSV without area columns is lifted") {
    std::stringstream ss("t,y1,y2\n0,0,0\n0.5,1,0\n1,1,1\n");
    const EnhancedPath p = read_path_csv(ss);
    CHECK(p.area(2, 0, 1) == doctest::Approx(0.5));
    std::stringstream bad("t,y1\n0,0\n0.5,abc\n");
    CHECK_THROWS_AS(read_path_csv(bad), ParseError);
}

TEST_CASE("alpha must lie in the admissible band") {
    CHECK_NOTHROW(validate_alpha(0.4));
    CHECK_THROWS(validate_alpha(0.5));
    CHECK_THROWS(validate_alpha(0.3));
}
