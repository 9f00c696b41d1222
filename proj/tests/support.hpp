#pragma once

// Generators and small helpers shared by the test binaries.

#include "rfilter/field.hpp"
#include "rfilter/rng.hpp"
#include "rfilter/rough_path.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

namespace rftest {

using rfilter::Field;
using rfilter::RowMatrix;
using rfilter::Vector;

inline std::mt19937_64 gen(std::uint64_t case_index, std::uint64_t seed = 20240611) {
    return rfilter::sample_stream(seed, case_index, rfilter::StreamPurpose::harness);
}

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * rfilter::uniform01(g); }

inline double normal(std::mt19937_64& g) {
    std::normal_distribution<double> n;
    return n(g);
}

/// Strictly increasing grid from 0 with jittered steps summing to about `horizon`.
inline std::vector<double> random_times(std::mt19937_64& g, std::size_t segments, double horizon = 1.0) {
    std::vector<double> t(segments + 1, 0.0);
    for (std::size_t k = 1; k <= segments; ++k)
        t[k] = t[k - 1] + horizon / static_cast<double>(segments) * uniform(g, 0.2, 1.8);
    return t;
}

/// Gaussian random walk sampled on the grid, started at a random offset.
inline RowMatrix random_walk(std::mt19937_64& g, const std::vector<double>& t, std::size_t d, double offset = 1.0) {
    RowMatrix v(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) v(0, static_cast<Eigen::Index>(j)) = uniform(g, -offset, offset);
    for (std::size_t k = 1; k < t.size(); ++k)
        for (std::size_t j = 0; j < d; ++j)
            v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                v(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) +
                std::sqrt(t[k] - t[k - 1]) * normal(g);
    return v;
}

/// Lift of a random walk on a uniform grid, started at 0.
inline rfilter::EnhancedPath random_driver(std::mt19937_64& g, std::size_t segments, std::size_t d,
                                           double horizon = 1.0, double scale = 1.0) {
    auto t = rfilter::uniform_grid(horizon, segments);
    RowMatrix v = scale * random_walk(g, t, d, 0.0);
    v.row(0).setZero();
    return rfilter::lift_piecewise_linear(std::move(t), v);
}

/// Non-commuting smooth planar fields with random coefficients in [-1, 1].
inline std::vector<Field> random_planar_fields(std::mt19937_64& g) {
    double p[8];
    for (double& v : p) v = uniform(g, -1.0, 1.0);
    Field c1(
        2, 2,
        [=](std::span<const double> x, std::span<double> o) {
            o[0] = p[0] * std::sin(x[1]) + p[1];
            o[1] = p[2] * std::cos(x[0]);
        },
        [=](std::span<const double> x, std::span<double> o) {
            o[0] = 0.0;
            o[1] = p[0] * std::cos(x[1]);
            o[2] = -p[2] * std::sin(x[0]);
            o[3] = 0.0;
        });
    Field c2(
        2, 2,
        [=](std::span<const double> x, std::span<double> o) {
            o[0] = p[3] * std::tanh(x[1]);
            o[1] = p[4] * std::sin(x[0]) + p[5] * std::cos(x[1]) + p[6];
        },
        [=](std::span<const double> x, std::span<double> o) {
            const double th = std::tanh(x[1]);
            o[0] = 0.0;
            o[1] = p[3] * (1.0 - th * th);
            o[2] = p[4] * std::cos(x[0]);
            o[3] = -p[5] * std::sin(x[1]);
        });
    return {c1, c2};
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace rftest
