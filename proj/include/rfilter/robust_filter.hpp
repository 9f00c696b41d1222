#pragma once

#include "rfilter/filter_model.hpp"
#include "rfilter/flow.hpp"
#include "rfilter/rng.hpp"
#include "rfilter/rough_path.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rfilter {

/// Bounded Lipschitz test function of (x, y).
struct TestFunction {
    std::string name;
    std::function<double(std::span<const double>)> f;
    double bound = std::numeric_limits<double>::infinity();
    double lipschitz = std::numeric_limits<double>::infinity();

    double operator()(std::span<const double> xy) const { return f(xy); }
};

struct ThetaOptions {
    std::size_t n_samples = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Each driver step draws this many Brownian sub-increments; keeps draws common across dyadic meshes.
    std::size_t noise_refinement = 1;
    FlowOptions flow;
    /// Added to every log-weight I before exponentiation.
    double log_weight_offset = 0.0;
    /// With d_B = 0 and an atomic initial law, solve once per atom.
    bool memoize_atoms = true;
};

struct ThetaEstimate {
    double gf_mean = 0.0;
    double gf_stderr = 0.0;
    double g1_mean = 0.0;
    double g1_stderr = 0.0;
    double theta = 0.0;
    double theta_stderr = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t grid_steps = 0;
    double horizon = 0.0;
};

/// Per-sample draws: initial value and Brownian increments (one row per grid step).
struct SampleDraw {
    InitialLaw::Draw x0;
    RowMatrix brownian;
};

SampleDraw draw_sample(const InitialLaw& law, const std::vector<double>& times, std::size_t db,
                       std::size_t refinement, std::uint64_t seed, std::uint64_t index,
                       StreamPurpose purpose = StreamPurpose::theta);

/// Per-sample terminal values of (I, f) before exponentiation.
struct WeightedSamples {
    std::vector<double> log_weight;
    std::vector<double> value;
};

WeightedSamples theta_samples(const FilterModel& model, const EnhancedPath& driver, const TestFunction& f,
                              const ThetaOptions& options);

/// Ratio estimate from log-weights and values; stderr of the ratio by the delta method.
ThetaEstimate ratio_estimate(const WeightedSamples& samples, double offset = 0.0);

ThetaEstimate evaluate_theta(const FilterModel& model, const EnhancedPath& driver, const TestFunction& f,
                             const ThetaOptions& options);

struct ContinuityRow {
    std::size_t index = 0;  // position in the perturbation list
    double distance = 0.0;
    double theta = 0.0;
    double theta_stderr = 0.0;
    double delta_theta = 0.0;
    double ratio = 0.0;
};

struct ContinuityTable {
    ThetaEstimate base;
    std::vector<ContinuityRow> rows;  // sorted by distance
};

ContinuityTable continuity_probe(const FilterModel& model, const EnhancedPath& driver, const TestFunction& f,
                                 const std::vector<EnhancedPath>& perturbations, const ThetaOptions& options);

}  // namespace rfilter
