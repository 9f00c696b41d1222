#pragma once

#include "rfilter/types.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace rfilter {

inline constexpr double default_alpha = 0.4;

/// Number of upper-triangular area entries for dimension d.
inline std::size_t area_count(std::size_t d) { return d * (d - 1) / 2; }

/// Column of the entry (i, j), i < j, in the packed a12, a13, ..., a23, ... layout.
inline std::size_t area_index(std::size_t i, std::size_t j, std::size_t d) {
    return i * d - i * (i + 1) / 2 + (j - i - 1);
}

/**
 * @brief Discretely sampled level-2 geometric rough path.
 *
 * Values and from-origin Levy areas on a strictly increasing grid starting at 0.
 * Areas are stored as the upper-triangular entries only, so antisymmetry is exact.
 */
class EnhancedPath {
public:
    EnhancedPath() = default;
    EnhancedPath(std::vector<double> times, RowMatrix values, RowMatrix areas, double alpha = default_alpha);

    std::size_t size() const { return times_.size(); }
    std::size_t segments() const { return times_.empty() ? 0 : times_.size() - 1; }
    std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
    double alpha() const { return alpha_; }
    double horizon() const { return times_.back(); }

    const std::vector<double>& times() const { return times_; }
    double time(std::size_t k) const { return times_[k]; }
    const RowMatrix& values() const { return values_; }
    const RowMatrix& areas() const { return areas_; }

    Vector value(std::size_t k) const { return values_.row(k).transpose(); }
    /// Antisymmetric from-origin area matrix at grid point k.
    Matrix area(std::size_t k) const;
    /// Entry A^{ij} at grid point k (any i, j).
    double area(std::size_t k, std::size_t i, std::size_t j) const;

    Vector increment(std::size_t s, std::size_t u) const;
    /// Antisymmetric area increment A_{s,u} derived through the Chen relation.
    Matrix area_increment(std::size_t s, std::size_t u) const;

    bool same_grid(const EnhancedPath& other) const { return times_ == other.times_; }
    bool operator==(const EnhancedPath& other) const;

private:
    std::vector<double> times_;
    RowMatrix values_;
    RowMatrix areas_;
    double alpha_ = default_alpha;
};

struct HolderSeminorms {
    double level1 = 0.0;
    double level2 = 0.0;
    double alpha = default_alpha;

    /// Homogeneous size max(level1, sqrt(level2)); scales linearly under dilation.
    double homogeneous() const;
};

enum class PairMode { all, dyadic };

/// Lift samples to the piecewise-linear rough path (exact iterated integrals).
EnhancedPath lift_piecewise_linear(std::vector<double> times, const RowMatrix& values, double alpha = default_alpha);

/// Values and areas on query_times, with the segment geodesic inserted between grid points.
/// Time 0 is prepended when missing. Grid points are copied exactly.
EnhancedPath geodesic_interpolate(const EnhancedPath& path, const std::vector<double>& query_times);

/// Uniform grid with the given number of steps over [0, horizon].
std::vector<double> uniform_grid(double horizon, std::size_t steps);

HolderSeminorms holder_seminorms(const EnhancedPath& path, PairMode mode = PairMode::all);

/// Inhomogeneous alpha-Holder distance on a common grid.
double holder_distance(const EnhancedPath& p1, const EnhancedPath& p2);

/// Group dilation: values scale by lambda, areas by lambda^2.
EnhancedPath dilate(const EnhancedPath& path, double lambda);

/// Shift the area increment of one segment in the (i, j) plane by delta; values unchanged.
EnhancedPath shift_segment_area(const EnhancedPath& path, std::size_t segment, std::size_t i, std::size_t j, double delta);

EnhancedPath with_alpha(const EnhancedPath& path, double alpha);

/// Every stride-th grid point (stride must divide the segment count); exact by Chen.
EnhancedPath subsample(const EnhancedPath& path, std::size_t stride);

void validate_alpha(double alpha);

// Path CSV: header t,y1..yd[,a12,a13,...], 17 significant digits.
void write_path_csv(std::ostream& out, const EnhancedPath& path);
void write_path_csv(const std::string& file, const EnhancedPath& path);
/// Reads a path CSV; area columns are computed by the piecewise-linear lift when absent.
EnhancedPath read_path_csv(std::istream& in, double alpha = default_alpha);
EnhancedPath read_path_csv(const std::string& file, double alpha = default_alpha);

}  // namespace rfilter
