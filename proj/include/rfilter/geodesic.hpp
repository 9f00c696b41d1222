#pragma once

#include "rfilter/types.hpp"

#include <vector>

namespace rfilter {

class EnhancedPath;

/// One smooth piece of a segment geodesic, parameterized by s in [0, 1].
struct GeodesicPiece {
    enum class Kind { line, arc };

    Kind kind = Kind::line;
    Vector delta;             // line increment
    Vector u, w;              // arc plane, orthonormal
    double radius = 0.0;
    double start_angle = 0.0;
    double sweep = 0.0;       // signed; positive turns from u towards w
    double length = 0.0;
    double tau_begin = 0.0;   // portion of the segment parameter covered
    double tau_end = 1.0;

    /// Increment from the piece start.
    Vector point(double s) const;
    Vector velocity(double s) const;
    void velocity(double s, double* out) const;
    /// Area increment from the piece start (antisymmetric).
    Matrix area(double s) const;
    Vector end() const { return point(1.0); }
};

/**
 * @brief Curve from 0 realizing a given increment and Levy area increment.
 *
 * Zero area gives the chord. A rank-2 area whose plane contains the increment
 * gives a circular arc in that plane. Anything else is the chord followed by
 * one closed circle per invariant plane of the area matrix.
 * The parameter tau in [0, 1] runs at constant speed.
 */
class SegmentGeodesic {
public:
    /// area_tolerance: area norms at or below it are treated as zero.
    SegmentGeodesic(const Vector& increment, const Matrix& area, double area_tolerance = 0.0);

    Vector value(double tau) const;
    Matrix area(double tau) const;
    const std::vector<GeodesicPiece>& pieces() const { return pieces_; }
    double length() const { return length_; }
    std::size_t dim() const { return dim_; }

private:
    void add_arc(const Vector& u, const Vector& w, double cx, double cy, double radius, double sweep);
    void add_line(const Vector& delta);
    void finish();

    std::size_t dim_ = 0;
    std::vector<GeodesicPiece> pieces_;
    double length_ = 0.0;
};

/// Geodesic of grid segment k of a path, using a round-off scaled zero-area test.
SegmentGeodesic segment_geodesic(const EnhancedPath& path, std::size_t k);

/// Half-angle beta in (0, pi) of the arc over a chord of length L enclosing |area|.
double arc_half_angle(double chord, double area);

}  // namespace rfilter
