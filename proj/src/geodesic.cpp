#include "rfilter/geodesic.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace rfilter {

namespace {

// 2b - sin(2b) without cancellation for small b.
double chord_excess(double beta) {
    const double x = 2.0 * beta;
    if (x < 1e-2) {
        const double x2 = x * x;
        return x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 / 5040.0));
    }
    return x - std::sin(x);
}

double segment_area(double chord, double beta) {
    const double s = std::sin(beta);
    return chord * chord * chord_excess(beta) / (8.0 * s * s);
}

}  // namespace

double arc_half_angle(double chord, double area) {
    const double target = std::abs(area);
    const double pi = std::numbers::pi;
    double lo = 0.0;
    double hi = pi;
    // segment_area(L, b) >= L^2 b / 6, with equality as b -> 0
    const double small = 6.0 * target / (chord * chord);
    if (small < 1e-2) {
        lo = 0.5 * small;
        hi = small;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (segment_area(chord, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

Vector GeodesicPiece::point(double s) const {
    if (kind == Kind::line) return s * delta;
    const double a0 = start_angle;
    const double a1 = start_angle + s * sweep;
    return radius * ((std::cos(a1) - std::cos(a0)) * u + (std::sin(a1) - std::sin(a0)) * w);
}

Vector GeodesicPiece::velocity(double s) const {
    Vector out(kind == Kind::line ? delta.size() : u.size());
    velocity(s, out.data());
    return out;
}

void GeodesicPiece::velocity(double s, double* out) const {
    if (kind == Kind::line) {
        for (Eigen::Index i = 0; i < delta.size(); ++i) out[i] = delta[i];
        return;
    }
    const double a = start_angle + s * sweep;
    const double cu = -radius * sweep * std::sin(a);
    const double cw = radius * sweep * std::cos(a);
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = cu * u[i] + cw * w[i];
}

Matrix GeodesicPiece::area(double s) const {
    if (kind == Kind::line) return Matrix::Zero(delta.size(), delta.size());
    const double phi = s * sweep;
    const double excess = std::abs(phi) < 1e-2 ? std::copysign(chord_excess(0.5 * std::abs(phi)), phi)
                                               : phi - std::sin(phi);
    const double a = 0.5 * radius * radius * excess;
    return a * (u * w.transpose() - w * u.transpose());
}

SegmentGeodesic::SegmentGeodesic(const Vector& increment, const Matrix& area, double area_tolerance)
    : dim_(static_cast<std::size_t>(increment.size())) {
    const Eigen::Index d = increment.size();
    double anorm = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) anorm += area(i, j) * area(i, j);
    anorm = std::sqrt(anorm);

    if (d < 2 || anorm <= area_tolerance) {
        add_line(increment);
        finish();
        return;
    }

    struct Plane {
        Vector u, w;
        double b;
    };
    std::vector<Plane> planes;
    if (d == 2) {
        planes.push_back({Vector::Unit(2, 0), Vector::Unit(2, 1), area(0, 1)});
    } else {
        Eigen::RealSchur<Matrix> schur(area);
        const Matrix& t = schur.matrixT();
        const Matrix& q = schur.matrixU();
        for (Eigen::Index i = 0; i < d;) {
            if (i + 1 < d && t(i + 1, i) != 0.0) {
                const double b = 0.5 * (t(i, i + 1) - t(i + 1, i));
                if (std::abs(b) > area_tolerance) planes.push_back({q.col(i), q.col(i + 1), b});
                i += 2;
            } else {
                ++i;
            }
        }
    }

    const double vnorm = increment.norm();
    if (planes.size() == 1) {
        const Plane& p = planes.front();
        const double vu = increment.dot(p.u);
        const double vw = increment.dot(p.w);
        const double off = (increment - vu * p.u - vw * p.w).norm();
        const double chord = std::hypot(vu, vw);
        const double scale = std::sqrt(std::abs(p.b));
        if (off <= 1e-12 * (vnorm + scale) && chord > 1e-9 * scale) {
            const double beta = arc_half_angle(chord, p.b);
            const double r = chord / (2.0 * std::sin(beta));
            const double sg = p.b > 0.0 ? 1.0 : -1.0;
            const double ex = vu / chord, ey = vw / chord;
            // centre sits left of the chord for counter-clockwise arcs
            const double cx = 0.5 * vu - sg * ey * r * std::cos(beta);
            const double cy = 0.5 * vw + sg * ex * r * std::cos(beta);
            add_arc(p.u, p.w, cx, cy, r, sg * 2.0 * beta);
            finish();
            return;
        }
    }

    if (vnorm > 0.0) add_line(increment);
    for (const Plane& p : planes) {
        const double r = std::sqrt(std::abs(p.b) / std::numbers::pi);
        add_arc(p.u, p.w, -r, 0.0, r, (p.b > 0.0 ? 2.0 : -2.0) * std::numbers::pi);
    }
    finish();
}

void SegmentGeodesic::add_line(const Vector& delta) {
    GeodesicPiece piece;
    piece.kind = GeodesicPiece::Kind::line;
    piece.delta = delta;
    piece.length = delta.norm();
    pieces_.push_back(std::move(piece));
}

void SegmentGeodesic::add_arc(const Vector& u, const Vector& w, double cx, double cy, double radius, double sweep) {
    GeodesicPiece piece;
    piece.kind = GeodesicPiece::Kind::arc;
    piece.u = u;
    piece.w = w;
    piece.radius = radius;
    piece.start_angle = std::atan2(-cy, -cx);
    piece.sweep = sweep;
    piece.length = radius * std::abs(sweep);
    pieces_.push_back(std::move(piece));
}

void SegmentGeodesic::finish() {
    length_ = 0.0;
    for (const auto& p : pieces_) length_ += p.length;
    if (length_ == 0.0) {
        pieces_.resize(1);
        pieces_[0].tau_begin = 0.0;
        pieces_[0].tau_end = 1.0;
        return;
    }
    double acc = 0.0;
    for (auto& p : pieces_) {
        p.tau_begin = acc / length_;
        acc += p.length;
        p.tau_end = acc / length_;
    }
    pieces_.back().tau_end = 1.0;
}

Vector SegmentGeodesic::value(double tau) const {
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (const auto& p : pieces_) {
        if (tau >= p.tau_end) {
            acc += p.end();
            continue;
        }
        const double span = p.tau_end - p.tau_begin;
        const double s = span > 0.0 ? (tau - p.tau_begin) / span : 1.0;
        if (s > 0.0) acc += p.point(s);
        break;
    }
    return acc;
}

Matrix SegmentGeodesic::area(double tau) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    Vector acc = Vector::Zero(d);
    Matrix a = Matrix::Zero(d, d);
    for (const auto& p : pieces_) {
        double s = 1.0;
        if (tau < p.tau_end) {
            const double span = p.tau_end - p.tau_begin;
            s = span > 0.0 ? (tau - p.tau_begin) / span : 1.0;
            if (s <= 0.0) break;
        }
        const Vector delta = p.point(s);
        a += p.area(s) + 0.5 * (acc * delta.transpose() - delta * acc.transpose());
        acc += delta;
        if (tau < p.tau_end) break;
    }
    return a;
}

}  // namespace rfilter
