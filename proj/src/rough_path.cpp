#include "rfilter/rough_path.hpp"
#include "rfilter/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace rfilter {

void validate_alpha(double alpha) {
    // admissible band (1/(2+eps), 1/2) for some eps in (0, 1)
    if (!(alpha > 1.0 / 3.0 && alpha < 0.5))
        throw InvalidArgument("alpha must lie in (1/3, 1/2), got " + std::to_string(alpha));
}

EnhancedPath::EnhancedPath(std::vector<double> times, RowMatrix values, RowMatrix areas, double alpha)
    : times_(std::move(times)), values_(std::move(values)), areas_(std::move(areas)), alpha_(alpha) {
    validate_alpha(alpha_);
    const std::size_t n = times_.size();
    if (n == 0) throw InvalidArgument("path needs at least one grid point");
    const std::size_t d = static_cast<std::size_t>(values_.cols());
    if (d == 0) throw DimensionMismatch("path dimension must be positive");
    if (static_cast<std::size_t>(values_.rows()) != n || static_cast<std::size_t>(areas_.rows()) != n)
        throw DimensionMismatch("values/areas rows must match the grid");
    if (static_cast<std::size_t>(areas_.cols()) != area_count(d))
        throw DimensionMismatch("area columns must be d(d-1)/2");
    if (times_[0] != 0.0) throw InvalidArgument("grid must start at time 0");
    for (std::size_t k = 1; k < n; ++k)
        if (!(times_[k] > times_[k - 1])) throw InvalidArgument("times must be strictly increasing");
    if (!values_.allFinite() || !areas_.allFinite() || !std::isfinite(times_.back()))
        throw InvalidArgument("path contains non-finite entries");
    if (values_.row(0).cwiseAbs().maxCoeff() != 0.0) throw InvalidArgument("path must start at the origin");
    if (areas_.cols() > 0 && areas_.row(0).cwiseAbs().maxCoeff() != 0.0)
        throw InvalidArgument("area at time 0 must vanish");
}

Matrix EnhancedPath::area(std::size_t k) const {
    const std::size_t d = dim();
    Matrix a = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = areas_(k, area_index(i, j, d));
            a(i, j) = v;
            a(j, i) = -v;
        }
    return a;
}

double EnhancedPath::area(std::size_t k, std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i < j) return areas_(k, area_index(i, j, dim()));
    return -areas_(k, area_index(j, i, dim()));
}

Vector EnhancedPath::increment(std::size_t s, std::size_t u) const {
    return (values_.row(u) - values_.row(s)).transpose();
}

Matrix EnhancedPath::area_increment(std::size_t s, std::size_t u) const {
    const Vector ys = value(s);
    const Vector dy = increment(s, u);
    return area(u) - area(s) - 0.5 * (ys * dy.transpose() - dy * ys.transpose());
}

bool EnhancedPath::operator==(const EnhancedPath& other) const {
    return times_ == other.times_ && alpha_ == other.alpha_ && values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_ && areas_ == other.areas_;
}

double HolderSeminorms::homogeneous() const { return std::max(level1, std::sqrt(level2)); }

EnhancedPath lift_piecewise_linear(std::vector<double> times, const RowMatrix& values, double alpha) {
    const std::size_t n = times.size();
    if (n == 0 || static_cast<std::size_t>(values.rows()) != n)
        throw DimensionMismatch("samples: times and values must have the same length");
    for (std::size_t k = 1; k < n; ++k)
        if (!(times[k] > times[k - 1])) throw InvalidArgument("times must be strictly increasing");
    if (times[0] != 0.0) throw InvalidArgument("grid must start at time 0");
    if (values.row(0).cwiseAbs().maxCoeff() != 0.0) throw InvalidArgument("first sample must be zero");
    const std::size_t d = static_cast<std::size_t>(values.cols());
    RowMatrix areas = RowMatrix::Zero(n, area_count(d));
    for (std::size_t k = 0; k + 1 < n; ++k) {
        for (std::size_t i = 0; i < d; ++i) {
            const double yi = values(k, i);
            const double di = values(k + 1, i) - yi;
            for (std::size_t j = i + 1; j < d; ++j) {
                const double yj = values(k, j);
                const double dj = values(k + 1, j) - yj;
                const std::size_t c = area_index(i, j, d);
                areas(k + 1, c) = areas(k, c) + 0.5 * (yi * dj - di * yj);
            }
        }
    }
    return EnhancedPath(std::move(times), values, std::move(areas), alpha);
}

namespace {

double packed_norm(const RowMatrix& m, std::size_t row) { return m.row(row).norm(); }

}  // namespace

SegmentGeodesic segment_geodesic(const EnhancedPath& path, std::size_t k) {
    const Vector dy = path.increment(k, k + 1);
    const Matrix da = path.area_increment(k, k + 1);
    const double scale = packed_norm(path.areas(), k) + packed_norm(path.areas(), k + 1) +
                         path.values().row(k).norm() * dy.norm() + dy.squaredNorm();
    return SegmentGeodesic(dy, da, 64.0 * std::numeric_limits<double>::epsilon() * scale);
}

std::vector<double> uniform_grid(double horizon, std::size_t steps) {
    if (steps == 0 || !(horizon > 0.0)) throw InvalidArgument("uniform grid needs steps >= 1 and horizon > 0");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    t.back() = horizon;
    return t;
}

EnhancedPath geodesic_interpolate(const EnhancedPath& path, const std::vector<double>& query_times) {
    if (query_times.empty()) throw InvalidArgument("no query times");
    std::vector<double> q;
    q.reserve(query_times.size() + 1);
    if (query_times.front() != 0.0) q.push_back(0.0);
    q.insert(q.end(), query_times.begin(), query_times.end());
    for (std::size_t i = 1; i < q.size(); ++i)
        if (!(q[i] > q[i - 1])) throw InvalidArgument("query times must be strictly increasing");
    if (q.front() < 0.0 || q.back() > path.horizon())
        throw InvalidArgument("query time outside [0, horizon]");

    const std::size_t d = path.dim();
    const std::vector<double>& t = path.times();
    RowMatrix values(q.size(), d);
    RowMatrix areas(q.size(), area_count(d));
    std::size_t cached = static_cast<std::size_t>(-1);
    std::unique_ptr<SegmentGeodesic> geo;
    for (std::size_t m = 0; m < q.size(); ++m) {
        const auto it = std::upper_bound(t.begin(), t.end(), q[m]);
        const std::size_t k = static_cast<std::size_t>(it - t.begin()) - 1;
        if (t[k] == q[m]) {
            values.row(m) = path.values().row(k);
            areas.row(m) = path.areas().row(k);
            continue;
        }
        if (k != cached) {
            geo = std::make_unique<SegmentGeodesic>(segment_geodesic(path, k));
            cached = k;
        }
        const double tau = (q[m] - t[k]) / (t[k + 1] - t[k]);
        const Vector yk = path.value(k);
        const Vector g = geo->value(tau);
        const Matrix a = path.area(k) + geo->area(tau) + 0.5 * (yk * g.transpose() - g * yk.transpose());
        values.row(m) = (yk + g).transpose();
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) areas(m, area_index(i, j, d)) = a(i, j);
    }
    return EnhancedPath(std::move(q), std::move(values), std::move(areas), path.alpha());
}

namespace {

// Squared norms of the value and area increments over grid pair (s, u), written to out1, out2.
template <class PairFn>
void for_each_pair(std::size_t n, PairMode mode, PairFn&& fn) {
    if (mode == PairMode::all) {
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t u = s + 1; u < n; ++u) fn(s, u);
        return;
    }
    for (std::size_t lag = 1; lag < n; lag *= 2)
        for (std::size_t s = 0; s + lag < n; ++s) fn(s, s + lag);
}

struct IncrementNorms {
    double level1;
    double level2;
};

IncrementNorms increment_norms(const RowMatrix& v, const RowMatrix& a, std::size_t s, std::size_t u) {
    const std::size_t d = static_cast<std::size_t>(v.cols());
    double n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double di = v(u, i) - v(s, i);
        n1 += di * di;
        for (std::size_t j = i + 1; j < d; ++j) {
            const double dj = v(u, j) - v(s, j);
            const std::size_t c = area_index(i, j, d);
            const double inc = a(u, c) - a(s, c) - 0.5 * (v(s, i) * dj - di * v(s, j));
            n2 += inc * inc;
        }
    }
    return {std::sqrt(n1), std::sqrt(n2)};
}

}  // namespace

HolderSeminorms holder_seminorms(const EnhancedPath& path, PairMode mode) {
    HolderSeminorms out;
    out.alpha = path.alpha();
    const auto& t = path.times();
    const double alpha = path.alpha();
    for_each_pair(path.size(), mode, [&](std::size_t s, std::size_t u) {
        const auto inc = increment_norms(path.values(), path.areas(), s, u);
        const double dt = t[u] - t[s];
        out.level1 = std::max(out.level1, inc.level1 / std::pow(dt, alpha));
        out.level2 = std::max(out.level2, inc.level2 / std::pow(dt, 2.0 * alpha));
    });
    return out;
}

double holder_distance(const EnhancedPath& p1, const EnhancedPath& p2) {
    if (!p1.same_grid(p2)) throw InvalidArgument("holder_distance needs a common grid");
    if (p1.alpha() != p2.alpha()) throw InvalidArgument("holder_distance needs equal alpha");
    if (p1.dim() != p2.dim()) throw DimensionMismatch("holder_distance needs equal dimensions");
    const RowMatrix dv = p1.values() - p2.values();
    const std::size_t d = p1.dim();
    const auto& t = p1.times();
    const double alpha = p1.alpha();
    const auto& v1 = p1.values();
    const auto& v2 = p2.values();
    const auto& a1 = p1.areas();
    const auto& a2 = p2.areas();
    double out = 0.0;
    for_each_pair(p1.size(), PairMode::all, [&](std::size_t s, std::size_t u) {
        double n1 = 0.0, n2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double di1 = v1(u, i) - v1(s, i);
            const double di2 = v2(u, i) - v2(s, i);
            n1 += (di1 - di2) * (di1 - di2);
            for (std::size_t j = i + 1; j < d; ++j) {
                const double dj1 = v1(u, j) - v1(s, j);
                const double dj2 = v2(u, j) - v2(s, j);
                const std::size_t c = area_index(i, j, d);
                const double inc1 = a1(u, c) - a1(s, c) - 0.5 * (v1(s, i) * dj1 - di1 * v1(s, j));
                const double inc2 = a2(u, c) - a2(s, c) - 0.5 * (v2(s, i) * dj2 - di2 * v2(s, j));
                n2 += (inc1 - inc2) * (inc1 - inc2);
            }
        }
        const double dt = t[u] - t[s];
        out = std::max(out, std::sqrt(n1) / std::pow(dt, alpha));
        out = std::max(out, std::sqrt(n2) / std::pow(dt, 2.0 * alpha));
    });
    return out;
}

EnhancedPath dilate(const EnhancedPath& path, double lambda) {
    return EnhancedPath(path.times(), lambda * path.values(), (lambda * lambda) * path.areas(), path.alpha());
}

EnhancedPath shift_segment_area(const EnhancedPath& path, std::size_t segment, std::size_t i, std::size_t j,
                                double delta) {
    const std::size_t d = path.dim();
    if (segment >= path.segments()) throw InvalidArgument("segment index out of range");
    if (i >= d || j >= d || i == j) throw InvalidArgument("area plane indices invalid");
    if (i > j) {
        std::swap(i, j);
        delta = -delta;
    }
    RowMatrix areas = path.areas();
    const std::size_t c = area_index(i, j, d);
    for (std::size_t k = segment + 1; k < path.size(); ++k) areas(k, c) += delta;
    return EnhancedPath(path.times(), path.values(), std::move(areas), path.alpha());
}

EnhancedPath with_alpha(const EnhancedPath& path, double alpha) {
    return EnhancedPath(path.times(), path.values(), path.areas(), alpha);
}

EnhancedPath subsample(const EnhancedPath& path, std::size_t stride) {
    if (stride == 0 || path.segments() % stride != 0)
        throw InvalidArgument("subsample stride " + std::to_string(stride) + " does not divide " +
                              std::to_string(path.segments()) + " segments");
    const std::size_t n = path.segments() / stride + 1;
    std::vector<double> t(n);
    RowMatrix v(static_cast<Eigen::Index>(n), path.values().cols());
    RowMatrix a(static_cast<Eigen::Index>(n), path.areas().cols());
    for (std::size_t k = 0; k < n; ++k) {
        const auto src = static_cast<Eigen::Index>(k * stride);
        t[k] = path.time(k * stride);
        v.row(static_cast<Eigen::Index>(k)) = path.values().row(src);
        a.row(static_cast<Eigen::Index>(k)) = path.areas().row(src);
    }
    return EnhancedPath(std::move(t), v, a, path.alpha());
}

namespace {

std::string area_name(std::size_t i, std::size_t j, std::size_t d) {
    if (d <= 9) return "a" + std::to_string(i + 1) + std::to_string(j + 1);
    return "a" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

void put_number(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    if (s.empty()) throw ParseError("empty cell on line " + std::to_string(line));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ParseError("bad number '" + s + "' on line " + std::to_string(line));
    return v;
}

}  // namespace

void write_path_csv(std::ostream& out, const EnhancedPath& path) {
    const std::size_t d = path.dim();
    out << "t";
    for (std::size_t i = 0; i < d; ++i) out << ",y" << (i + 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) out << ',' << area_name(i, j, d);
    out << '\n';
    for (std::size_t k = 0; k < path.size(); ++k) {
        put_number(out, path.time(k));
        for (std::size_t i = 0; i < d; ++i) {
            out << ',';
            put_number(out, path.values()(k, i));
        }
        for (Eigen::Index c = 0; c < path.areas().cols(); ++c) {
            out << ',';
            put_number(out, path.areas()(k, c));
        }
        out << '\n';
    }
}

void write_path_csv(const std::string& file, const EnhancedPath& path) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open '" + file + "' for writing");
    write_path_csv(out, path);
    if (!out) throw IoError("write failed for '" + file + "'");
}

EnhancedPath read_path_csv(std::istream& in, double alpha) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty path CSV");
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "t") throw ParseError("path CSV header must start with 't'");
    std::size_t d = 0;
    while (d + 1 < header.size() && header[d + 1] == "y" + std::to_string(d + 1)) ++d;
    if (d == 0) throw ParseError("path CSV needs columns y1..yd");
    const bool has_areas = header.size() > d + 1;
    if (has_areas) {
        if (header.size() != d + 1 + area_count(d)) throw ParseError("path CSV area columns incomplete");
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j)
                if (header[d + 1 + area_index(i, j, d)] != area_name(i, j, d))
                    throw ParseError("unexpected area column '" + header[d + 1 + area_index(i, j, d)] + "'");
    }
    const std::size_t cols = header.size();
    std::vector<double> times;
    std::vector<double> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto row = split_csv(line);
        if (row.size() != cols) throw ParseError("wrong column count on line " + std::to_string(lineno));
        times.push_back(parse_number(row[0], lineno));
        for (std::size_t c = 1; c < cols; ++c) cells.push_back(parse_number(row[c], lineno));
    }
    if (times.empty()) throw ParseError("path CSV has no data rows");
    const std::size_t n = times.size();
    RowMatrix values(n, d);
    RowMatrix areas(n, area_count(d));
    for (std::size_t k = 0; k < n; ++k) {
        const double* row = cells.data() + k * (cols - 1);
        for (std::size_t i = 0; i < d; ++i) values(k, i) = row[i];
        if (has_areas)
            for (std::size_t c = 0; c < area_count(d); ++c) areas(k, c) = row[d + c];
    }
    if (!has_areas) return lift_piecewise_linear(std::move(times), values, alpha);
    return EnhancedPath(std::move(times), std::move(values), std::move(areas), alpha);
}

EnhancedPath read_path_csv(const std::string& file, double alpha) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open '" + file + "'");
    return read_path_csv(in, alpha);
}

}  // namespace rfilter
