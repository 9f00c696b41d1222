#include "rfilter/field.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rfilter {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::flow: return "flow_error";
    case ErrorCode::numeric: return "numeric_error";
    }
    return "unknown";
}

Field::Field(std::size_t in_dim, std::size_t out_dim, Map value, Map jacobian, Both both)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      value_(std::move(value)),
      jacobian_(std::move(jacobian)),
      both_(std::move(both)) {
    if (!value_) throw InvalidArgument("field requires a value map");
}

Field Field::zero(std::size_t in_dim, std::size_t out_dim) {
    return Field(
        in_dim, out_dim,
        [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
        [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); });
}

Field Field::constant(std::size_t in_dim, const Vector& value) {
    std::vector<double> v(value.data(), value.data() + value.size());
    return Field(
        in_dim, v.size(),
        [v](std::span<const double>, std::span<double> out) { std::copy(v.begin(), v.end(), out.begin()); },
        [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); });
}

double fd_step(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return 1e-5 * (1.0 + m);
}

void Field::eval(std::span<const double> x, std::span<double> out) const {
    value_(x, out);
}

void Field::jacobian(std::span<const double> x, std::span<double> out) const {
    if (jacobian_) {
        jacobian_(x, out);
        return;
    }
    const double h = fd_step(x);
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> fp(out_dim_), fm(out_dim_);
    for (std::size_t j = 0; j < in_dim_; ++j) {
        const double x0 = xp[j];
        xp[j] = x0 + h;
        value_(xp, fp);
        xp[j] = x0 - h;
        value_(xp, fm);
        xp[j] = x0;
        for (std::size_t i = 0; i < out_dim_; ++i) out[i * in_dim_ + j] = (fp[i] - fm[i]) / (2.0 * h);
    }
}

void Field::eval_both(std::span<const double> x, std::span<double> value, std::span<double> jac) const {
    if (both_) {
        both_(x, value, jac);
        return;
    }
    value_(x, value);
    jacobian(x, jac);
}

Vector Field::operator()(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != in_dim_) throw DimensionMismatch("field input dimension");
    Vector out(out_dim_);
    value_({x.data(), in_dim_}, {out.data(), out_dim_});
    return out;
}

Matrix Field::jacobian(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != in_dim_) throw DimensionMismatch("field input dimension");
    RowMatrix j(out_dim_, in_dim_);
    jacobian({x.data(), in_dim_}, {j.data(), out_dim_ * in_dim_});
    return j;
}

}  // namespace rfilter
