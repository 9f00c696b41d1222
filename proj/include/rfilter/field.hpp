#pragma once

#include "rfilter/types.hpp"

#include <cstddef>
#include <functional>
#include <span>

namespace rfilter {

/**
 * @brief A smooth map R^n -> R^m with an optional analytic Jacobian.
 *
 * Jacobians are written row-major (m x n). Without an analytic Jacobian,
 * central differences with step 1e-5 * (1 + |x|_inf) are used.
 */
class Field {
public:
    using Map = std::function<void(std::span<const double> x, std::span<double> out)>;
    /// Value and Jacobian in one call, for maps whose two parts share work.
    using Both = std::function<void(std::span<const double> x, std::span<double> value, std::span<double> jac)>;

    Field() = default;
    Field(std::size_t in_dim, std::size_t out_dim, Map value, Map jacobian = nullptr, Both both = nullptr);

    static Field zero(std::size_t in_dim, std::size_t out_dim);
    static Field constant(std::size_t in_dim, const Vector& value);

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    bool empty() const { return !value_; }
    bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

    void eval(std::span<const double> x, std::span<double> out) const;
    void jacobian(std::span<const double> x, std::span<double> out) const;
    void eval_both(std::span<const double> x, std::span<double> value, std::span<double> jac) const;

    Vector operator()(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;

private:
    std::size_t in_dim_ = 0;
    std::size_t out_dim_ = 0;
    Map value_;
    Map jacobian_;
    Both both_;
};

/// Step used for finite-difference Jacobians of fields.
double fd_step(std::span<const double> x);

}  // namespace rfilter
