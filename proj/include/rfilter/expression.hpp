#pragma once

#include "rfilter/field.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rfilter {

/**
 * @brief Arithmetic expression over named variables.
 *
 * Grammar: numbers, variables, + - * / ^ (right associative), unary minus,
 * parentheses, and the functions tanh exp log sin cos sqrt atan sinh cosh.
 * The constant pi is predefined.
 */
class Expression {
public:
    struct Node;

    Expression() = default;
    /// variables[i] names slot i; aliases map extra names onto slots.
    static Expression parse(const std::string& text, const std::vector<std::string>& variables,
                            const std::vector<std::pair<std::string, std::size_t>>& aliases = {});
    static Expression constant(double v);

    double eval(std::span<const double> vars) const;
    Expression derivative(std::size_t var) const;
    bool is_constant() const;
    std::string str() const;

private:
    explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

/// Field from one expression per output component, with symbolic Jacobian.
Field expression_field(const std::vector<Expression>& components, std::size_t in_dim);

}  // namespace rfilter
