#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rfilter {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorCode {
    invalid_argument = 1,
    dimension_mismatch = 2,
    parse = 3,
    io = 4,
    flow = 5,
    numeric = 6,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what) : Error(ErrorCode::dimension_mismatch, what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(ErrorCode::parse, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

/// Flow integration failure: step underflow, non-finite state, singular Jacobian.
struct FlowError : Error {
    explicit FlowError(const std::string& what) : Error(ErrorCode::flow, what) {}
};

/// Floating point overflow or a degenerate estimator.
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};

}  // namespace rfilter
