#pragma once

#include <stdexcept>
#include <string>

namespace manar {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or otherwise malformed numeric input.
class invalid_input_error : public error {
public:
    using error::error;
};

/// Mismatched or out-of-range matrix dimensions.
class dimension_error : public error {
public:
    using error::error;
};

/// Matrix expected in SO(n) has negative determinant.
class not_in_so_error : public error {
public:
    using error::error;
};

/// Rotation angle within tolerance of pi; the principal logarithm branch
/// is ambiguous there.
class branch_ambiguity_error : public error {
public:
    using error::error;
};

/// Direction does not satisfy the tangency condition at its base point.
class invalid_tangent_error : public error {
public:
    using error::error;
};

/// Point configuration outside the domain of the (approximate) log chart.
class out_of_chart_error : public error {
public:
    using error::error;
};

/// Line search encountered a non-finite objective value.
class line_search_error : public error {
public:
    line_search_error(const std::string& what, double tau)
        : error(what), tau_at_failure(tau) {}
    double tau_at_failure;
};

/// Iteration failed to reach its tolerance within the allowed count, in a
/// context where the caller asked for a converged value.
class non_convergence_error : public error {
public:
    using error::error;
};

/// Too few data points for the requested fit.
class insufficient_data_error : public error {
public:
    using error::error;
};

/// File read/write failure; message carries the path.
class io_error : public error {
public:
    using error::error;
};

}  // namespace manar
