#pragma once

#include <stdexcept>
#include <string>

namespace flowsentry {

/// Problems rooted in the data or its description: unreadable files, schema
/// mismatches, empty tables, invalid subsets. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures: solver non-convergence, degenerate systems.
/// The CLI maps these to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace flowsentry
