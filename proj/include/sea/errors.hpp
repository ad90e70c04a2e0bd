#pragma once

#include <stdexcept>
#include <string>

namespace sea {

// Bad inputs: invalid configs, malformed files, out-of-range arguments.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures at run time: I/O errors, non-finite losses. Exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sea
