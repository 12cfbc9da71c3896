#pragma once

#include <stdexcept>
#include <string>

namespace rectify {

// Raised when an input file or record violates its format contract.
// Messages carry the file path and 1-based line number where applicable.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& message)
        : std::runtime_error(message) {}
};

}  // namespace rectify
