#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace regbench {

enum class ErrorClass {
    InvalidInput,
    DegenerateGeometry,
    Parse,
    AlignmentFailed,
    Usage,
    Io,
};

/// Stable lowercase name used in machine-readable CLI output.
std::string_view error_class_name(ErrorClass cls);

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& message)
        : std::runtime_error(message), class_(cls) {}

    ErrorClass error_class() const { return class_; }

private:
    ErrorClass class_;
};

[[noreturn]] inline void throw_invalid(const std::string& message) {
    throw Error(ErrorClass::InvalidInput, message);
}

[[noreturn]] inline void throw_degenerate(const std::string& message) {
    throw Error(ErrorClass::DegenerateGeometry, message);
}

}  // namespace regbench
