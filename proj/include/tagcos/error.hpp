#pragma once

#include <stdexcept>
#include <string>

namespace tagcos {

enum class ErrorKind {
    invalid_argument,
    length_mismatch,
    non_finite,
    io,
    bad_magic,
    version_mismatch,
    truncated,
    dim_mismatch,
    id_collision,
    singular,
    guard_exceeded,
    schema_mismatch,
    usage,
    locked,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) throw Error(kind, what);
}

}  // namespace tagcos
