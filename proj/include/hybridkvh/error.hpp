#pragma once

#include <stdexcept>
#include <string>

namespace hkvh {

enum class ErrorKind {
    Validation,   // bad parameters or configuration
    Shape,        // grid or field shape mismatch
    Unsupported,  // operation not defined for this variant/mode
    Runtime,      // solver failure (non-finite values, corrupted state)
    Io,           // file system or format failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace hkvh
