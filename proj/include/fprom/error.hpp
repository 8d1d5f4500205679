#pragma once

#include <stdexcept>
#include <string>

namespace fprom {

// Failure categories. The CLI maps these onto exit codes 2, 3 and 4.
enum class ErrorKind {
    input,       // unreadable or malformed data
    divergence,  // non-finite values during integration
    infeasible   // precondition or configuration violation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_input(const std::string& what) {
    throw Error(ErrorKind::input, what);
}

[[noreturn]] inline void throw_infeasible(const std::string& what) {
    throw Error(ErrorKind::infeasible, what);
}

[[noreturn]] inline void throw_divergence(const std::string& what) {
    throw Error(ErrorKind::divergence, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) {
        throw_infeasible(what);
    }
}

}  // namespace fprom
