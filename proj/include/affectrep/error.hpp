#pragma once

#include <stdexcept>
#include <string>

namespace affectrep {

// Failure classes. The CLI maps each class onto its own exit code.
enum class ErrorKind {
    invalid_input,
    config,
    representation,
    training,
    reporting,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) {
        throw Error(ErrorKind::invalid_input, what);
    }
}

}  // namespace affectrep
