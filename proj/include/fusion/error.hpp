#pragma once

#include <stdexcept>
#include <string>

namespace fusion {

/// Failure category; the CLI maps these onto exit codes.
enum class ErrorKind { Usage, Data, Runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_data(const std::string& message) {
    throw Error(ErrorKind::Data, message);
}

[[noreturn]] inline void throw_runtime(const std::string& message) {
    throw Error(ErrorKind::Runtime, message);
}

[[noreturn]] inline void throw_usage(const std::string& message) {
    throw Error(ErrorKind::Usage, message);
}

}  // namespace fusion
